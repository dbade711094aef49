#include "stcad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <Eigen/Core>

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace stcad::tensor {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

thread_local bool g_grad_enabled = true;

#ifdef __GLIBC__
// Activations of a training batch are around a megabyte each. With glibc's
// default (dynamic) mmap threshold every one of them is mapped and unmapped,
// which costs more than the arithmetic. Keep them on the heap instead.
const bool g_malloc_tuned = [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
    return true;
}();
#endif

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                   std::function<void(Node&)> bw) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    if (g_grad_enabled) {
        bool any = std::any_of(parents.begin(), parents.end(),
                               [](const Tensor& p) { return p.requires_grad(); });
        if (any) {
            node->requires_grad = true;
            for (auto& p : parents) node->parents.push_back(p.node());
            node->backward = std::move(bw);
        }
    }
    return Tensor(std::move(node));
}

// Gradient buffer of parent k, or nullptr when it does not need one.
double* parent_grad(Node& self, std::size_t k) {
    auto& p = self.parents[k];
    if (!p->requires_grad) return nullptr;
    return p->ensure_grad().data();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
    }
}

std::size_t last_dim(const Tensor& a, const char* op) {
    if (a.rank() == 0) throw ShapeError(std::string(op) + ": tensor has no dimensions");
    return a.shape().back();
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t k = 0; k < shape.size(); ++k) os << (k ? "," : "") << shape[k];
    os << ']';
    return os.str();
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
    if (shape_size(shape) != values.size()) {
        throw ShapeError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_string(shape));
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape) {
    auto n = shape_size(shape);
    return constant(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::scalar(double v) { return constant({}, {v}); }

Tensor Tensor::variable(Shape shape, std::vector<double> values) {
    Tensor t = constant(std::move(shape), std::move(values));
    t.node_->requires_grad = true;
    return t;
}

double Tensor::item() const {
    if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
    return node_->value[0];
}

std::span<const double> Tensor::grad() const { return node_->ensure_grad(); }

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (b.rank() != 2) throw ShapeError("matmul: right operand must be 2-D");
    const std::size_t k = last_dim(a, "matmul");
    if (b.dim(0) != k) {
        throw ShapeError("matmul: inner dimensions differ " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
    }
    const std::size_t n = b.dim(1);
    const std::size_t m = a.size() / k;
    std::vector<double> out(m * n);
    MutMap(out.data(), m, n).noalias() = ConstMap(a.values().data(), m, k) *
                                         ConstMap(b.values().data(), k, n);
    Shape shape = a.shape();
    shape.back() = n;
    return make_result(std::move(shape), std::move(out), {a, b}, [m, k, n](Node& self) {
        ConstMap dc(self.grad.data(), m, n);
        const auto& pa = *self.parents[0];
        const auto& pb = *self.parents[1];
        if (double* ga = parent_grad(self, 0)) {
            MutMap(ga, m, k).noalias() += dc * ConstMap(pb.value.data(), k, n).transpose();
        }
        if (double* gb = parent_grad(self, 1)) {
            MutMap(gb, k, n).noalias() += ConstMap(pa.value.data(), m, k).transpose() * dc;
        }
    });
}

Tensor batched_matmul(const Tensor& a, const Tensor& b, bool transpose_b) {
    if (a.rank() != 3 || b.rank() != 3) throw ShapeError("batched_matmul: operands must be 3-D");
    const std::size_t batch = a.dim(0);
    const std::size_t m = a.dim(1);
    const std::size_t k = a.dim(2);
    if (b.dim(0) != batch) throw ShapeError("batched_matmul: batch sizes differ");
    const std::size_t bk = transpose_b ? b.dim(2) : b.dim(1);
    const std::size_t n = transpose_b ? b.dim(1) : b.dim(2);
    if (bk != k) {
        throw ShapeError("batched_matmul: inner dimensions differ " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()));
    }
    std::vector<double> out(batch * m * n);
    for (std::size_t s = 0; s < batch; ++s) {
        ConstMap A(a.values().data() + s * m * k, m, k);
        MutMap C(out.data() + s * m * n, m, n);
        if (transpose_b) {
            C.noalias() = A * ConstMap(b.values().data() + s * n * k, n, k).transpose();
        } else {
            C.noalias() = A * ConstMap(b.values().data() + s * k * n, k, n);
        }
    }
    return make_result({batch, m, n}, std::move(out), {a, b},
                       [batch, m, k, n, transpose_b](Node& self) {
                           const auto& pa = *self.parents[0];
                           const auto& pb = *self.parents[1];
                           double* ga = parent_grad(self, 0);
                           double* gb = parent_grad(self, 1);
                           for (std::size_t s = 0; s < batch; ++s) {
                               ConstMap dc(self.grad.data() + s * m * n, m, n);
                               ConstMap A(pa.value.data() + s * m * k, m, k);
                               if (transpose_b) {
                                   ConstMap B(pb.value.data() + s * n * k, n, k);
                                   if (ga) MutMap(ga + s * m * k, m, k).noalias() += dc * B;
                                   if (gb) {
                                       MutMap(gb + s * n * k, n, k).noalias() += dc.transpose() * A;
                                   }
                               } else {
                                   ConstMap B(pb.value.data() + s * k * n, k, n);
                                   if (ga) {
                                       MutMap(ga + s * m * k, m, k).noalias() += dc * B.transpose();
                                   }
                                   if (gb) MutMap(gb + s * k * n, k, n).noalias() += A.transpose() * dc;
                               }
                           }
                       });
}

// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) { return scale_add(a, 1.0, b, 1.0); }
Tensor sub(const Tensor& a, const Tensor& b) { return scale_add(a, 1.0, b, -1.0); }

Tensor scale_add(const Tensor& a, double alpha, const Tensor& b, double beta) {
    require_same_shape(a, b, "scale_add");
    std::vector<double> out(a.size());
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = alpha * av[k] + beta * bv[k];
    return make_result(a.shape(), std::move(out), {a, b}, [alpha, beta](Node& self) {
        const auto& g = self.grad;
        if (double* ga = parent_grad(self, 0)) {
            for (std::size_t k = 0; k < g.size(); ++k) ga[k] += alpha * g[k];
        }
        if (double* gb = parent_grad(self, 1)) {
            for (std::size_t k = 0; k < g.size(); ++k) gb[k] += beta * g[k];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = av[k] * bv[k];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        const auto& g = self.grad;
        const auto& av = self.parents[0]->value;
        const auto& bv = self.parents[1]->value;
        if (double* ga = parent_grad(self, 0)) {
            for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * bv[k];
        }
        if (double* gb = parent_grad(self, 1)) {
            for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k] * av[k];
        }
    });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
    const std::size_t n = last_dim(a, "add_bias");
    if (bias.size() != n) {
        throw ShapeError("add_bias: bias " + shape_string(bias.shape()) + " does not match " +
                         shape_string(a.shape()));
    }
    std::vector<double> out(a.values().begin(), a.values().end());
    auto bv = bias.values();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += bv[k % n];
    return make_result(a.shape(), std::move(out), {a, bias}, [n](Node& self) {
        const auto& g = self.grad;
        if (double* ga = parent_grad(self, 0)) {
            for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
        }
        if (double* gb = parent_grad(self, 1)) {
            for (std::size_t k = 0; k < g.size(); ++k) gb[k % n] += g[k];
        }
    });
}

Tensor scale(const Tensor& a, double s) { return affine(a, s, 0.0); }

Tensor affine(const Tensor& a, double alpha, double beta) {
    std::vector<double> out(a.size());
    auto av = a.values();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = alpha * av[k] + beta;
    return make_result(a.shape(), std::move(out), {a}, [alpha](Node& self) {
        const auto& g = self.grad;
        if (double* ga = parent_grad(self, 0)) {
            for (std::size_t k = 0; k < g.size(); ++k) ga[k] += alpha * g[k];
        }
    });
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.size());
    auto av = a.values();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = av[k] > 0.0 ? av[k] : 0.0;
    return make_result(a.shape(), std::move(out), {a}, [](Node& self) {
        const auto& g = self.grad;
        const auto& av = self.parents[0]->value;
        if (double* ga = parent_grad(self, 0)) {
            for (std::size_t k = 0; k < g.size(); ++k) {
                if (av[k] > 0.0) ga[k] += g[k];
            }
        }
    });
}

Tensor sigmoid(const Tensor& a) {
    std::vector<double> out(a.size());
    auto av = a.values();
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double x = av[k];
        // split by sign so exp never overflows
        if (x >= 0.0) {
            out[k] = 1.0 / (1.0 + std::exp(-x));
        } else {
            const double e = std::exp(x);
            out[k] = e / (1.0 + e);
        }
    }
    return make_result(a.shape(), std::move(out), {a}, [](Node& self) {
        const auto& g = self.grad;
        const auto& y = self.value;
        if (double* ga = parent_grad(self, 0)) {
            for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * y[k] * (1.0 - y[k]);
        }
    });
}

Tensor log_clamped(const Tensor& a, double lo, double hi) {
    std::vector<double> out(a.size());
    auto av = a.values();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::log(std::clamp(av[k], lo, hi));
    return make_result(a.shape(), std::move(out), {a}, [lo, hi](Node& self) {
        const auto& g = self.grad;
        const auto& av = self.parents[0]->value;
        if (double* ga = parent_grad(self, 0)) {
            for (std::size_t k = 0; k < g.size(); ++k) {
                if (av[k] > lo && av[k] < hi) ga[k] += g[k] / av[k];
            }
        }
    });
}

// ---------------------------------------------------------------------------

Tensor sum(const Tensor& a) {
    double total = 0.0;
    for (double x : a.values()) total += x;
    return make_result({}, {total}, {a}, [](Node& self) {
        const double g = self.grad[0];
        if (double* ga = parent_grad(self, 0)) {
            const auto n = self.parents[0]->value.size();
            for (std::size_t k = 0; k < n; ++k) ga[k] += g;
        }
    });
}

Tensor mean(const Tensor& a) {
    if (a.size() == 0) throw ShapeError("mean of empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor softmax_rows(const Tensor& a) {
    const std::size_t n = last_dim(a, "softmax_rows");
    if (n == 0) throw ShapeError("softmax_rows: empty last dimension");
    const std::size_t rows = a.size() / n;
    std::vector<double> out(a.size());
    auto av = a.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = av.data() + r * n;
        double* y = out.data() + r * n;
        const double mx = *std::max_element(x, x + n);
        double z = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            y[c] = std::exp(x[c] - mx);
            z += y[c];
        }
        for (std::size_t c = 0; c < n; ++c) y[c] /= z;
    }
    return make_result(a.shape(), std::move(out), {a}, [rows, n](Node& self) {
        double* ga = parent_grad(self, 0);
        if (!ga) return;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = self.value.data() + r * n;
            const double* g = self.grad.data() + r * n;
            double dot = 0.0;
            for (std::size_t c = 0; c < n; ++c) dot += g[c] * y[c];
            for (std::size_t c = 0; c < n; ++c) ga[r * n + c] += y[c] * (g[c] - dot);
        }
    });
}

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps) {
    const std::size_t n = last_dim(a, "layer_norm");
    if (gain.size() != n || bias.size() != n) {
        throw ShapeError("layer_norm: gain/bias must have " + std::to_string(n) + " entries");
    }
    const std::size_t rows = a.size() / n;
    std::vector<double> xhat(a.size()), inv_std(rows), out(a.size());
    auto av = a.values();
    auto gv = gain.values();
    auto bv = bias.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = av.data() + r * n;
        double mu = 0.0;
        for (std::size_t c = 0; c < n; ++c) mu += x[c];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t c = 0; c < n; ++c) var += (x[c] - mu) * (x[c] - mu);
        var /= static_cast<double>(n);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t c = 0; c < n; ++c) {
            xhat[r * n + c] = (x[c] - mu) * inv_std[r];
            out[r * n + c] = gv[c] * xhat[r * n + c] + bv[c];
        }
    }
    return make_result(
        a.shape(), std::move(out), {a, gain, bias},
        [rows, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
            const auto& g = self.grad;
            const auto& gv = self.parents[1]->value;
            double* ga = parent_grad(self, 0);
            double* gg = parent_grad(self, 1);
            double* gb = parent_grad(self, 2);
            std::vector<double> dxhat(n);
            for (std::size_t r = 0; r < rows; ++r) {
                const double* gr = g.data() + r * n;
                const double* xr = xhat.data() + r * n;
                if (gg || gb) {
                    for (std::size_t c = 0; c < n; ++c) {
                        if (gg) gg[c] += gr[c] * xr[c];
                        if (gb) gb[c] += gr[c];
                    }
                }
                if (!ga) continue;
                double mean_d = 0.0, mean_dx = 0.0;
                for (std::size_t c = 0; c < n; ++c) {
                    dxhat[c] = gr[c] * gv[c];
                    mean_d += dxhat[c];
                    mean_dx += dxhat[c] * xr[c];
                }
                mean_d /= static_cast<double>(n);
                mean_dx /= static_cast<double>(n);
                for (std::size_t c = 0; c < n; ++c) {
                    ga[r * n + c] += inv_std[r] * (dxhat[c] - mean_d - xr[c] * mean_dx);
                }
            }
        });
}

Tensor mean_rows(const Tensor& a) {
    if (a.rank() < 2) throw ShapeError("mean_rows: need at least 2 dimensions");
    const std::size_t d = a.shape().back();
    const std::size_t k = a.shape()[a.rank() - 2];
    if (k == 0) throw ShapeError("mean_rows: no rows");
    const std::size_t outer = a.size() / (k * d);
    Shape shape(a.shape().begin(), a.shape().end() - 2);
    shape.push_back(d);
    std::vector<double> out(outer * d, 0.0);
    auto av = a.values();
    const double inv_k = 1.0 / static_cast<double>(k);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t r = 0; r < k; ++r) {
            for (std::size_t c = 0; c < d; ++c) out[o * d + c] += av[(o * k + r) * d + c];
        }
        for (std::size_t c = 0; c < d; ++c) out[o * d + c] *= inv_k;
    }
    return make_result(std::move(shape), std::move(out), {a}, [outer, k, d, inv_k](Node& self) {
        double* ga = parent_grad(self, 0);
        if (!ga) return;
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t r = 0; r < k; ++r) {
                for (std::size_t c = 0; c < d; ++c) {
                    ga[(o * k + r) * d + c] += self.grad[o * d + c] * inv_k;
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_size(shape) != a.size()) {
        throw ShapeError("reshape: " + shape_string(a.shape()) + " -> " + shape_string(shape));
    }
    std::vector<double> out(a.values().begin(), a.values().end());
    return make_result(std::move(shape), std::move(out), {a}, [](Node& self) {
        if (double* ga = parent_grad(self, 0)) {
            for (std::size_t k = 0; k < self.grad.size(); ++k) ga[k] += self.grad[k];
        }
    });
}

Tensor concat_last(const Tensor& a, const Tensor& b) { return concat_last(std::vector{a, b}); }

Tensor concat_last(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat_last: no inputs");
    const Shape& ref = parts.front().shape();
    if (ref.empty()) throw ShapeError("concat_last: scalar input");
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rank() != ref.size() || !std::equal(ref.begin(), ref.end() - 1, p.shape().begin())) {
            throw ShapeError("concat_last: leading dimensions differ");
        }
        widths.push_back(p.shape().back());
        total += p.shape().back();
    }
    const std::size_t rows = parts.front().size() / std::max<std::size_t>(widths.front(), 1);
    std::vector<double> out(rows * total);
    std::size_t offset = 0;
    for (std::size_t q = 0; q < parts.size(); ++q) {
        auto v = parts[q].values();
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(v.data() + r * widths[q], widths[q], out.data() + r * total + offset);
        }
        offset += widths[q];
    }
    Shape shape = ref;
    shape.back() = total;
    return make_result(std::move(shape), std::move(out), parts, [rows, total, widths](Node& self) {
        std::size_t offset = 0;
        for (std::size_t q = 0; q < widths.size(); ++q) {
            if (double* gq = parent_grad(self, q)) {
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* src = self.grad.data() + r * total + offset;
                    for (std::size_t c = 0; c < widths[q]; ++c) gq[r * widths[q] + c] += src[c];
                }
            }
            offset += widths[q];
        }
    });
}

Tensor slice_last(const Tensor& a, std::size_t start, std::size_t width) {
    const std::size_t n = last_dim(a, "slice_last");
    if (start + width > n) throw ShapeError("slice_last: range exceeds last dimension");
    const std::size_t rows = a.size() / n;
    std::vector<double> out(rows * width);
    auto av = a.values();
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(av.data() + r * n + start, width, out.data() + r * width);
    }
    Shape shape = a.shape();
    shape.back() = width;
    return make_result(std::move(shape), std::move(out), {a}, [rows, n, start, width](Node& self) {
        double* ga = parent_grad(self, 0);
        if (!ga) return;
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < width; ++c) {
                ga[r * n + start + c] += self.grad[r * width + c];
            }
        }
    });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    const std::size_t n = parts.front().shape().back();
    std::size_t rows = 0;
    std::vector<double> out;
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.dim(1) != n) throw ShapeError("concat_rows: expected [r, n] inputs");
        rows += p.dim(0);
        out.insert(out.end(), p.values().begin(), p.values().end());
    }
    return make_result({rows, n}, std::move(out), parts, [](Node& self) {
        std::size_t offset = 0;
        for (std::size_t q = 0; q < self.parents.size(); ++q) {
            const auto len = self.parents[q]->value.size();
            if (double* gq = parent_grad(self, q)) {
                for (std::size_t k = 0; k < len; ++k) gq[k] += self.grad[offset + k];
            }
            offset += len;
        }
    });
}

Tensor mask_rows(const Tensor& a, std::span<const std::size_t> rows) {
    if (a.rank() != 3) throw ShapeError("mask_rows: expected [B, K, d]");
    const std::size_t batch = a.dim(0), k = a.dim(1), d = a.dim(2);
    if (rows.size() != batch) throw ShapeError("mask_rows: one row index per batch element");
    for (auto r : rows) {
        if (r >= k) throw ShapeError("mask_rows: index " + std::to_string(r) + " out of range");
    }
    std::vector<double> out(a.values().begin(), a.values().end());
    for (std::size_t b = 0; b < batch; ++b) {
        std::fill_n(out.data() + (b * k + rows[b]) * d, d, 0.0);
    }
    std::vector<std::size_t> masked(rows.begin(), rows.end());
    return make_result(a.shape(), std::move(out), {a}, [k, d, masked](Node& self) {
        double* ga = parent_grad(self, 0);
        if (!ga) return;
        for (std::size_t b = 0; b < masked.size(); ++b) {
            for (std::size_t r = 0; r < k; ++r) {
                if (r == masked[b]) continue;
                for (std::size_t c = 0; c < d; ++c) {
                    ga[(b * k + r) * d + c] += self.grad[(b * k + r) * d + c];
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1) {
        throw ShapeError("backward: loss must be a scalar");
    }
    const auto& root = loss.node();
    if (!root->requires_grad) return;

    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward && !node->grad.empty()) node->backward(*node);
    }
    for (Node* node : order) {
        if (!node->backward) continue;
        node->backward = nullptr;
        node->parents.clear();
        node->grad.clear();
        node->grad.shrink_to_fit();
    }
}

// ---------------------------------------------------------------------------

Parameter::Parameter(std::string n, Shape shape, std::vector<double> values)
    : name(std::move(n)), tensor(Tensor::variable(std::move(shape), std::move(values))) {
    first_moment.assign(tensor.size(), 0.0);
    second_moment.assign(tensor.size(), 0.0);
}

void Adam::step(std::span<Parameter> params) {
    ++steps_;
    const double t = static_cast<double>(steps_);
    const double c1 = 1.0 - std::pow(config_.beta1, t);
    const double c2 = 1.0 - std::pow(config_.beta2, t);
    for (auto& p : params) {
        auto value = p.tensor.mutable_values();
        auto grad = p.tensor.mutable_grad();
        for (std::size_t k = 0; k < value.size(); ++k) {
            const double g = grad[k];
            double& m = p.first_moment[k];
            double& v = p.second_moment[k];
            m = config_.beta1 * m + (1.0 - config_.beta1) * g;
            v = config_.beta2 * v + (1.0 - config_.beta2) * g * g;
            value[k] -= config_.lr * (m / c1) / (std::sqrt(v / c2) + config_.eps);
        }
        std::fill(grad.begin(), grad.end(), 0.0);
    }
}

void adam_step(std::span<Parameter> params, Adam& optimizer) { optimizer.step(params); }

void zero_grad(std::span<Parameter> params) {
    for (auto& p : params) p.tensor.zero_grad();
}

}  // namespace stcad::tensor
