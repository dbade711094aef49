#pragma once

// Minimal dense tensor with tape-based reverse-mode differentiation.
//
// Every op returns a new Tensor whose node remembers its parents and a
// closure that pushes its gradient back into them. backward() walks the
// recorded graph from a scalar loss in reverse topological order, accumulates
// into leaf gradients, and then drops the recorded edges so intermediates can
// be freed. Leaves keep accumulating across backward calls until zero_grad().

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stcad::tensor {

using Shape = std::vector<std::size_t>;

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    std::vector<double>& ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
        return grad;
    }
};

class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Shape shape, std::vector<double> values);
    static Tensor zeros(Shape shape);
    static Tensor scalar(double v);
    /// Leaf that accumulates gradient.
    static Tensor variable(Shape shape, std::vector<double> values);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
    std::size_t size() const { return node_->value.size(); }
    bool requires_grad() const { return node_->requires_grad; }

    std::span<const double> values() const { return node_->value; }
    std::span<double> mutable_values() { return node_->value; }
    double operator[](std::size_t k) const { return node_->value[k]; }
    double item() const;

    /// Gradient view; zeros if nothing has been accumulated yet.
    std::span<const double> grad() const;
    std::span<double> mutable_grad() { return node_->ensure_grad(); }
    void zero_grad();

    const std::shared_ptr<Node>& node() const { return node_; }
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<Node> node_;
};

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

// --- linear algebra -------------------------------------------------------

/// a[..., k] x b[k, n] -> [..., n]; leading dimensions of `a` are flattened.
Tensor matmul(const Tensor& a, const Tensor& b);
/// a[B, m, k] x b[B, k, n] -> [B, m, n], or with transpose_b, b is [B, n, k].
Tensor batched_matmul(const Tensor& a, const Tensor& b, bool transpose_b = false);

// --- elementwise -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
/// a[..., n] + bias[n] broadcast over leading dimensions (bias may be [1, n]).
Tensor add_bias(const Tensor& a, const Tensor& bias);
Tensor scale(const Tensor& a, double s);
/// alpha * a + beta * b.
Tensor scale_add(const Tensor& a, double alpha, const Tensor& b, double beta);
/// alpha * a + beta, elementwise.
Tensor affine(const Tensor& a, double alpha, double beta);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
/// log(clamp(a, lo, hi)); zero gradient where the clamp is active.
Tensor log_clamped(const Tensor& a, double lo, double hi);

// --- reductions and normalisation -----------------------------------------

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Softmax over the last dimension, stabilised by subtracting the row max.
Tensor softmax_rows(const Tensor& a);
/// Normalises over the last dimension (population variance), then gain/bias.
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
/// Averages over the second-to-last dimension: [..., K, d] -> [..., d].
Tensor mean_rows(const Tensor& a);

// --- shape --------------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape);
Tensor concat_last(const Tensor& a, const Tensor& b);
Tensor concat_last(const std::vector<Tensor>& parts);
Tensor slice_last(const Tensor& a, std::size_t start, std::size_t width);
/// Stacks 2-D tensors [r_i, n] into [sum r_i, n].
Tensor concat_rows(const std::vector<Tensor>& parts);
/// Zeros row rows[b] of batch element b in a [B, K, d] tensor.
Tensor mask_rows(const Tensor& a, std::span<const std::size_t> rows);

/// Reverse pass from a scalar. Throws ShapeError for non-scalar losses.
void backward(const Tensor& loss);

// --- parameters and optimisation -----------------------------------------

struct Parameter {
    std::string name;
    Tensor tensor;
    std::vector<double> first_moment;
    std::vector<double> second_moment;

    Parameter(std::string name, Shape shape, std::vector<double> values);
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam. Gradients are zeroed after each step.
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    void step(std::span<Parameter> params);
    std::uint64_t steps() const { return steps_; }
    const AdamConfig& config() const { return config_; }

private:
    AdamConfig config_;
    std::uint64_t steps_ = 0;
};

void adam_step(std::span<Parameter> params, Adam& optimizer);
void zero_grad(std::span<Parameter> params);

}  // namespace stcad::tensor
