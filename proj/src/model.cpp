#include "stcad/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stcad/rng.hpp"

namespace stcad {

using tensor::Parameter;
using tensor::Shape;
using tensor::Tensor;

void ModelConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    if (d == 0 || d % 2 != 0) fail("d must be a positive even number");
    if (heads == 0 || d % heads != 0) fail("d must be divisible by heads");
    if (layers == 0) fail("layers must be at least 1");
    if (C == 0) fail("C must be at least 1");
    if (T == 0) fail("T must be at least 1");
    if (d_ff == 0) fail("d_ff must be at least 1");
}

namespace {

Parameter xavier(std::string name, std::size_t rows, std::size_t cols, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = rng.uniform(-a, a);
    return Parameter(std::move(name), {rows, cols}, std::move(v));
}

Parameter filled(std::string name, std::size_t n, double value) {
    return Parameter(std::move(name), {n}, std::vector<double>(n, value));
}

std::vector<Parameter> init_list(const ModelConfig& c, std::uint64_t seed) {
    c.validate();
    Rng rng(derive_seed(seed, "init"));
    std::vector<Parameter> out;
    for (const char* n : {"w_g", "w_l", "w_t", "w_d", "w_i", "w_c"}) {
        out.push_back(xavier(n, 1, c.d, rng));
    }
    out.push_back(xavier("w_tmp", 1, c.d / 2, rng));
    out.push_back(xavier("w_rel", 1, c.d / 2, rng));
    for (std::size_t l = 0; l < c.layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        out.push_back(xavier(p + "w_q", c.d, c.d, rng));
        out.push_back(xavier(p + "w_k", c.d, c.d, rng));
        out.push_back(xavier(p + "w_v", c.d, c.d, rng));
        out.push_back(xavier(p + "w_o", c.d, c.d, rng));
        out.push_back(xavier(p + "ffn_w1", c.d, c.d_ff, rng));
        out.push_back(filled(p + "ffn_b1", c.d_ff, 0.0));
        out.push_back(xavier(p + "ffn_w2", c.d_ff, c.d, rng));
        out.push_back(filled(p + "ffn_b2", c.d, 0.0));
        out.push_back(filled(p + "ln1_g", c.d, 1.0));
        out.push_back(filled(p + "ln1_b", c.d, 0.0));
        out.push_back(filled(p + "ln2_g", c.d, 1.0));
        out.push_back(filled(p + "ln2_b", c.d, 0.0));
    }
    out.push_back(xavier("score_w", c.d, 1, rng));
    out.push_back(filled("score_b", 1, 0.0));
    out.push_back(xavier("dec_w1", c.d, c.d_ff, rng));
    out.push_back(filled("dec_b1", c.d_ff, 0.0));
    out.push_back(xavier("dec_w2", c.d_ff, c.d, rng));
    out.push_back(filled("dec_b2", c.d, 0.0));
    return out;
}

}  // namespace

ModelParams::ModelParams(const ModelConfig& config, std::uint64_t seed)
    : ModelParams(config, init_list(config, seed)) {}

ModelParams::ModelParams(const ModelConfig& config, std::vector<Parameter> list)
    : config_(config), list_(std::move(list)) {
    bind();
}

void ModelParams::bind() {
    std::size_t k = 0;
    auto next = [&]() -> Tensor { return list_.at(k++).tensor; };
    w_g = next();
    w_l = next();
    w_t = next();
    w_d = next();
    w_i = next();
    w_c = next();
    w_tmp = next();
    w_rel = next();
    layers.assign(config_.layers, {});
    for (auto& layer : layers) {
        layer.w_q = next();
        layer.w_k = next();
        layer.w_v = next();
        layer.w_o = next();
        layer.ffn_w1 = next();
        layer.ffn_b1 = next();
        layer.ffn_w2 = next();
        layer.ffn_b2 = next();
        layer.ln1_g = next();
        layer.ln1_b = next();
        layer.ln2_g = next();
        layer.ln2_b = next();
    }
    score_w = next();
    score_b = next();
    dec_w1 = next();
    dec_b1 = next();
    dec_w2 = next();
    dec_b2 = next();
}

ModelParams ModelParams::clone() const {
    std::vector<Parameter> copy;
    copy.reserve(list_.size());
    for (const auto& p : list_) {
        Parameter q(p.name, p.tensor.shape(),
                    std::vector<double>(p.tensor.values().begin(), p.tensor.values().end()));
        q.first_moment = p.first_moment;
        q.second_moment = p.second_moment;
        copy.push_back(std::move(q));
    }
    return ModelParams(config_, std::move(copy));
}

std::size_t ModelParams::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : list_) n += p.tensor.size();
    return n;
}

// ---------------------------------------------------------------------------

RelClass relative_class(const Snapshot& s, NodeId i, NodeId j, NodeId v) {
    if (v == i || v == j) return RelClass::endpoint;
    auto ni = s.neighbors(i);
    auto nj = s.neighbors(j);
    if (std::binary_search(ni.begin(), ni.end(), v) && std::binary_search(nj.begin(), nj.end(), v)) {
        return RelClass::common_neighbor;
    }
    return RelClass::other;
}

EncodedSample encode_sample(const FeatureExtractor& fx, const EdgeSample& sample) {
    const std::size_t T = sample.timesteps();
    const std::size_t width = T == 0 ? 0 : sample.window.front().size();
    EncodedSample enc;
    enc.label = sample.label;
    enc.features.reserve(T * width * kFeatureCount);
    enc.positions.reserve(T * width * 2);
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t abs_t = sample.snapshot_at(t);
        const Snapshot& snap = fx.series()[abs_t];
        const auto coupling = fx.coupling(abs_t, sample.i, sample.j);
        for (NodeId v : sample.window[t]) {
            const auto l1 = fx.level1(abs_t, sample.i, sample.j, v);
            enc.features.insert(enc.features.end(),
                                {l1.glo, l1.loc, l1.tmp, coupling.dc, coupling.ic, coupling.nc});
            enc.positions.push_back(static_cast<double>(t));
            enc.positions.push_back(
                static_cast<double>(static_cast<int>(relative_class(snap, sample.i, sample.j, v))));
        }
    }
    return enc;
}

std::vector<FeatureDumpRow> dump_rows(const EdgeSample& sample, const EncodedSample& enc,
                                      std::size_t sample_id) {
    std::vector<FeatureDumpRow> rows;
    std::size_t k = 0;
    for (std::size_t t = 0; t < sample.timesteps(); ++t) {
        for (NodeId v : sample.window[t]) {
            const double* f = enc.features.data() + k * kFeatureCount;
            rows.push_back({sample_id, sample.snapshot_at(t), v, {f[0], f[1], f[2], f[3], f[4], f[5]}});
            ++k;
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------

Tensor aggregate_node_embedding(const FeatureVector& f, const ModelParams& params) {
    const auto& c = params.config();
    auto x = f.as_array();
    if (!c.use_level1) x[0] = x[1] = x[2] = 0.0;
    if (!c.use_level2) x[3] = x[4] = x[5] = 0.0;
    Tensor row = Tensor::constant({1, kFeatureCount}, {x.begin(), x.end()});
    Tensor w = tensor::concat_rows({params.w_g, params.w_l, params.w_t, params.w_d, params.w_i,
                                    params.w_c});
    return tensor::reshape(tensor::matmul(row, w), {c.d});
}

Tensor positional_encoding(std::size_t t, int rel_class, const ModelParams& params) {
    if (rel_class < 0 || rel_class > 2) {
        throw std::invalid_argument("relative class must be 0, 1 or 2, got " +
                                    std::to_string(rel_class));
    }
    const auto& c = params.config();
    Tensor tt = Tensor::constant({1, 1}, {c.use_pe_tmp ? static_cast<double>(t) : 0.0});
    Tensor rr = Tensor::constant({1, 1}, {c.use_pe_rel ? static_cast<double>(rel_class) : 0.0});
    Tensor pe = tensor::concat_last(tensor::matmul(tt, params.w_tmp), tensor::matmul(rr, params.w_rel));
    return tensor::reshape(pe, {c.d});
}

Batch make_batch(std::span<const EncodedSample* const> samples) {
    Batch b;
    b.size = samples.size();
    if (samples.empty()) return b;
    b.K = samples.front()->positions.size() / 2;
    b.features.reserve(b.size * b.K * kFeatureCount);
    b.positions.reserve(b.size * b.K * 2);
    for (const auto* s : samples) {
        if (s->positions.size() != b.K * 2 || s->features.size() != b.K * kFeatureCount) {
            throw std::invalid_argument("make_batch: samples have different sequence lengths");
        }
        b.features.insert(b.features.end(), s->features.begin(), s->features.end());
        b.positions.insert(b.positions.end(), s->positions.begin(), s->positions.end());
        b.labels.push_back(s->label);
    }
    return b;
}

Batch make_batch(std::span<const EncodedSample> samples) {
    std::vector<const EncodedSample*> ptrs;
    ptrs.reserve(samples.size());
    for (const auto& s : samples) ptrs.push_back(&s);
    return make_batch(std::span<const EncodedSample* const>(ptrs));
}

Tensor build_input_sequence(const Batch& batch, const ModelParams& params) {
    const auto& c = params.config();
    const std::size_t rows = batch.size * batch.K;
    if (rows == 0) throw std::invalid_argument("build_input_sequence: empty batch");

    std::vector<double> feats = batch.features;
    std::vector<double> tcol(rows), rcol(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double* f = feats.data() + r * kFeatureCount;
        if (!c.use_level1) f[0] = f[1] = f[2] = 0.0;
        if (!c.use_level2) f[3] = f[4] = f[5] = 0.0;
        tcol[r] = c.use_pe_tmp ? batch.positions[2 * r] : 0.0;
        const double rel = batch.positions[2 * r + 1];
        if (rel != 0.0 && rel != 1.0 && rel != 2.0) {
            throw std::invalid_argument("build_input_sequence: relative class out of range");
        }
        rcol[r] = c.use_pe_rel ? rel : 0.0;
    }

    Tensor x = Tensor::constant({rows, kFeatureCount}, std::move(feats));
    Tensor w = tensor::concat_rows({params.w_g, params.w_l, params.w_t, params.w_d, params.w_i,
                                    params.w_c});
    Tensor pe = tensor::concat_last(
        tensor::matmul(Tensor::constant({rows, 1}, std::move(tcol)), params.w_tmp),
        tensor::matmul(Tensor::constant({rows, 1}, std::move(rcol)), params.w_rel));
    return tensor::reshape(tensor::add(tensor::matmul(x, w), pe), {batch.size, batch.K, c.d});
}

Tensor transformer_layer(const Tensor& h_in, const LayerParams& layer, const ModelConfig& config,
                         std::vector<Tensor>* attention) {
    const bool flat = h_in.rank() == 2;
    Tensor h = flat ? tensor::reshape(h_in, {1, h_in.dim(0), h_in.dim(1)}) : h_in;
    if (h.rank() != 3 || h.dim(2) != config.d) {
        throw tensor::ShapeError("transformer_layer: expected [B, K, d] input");
    }

    Tensor q = tensor::matmul(h, layer.w_q);
    Tensor k = tensor::matmul(h, layer.w_k);
    Tensor v = tensor::matmul(h, layer.w_v);
    const std::size_t hd = config.head_dim();
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(config.d));
    std::vector<Tensor> heads;
    heads.reserve(config.heads);
    for (std::size_t a = 0; a < config.heads; ++a) {
        Tensor qa = tensor::slice_last(q, a * hd, hd);
        Tensor ka = tensor::slice_last(k, a * hd, hd);
        Tensor va = tensor::slice_last(v, a * hd, hd);
        Tensor p = tensor::softmax_rows(tensor::scale(tensor::batched_matmul(qa, ka, true), inv_scale));
        if (attention) attention->push_back(p);
        heads.push_back(tensor::batched_matmul(p, va));
    }
    Tensor a = tensor::matmul(heads.size() == 1 ? heads.front() : tensor::concat_last(heads), layer.w_o);

    Tensor h1 = tensor::layer_norm(tensor::add(a, config.residual_uses_input ? h : q), layer.ln1_g,
                                   layer.ln1_b);
    Tensor ff = tensor::add_bias(tensor::matmul(h1, layer.ffn_w1), layer.ffn_b1);
    ff = tensor::add_bias(tensor::matmul(tensor::relu(ff), layer.ffn_w2), layer.ffn_b2);
    Tensor out = tensor::layer_norm(tensor::add(ff, h1), layer.ln2_g, layer.ln2_b);
    return flat ? tensor::reshape(out, h_in.shape()) : out;
}

Tensor encode(const Tensor& seq, const ModelParams& params, std::vector<Tensor>* attention) {
    Tensor h = seq;
    for (const auto& layer : params.layers) h = transformer_layer(h, layer, params.config(), attention);
    return h;
}

Tensor edge_embedding(const Tensor& hidden) { return tensor::mean_rows(hidden); }

Tensor score_edge(const Tensor& embedding, const ModelParams& params) {
    return tensor::sigmoid(tensor::add_bias(tensor::matmul(embedding, params.score_w), params.score_b));
}

Tensor decode(const Tensor& hidden, const ModelParams& params) {
    Tensor z = tensor::relu(tensor::add_bias(tensor::matmul(hidden, params.dec_w1), params.dec_b1));
    return tensor::add_bias(tensor::matmul(z, params.dec_w2), params.dec_b2);
}

Tensor mask_and_reconstruct(const Tensor& seq, std::span<const std::size_t> mask_index,
                            const ModelParams& params) {
    return decode(encode(tensor::mask_rows(seq, mask_index), params), params);
}

ForwardResult forward(const Batch& batch, const ModelParams& params) {
    ForwardResult r;
    r.input = build_input_sequence(batch, params);
    r.embedding = edge_embedding(encode(r.input, params));
    r.scores = score_edge(r.embedding, params);
    return r;
}

}  // namespace stcad
