#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stcad/features.hpp"
#include "stcad/sampler.hpp"
#include "stcad/tensor.hpp"

namespace stcad {

struct ModelConfig {
    std::size_t d = 32;
    std::size_t heads = 2;
    std::size_t layers = 2;
    std::size_t C = 5;
    std::size_t T = 4;
    std::size_t d_ff = 128;

    bool use_level1 = true;
    bool use_level2 = true;
    bool use_pe_tmp = true;
    bool use_pe_rel = true;
    bool use_contextual_loss = true;
    // Conventional post-LN residual (layer input) instead of adding Q.
    bool residual_uses_input = false;

    std::size_t sequence_length() const { return (C + 2) * T; }
    std::size_t head_dim() const { return d / heads; }
    /// Throws std::invalid_argument on inconsistent sizes.
    void validate() const;
};

struct LayerParams {
    tensor::Tensor w_q, w_k, w_v, w_o;
    tensor::Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    tensor::Tensor ln1_g, ln1_b, ln2_g, ln2_b;
};

/// All learnable weights. Tensors in the named fields share storage with the
/// entries of list(), which is the order used for checkpoints and the
/// optimizer. Move-only; use clone() for an independent copy.
class ModelParams {
public:
    ModelParams(const ModelConfig& config, std::uint64_t seed);

    ModelParams(ModelParams&&) = default;
    ModelParams& operator=(ModelParams&&) = default;
    ModelParams(const ModelParams&) = delete;
    ModelParams& operator=(const ModelParams&) = delete;

    ModelParams clone() const;

    const ModelConfig& config() const { return config_; }
    std::span<tensor::Parameter> list() { return list_; }
    std::span<const tensor::Parameter> list() const { return list_; }
    std::size_t scalar_count() const;

    // feature projections, each [1, d]
    tensor::Tensor w_g, w_l, w_t, w_d, w_i, w_c;
    // positional projections, each [1, d/2]
    tensor::Tensor w_tmp, w_rel;
    std::vector<LayerParams> layers;
    tensor::Tensor score_w, score_b;  // [d, 1], [1]
    tensor::Tensor dec_w1, dec_b1, dec_w2, dec_b2;

private:
    ModelParams(const ModelConfig& config, std::vector<tensor::Parameter> list);
    void bind();

    ModelConfig config_;
    std::vector<tensor::Parameter> list_;
};

/// Relative structural class of a node at one window position.
enum class RelClass : int { endpoint = 0, common_neighbor = 1, other = 2 };

RelClass relative_class(const Snapshot& s, NodeId i, NodeId j, NodeId v);

/// Numeric model input for one sample: K rows of six features plus the
/// (window position, relative class) pair for each row, in window-major order.
struct EncodedSample {
    std::vector<double> features;   // K * kFeatureCount
    std::vector<double> positions;  // K * 2
    int label = 0;
};

EncodedSample encode_sample(const FeatureExtractor& fx, const EdgeSample& sample);

/// Feature rows of an encoded sample, for the CSV dump.
std::vector<FeatureDumpRow> dump_rows(const EdgeSample& sample, const EncodedSample& enc,
                                      std::size_t sample_id);

// --- per-node pieces ----------------------------------------------------------

/// Sum of enabled feature scalars times their projection rows -> [d].
tensor::Tensor aggregate_node_embedding(const FeatureVector& f, const ModelParams& params);
/// concat(t * w_tmp, rel * w_rel) -> [d]. rel_class must be 0, 1 or 2.
tensor::Tensor positional_encoding(std::size_t t, int rel_class, const ModelParams& params);

// --- batched model ----------------------------------------------------------------

/// Row-major stack of encoded samples ready for the model.
struct Batch {
    std::size_t size = 0;
    std::size_t K = 0;
    std::vector<double> features;   // size * K * 6
    std::vector<double> positions;  // size * K * 2
    std::vector<int> labels;
};

Batch make_batch(std::span<const EncodedSample* const> samples);
Batch make_batch(std::span<const EncodedSample> samples);

/// X + PE for every position -> [B, K, d].
tensor::Tensor build_input_sequence(const Batch& batch, const ModelParams& params);

/// One attention block on [B, K, d] (or [K, d]). If `attention` is given, the
/// per-head attention matrices [B, K, K] are appended to it.
tensor::Tensor transformer_layer(const tensor::Tensor& h, const LayerParams& layer,
                                 const ModelConfig& config,
                                 std::vector<tensor::Tensor>* attention = nullptr);

tensor::Tensor encode(const tensor::Tensor& seq, const ModelParams& params,
                      std::vector<tensor::Tensor>* attention = nullptr);

/// Mean over the K positions: [B, K, d] -> [B, d].
tensor::Tensor edge_embedding(const tensor::Tensor& hidden);

/// sigmoid(E w + b): [B, d] -> [B, 1].
tensor::Tensor score_edge(const tensor::Tensor& embedding, const ModelParams& params);

/// Per-position decoder MLP: [..., d] -> [..., d].
tensor::Tensor decode(const tensor::Tensor& hidden, const ModelParams& params);

/// Zeros row mask_index[b] of each sequence, re-encodes and decodes.
tensor::Tensor mask_and_reconstruct(const tensor::Tensor& seq, std::span<const std::size_t> mask_index,
                                    const ModelParams& params);

struct ForwardResult {
    tensor::Tensor input;      // [B, K, d]
    tensor::Tensor embedding;  // [B, d]
    tensor::Tensor scores;     // [B, 1]
};

ForwardResult forward(const Batch& batch, const ModelParams& params);

}  // namespace stcad
