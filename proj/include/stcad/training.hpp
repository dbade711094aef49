#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stcad/features.hpp"
#include "stcad/metrics.hpp"
#include "stcad/model.hpp"
#include "stcad/sampler.hpp"
#include "stcad/tensor.hpp"

namespace stcad {

struct TrainConfig {
    std::size_t epochs = 300;
    double lr = 1e-3;
    double lambda = 1.0;
    std::size_t batch_size = 128;
    std::uint64_t seed = 1;
    double inject_rate = 0.10;
    double split_fraction = 0.5;
    std::size_t eval_every = 10;
    bool resample_negatives_each_epoch = false;

    void validate() const;
};

// --- losses -------------------------------------------------------------------

inline constexpr double kProbFloor = 1e-12;

/// Mean binary cross-entropy; label 1 (anomaly) pulls the score towards 1.
tensor::Tensor discriminative_loss(const tensor::Tensor& scores, std::span<const int> labels);
double discriminative_loss(std::span<const double> scores, std::span<const int> labels);

/// Row-softmax both inputs, KL(orig || rec) per position with both floored at
/// 1e-12, summed over positions and averaged over the leading batch axis.
tensor::Tensor contextual_loss(const tensor::Tensor& original, const tensor::Tensor& reconstruction);

tensor::Tensor total_loss(const tensor::Tensor& l_dis, const tensor::Tensor& l_con, double lambda);

struct LossParts {
    tensor::Tensor total;
    double l_dis = 0.0;
    double l_con = 0.0;
};

/// Full objective on one batch. The contextual branch is skipped when
/// lambda is 0 or the model config disables it.
LossParts batch_loss(const Batch& batch, std::span<const std::size_t> mask_index,
                     const ModelParams& params, double lambda);

// --- data -------------------------------------------------------------------------

struct PreparedData {
    std::vector<EdgeSample> train;
    std::vector<EdgeSample> test;
    std::vector<EncodedSample> train_encoded;
    std::vector<EncodedSample> test_encoded;
};

std::vector<EncodedSample> encode_all(const FeatureExtractor& fx, std::span<const EdgeSample> samples);

PreparedData prepare_data(const FeatureExtractor& fx, const ModelConfig& model,
                          const TrainConfig& train, const PairFilter& test_filter = {});

// --- loop ---------------------------------------------------------------------------

struct EpochStats {
    std::size_t epoch = 0;
    double l_dis = 0.0;
    double l_con = 0.0;
    double loss = 0.0;
};

struct EvalPoint {
    std::size_t epoch = 0;
    EvalResult result;
};

struct TrainReport {
    std::vector<std::pair<std::string, std::string>> config;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::vector<EpochStats> epochs;
    std::vector<EvalPoint> evals;
    std::size_t best_auc_epoch = 0;
    double best_auc = 0.0;
    std::size_t best_ap_epoch = 0;
    double best_ap = 0.0;
};

nlohmann::ordered_json to_json(const TrainReport& report);

struct TrainResult {
    ModelParams final_params;
    ModelParams best_params;  // at the best-AUC evaluation
    TrainReport report;
};

using ProgressFn = std::function<void(const EpochStats&, const EvalPoint*)>;

/// Scores in sample order, computed without recording gradients.
std::vector<double> score_samples(const ModelParams& params, std::span<const EncodedSample> samples,
                                  std::size_t batch_size = 256);
/// Edge embeddings [n][d] in sample order.
std::vector<std::vector<double>> embed_samples(const ModelParams& params,
                                               std::span<const EncodedSample> samples,
                                               std::size_t batch_size = 256);

EvalResult evaluate(const ModelParams& params, std::span<const EncodedSample> samples,
                    double inject_rate, std::size_t batch_size = 256);

TrainResult train(const FeatureExtractor& fx, const ModelConfig& model, const TrainConfig& config,
                  const PairFilter& test_filter = {}, const ProgressFn& progress = {});

/// Same loop on already prepared data (negatives cannot be resampled).
TrainResult train(PreparedData data, const ModelConfig& model, const TrainConfig& config,
                  const ProgressFn& progress = {});

}  // namespace stcad
