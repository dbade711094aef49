#include "stcad/training.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "stcad/rng.hpp"

namespace stcad {

using tensor::Tensor;

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    if (epochs == 0) fail("epochs must be at least 1");
    if (!(lr > 0.0)) fail("lr must be positive");
    if (!(lambda >= 0.0)) fail("lambda must be nonnegative");
    if (batch_size == 0) fail("batch_size must be at least 1");
    if (eval_every == 0) fail("eval_every must be at least 1");
    if (!(split_fraction > 0.0 && split_fraction <= 1.0)) fail("split_fraction must lie in (0, 1]");
    if (!(inject_rate > 0.0)) fail("no positives: inject_rate must be > 0");
    if (inject_rate > 1.0) fail("inject_rate must be at most 1");
}

// ---------------------------------------------------------------------------

Tensor discriminative_loss(const Tensor& scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("discriminative_loss: " + std::to_string(scores.size()) +
                                    " scores vs " + std::to_string(labels.size()) + " labels");
    }
    if (labels.empty()) throw std::invalid_argument("discriminative_loss: empty batch");
    std::vector<double> y(labels.begin(), labels.end());
    std::vector<double> not_y(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) not_y[k] = 1.0 - y[k];
    const double hi = 1.0 - kProbFloor;
    Tensor s = scores;
    Tensor log_s = tensor::log_clamped(s, kProbFloor, hi);
    Tensor log_1ms = tensor::log_clamped(tensor::affine(s, -1.0, 1.0), kProbFloor, hi);
    Tensor ll = tensor::add(tensor::mul(Tensor::constant(s.shape(), std::move(y)), log_s),
                            tensor::mul(Tensor::constant(s.shape(), std::move(not_y)), log_1ms));
    return tensor::scale(tensor::sum(ll), -1.0 / static_cast<double>(labels.size()));
}

double discriminative_loss(std::span<const double> scores, std::span<const int> labels) {
    return discriminative_loss(Tensor::constant({scores.size()}, {scores.begin(), scores.end()}),
                               labels)
        .item();
}

Tensor contextual_loss(const Tensor& original, const Tensor& reconstruction) {
    if (original.shape() != reconstruction.shape()) {
        throw std::invalid_argument("contextual_loss: shape mismatch " +
                                    tensor::shape_string(original.shape()) + " vs " +
                                    tensor::shape_string(reconstruction.shape()));
    }
    if (original.rank() < 2) throw std::invalid_argument("contextual_loss: expected [.., K, d]");
    const double batch = original.rank() >= 3 ? static_cast<double>(original.dim(0)) : 1.0;
    constexpr double inf = std::numeric_limits<double>::infinity();
    Tensor p = tensor::softmax_rows(original);
    Tensor q = tensor::softmax_rows(reconstruction);
    Tensor diff = tensor::sub(tensor::log_clamped(p, kProbFloor, inf),
                              tensor::log_clamped(q, kProbFloor, inf));
    return tensor::scale(tensor::sum(tensor::mul(p, diff)), 1.0 / batch);
}

Tensor total_loss(const Tensor& l_dis, const Tensor& l_con, double lambda) {
    if (lambda == 0.0) return l_dis;
    return tensor::scale_add(l_dis, 1.0, l_con, lambda);
}

LossParts batch_loss(const Batch& batch, std::span<const std::size_t> mask_index,
                     const ModelParams& params, double lambda) {
    ForwardResult fw = forward(batch, params);
    Tensor l_dis = discriminative_loss(fw.scores, batch.labels);
    LossParts out;
    out.l_dis = l_dis.item();
    if (lambda == 0.0 || !params.config().use_contextual_loss) {
        out.total = l_dis;
        return out;
    }
    Tensor rec = mask_and_reconstruct(fw.input, mask_index, params);
    Tensor l_con = contextual_loss(fw.input, rec);
    out.l_con = l_con.item();
    out.total = total_loss(l_dis, l_con, lambda);
    return out;
}

// ---------------------------------------------------------------------------

std::vector<EncodedSample> encode_all(const FeatureExtractor& fx, std::span<const EdgeSample> samples) {
    std::vector<EncodedSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(encode_sample(fx, s));
    return out;
}

PreparedData prepare_data(const FeatureExtractor& fx, const ModelConfig& model,
                          const TrainConfig& train, const PairFilter& test_filter) {
    PreparedData d;
    d.train = build_training_set(fx.series(), train.split_fraction, model.C, model.T, train.seed);
    d.test = build_test_set(fx.series(), train.split_fraction, train.inject_rate, model.C, model.T,
                            train.seed, test_filter);
    d.train_encoded = encode_all(fx, d.train);
    d.test_encoded = encode_all(fx, d.test);
    return d;
}

// ---------------------------------------------------------------------------

namespace {

template <typename Fn>
void for_each_batch(std::span<const EncodedSample> samples, std::size_t batch_size, Fn&& fn) {
    for (std::size_t start = 0; start < samples.size(); start += batch_size) {
        auto n = std::min(batch_size, samples.size() - start);
        fn(make_batch(samples.subspan(start, n)));
    }
}

using Resampler = std::function<void(std::size_t epoch, PreparedData& data)>;

TrainResult run_loop(PreparedData data, const ModelConfig& model, const TrainConfig& config,
                     const ProgressFn& progress, const Resampler& resample) {
    model.validate();
    config.validate();
    if (data.train_encoded.empty()) throw std::invalid_argument("no training samples");
    if (data.test_encoded.empty()) throw std::invalid_argument("no test samples");

    ModelParams params(model, derive_seed(config.seed, "model"));
    tensor::Adam adam({.lr = config.lr});
    std::optional<ModelParams> best;

    TrainReport report;
    report.n_train = data.train_encoded.size();
    report.n_test = data.test_encoded.size();
    const std::size_t K = model.sequence_length();

    std::vector<std::size_t> order(data.train_encoded.size());
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        if (resample && epoch > 1) resample(epoch, data);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(derive_seed(config.seed, "shuffle", epoch));
        shuffle_rng.shuffle(order.begin(), order.end());
        Rng mask_rng(derive_seed(config.seed, "mask", epoch));

        EpochStats stats;
        stats.epoch = epoch;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const auto n = std::min(config.batch_size, order.size() - start);
            std::vector<const EncodedSample*> members;
            std::vector<std::size_t> mask(n);
            for (std::size_t k = 0; k < n; ++k) {
                members.push_back(&data.train_encoded[order[start + k]]);
                mask[k] = mask_rng.below(K);
            }
            Batch batch = make_batch(std::span<const EncodedSample* const>(members));
            LossParts loss = batch_loss(batch, mask, params, config.lambda);
            tensor::backward(loss.total);
            adam.step(params.list());

            const double w = static_cast<double>(n);
            stats.l_dis += w * loss.l_dis;
            stats.l_con += w * loss.l_con;
            stats.loss += w * loss.total.item();
        }
        const double total = static_cast<double>(order.size());
        stats.l_dis /= total;
        stats.l_con /= total;
        stats.loss /= total;
        report.epochs.push_back(stats);

        const EvalPoint* eval_ptr = nullptr;
        if (epoch % config.eval_every == 0 || epoch == config.epochs) {
            EvalPoint point{epoch, evaluate(params, data.test_encoded, config.inject_rate)};
            const bool first = report.evals.empty();
            if (first || point.result.auc > report.best_auc) {
                report.best_auc = point.result.auc;
                report.best_auc_epoch = epoch;
                best = params.clone();
            }
            if (first || point.result.ap > report.best_ap) {
                report.best_ap = point.result.ap;
                report.best_ap_epoch = epoch;
            }
            report.evals.push_back(point);
            eval_ptr = &report.evals.back();
        }
        if (progress) progress(stats, eval_ptr);
    }
    return TrainResult{std::move(params), std::move(*best), std::move(report)};
}

}  // namespace

std::vector<double> score_samples(const ModelParams& params, std::span<const EncodedSample> samples,
                                  std::size_t batch_size) {
    tensor::NoGradGuard no_grad;
    std::vector<double> out;
    out.reserve(samples.size());
    for_each_batch(samples, batch_size, [&](const Batch& b) {
        Tensor scores = forward(b, params).scores;
        out.insert(out.end(), scores.values().begin(), scores.values().end());
    });
    return out;
}

std::vector<std::vector<double>> embed_samples(const ModelParams& params,
                                               std::span<const EncodedSample> samples,
                                               std::size_t batch_size) {
    tensor::NoGradGuard no_grad;
    const std::size_t d = params.config().d;
    std::vector<std::vector<double>> out;
    out.reserve(samples.size());
    for_each_batch(samples, batch_size, [&](const Batch& b) {
        Tensor emb = forward(b, params).embedding;
        auto e = emb.values();
        for (std::size_t r = 0; r < b.size; ++r) {
            out.emplace_back(e.begin() + r * d, e.begin() + (r + 1) * d);
        }
    });
    return out;
}

EvalResult evaluate(const ModelParams& params, std::span<const EncodedSample> samples,
                    double inject_rate, std::size_t batch_size) {
    auto scores = score_samples(params, samples, batch_size);
    std::vector<int> labels;
    labels.reserve(samples.size());
    for (const auto& s : samples) labels.push_back(s.label);
    return evaluate_scores(scores, labels, inject_rate);
}

TrainResult train(const FeatureExtractor& fx, const ModelConfig& model, const TrainConfig& config,
                  const PairFilter& test_filter, const ProgressFn& progress) {
    config.validate();
    model.validate();
    PreparedData data = prepare_data(fx, model, config, test_filter);
    Resampler resample;
    if (config.resample_negatives_each_epoch) {
        resample = [&fx, &model, &config](std::size_t epoch, PreparedData& d) {
            d.train = build_training_set(fx.series(), config.split_fraction, model.C, model.T,
                                         derive_seed(config.seed, "resample", epoch));
            d.train_encoded = encode_all(fx, d.train);
        };
    }
    return run_loop(std::move(data), model, config, progress, resample);
}

TrainResult train(PreparedData data, const ModelConfig& model, const TrainConfig& config,
                  const ProgressFn& progress) {
    if (config.resample_negatives_each_epoch) {
        throw std::invalid_argument("resampling negatives needs the feature extractor");
    }
    return run_loop(std::move(data), model, config, progress, {});
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json to_json(const TrainReport& r) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.config) cfg[k] = v;
    j["config"] = cfg;
    j["n_train"] = r.n_train;
    j["n_test"] = r.n_test;
    j["best"] = {{"auc", r.best_auc},
                 {"auc_epoch", r.best_auc_epoch},
                 {"ap", r.best_ap},
                 {"ap_epoch", r.best_ap_epoch}};
    auto& epochs = j["epochs"] = nlohmann::ordered_json::array();
    for (const auto& e : r.epochs) {
        epochs.push_back({{"epoch", e.epoch}, {"l_dis", e.l_dis}, {"l_con", e.l_con}, {"loss", e.loss}});
    }
    auto& evals = j["evals"] = nlohmann::ordered_json::array();
    for (const auto& e : r.evals) {
        auto item = to_json(e.result);
        item["epoch"] = e.epoch;
        evals.push_back(item);
    }
    return j;
}

}  // namespace stcad
