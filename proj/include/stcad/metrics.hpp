#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace stcad {

class MetricError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Probability that a random positive (label 1) outscores a random negative,
/// ties counted as one half. Needs both classes.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Step-sum average precision over the ranking by descending score; ties are
/// broken by label ascending, then index ascending. Needs a positive.
double average_precision(std::span<const double> scores, std::span<const int> labels);

struct EvalResult {
    double auc = 0.0;
    double ap = 0.0;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    double inject_rate = 0.0;
};

EvalResult evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                           double inject_rate);

nlohmann::ordered_json to_json(const EvalResult& r);

}  // namespace stcad
