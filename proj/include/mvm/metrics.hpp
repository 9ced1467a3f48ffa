#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvm/errors.hpp"
#include "mvm/objectives.hpp"

namespace mvm {

namespace detail {

inline void check_pair(std::span<const double> scores, std::span<const double> labels) {
    if (scores.size() != labels.size()) {
        throw ConfigError("scores and labels differ in length (" + std::to_string(scores.size()) +
                          " vs " + std::to_string(labels.size()) + ")");
    }
    if (scores.empty()) {
        throw ConfigError("metric needs at least one score");
    }
}

}  // namespace detail

/// Decision for a raw score; a score of exactly 0 is classified +1.
inline double decide(double score) { return score >= 0.0 ? 1.0 : -1.0; }

inline double accuracy(std::span<const double> scores, std::span<const double> labels) {
    detail::check_pair(scores, labels);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        hits += decide(scores[i]) == labels[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(scores.size());
}

/// Mann-Whitney AUC with tied scores counted as 1/2. Positives are labels > 0.
inline double auc(std::span<const double> scores, std::span<const double> labels) {
    detail::check_pair(scores, labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of midranks of the positives.
    double rank_sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]] > 0.0) {
                rank_sum += midrank;
                ++positives;
            }
        }
        i = j;
    }
    const std::size_t negatives = scores.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw UndefinedMetricError("AUC is undefined when only one class is present");
    }
    const double np = static_cast<double>(positives);
    const double nn = static_cast<double>(negatives);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

inline double rmse(std::span<const double> scores, std::span<const double> targets) {
    detail::check_pair(scores, targets);
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double r = scores[i] - targets[i];
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(scores.size()));
}

inline double mean_logloss(std::span<const double> scores, std::span<const double> labels) {
    detail::check_pair(scores, labels);
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        sum += loss_value(LossKind::logit, scores[i], labels[i]);
    }
    return sum / static_cast<double>(scores.size());
}

struct EvalReport {
    std::optional<double> accuracy;
    std::optional<double> auc;
    std::optional<double> logloss;
    std::optional<double> rmse;
};

}  // namespace mvm
