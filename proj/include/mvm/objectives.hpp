#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "mvm/errors.hpp"

namespace mvm {

enum class LossKind { square, logit, hinge };

enum class RegKind { l2, l1_smoothed };

inline constexpr double kDefaultL1Epsilon = 1e-6;

/// Regularizer choice. `epsilon` smooths |theta| as sqrt(theta^2 + eps^2).
struct Regularizer {
    RegKind kind = RegKind::l2;
    double epsilon = kDefaultL1Epsilon;

    static Regularizer l2() { return {RegKind::l2, kDefaultL1Epsilon}; }
    static Regularizer l1(double eps = kDefaultL1Epsilon) {
        if (!(eps > 0.0)) {
            throw ConfigError("smoothed L1 epsilon must be positive");
        }
        return {RegKind::l1_smoothed, eps};
    }
};

inline std::string_view to_string(LossKind k) {
    switch (k) {
        case LossKind::square: return "square";
        case LossKind::logit: return "logit";
        case LossKind::hinge: return "hinge";
    }
    return "?";
}

inline std::optional<LossKind> parse_loss_kind(std::string_view s) {
    if (s == "square") return LossKind::square;
    if (s == "logit") return LossKind::logit;
    if (s == "hinge") return LossKind::hinge;
    return std::nullopt;
}

inline bool is_classification(LossKind k) { return k != LossKind::square; }

inline void check_label(LossKind kind, double y) {
    if (is_classification(kind) && y != 1.0 && y != -1.0) {
        throw ConfigError(std::string(to_string(kind)) + " loss needs labels in {-1, +1}, got " +
                          std::to_string(y));
    }
}

/// log(1 + exp(t)) without overflow.
inline double softplus(double t) {
    return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

/// 1 / (1 + exp(-t)) without overflow.
inline double sigmoid(double t) {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

inline double loss_value(LossKind kind, double score, double y) {
    check_label(kind, y);
    switch (kind) {
        case LossKind::square: {
            const double r = score - y;
            return r * r;
        }
        case LossKind::logit: return softplus(-y * score);
        case LossKind::hinge: return std::max(0.0, 1.0 - y * score);
    }
    return 0.0;
}

/// dL/dscore. The hinge subgradient at the kink y*score == 1 is 0.
inline double loss_derivative(LossKind kind, double score, double y) {
    check_label(kind, y);
    switch (kind) {
        case LossKind::square: return 2.0 * (score - y);
        case LossKind::logit: return -y * sigmoid(-y * score);
        case LossKind::hinge: return y * score < 1.0 ? -y : 0.0;
    }
    return 0.0;
}

inline double reg_term(const Regularizer& reg, double theta) {
    switch (reg.kind) {
        case RegKind::l2: return theta * theta;
        case RegKind::l1_smoothed: return std::sqrt(theta * theta + reg.epsilon * reg.epsilon);
    }
    return 0.0;
}

inline double reg_value(const Regularizer& reg, std::span<const double> params) {
    double sum = 0.0;
    for (double p : params) {
        sum += reg_term(reg, p);
    }
    return sum;
}

inline double reg_gradient(const Regularizer& reg, double theta) {
    switch (reg.kind) {
        case RegKind::l2: return 2.0 * theta;
        case RegKind::l1_smoothed:
            return theta / std::sqrt(theta * theta + reg.epsilon * reg.epsilon);
    }
    return 0.0;
}

}  // namespace mvm
