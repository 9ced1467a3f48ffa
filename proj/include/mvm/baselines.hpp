#pragma once

// Comparison models trained with the same SGD harness as the MVM:
//   * LinearModel: w0 + sum_v <w(v), x(v)>, first-order terms only.
//   * MvfmModel: a second-order factorization machine restricted to
//     cross-view pairs, w0 + first order + sum_{p<q} <v(p)_i, v(q)_j> x_i x_j.
// The highest-order-only tensor model is MvmModel with augment == false.

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "mvm/dataset.hpp"
#include "mvm/errors.hpp"
#include "mvm/matrix.hpp"
#include "mvm/objectives.hpp"
#include "mvm/random.hpp"
#include "mvm/schema.hpp"
#include "mvm/training.hpp"

namespace mvm {

class LinearModel {
public:
    explicit LinearModel(ViewSchema schema) : schema_(std::move(schema)) {
        for (std::size_t d : schema_.dims()) {
            weights_.emplace_back(d, 0.0);
        }
    }

    [[nodiscard]] const ViewSchema& schema() const noexcept { return schema_; }
    [[nodiscard]] double w0() const noexcept { return w0_; }
    double& w0() noexcept { return w0_; }
    [[nodiscard]] const std::vector<double>& weights(std::size_t v) const { return weights_.at(v); }
    std::vector<double>& weights(std::size_t v) { return weights_.at(v); }

    [[nodiscard]] std::size_t parameter_count() const { return 1 + schema_.total_dim(); }

    /// fn(value&, is_bias) for every parameter, w0 first.
    template <typename Fn>
    void for_each_parameter(Fn&& fn) {
        fn(w0_, true);
        for (auto& w : weights_) {
            for (double& t : w) fn(t, false);
        }
    }
    template <typename Fn>
    void for_each_parameter(Fn&& fn) const {
        fn(w0_, true);
        for (const auto& w : weights_) {
            for (double t : w) fn(t, false);
        }
    }

    bool operator==(const LinearModel&) const = default;

private:
    ViewSchema schema_;
    double w0_ = 0.0;
    std::vector<std::vector<double>> weights_;
};

class MvfmModel {
public:
    MvfmModel(ViewSchema schema, std::size_t k) : schema_(std::move(schema)), k_(k) {
        if (k_ == 0) {
            throw ConfigError("factor count k must be at least 1");
        }
        for (std::size_t d : schema_.dims()) {
            first_order_.emplace_back(d, 0.0);
            latent_.emplace_back(d, k_);
        }
    }

    [[nodiscard]] const ViewSchema& schema() const noexcept { return schema_; }
    [[nodiscard]] std::size_t rank() const noexcept { return k_; }
    [[nodiscard]] double w0() const noexcept { return w0_; }
    double& w0() noexcept { return w0_; }
    [[nodiscard]] const std::vector<double>& first_order(std::size_t v) const {
        return first_order_.at(v);
    }
    std::vector<double>& first_order(std::size_t v) { return first_order_.at(v); }
    [[nodiscard]] const Matrix& latent(std::size_t v) const { return latent_.at(v); }
    Matrix& latent(std::size_t v) { return latent_.at(v); }

    [[nodiscard]] std::size_t parameter_count() const {
        return 1 + schema_.total_dim() * (1 + k_);
    }

    template <typename Fn>
    void for_each_parameter(Fn&& fn) {
        fn(w0_, true);
        for (auto& w : first_order_) {
            for (double& t : w) fn(t, false);
        }
        for (auto& m : latent_) {
            for (double& t : m.data()) fn(t, false);
        }
    }
    template <typename Fn>
    void for_each_parameter(Fn&& fn) const {
        fn(w0_, true);
        for (const auto& w : first_order_) {
            for (double t : w) fn(t, false);
        }
        for (const auto& m : latent_) {
            for (double t : m.data()) fn(t, false);
        }
    }

    bool operator==(const MvfmModel&) const = default;

private:
    ViewSchema schema_;
    std::size_t k_;
    double w0_ = 0.0;
    std::vector<std::vector<double>> first_order_;
    std::vector<Matrix> latent_;
};

inline double linear_predict(const LinearModel& model, const MultiViewInstance& x) {
    check_conforms(model.schema(), x);
    double y = model.w0();
    for (std::size_t v = 0; v < x.views.size(); ++v) {
        const auto& w = model.weights(v);
        for (const auto& e : x.views[v].entries()) {
            y += w[e.index] * e.value;
        }
    }
    return y;
}

/// Parameter of a baseline model. `index` and `factor` are 0-based; `factor`
/// is only meaningful for latent entries.
struct BaselineCoordinate {
    enum class Kind { bias, first_order, latent };
    Kind kind = Kind::bias;
    std::size_t view = 0;
    std::size_t index = 0;
    std::size_t factor = 0;
};

inline double linear_gradient(const LinearModel& model, const MultiViewInstance& x,
                              const BaselineCoordinate& c) {
    check_conforms(model.schema(), x);
    switch (c.kind) {
        case BaselineCoordinate::Kind::bias: return 1.0;
        case BaselineCoordinate::Kind::first_order:
            if (c.view >= model.schema().num_views() || c.index >= model.schema().dim(c.view)) {
                break;
            }
            return x.views[c.view].to_dense(model.schema().dim(c.view))[c.index];
        case BaselineCoordinate::Kind::latent: break;
    }
    throw SchemaError("invalid linear model coordinate");
}

/// Per-view latent sums S[v][f] = sum_i v(v)[i, f] x(v)_i. Shape m x k.
inline Matrix mvfm_view_sums(const MvfmModel& model, const MultiViewInstance& x) {
    check_conforms(model.schema(), x);
    Matrix sums(model.schema().num_views(), model.rank());
    for (std::size_t v = 0; v < x.views.size(); ++v) {
        const Matrix& lat = model.latent(v);
        auto s = sums.row(v);
        for (const auto& e : x.views[v].entries()) {
            const auto r = lat.row(e.index);
            for (std::size_t f = 0; f < model.rank(); ++f) {
                s[f] += e.value * r[f];
            }
        }
    }
    return sums;
}

/// Cross-view pairwise term from view sums: sum_f (T_f^2 - sum_v S_vf^2) / 2.
inline double mvfm_pairwise_from_sums(const Matrix& sums) {
    double y = 0.0;
    for (std::size_t f = 0; f < sums.cols(); ++f) {
        double total = 0.0, squares = 0.0;
        for (std::size_t v = 0; v < sums.rows(); ++v) {
            total += sums(v, f);
            squares += sums(v, f) * sums(v, f);
        }
        y += 0.5 * (total * total - squares);
    }
    return y;
}

inline double mvfm_first_order(const MvfmModel& model, const MultiViewInstance& x) {
    double y = model.w0();
    for (std::size_t v = 0; v < x.views.size(); ++v) {
        const auto& w = model.first_order(v);
        for (const auto& e : x.views[v].entries()) {
            y += w[e.index] * e.value;
        }
    }
    return y;
}

inline double mvfm_predict(const MvfmModel& model, const MultiViewInstance& x) {
    const Matrix sums = mvfm_view_sums(model, x);
    return mvfm_first_order(model, x) + mvfm_pairwise_from_sums(sums);
}

inline double mvfm_gradient(const MvfmModel& model, const MultiViewInstance& x,
                            const BaselineCoordinate& c) {
    check_conforms(model.schema(), x);
    const auto& schema = model.schema();
    const bool view_ok = c.view < schema.num_views() && c.index < schema.dim(c.view);
    switch (c.kind) {
        case BaselineCoordinate::Kind::bias: return 1.0;
        case BaselineCoordinate::Kind::first_order:
            if (!view_ok) break;
            return x.views[c.view].to_dense(schema.dim(c.view))[c.index];
        case BaselineCoordinate::Kind::latent: {
            if (!view_ok || c.factor >= model.rank()) break;
            const double xi = x.views[c.view].to_dense(schema.dim(c.view))[c.index];
            if (xi == 0.0) return 0.0;
            const Matrix sums = mvfm_view_sums(model, x);
            double others = 0.0;
            for (std::size_t q = 0; q < schema.num_views(); ++q) {
                if (q != c.view) others += sums(q, c.factor);
            }
            return xi * others;
        }
    }
    throw SchemaError("invalid multi-view FM coordinate");
}

enum class BaselineKind { linear, mvfm };

inline std::string_view to_string(BaselineKind k) {
    return k == BaselineKind::linear ? "linear" : "mvfm";
}

namespace detail {

template <typename Model>
double baseline_penalty(const Model& model, const TrainConfig& config) {
    if (config.lambda == 0.0) return 0.0;
    double sum = 0.0;
    model.for_each_parameter([&](double t, bool is_bias) {
        if (config.regularize_bias || !is_bias) sum += reg_term(config.reg, t);
    });
    return config.lambda * sum;
}

template <typename Model>
void init_baseline(Model& model, const TrainConfig& config) {
    Rng rng = derive_rng(config.seed, rng_stream::init);
    std::normal_distribution<double> normal(0.0, config.sigma);
    model.for_each_parameter([&](double& t, bool) { t = normal(rng); });
}

}  // namespace detail

inline double objective(const LinearModel& model, const Dataset& data, const TrainConfig& config) {
    double total = 0.0;
    for (const auto& x : data.instances()) {
        total += loss_value(config.loss, linear_predict(model, x), x.label);
    }
    return total + detail::baseline_penalty(model, config);
}

inline double objective(const MvfmModel& model, const Dataset& data, const TrainConfig& config) {
    double total = 0.0;
    for (const auto& x : data.instances()) {
        total += loss_value(config.loss, mvfm_predict(model, x), x.label);
    }
    return total + detail::baseline_penalty(model, config);
}

inline std::size_t linear_instance_update(LinearModel& model, const MultiViewInstance& x,
                                          const TrainConfig& config, double eta) {
    const double dloss = loss_derivative(config.loss, linear_predict(model, x), x.label);
    auto step = [&](double& theta, double grad, bool regularized) {
        double g = dloss * grad;
        if (regularized && config.lambda != 0.0) g += config.lambda * reg_gradient(config.reg, theta);
        theta -= eta * g;
        detail::check_update(theta);
    };
    step(model.w0(), 1.0, config.regularize_bias);
    std::size_t updates = 1;
    for (std::size_t v = 0; v < x.views.size(); ++v) {
        auto& w = model.weights(v);
        for (const auto& e : x.views[v].entries()) {
            step(w[e.index], e.value, true);
            ++updates;
        }
    }
    return updates;
}

/// View sums are computed once per instance and reused, as for the MVM.
inline std::size_t mvfm_instance_update(MvfmModel& model, const MultiViewInstance& x,
                                        const TrainConfig& config, double eta) {
    const Matrix sums = mvfm_view_sums(model, x);
    const double score = mvfm_first_order(model, x) + mvfm_pairwise_from_sums(sums);
    const double dloss = loss_derivative(config.loss, score, x.label);
    const std::size_t k = model.rank();
    std::vector<double> totals(k, 0.0);
    for (std::size_t v = 0; v < sums.rows(); ++v) {
        for (std::size_t f = 0; f < k; ++f) totals[f] += sums(v, f);
    }

    auto step = [&](double& theta, double grad, bool regularized) {
        double g = dloss * grad;
        if (regularized && config.lambda != 0.0) g += config.lambda * reg_gradient(config.reg, theta);
        theta -= eta * g;
        detail::check_update(theta);
    };
    step(model.w0(), 1.0, config.regularize_bias);
    std::size_t updates = 1;
    for (std::size_t v = 0; v < x.views.size(); ++v) {
        auto& w = model.first_order(v);
        Matrix& lat = model.latent(v);
        for (const auto& e : x.views[v].entries()) {
            step(w[e.index], e.value, true);
            auto row = lat.row(e.index);
            for (std::size_t f = 0; f < k; ++f) {
                step(row[f], e.value * (totals[f] - sums(v, f)), true);
            }
            updates += 1 + k;
        }
    }
    return updates;
}

inline TrainResult<LinearModel> train_linear(const Dataset& data, const TrainConfig& config) {
    config.validate();
    if (data.empty()) throw ConfigError("cannot train on an empty dataset");
    detail::check_labels(data, config.loss);
    LinearModel model(data.schema());
    detail::init_baseline(model, config);
    TrainReport report = detail::run_sgd(
        model, data, config,
        [&](LinearModel& m, const MultiViewInstance& x, double eta) {
            return linear_instance_update(m, x, config, eta);
        },
        [&](const LinearModel& m) { return objective(m, data, config); });
    return {std::move(model), std::move(report)};
}

inline TrainResult<MvfmModel> train_mvfm(const Dataset& data, const TrainConfig& config) {
    config.validate();
    if (data.empty()) throw ConfigError("cannot train on an empty dataset");
    detail::check_labels(data, config.loss);
    MvfmModel model(data.schema(), config.k);
    detail::init_baseline(model, config);
    TrainReport report = detail::run_sgd(
        model, data, config,
        [&](MvfmModel& m, const MultiViewInstance& x, double eta) {
            return mvfm_instance_update(m, x, config, eta);
        },
        [&](const MvfmModel& m) { return objective(m, data, config); });
    return {std::move(model), std::move(report)};
}

using BaselineModel = std::variant<LinearModel, MvfmModel>;

inline double baseline_predict(const BaselineModel& model, const MultiViewInstance& x) {
    return std::visit(
        [&](const auto& m) -> double {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, LinearModel>) {
                return linear_predict(m, x);
            } else {
                return mvfm_predict(m, x);
            }
        },
        model);
}

inline TrainResult<BaselineModel> baseline_train(BaselineKind kind, const Dataset& data,
                                                 const TrainConfig& config) {
    if (kind == BaselineKind::linear) {
        auto r = train_linear(data, config);
        return {BaselineModel(std::move(r.model)), std::move(r.report)};
    }
    auto r = train_mvfm(data, config);
    return {BaselineModel(std::move(r.model)), std::move(r.report)};
}

}  // namespace mvm
