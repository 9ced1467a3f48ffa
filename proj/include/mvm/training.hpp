#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvm/dataset.hpp"
#include "mvm/errors.hpp"
#include "mvm/model.hpp"
#include "mvm/objectives.hpp"
#include "mvm/random.hpp"

namespace mvm {

struct TrainConfig {
    std::size_t k = 8;
    LossKind loss = LossKind::logit;
    Regularizer reg = Regularizer::l2();
    double lambda = 1e-4;
    double eta = 0.05;
    /// eta_t = eta / (1 + eta_decay * t), t = 0-based epoch.
    double eta_decay = 0.0;
    double sigma = 0.01;
    std::size_t epochs = 20;
    std::uint64_t seed = 42;
    bool augment = true;
    bool shuffle = true;
    /// Stop once the relative change of the objective falls below tol.
    double tol = 1e-6;
    /// When false, bias-factor rows are left out of the regularizer.
    bool regularize_bias = true;

    void validate() const {
        if (k == 0) throw ConfigError("k must be at least 1");
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be positive");
        if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be positive");
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw ConfigError("lambda must be non-negative");
        }
        if (!(tol >= 0.0)) throw ConfigError("tol must be non-negative");
        if (!(eta_decay >= 0.0)) throw ConfigError("eta decay must be non-negative");
        if (reg.kind == RegKind::l1_smoothed && !(reg.epsilon > 0.0)) {
            throw ConfigError("smoothed L1 epsilon must be positive");
        }
    }

    [[nodiscard]] double eta_at(std::size_t epoch) const {
        return eta / (1.0 + eta_decay * static_cast<double>(epoch));
    }
};

struct TrainReport {
    std::size_t epochs_run = 0;
    double initial_objective = 0.0;
    /// Regularized empirical loss after each epoch.
    std::vector<double> objective_trace;
    double final_objective = 0.0;
    bool converged = false;
    /// Total number of single-parameter updates performed.
    std::size_t updates = 0;
};

template <typename Model>
struct TrainResult {
    Model model;
    TrainReport report;
};

namespace detail {

inline void check_update(double theta) {
    if (!std::isfinite(theta)) {
        throw DivergenceError(0);
    }
}

inline void check_labels(const Dataset& data, LossKind loss) {
    for (const auto& x : data.instances()) {
        check_label(loss, x.label);
    }
}

/// Shared SGD driver. update(model, x, eta) returns the number of parameter
/// updates it made; objective(model) evaluates the regularized loss.
template <typename Model, typename UpdateFn, typename ObjectiveFn>
TrainReport run_sgd(Model& model, const Dataset& data, const TrainConfig& config,
                    UpdateFn&& update, ObjectiveFn&& objective) {
    TrainReport report;
    report.initial_objective = objective(model);
    report.final_objective = report.initial_objective;

    Rng order_rng = derive_rng(config.seed, rng_stream::shuffle);
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    double previous = report.initial_objective;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle) {
            order = permutation(data.size(), order_rng);
        }
        const double eta = config.eta_at(epoch);
        try {
            for (std::size_t i : order) {
                report.updates += update(model, data[i], eta);
            }
        } catch (const DivergenceError&) {
            throw DivergenceError(epoch + 1);
        }
        const double current = objective(model);
        if (!std::isfinite(current)) {
            throw DivergenceError(epoch + 1);
        }
        report.objective_trace.push_back(current);
        report.epochs_run = epoch + 1;
        report.final_objective = current;

        const double scale = std::max(std::abs(previous), std::numeric_limits<double>::min());
        if (std::abs(previous - current) / scale < config.tol) {
            report.converged = true;
            break;
        }
        previous = current;
    }
    return report;
}

}  // namespace detail

/// Factor entries drawn i.i.d. from N(0, sigma) with a generator seeded from
/// config.seed. Without augmentation the bias rows stay exactly zero.
inline MvmModel init_model(const ViewSchema& schema, const TrainConfig& config) {
    if (!(config.sigma > 0.0)) {
        throw ConfigError("sigma must be positive");
    }
    MvmModel model(schema, config.k, config.augment);
    Rng rng = derive_rng(config.seed, rng_stream::init);
    std::normal_distribution<double> normal(0.0, config.sigma);
    model.for_each_parameter(
        [&](std::size_t, std::size_t, std::size_t, double& theta) { theta = normal(rng); });
    return model;
}

/// One pass of the inner SGD loop for a single instance. Per-view sums and
/// the prediction are computed once and reused for every coordinate of the
/// instance. Returns the number of parameters updated, k (m_active + nnz).
inline std::size_t instance_update(MvmModel& model, const MultiViewInstance& x,
                                   const TrainConfig& config, double eta) {
    const Matrix sums = view_factor_sums(model, x);
    const double score = predict_from_sums(sums);
    const double dloss = loss_derivative(config.loss, score, x.label);
    const Matrix others = other_view_products(sums);
    const std::size_t k = model.rank();
    const double lambda = config.lambda;

    auto step = [&](double& theta, double model_grad, bool regularized) {
        double g = dloss * model_grad;
        if (regularized && lambda != 0.0) {
            g += lambda * reg_gradient(config.reg, theta);
        }
        theta -= eta * g;
        detail::check_update(theta);
    };

    std::size_t updates = 0;
    for (std::size_t v = 0; v < model.num_views(); ++v) {
        Matrix& a = model.factor(v);
        for (const auto& e : x.views[v].entries()) {
            auto row = a.row(e.index);
            for (std::size_t f = 0; f < k; ++f) {
                step(row[f], e.value * others(v, f), true);
            }
            updates += k;
        }
        if (model.augment()) {
            auto row = a.row(model.bias_row(v));
            for (std::size_t f = 0; f < k; ++f) {
                step(row[f], others(v, f), config.regularize_bias);
            }
            updates += k;
        }
    }
    return updates;
}

inline std::size_t instance_update(MvmModel& model, const MultiViewInstance& x,
                                   const TrainConfig& config) {
    return instance_update(model, x, config, config.eta);
}

/// lambda * Omega over the in-use parameters (bias rows optional).
inline double regularization_penalty(const MvmModel& model, const TrainConfig& config) {
    if (config.lambda == 0.0) {
        return 0.0;
    }
    double sum = 0.0;
    model.for_each_parameter([&](std::size_t v, std::size_t row, std::size_t, double theta) {
        if (config.regularize_bias || row != model.bias_row(v)) {
            sum += reg_term(config.reg, theta);
        }
    });
    return config.lambda * sum;
}

/// Sum of losses over the dataset plus lambda * Omega.
inline double objective(const MvmModel& model, const Dataset& data, const TrainConfig& config) {
    double total = 0.0;
    for (const auto& x : data.instances()) {
        total += loss_value(config.loss, predict_fast(model, x), x.label);
    }
    return total + regularization_penalty(model, config);
}

/// SGD from a seeded initialization.
inline TrainResult<MvmModel> train(const Dataset& data, const TrainConfig& config) {
    config.validate();
    if (data.empty()) {
        throw ConfigError("cannot train on an empty dataset");
    }
    detail::check_labels(data, config.loss);

    MvmModel model = init_model(data.schema(), config);
    TrainReport report = detail::run_sgd(
        model, data, config,
        [&](MvmModel& m, const MultiViewInstance& x, double eta) {
            return instance_update(m, x, config, eta);
        },
        [&](const MvmModel& m) { return objective(m, data, config); });
    return {std::move(model), std::move(report)};
}

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t coordinates_checked = 0;
};

/// Relative error with the denominator floored at 1, so gradients near zero
/// are compared absolutely.
inline double gradient_relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

inline constexpr double kFiniteDifferenceStep = 1e-5;
/// Hinge samples with |y*score - 1| below this are redrawn.
inline constexpr double kHingeKinkExclusion = 1e-3;

/// Compares the analytic derivative of loss + lambda*Omega with respect to
/// single factor entries against central finite differences, on random
/// models, instances and coordinates. Uses config's loss, regularizer,
/// lambda, k, augment and seed.
inline GradCheckResult grad_check(const ViewSchema& schema, const TrainConfig& config,
                                  std::size_t trials) {
    config.validate();
    Rng rng = derive_rng(config.seed, rng_stream::gradcheck);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    GradCheckResult result;
    const double h = kFiniteDifferenceStep;
    std::size_t attempts = 0;
    while (result.coordinates_checked < trials) {
        if (++attempts > 100 * (trials + 1)) {
            throw Error("grad_check could not draw points away from the hinge kink");
        }
        MvmModel model(schema, config.k, config.augment);
        model.for_each_parameter(
            [&](std::size_t, std::size_t, std::size_t, double& t) { t = 0.5 * normal(rng); });

        MultiViewInstance x;
        for (std::size_t v = 0; v < schema.num_views(); ++v) {
            std::vector<SparseViewVector::Entry> entries;
            for (std::size_t i = 0; i < schema.dim(v); ++i) {
                if (unit(rng) < 0.6) {
                    entries.push_back({i, normal(rng)});
                }
            }
            x.views.push_back(SparseViewVector::from_entries(std::move(entries)));
        }
        x.label = is_classification(config.loss) ? (unit(rng) < 0.5 ? -1.0 : 1.0) : normal(rng);

        const double score = predict_fast(model, x);
        if (config.loss == LossKind::hinge &&
            std::abs(x.label * score - 1.0) <= kHingeKinkExclusion) {
            continue;
        }

        std::uniform_int_distribution<std::size_t> pick(0, model.in_use_parameter_count() - 1);
        std::size_t target = pick(rng);
        std::size_t cv = 0, cr = 0, cf = 0;
        model.for_each_parameter([&](std::size_t v, std::size_t r, std::size_t f, double) {
            if (target-- == 0) {
                cv = v;
                cr = r;
                cf = f;
            }
        });

        const double theta = model.factor(cv)(cr, cf);
        const bool regularized = config.regularize_bias || cr != model.bias_row(cv);
        double analytic = loss_derivative(config.loss, score, x.label) *
                          model_gradient(model, x, cv, cr, cf);
        if (regularized) {
            analytic += config.lambda * reg_gradient(config.reg, theta);
        }

        auto total = [&](double t) {
            MvmModel probe = model;
            probe.factor(cv)(cr, cf) = t;
            return loss_value(config.loss, predict_fast(probe, x), x.label) +
                   regularization_penalty(probe, config);
        };
        const double numeric = (total(theta + h) - total(theta - h)) / (2.0 * h);

        // The perturbation must not straddle the hinge kink either.
        if (config.loss == LossKind::hinge) {
            MvmModel lo = model, hi = model;
            lo.factor(cv)(cr, cf) = theta - h;
            hi.factor(cv)(cr, cf) = theta + h;
            const double mlo = x.label * predict_fast(lo, x) - 1.0;
            const double mhi = x.label * predict_fast(hi, x) - 1.0;
            if ((mlo < 0.0) != (mhi < 0.0)) {
                continue;
            }
        }

        result.max_relative_error =
            std::max(result.max_relative_error, gradient_relative_error(analytic, numeric));
        ++result.coordinates_checked;
    }
    return result;
}

struct LambdaSelection {
    double best_lambda = 0.0;
    /// (lambda, mean validation loss) in grid order.
    std::vector<std::pair<double, double>> scores;
};

/// Mean loss_value of a scorer over a dataset.
template <typename ScoreFn>
double mean_loss(const Dataset& data, LossKind loss, ScoreFn&& score) {
    if (data.empty()) {
        throw ConfigError("cannot evaluate on an empty dataset");
    }
    double total = 0.0;
    for (const auto& x : data.instances()) {
        total += loss_value(loss, score(x), x.label);
    }
    return total / static_cast<double>(data.size());
}

/// Trains one model per grid value with `fit(config)` and keeps the lambda
/// with the lowest mean validation loss; ties go to the larger lambda.
/// `fit` returns a callable scoring a MultiViewInstance.
template <typename FitFn>
LambdaSelection select_lambda_with(const Dataset& valid, const TrainConfig& config,
                                   std::span<const double> grid, FitFn&& fit) {
    if (grid.empty()) {
        throw ConfigError("lambda grid is empty");
    }
    if (valid.empty()) {
        throw ConfigError("validation set is empty");
    }
    LambdaSelection sel;
    double best = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        TrainConfig c = config;
        c.lambda = lambda;
        auto scorer = fit(c);
        const double score = mean_loss(valid, c.loss, scorer);
        sel.scores.emplace_back(lambda, score);
        if (sel.scores.size() == 1 || score < best || (score == best && lambda > sel.best_lambda)) {
            best = score;
            sel.best_lambda = lambda;
        }
    }
    return sel;
}

inline LambdaSelection select_lambda(const Dataset& train_set, const Dataset& valid_set,
                                     const TrainConfig& config, std::span<const double> grid) {
    return select_lambda_with(valid_set, config, grid, [&](const TrainConfig& c) {
        auto fitted = train(train_set, c);
        return [model = std::move(fitted.model)](const MultiViewInstance& x) {
            return predict_fast(model, x);
        };
    });
}

}  // namespace mvm
