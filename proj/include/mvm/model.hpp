#pragma once

// Multi-view machine: every view's feature vector is augmented with a
// constant 1, and the full-order interaction tensor over the augmented views
// is CP-factorised with an identity core. Prediction collapses to a product
// of per-view factor sums, so it costs O(k (m + nnz)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mvm/errors.hpp"
#include "mvm/matrix.hpp"
#include "mvm/schema.hpp"
#include "mvm/tensor_core.hpp"

namespace mvm {

class MvmModel {
public:
    /// All-zero model. `augment == false` gives the highest-order-only
    /// (STM-style) family; the bias rows then exist but stay pinned at zero.
    MvmModel(ViewSchema schema, std::size_t k, bool augment = true)
        : schema_(std::move(schema)), k_(k), augment_(augment) {
        if (k_ == 0) {
            throw ConfigError("factor count k must be at least 1");
        }
        factors_.reserve(schema_.num_views());
        for (std::size_t v = 0; v < schema_.num_views(); ++v) {
            factors_.emplace_back(augment_dimension(schema_, v), k_);
        }
    }

    [[nodiscard]] const ViewSchema& schema() const noexcept { return schema_; }
    [[nodiscard]] std::size_t num_views() const noexcept { return schema_.num_views(); }
    [[nodiscard]] std::size_t rank() const noexcept { return k_; }
    [[nodiscard]] bool augment() const noexcept { return augment_; }

    [[nodiscard]] const Matrix& factor(std::size_t v) const { return factors_.at(v); }
    [[nodiscard]] Matrix& factor(std::size_t v) { return factors_.at(v); }
    [[nodiscard]] std::span<const Matrix> factors() const noexcept { return factors_; }

    /// Row index of view v's bias factor.
    [[nodiscard]] std::size_t bias_row(std::size_t v) const { return schema_.dim(v); }

    /// Rows of view v that take part in prediction and training.
    [[nodiscard]] std::size_t rows_in_use(std::size_t v) const {
        return augment_ ? schema_.dim(v) + 1 : schema_.dim(v);
    }

    [[nodiscard]] bool is_in_use(std::size_t v, std::size_t row, std::size_t f) const {
        return v < num_views() && row < rows_in_use(v) && f < k_;
    }

    /// k (m + d) when augmented, k d otherwise.
    [[nodiscard]] std::size_t in_use_parameter_count() const {
        std::size_t n = 0;
        for (std::size_t v = 0; v < num_views(); ++v) {
            n += rows_in_use(v) * k_;
        }
        return n;
    }

    /// Calls fn(v, row, f, value&) for every in-use parameter.
    template <typename Fn>
    void for_each_parameter(Fn&& fn) {
        for (std::size_t v = 0; v < num_views(); ++v) {
            for (std::size_t r = 0; r < rows_in_use(v); ++r) {
                for (std::size_t f = 0; f < k_; ++f) {
                    fn(v, r, f, factors_[v](r, f));
                }
            }
        }
    }

    template <typename Fn>
    void for_each_parameter(Fn&& fn) const {
        for (std::size_t v = 0; v < num_views(); ++v) {
            for (std::size_t r = 0; r < rows_in_use(v); ++r) {
                for (std::size_t f = 0; f < k_; ++f) {
                    fn(v, r, f, factors_[v](r, f));
                }
            }
        }
    }

    bool operator==(const MvmModel&) const = default;

private:
    ViewSchema schema_;
    std::size_t k_;
    bool augment_;
    std::vector<Matrix> factors_;
};

/// s[v][f] = sum over stored nonzeros of x * A(v)[i, f], plus the bias row
/// A(v)[I_v, f] when the model is augmented. Shape m x k.
inline Matrix view_factor_sums(const MvmModel& model, const MultiViewInstance& x) {
    check_conforms(model.schema(), x);
    const std::size_t k = model.rank();
    Matrix sums(model.num_views(), k);
    for (std::size_t v = 0; v < model.num_views(); ++v) {
        const Matrix& a = model.factor(v);
        auto s = sums.row(v);
        if (model.augment()) {
            const auto bias = a.row(model.bias_row(v));
            std::copy(bias.begin(), bias.end(), s.begin());
        }
        for (const auto& e : x.views[v].entries()) {
            const auto r = a.row(e.index);
            for (std::size_t f = 0; f < k; ++f) {
                s[f] += e.value * r[f];
            }
        }
    }
    return sums;
}

/// y = sum_f prod_v s[v][f].
inline double predict_from_sums(const Matrix& sums) {
    double y = 0.0;
    for (std::size_t f = 0; f < sums.cols(); ++f) {
        double prod = 1.0;
        for (std::size_t v = 0; v < sums.rows(); ++v) {
            prod *= sums(v, f);
        }
        y += prod;
    }
    return y;
}

/// Linear-time prediction. Returns the raw score, no thresholding.
inline double predict_fast(const MvmModel& model, const MultiViewInstance& x) {
    return predict_from_sums(view_factor_sums(model, x));
}

/// For every factor f and view v, the product of s[u][f] over u != v,
/// computed with prefix/suffix products so zeros are handled exactly.
/// Shape m x k; an empty product is 1.
inline Matrix other_view_products(const Matrix& sums) {
    const std::size_t m = sums.rows();
    const std::size_t k = sums.cols();
    Matrix out(m, k, 1.0);
    for (std::size_t f = 0; f < k; ++f) {
        double prefix = 1.0;
        for (std::size_t v = 0; v < m; ++v) {
            out(v, f) = prefix;
            prefix *= sums(v, f);
        }
        double suffix = 1.0;
        for (std::size_t v = m; v-- > 0;) {
            out(v, f) *= suffix;
            suffix *= sums(v, f);
        }
    }
    return out;
}

/// Value of the augmented feature z(v)[row]: 1 on the bias row, the stored
/// value (or 0) otherwise.
inline double augmented_value(const MvmModel& model, const MultiViewInstance& x, std::size_t v,
                              std::size_t row) {
    if (row == model.bias_row(v)) {
        return model.augment() ? 1.0 : 0.0;
    }
    const auto entries = x.views.at(v).entries();
    auto it = std::lower_bound(entries.begin(), entries.end(), row,
                               [](const SparseViewVector::Entry& e, std::size_t i) {
                                   return e.index < i;
                               });
    return (it != entries.end() && it->index == row) ? it->value : 0.0;
}

/// d y / d A(v)[row, f] = z(v)[row] * prod_{u != v} s[u][f].
/// Independent of the parameter's own value.
inline double model_gradient(const MvmModel& model, const MultiViewInstance& x, std::size_t v,
                             std::size_t row, std::size_t f) {
    if (!model.is_in_use(v, row, f)) {
        throw SchemaError("gradient coordinate (view " + std::to_string(v + 1) + ", row " +
                          std::to_string(row + 1) + ", factor " + std::to_string(f + 1) +
                          ") is not an in-use parameter");
    }
    const Matrix sums = view_factor_sums(model, x);
    double others = 1.0;
    for (std::size_t u = 0; u < model.num_views(); ++u) {
        if (u != v) {
            others *= sums(u, f);
        }
    }
    return augmented_value(model, x, v, row) * others;
}

/// w[i1..im] = sum_f prod_v A(v)[iv, f]; indices 0-based, iv <= I_v.
inline double interaction_weight(const MvmModel& model, std::span<const std::size_t> indices) {
    if (indices.size() != model.num_views()) {
        throw SchemaError("interaction index needs one entry per view");
    }
    for (std::size_t v = 0; v < indices.size(); ++v) {
        if (indices[v] > model.bias_row(v)) {
            throw SchemaError("interaction index out of range in view " + std::to_string(v + 1));
        }
    }
    double w = 0.0;
    for (std::size_t f = 0; f < model.rank(); ++f) {
        double prod = 1.0;
        for (std::size_t v = 0; v < indices.size(); ++v) {
            prod *= model.factor(v)(indices[v], f);
        }
        w += prod;
    }
    return w;
}

/// w0: the interaction weight of the all-bias tuple.
inline double global_bias(const MvmModel& model) {
    if (!model.augment()) {
        throw UndefinedBiasError("global bias is undefined for a model without augmentation");
    }
    std::vector<std::size_t> idx(model.num_views());
    for (std::size_t v = 0; v < idx.size(); ++v) {
        idx[v] = model.bias_row(v);
    }
    return interaction_weight(model, idx);
}

/// Default cap on the number of index tuples predict_naive will enumerate.
inline constexpr std::size_t kNaiveEnumerationCap = std::size_t{1} << 20;

/// Brute-force prediction: reconstructs the full interaction tensor and sums
/// w[i1..im] * prod_v z(v)[iv] over every index tuple. Test oracle only.
inline double predict_naive(const MvmModel& model, const MultiViewInstance& x,
                            std::size_t cap = kNaiveEnumerationCap) {
    check_conforms(model.schema(), x);
    std::size_t tuples = 1;
    for (std::size_t v = 0; v < model.num_views(); ++v) {
        tuples *= augment_dimension(model.schema(), v);
        if (tuples > cap) {
            throw OracleScaleError("naive prediction would enumerate more than " +
                                   std::to_string(cap) + " index tuples");
        }
    }

    const DenseTensor w = cp_reconstruct(model.factors());

    std::vector<std::vector<double>> z(model.num_views());
    std::vector<std::size_t> range(model.num_views());
    for (std::size_t v = 0; v < model.num_views(); ++v) {
        z[v] = x.views[v].to_dense(model.schema().dim(v));
        z[v].push_back(1.0);
        range[v] = model.rows_in_use(v);
    }

    double y = 0.0;
    std::vector<std::size_t> idx(model.num_views(), 0);
    do {
        double zprod = 1.0;
        for (std::size_t v = 0; v < idx.size(); ++v) {
            zprod *= z[v][idx[v]];
        }
        y += zprod * w(idx);
    } while (next_index(idx, range));
    return y;
}

}  // namespace mvm
