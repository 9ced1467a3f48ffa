#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvm/errors.hpp"

namespace mvm {

/// Number of views and per-view feature counts I_1..I_m.
class ViewSchema {
public:
    explicit ViewSchema(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) {
            throw SchemaError("schema needs at least one view");
        }
        for (std::size_t v = 0; v < dims_.size(); ++v) {
            if (dims_[v] == 0) {
                throw SchemaError("view " + std::to_string(v + 1) + " has zero features");
            }
        }
    }

    [[nodiscard]] std::size_t num_views() const noexcept { return dims_.size(); }
    [[nodiscard]] std::size_t dim(std::size_t v) const { return dims_.at(v); }
    [[nodiscard]] std::span<const std::size_t> dims() const noexcept { return dims_; }

    /// d = sum of view dimensionalities.
    [[nodiscard]] std::size_t total_dim() const noexcept {
        return std::accumulate(dims_.begin(), dims_.end(), std::size_t{0});
    }

    bool operator==(const ViewSchema&) const = default;

private:
    std::vector<std::size_t> dims_;
};

/// I_v + 1: row count of a view's factor matrix, the last row pairing with
/// the constant-1 feature.
inline std::size_t augment_dimension(const ViewSchema& schema, std::size_t v) {
    return schema.dim(v) + 1;
}

/// Sparse feature vector of a single view. Indices are 0-based, strictly
/// increasing, and every stored value is nonzero. The constant-1 augmentation
/// entry is implicit and never stored.
class SparseViewVector {
public:
    struct Entry {
        std::size_t index;
        double value;
        bool operator==(const Entry&) const = default;
    };

    SparseViewVector() = default;

    /// Sorts entries, drops explicit zeros, rejects duplicates and non-finite values.
    static SparseViewVector from_entries(std::vector<Entry> entries) {
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.index < b.index; });
        SparseViewVector out;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (i > 0 && entries[i].index == entries[i - 1].index) {
                throw SchemaError("duplicate feature index " +
                                  std::to_string(entries[i].index + 1));
            }
            if (!std::isfinite(entries[i].value)) {
                throw SchemaError("non-finite feature value");
            }
        }
        for (const Entry& e : entries) {
            if (e.value != 0.0) {
                out.entries_.push_back(e);
            }
        }
        return out;
    }

    /// Dense input; zeros are skipped.
    static SparseViewVector from_dense(std::span<const double> x) {
        std::vector<Entry> entries;
        for (std::size_t i = 0; i < x.size(); ++i) {
            entries.push_back({i, x[i]});
        }
        return from_entries(std::move(entries));
    }

    [[nodiscard]] std::span<const Entry> entries() const noexcept { return entries_; }
    [[nodiscard]] std::size_t nnz() const noexcept { return entries_.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

    /// Dense copy of length `dim` (no augmentation entry).
    [[nodiscard]] std::vector<double> to_dense(std::size_t dim) const {
        std::vector<double> x(dim, 0.0);
        for (const Entry& e : entries_) {
            x.at(e.index) = e.value;
        }
        return x;
    }

    bool operator==(const SparseViewVector&) const = default;

private:
    std::vector<Entry> entries_;
};

/// One labelled instance: m sparse views plus a real label.
struct MultiViewInstance {
    std::vector<SparseViewVector> views;
    double label = 0.0;

    [[nodiscard]] std::size_t nnz() const noexcept {
        std::size_t n = 0;
        for (const auto& v : views) {
            n += v.nnz();
        }
        return n;
    }

    bool operator==(const MultiViewInstance&) const = default;
};

/// Throws SchemaError unless `x` has one view per schema view and every
/// stored index lies inside its view.
inline void check_conforms(const ViewSchema& schema, const MultiViewInstance& x) {
    if (x.views.size() != schema.num_views()) {
        throw SchemaError("instance has " + std::to_string(x.views.size()) +
                          " views, schema has " + std::to_string(schema.num_views()));
    }
    for (std::size_t v = 0; v < x.views.size(); ++v) {
        const auto entries = x.views[v].entries();
        if (!entries.empty() && entries.back().index >= schema.dim(v)) {
            throw SchemaError("view " + std::to_string(v + 1) + " index " +
                              std::to_string(entries.back().index + 1) + " exceeds dimension " +
                              std::to_string(schema.dim(v)));
        }
    }
}

}  // namespace mvm
