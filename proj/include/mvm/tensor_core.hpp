#pragma once

// Small dense tensors used to build brute-force oracles: outer product,
// mode-k product, the identity (superdiagonal) core and CP reconstruction.
// Everything here is test scale; nothing is tuned for large tensors.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mvm/errors.hpp"
#include "mvm/matrix.hpp"

namespace mvm {

/// Row-major dense tensor of order >= 1. Indices are 0-based.
class DenseTensor {
public:
    DenseTensor(std::vector<std::size_t> shape, std::vector<double> values)
        : shape_(std::move(shape)), values_(std::move(values)) {
        if (shape_.empty()) {
            throw ShapeError("tensor order must be at least 1");
        }
        for (std::size_t e : shape_) {
            if (e == 0) {
                throw ShapeError("tensor extents must be positive");
            }
        }
        if (values_.size() != element_count(shape_)) {
            throw ShapeError("tensor has " + std::to_string(values_.size()) +
                             " values, shape requires " +
                             std::to_string(element_count(shape_)));
        }
    }

    static DenseTensor zeros(std::vector<std::size_t> shape) {
        const std::size_t n = element_count(shape);
        return DenseTensor(std::move(shape), std::vector<double>(n, 0.0));
    }

    /// Order-1 tensor holding a copy of `v`.
    static DenseTensor vector(std::span<const double> v) {
        return DenseTensor({v.size()}, std::vector<double>(v.begin(), v.end()));
    }

    static DenseTensor from_matrix(const Matrix& m) {
        return DenseTensor({m.rows(), m.cols()},
                           std::vector<double>(m.data().begin(), m.data().end()));
    }

    [[nodiscard]] std::size_t order() const noexcept { return shape_.size(); }
    [[nodiscard]] const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t extent(std::size_t mode) const { return shape_.at(mode); }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    [[nodiscard]] std::size_t flat_index(std::span<const std::size_t> idx) const {
        if (idx.size() != shape_.size()) {
            throw ShapeError("index arity does not match tensor order");
        }
        std::size_t flat = 0;
        for (std::size_t d = 0; d < idx.size(); ++d) {
            if (idx[d] >= shape_[d]) {
                throw ShapeError("tensor index out of range in mode " + std::to_string(d));
            }
            flat = flat * shape_[d] + idx[d];
        }
        return flat;
    }

    [[nodiscard]] double operator()(std::span<const std::size_t> idx) const {
        return values_[flat_index(idx)];
    }
    double& operator()(std::span<const std::size_t> idx) { return values_[flat_index(idx)]; }

    [[nodiscard]] double at(std::initializer_list<std::size_t> idx) const {
        return (*this)(std::span<const std::size_t>(idx.begin(), idx.size()));
    }

    /// Row-major strides.
    [[nodiscard]] std::vector<std::size_t> strides() const {
        std::vector<std::size_t> s(shape_.size(), 1);
        for (std::size_t d = shape_.size() - 1; d > 0; --d) {
            s[d - 1] = s[d] * shape_[d];
        }
        return s;
    }

    static std::size_t element_count(std::span<const std::size_t> shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                               std::multiplies<>());
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

/// Advances a row-major multi-index; returns false after the last tuple.
inline bool next_index(std::vector<std::size_t>& idx, std::span<const std::size_t> shape) {
    for (std::size_t d = idx.size(); d-- > 0;) {
        if (++idx[d] < shape[d]) {
            return true;
        }
        idx[d] = 0;
    }
    return false;
}

/// Outer product: (x o y)[i.., j..] = x[i..] * y[j..].
inline DenseTensor tensor_product(const DenseTensor& x, const DenseTensor& y) {
    std::vector<std::size_t> shape = x.shape();
    shape.insert(shape.end(), y.shape().begin(), y.shape().end());
    std::vector<double> out;
    out.reserve(x.size() * y.size());
    for (double a : x.values()) {
        for (double b : y.values()) {
            out.push_back(a * b);
        }
    }
    return DenseTensor(std::move(shape), std::move(out));
}

/// Mode-k product X x_k M with M of shape J x I_k; `mode` is 0-based.
/// The result replaces extent I_k by J.
inline DenseTensor mode_k_product(const DenseTensor& x, const Matrix& m, std::size_t mode) {
    if (mode >= x.order()) {
        throw ShapeError("mode " + std::to_string(mode) + " out of range for order " +
                         std::to_string(x.order()));
    }
    if (m.cols() != x.extent(mode)) {
        throw ShapeError("mode-k product: matrix has " + std::to_string(m.cols()) +
                         " columns, mode extent is " + std::to_string(x.extent(mode)));
    }
    if (m.rows() == 0) {
        throw ShapeError("mode-k product: matrix has no rows");
    }

    const auto& xs = x.shape();
    std::size_t outer = 1;
    for (std::size_t d = 0; d < mode; ++d) {
        outer *= xs[d];
    }
    std::size_t inner = 1;
    for (std::size_t d = mode + 1; d < xs.size(); ++d) {
        inner *= xs[d];
    }
    const std::size_t in_len = xs[mode];
    const std::size_t out_len = m.rows();

    std::vector<std::size_t> shape = xs;
    shape[mode] = out_len;
    std::vector<double> out(outer * out_len * inner, 0.0);
    const auto& xv = x.values();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < out_len; ++j) {
            for (std::size_t i = 0; i < in_len; ++i) {
                const double mji = m(j, i);
                const double* src = xv.data() + (o * in_len + i) * inner;
                double* dst = out.data() + (o * out_len + j) * inner;
                for (std::size_t t = 0; t < inner; ++t) {
                    dst[t] += src[t] * mji;
                }
            }
        }
    }
    return DenseTensor(std::move(shape), std::move(out));
}

/// Order-m tensor with extent k in every mode; ones on the superdiagonal.
inline DenseTensor identity_tensor(std::size_t order, std::size_t extent) {
    if (order == 0 || extent == 0) {
        throw ShapeError("identity tensor needs order >= 1 and extent >= 1");
    }
    DenseTensor t = DenseTensor::zeros(std::vector<std::size_t>(order, extent));
    std::vector<std::size_t> idx(order);
    for (std::size_t f = 0; f < extent; ++f) {
        std::fill(idx.begin(), idx.end(), f);
        t(idx) = 1.0;
    }
    return t;
}

/// W[i1..im] = sum_f prod_v A(v)[iv, f]. All factors must share a column count.
inline DenseTensor cp_reconstruct(std::span<const Matrix> factors) {
    if (factors.empty()) {
        throw ShapeError("cp_reconstruct needs at least one factor matrix");
    }
    const std::size_t k = factors.front().cols();
    std::vector<std::size_t> shape;
    for (const Matrix& a : factors) {
        if (a.cols() != k) {
            throw ShapeError("factor matrices disagree on the number of columns");
        }
        if (a.rows() == 0 || k == 0) {
            throw ShapeError("factor matrices must be non-empty");
        }
        shape.push_back(a.rows());
    }

    DenseTensor w = DenseTensor::zeros(shape);
    std::vector<std::size_t> idx(shape.size(), 0);
    do {
        double sum = 0.0;
        for (std::size_t f = 0; f < k; ++f) {
            double prod = 1.0;
            for (std::size_t v = 0; v < factors.size(); ++v) {
                prod *= factors[v](idx[v], f);
            }
            sum += prod;
        }
        w(idx) = sum;
    } while (next_index(idx, shape));
    return w;
}

}  // namespace mvm
