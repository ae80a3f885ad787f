// Copyright (C) 2026 analora authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors over f32/f64 plus the arithmetic kernels used by
// both the autodiff tape and the tape-free inference paths. Broadcasting is
// limited to scalar-against-tensor; anything else is a shape error.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "analora/error.hpp"
#include "analora/rng.hpp"

namespace analora {

enum class Dtype { F32, F64 };

inline const char* dtype_name(Dtype d) { return d == Dtype::F32 ? "f32" : "f64"; }

template <typename S>
constexpr Dtype dtype_of() {
    static_assert(std::is_same_v<S, float> || std::is_same_v<S, double>,
                  "tensors carry f32 or f64 scalars");
    return std::is_same_v<S, float> ? Dtype::F32 : Dtype::F64;
}

inline size_t shape_numel(std::span<const size_t> shape) {
    size_t n = 1;
    for (size_t d : shape) {
        require(d > 0, ErrorKind::InvalidArgument, "tensor extents must be positive");
        n *= d;
    }
    return n;
}

inline std::string shape_str(std::span<const size_t> shape) {
    std::ostringstream out;
    out << '[';
    for (size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
    out << ']';
    return out.str();
}

template <typename S>
struct Tensor {
    std::vector<size_t> shape;
    std::vector<S> data;

    Tensor() = default;
    Tensor(std::vector<size_t> shape_in, std::vector<S> data_in)
        : shape(std::move(shape_in)), data(std::move(data_in)) {
        require(shape_numel(shape) == data.size(), ErrorKind::InvalidArgument,
                "tensor data length does not match shape " + shape_str(shape));
    }

    static Tensor zeros(std::vector<size_t> shape_in) {
        size_t n = shape_numel(shape_in);
        return Tensor(std::move(shape_in), std::vector<S>(n, S(0)));
    }

    static Tensor full(std::vector<size_t> shape_in, S value) {
        size_t n = shape_numel(shape_in);
        return Tensor(std::move(shape_in), std::vector<S>(n, value));
    }

    static Tensor scalar(S value) { return Tensor({1}, {value}); }

    size_t numel() const { return data.size(); }
    size_t rank() const { return shape.size(); }
    bool is_scalar() const { return numel() == 1; }

    size_t rows() const {
        require(rank() == 2, ErrorKind::InvalidArgument, "rows() needs a rank-2 tensor");
        return shape[0];
    }
    size_t cols() const {
        require(rank() == 2, ErrorKind::InvalidArgument, "cols() needs a rank-2 tensor");
        return shape[1];
    }

    S& at(size_t i) { return data[i]; }
    S at(size_t i) const { return data[i]; }
    S& at(size_t i, size_t j) { return data[i * shape[1] + j]; }
    S at(size_t i, size_t j) const { return data[i * shape[1] + j]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    bool all_finite() const {
        for (S v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename T>
    Tensor<T> cast() const {
        std::vector<T> out(data.size());
        for (size_t i = 0; i < data.size(); ++i) out[i] = static_cast<T>(data[i]);
        return Tensor<T>(shape, std::move(out));
    }
};

template <typename S>
Tensor<S> randn(Rng& rng, std::vector<size_t> shape, double stddev = 1.0) {
    Tensor<S> out = Tensor<S>::zeros(std::move(shape));
    for (auto& v : out.data) v = static_cast<S>(rng.next_normal() * stddev);
    return out;
}

namespace detail {
template <typename S>
void check_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
    require(a.same_shape(b), ErrorKind::InvalidArgument,
            std::string(op) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                shape_str(b.shape));
}
}  // namespace detail

// matmul supports [m x k][k x n], [m x k][k] and [k][k x n].
template <typename S>
Tensor<S> matmul(const Tensor<S>& lhs, const Tensor<S>& rhs) {
    if (lhs.rank() == 2 && rhs.rank() == 2) {
        require(lhs.cols() == rhs.rows(), ErrorKind::InvalidArgument,
                "matmul: inner extents disagree " + shape_str(lhs.shape) + " vs " +
                    shape_str(rhs.shape));
        const size_t m = lhs.rows(), k = lhs.cols(), n = rhs.cols();
        Tensor<S> out = Tensor<S>::zeros({m, n});
        for (size_t i = 0; i < m; ++i) {
            const S* arow = &lhs.data[i * k];
            S* orow = &out.data[i * n];
            for (size_t p = 0; p < k; ++p) {
                const S a = arow[p];
                const S* brow = &rhs.data[p * n];
                for (size_t j = 0; j < n; ++j) orow[j] += a * brow[j];
            }
        }
        return out;
    }
    if (lhs.rank() == 2 && rhs.rank() == 1) {
        require(lhs.cols() == rhs.numel(), ErrorKind::InvalidArgument,
                "matmul: matrix-vector extents disagree " + shape_str(lhs.shape) + " vs " +
                    shape_str(rhs.shape));
        const size_t m = lhs.rows(), k = lhs.cols();
        Tensor<S> out = Tensor<S>::zeros({m});
        for (size_t i = 0; i < m; ++i) {
            const S* arow = &lhs.data[i * k];
            S acc = S(0);
            for (size_t p = 0; p < k; ++p) acc += arow[p] * rhs.data[p];
            out.data[i] = acc;
        }
        return out;
    }
    if (lhs.rank() == 1 && rhs.rank() == 2) {
        require(lhs.numel() == rhs.rows(), ErrorKind::InvalidArgument,
                "matmul: vector-matrix extents disagree " + shape_str(lhs.shape) + " vs " +
                    shape_str(rhs.shape));
        const size_t k = lhs.numel(), n = rhs.cols();
        Tensor<S> out = Tensor<S>::zeros({n});
        for (size_t p = 0; p < k; ++p) {
            const S a = lhs.data[p];
            const S* brow = &rhs.data[p * n];
            for (size_t j = 0; j < n; ++j) out.data[j] += a * brow[j];
        }
        return out;
    }
    fail(ErrorKind::InvalidArgument,
         "matmul: unsupported ranks " + shape_str(lhs.shape) + " x " + shape_str(rhs.shape));
}

// Numerically stabilized softmax over a rank-1 tensor.
template <typename S>
Tensor<S> softmax(const Tensor<S>& logits) {
    require(logits.rank() == 1 && logits.numel() > 0, ErrorKind::InvalidArgument,
            "softmax: expects a non-empty vector");
    S max_logit = *std::max_element(logits.data.begin(), logits.data.end());
    Tensor<S> out = Tensor<S>::zeros(logits.shape);
    S total = S(0);
    for (size_t i = 0; i < logits.numel(); ++i) {
        out.data[i] = std::exp(logits.data[i] - max_logit);
        total += out.data[i];
    }
    for (auto& v : out.data) v /= total;
    return out;
}

enum class BroadcastMode { None, LhsScalar, RhsScalar };

template <typename S>
BroadcastMode broadcast_mode(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
    if (a.same_shape(b)) return BroadcastMode::None;
    if (a.is_scalar()) return BroadcastMode::LhsScalar;
    if (b.is_scalar()) return BroadcastMode::RhsScalar;
    fail(ErrorKind::InvalidArgument,
         std::string(op) + ": shapes " + shape_str(a.shape) + " and " + shape_str(b.shape) +
             " are incompatible (only scalar-against-tensor broadcast is supported)");
}

template <typename S, typename F>
Tensor<S> zip_broadcast(const Tensor<S>& a, const Tensor<S>& b, const char* op, F&& f) {
    switch (broadcast_mode(a, b, op)) {
        case BroadcastMode::None: {
            Tensor<S> out = a;
            for (size_t i = 0; i < out.numel(); ++i) out.data[i] = f(a.data[i], b.data[i]);
            return out;
        }
        case BroadcastMode::LhsScalar: {
            Tensor<S> out = b;
            for (size_t i = 0; i < out.numel(); ++i) out.data[i] = f(a.data[0], b.data[i]);
            return out;
        }
        case BroadcastMode::RhsScalar: {
            Tensor<S> out = a;
            for (size_t i = 0; i < out.numel(); ++i) out.data[i] = f(a.data[i], b.data[0]);
            return out;
        }
    }
    fail(ErrorKind::InvalidArgument, "unreachable");
}

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
    return zip_broadcast(a, b, "add", [](S x, S y) { return x + y; });
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
    return zip_broadcast(a, b, "sub", [](S x, S y) { return x - y; });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
    return zip_broadcast(a, b, "mul", [](S x, S y) { return x * y; });
}

template <typename S>
Tensor<S> scale(const Tensor<S>& a, double factor) {
    Tensor<S> out = a;
    const S f = static_cast<S>(factor);
    for (auto& v : out.data) v *= f;
    return out;
}

template <typename S>
Tensor<S> tanh(const Tensor<S>& a) {
    Tensor<S> out = a;
    for (auto& v : out.data) v = std::tanh(v);
    return out;
}

template <typename S>
Tensor<S> clamp(const Tensor<S>& a, double lo, double hi) {
    require(lo <= hi, ErrorKind::InvalidArgument, "clamp: lo must not exceed hi");
    Tensor<S> out = a;
    for (auto& v : out.data) v = std::min(static_cast<S>(hi), std::max(static_cast<S>(lo), v));
    return out;
}

template <typename S>
Tensor<S> sum(const Tensor<S>& a) {
    S acc = S(0);
    for (S v : a.data) acc += v;
    return Tensor<S>::scalar(acc);
}

template <typename S>
Tensor<S> mean(const Tensor<S>& a) {
    require(a.numel() > 0, ErrorKind::InvalidArgument, "mean: empty tensor");
    return Tensor<S>::scalar(sum(a).data[0] / static_cast<S>(a.numel()));
}

// Mean squared error over all coordinates.
template <typename S>
Tensor<S> mse(const Tensor<S>& a, const Tensor<S>& b) {
    detail::check_same_shape(a, b, "mse");
    S acc = S(0);
    for (size_t i = 0; i < a.numel(); ++i) {
        const S d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return Tensor<S>::scalar(acc / static_cast<S>(a.numel()));
}

// Flat concatenation; the result is rank-1.
template <typename S>
Tensor<S> concat(std::span<const Tensor<S>* const> parts) {
    require(!parts.empty(), ErrorKind::InvalidArgument, "concat: no operands");
    size_t total = 0;
    for (const Tensor<S>* p : parts) total += p->numel();
    Tensor<S> out = Tensor<S>::zeros({total});
    size_t offset = 0;
    for (const Tensor<S>* p : parts) {
        std::copy(p->data.begin(), p->data.end(), out.data.begin() + offset);
        offset += p->numel();
    }
    return out;
}

template <typename S>
Tensor<S> concat(const Tensor<S>& a, const Tensor<S>& b) {
    const Tensor<S>* parts[] = {&a, &b};
    return concat<S>(parts);
}

// Contiguous slice of the flattened data; the result is rank-1.
template <typename S>
Tensor<S> slice(const Tensor<S>& a, size_t offset, size_t count) {
    require(count > 0 && offset + count <= a.numel(), ErrorKind::InvalidArgument,
            "slice: range out of bounds");
    Tensor<S> out = Tensor<S>::zeros({count});
    std::copy(a.data.begin() + offset, a.data.begin() + offset + count, out.data.begin());
    return out;
}

template <typename S>
Tensor<S> transpose(const Tensor<S>& a) {
    require(a.rank() == 2, ErrorKind::InvalidArgument, "transpose: expects a rank-2 tensor");
    const size_t m = a.rows(), n = a.cols();
    Tensor<S> out = Tensor<S>::zeros({n, m});
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) out.data[j * m + i] = a.data[i * n + j];
    return out;
}

// Outer product helper for matmul gradients.
template <typename S>
Tensor<S> outer(const Tensor<S>& a, const Tensor<S>& b) {
    require(a.rank() == 1 && b.rank() == 1, ErrorKind::InvalidArgument,
            "outer: expects two vectors");
    Tensor<S> out = Tensor<S>::zeros({a.numel(), b.numel()});
    for (size_t i = 0; i < a.numel(); ++i)
        for (size_t j = 0; j < b.numel(); ++j) out.data[i * b.numel() + j] = a.data[i] * b.data[j];
    return out;
}

template <typename S>
void assert_finite(const Tensor<S>& t, const char* what) {
    require(t.all_finite(), ErrorKind::Validation,
            std::string(what) + ": non-finite values encountered");
}

}  // namespace analora
