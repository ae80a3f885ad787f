// Copyright (C) 2026 analora authors
// SPDX-License-Identifier: Apache-2.0
//
// Low-rank adapter basis with key-query routing.
//
// An adapter holds the factored update (up: m x r, down: r x n) applied as
// W0 + (alpha / r) * up * down. A basis keeps N adapters of identical shape
// plus one learnable key row per adapter. A query projected from frozen
// encoder features selects mixing coefficients; the coefficients combine the
// basis factors into a single effective adapter (factors are mixed first,
// then multiplied, so cross terms between basis members are kept).
//
// Every operation exists in a plain-tensor form (inference, analysis) and a
// tape form (training); both run the same kernels in the same order.

#pragma once

#include <span>
#include <vector>

#include "analora/config.hpp"
#include "analora/data.hpp"
#include "analora/tape.hpp"
#include "analora/tensor.hpp"

namespace analora {

template <typename S>
struct LoraModule {
    Tensor<S> up;    // m x r
    Tensor<S> down;  // r x n
    double alpha = 1.0;
    size_t rank = 1;

    double scaling() const { return alpha / static_cast<double>(rank); }
};

template <typename S>
struct LoraBasis {
    std::vector<LoraModule<S>> modules;  // N adapters of identical shape
    Tensor<S> keys;                      // N x d

    size_t size() const { return modules.size(); }
};

// ---------------------------------------------------------------------------
// Frozen feature encoder: two affine maps with tanh between, drawn once from
// a seeded normal with variance 1/fan_in and never updated.
// ---------------------------------------------------------------------------

template <typename S>
struct FrozenEncoder {
    Tensor<S> w1, b1;  // hidden x input
    Tensor<S> w2, b2;  // feature x hidden

    static FrozenEncoder seeded(size_t input_dim, size_t hidden_dim, size_t feature_dim,
                                uint64_t seed) {
        FrozenEncoder enc;
        Rng r1 = derive_stream(seed, "encoder.w1");
        Rng r2 = derive_stream(seed, "encoder.w2");
        enc.w1 = randn<S>(r1, {hidden_dim, input_dim}, 1.0 / std::sqrt(double(input_dim)));
        enc.b1 = Tensor<S>::zeros({hidden_dim});
        enc.w2 = randn<S>(r2, {feature_dim, hidden_dim}, 1.0 / std::sqrt(double(hidden_dim)));
        enc.b2 = Tensor<S>::zeros({feature_dim});
        return enc;
    }

    size_t input_dim() const { return w1.cols(); }
    size_t feature_dim() const { return w2.rows(); }

    Tensor<S> encode(const Tensor<S>& input) const {
        require(input.numel() == input_dim(), ErrorKind::InvalidArgument,
                "encoder: input width mismatch");
        Tensor<S> hidden = tanh(add(matmul(w1, input), b1));
        return add(matmul(w2, hidden), b2);
    }
};

// ---------------------------------------------------------------------------
// Router head: a single learnable projection (applied as features^T * proj)
// with optional bias, plus the normalization mode and temperature.
// ---------------------------------------------------------------------------

template <typename S>
struct RouterHead {
    Tensor<S> proj;  // input_width x d
    Tensor<S> bias;  // d (zeros when the bias is disabled)
    RoutingMode mode = RoutingMode::Softmax;
    double temperature = 1.0;

    size_t input_width() const { return proj.rows(); }
    size_t key_dim() const { return proj.cols(); }
};

// Encoder features for one analogy triplet under the chosen layout:
// separate_concat encodes a, a' and b independently and concatenates;
// composite encodes the 2x2 context grid [a, a'; b, b] in one pass.
template <typename S>
Tensor<S> routing_features(const FrozenEncoder<S>& encoder, const Raster& a,
                           const Raster& a_prime, const Raster& b, EncoderLayout layout) {
    if (layout == EncoderLayout::SeparateConcat) {
        require(encoder.input_dim() == kQuadDim, ErrorKind::InvalidArgument,
                "routing_features: separate_concat layout needs a quadrant-width encoder");
        auto flat = [](const Raster& r) {
            require(r.numel() == kQuadDim, ErrorKind::InvalidArgument,
                    "routing_features: rasters must be 8x8");
            std::vector<S> v(kQuadDim);
            for (size_t i = 0; i < kQuadDim; ++i) v[i] = static_cast<S>(r.data[i]);
            return Tensor<S>({kQuadDim}, std::move(v));
        };
        Tensor<S> fa = encoder.encode(flat(a));
        Tensor<S> fap = encoder.encode(flat(a_prime));
        Tensor<S> fb = encoder.encode(flat(b));
        const Tensor<S>* parts[] = {&fa, &fap, &fb};
        return concat<S>(parts);
    }
    require(encoder.input_dim() == kCompositeDim, ErrorKind::InvalidArgument,
            "routing_features: composite layout needs a composite-width encoder");
    return encoder.encode(flatten_composite<S>(grid2x2(a, a_prime, b, b)));
}

template <typename S>
Tensor<S> encode_query(const Tensor<S>& features, const RouterHead<S>& head) {
    require(features.numel() == head.input_width(), ErrorKind::InvalidArgument,
            "encode_query: feature width " + std::to_string(features.numel()) +
                " does not match head input width " + std::to_string(head.input_width()));
    return add(matmul(features, head.proj), head.bias);
}

template <typename S>
Tensor<S> encode_query(const FrozenEncoder<S>& encoder, const RouterHead<S>& head,
                       const Raster& a, const Raster& a_prime, const Raster& b,
                       EncoderLayout layout) {
    return encode_query(routing_features(encoder, a, a_prime, b, layout), head);
}

// ---------------------------------------------------------------------------
// Routing: logits = (q . keys^T) / temperature, normalized per mode.
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> route(const Tensor<S>& query, const Tensor<S>& keys, RoutingMode mode,
                double temperature) {
    require(keys.rank() == 2 && query.rank() == 1 && query.numel() == keys.cols(),
            ErrorKind::InvalidArgument, "route: query width must match key dimension");
    require(query.all_finite() && keys.all_finite(), ErrorKind::Validation,
            "route: query and keys must be finite");
    Tensor<S> logits = scale(matmul(query, transpose(keys)), 1.0 / temperature);
    return mode == RoutingMode::Softmax ? softmax(logits) : tanh(logits);
}

template <typename S>
Var<S> route(Tape<S>& tape, Var<S> query, Var<S> keys, RoutingMode mode, double temperature) {
    require(tape.value(keys).rank() == 2 &&
                tape.value(query).numel() == tape.value(keys).cols(),
            ErrorKind::InvalidArgument, "route: query width must match key dimension");
    Var<S> logits = tape.scale(tape.matmul(query, tape.transpose(keys)), 1.0 / temperature);
    return mode == RoutingMode::Softmax ? tape.softmax(logits) : tape.tanh(logits);
}

// ---------------------------------------------------------------------------
// Mixing: factor-wise linear combination across the basis.
// ---------------------------------------------------------------------------

template <typename S>
LoraModule<S> mix(const LoraBasis<S>& basis, const Tensor<S>& coefficients) {
    require(coefficients.numel() == basis.size(), ErrorKind::InvalidArgument,
            "mix: coefficient count must equal basis size");
    require(basis.size() > 0, ErrorKind::InvalidArgument, "mix: empty basis");
    LoraModule<S> out;
    out.alpha = basis.modules[0].alpha;
    out.rank = basis.modules[0].rank;
    out.up = scale(basis.modules[0].up, 0.0);
    out.down = scale(basis.modules[0].down, 0.0);
    for (size_t i = 0; i < basis.size(); ++i) {
        const S c = coefficients.data[i];
        const LoraModule<S>& m = basis.modules[i];
        require(m.up.same_shape(basis.modules[0].up) && m.down.same_shape(basis.modules[0].down),
                ErrorKind::InvalidArgument, "mix: basis modules must share one shape");
        for (size_t k = 0; k < out.up.numel(); ++k) out.up.data[k] += c * m.up.data[k];
        for (size_t k = 0; k < out.down.numel(); ++k) out.down.data[k] += c * m.down.data[k];
    }
    return out;
}

template <typename S>
struct MixedAdapterVars {
    Var<S> up;
    Var<S> down;
    double alpha = 1.0;
    size_t rank = 1;

    double scaling() const { return alpha / static_cast<double>(rank); }
};

template <typename S>
MixedAdapterVars<S> mix(Tape<S>& tape, std::span<const Var<S>> ups,
                        std::span<const Var<S>> downs, Var<S> coefficients, double alpha,
                        size_t rank) {
    require(ups.size() == downs.size() && !ups.empty(), ErrorKind::InvalidArgument,
            "mix: up/down factor counts must match and be non-empty");
    require(tape.value(coefficients).numel() == ups.size(), ErrorKind::InvalidArgument,
            "mix: coefficient count must equal basis size");
    MixedAdapterVars<S> out;
    out.alpha = alpha;
    out.rank = rank;
    for (size_t i = 0; i < ups.size(); ++i) {
        Var<S> c = tape.slice(coefficients, i, 1);
        Var<S> up_term = tape.mul(c, ups[i]);
        Var<S> down_term = tape.mul(c, downs[i]);
        if (i == 0) {
            out.up = up_term;
            out.down = down_term;
        } else {
            out.up = tape.add(out.up, up_term);
            out.down = tape.add(out.down, down_term);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adapted forward pass, factored (the dense update is never materialized).
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> forward_adapted(const Tensor<S>& x, const Tensor<S>& base, const LoraModule<S>& mixed) {
    Tensor<S> out = matmul(base, x);
    Tensor<S> low = matmul(mixed.down, x);
    return add(out, scale(matmul(mixed.up, low), mixed.scaling()));
}

template <typename S>
Var<S> forward_adapted(Tape<S>& tape, Var<S> x, Var<S> base, const MixedAdapterVars<S>& mixed) {
    Var<S> out = tape.matmul(base, x);
    Var<S> low = tape.matmul(mixed.down, x);
    return tape.add(out, tape.scale(tape.matmul(mixed.up, low), mixed.scaling()));
}

// Dense update for oracle comparisons: (alpha / r) * up * down.
template <typename S>
Tensor<S> dense_update(const LoraModule<S>& module) {
    return scale(matmul(module.up, module.down), module.scaling());
}

}  // namespace analora
