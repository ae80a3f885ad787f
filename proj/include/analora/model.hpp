// Copyright (C) 2026 analora authors
// SPDX-License-Identifier: Apache-2.0
//
// Assembled model state: a named parameter store holding the base velocity
// net, the frozen feature encoder, the hint embedding table and one routed
// adapter set per targeted layer. Parameters are grouped so the two training
// phases can select their trainable sets exactly.

#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "analora/config.hpp"
#include "analora/lora.hpp"
#include "analora/tape.hpp"

namespace analora {

enum class ParamGroup : uint8_t {
    BaseNet,   // linear layer weights and biases (trained in phase 1, frozen after)
    Encoder,   // frozen feature encoder (never trained)
    Adapters,  // basis factors, keys, projections (trained in phase 2)
    Hint,      // hint embedding table (trained in both phases)
};

template <typename S>
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor<S> value;
        ParamGroup group;
    };

    size_t add(std::string name, Tensor<S> value, ParamGroup group) {
        require(!index_.count(name), ErrorKind::InvalidArgument,
                "parameter '" + name + "' already registered");
        index_.emplace(name, entries_.size());
        entries_.push_back({std::move(name), std::move(value), group});
        return entries_.size() - 1;
    }

    size_t find(const std::string& name) const {
        auto it = index_.find(name);
        require(it != index_.end(), ErrorKind::InvalidArgument,
                "unknown parameter '" + name + "'");
        return it->second;
    }

    bool contains(const std::string& name) const { return index_.count(name) > 0; }

    Entry& at(size_t i) { return entries_[i]; }
    const Entry& at(size_t i) const { return entries_[i]; }
    size_t size() const { return entries_.size(); }

    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, size_t> index_;
};

template <typename S>
struct Model {
    ModelConfig cfg;
    ParamStore<S> params;

    struct LayerRef {
        size_t weight = 0, bias = 0;  // param indices
        size_t in_dim = 0, out_dim = 0;
        bool targeted = false;
        std::vector<size_t> ups, downs;  // adapter factor indices, N each
        size_t keys = 0, proj = 0, proj_bias = 0;
    };

    std::vector<LayerRef> layers;  // hidden layers then the output layer
    size_t enc_w1 = 0, enc_b1 = 0, enc_w2 = 0, enc_b2 = 0;
    size_t hint_table = 0;
    uint64_t init_seed = 0;

    static constexpr size_t data_dim() { return kCompositeDim; }

    size_t input_dim() const {
        return data_dim() + cfg.time_embed_dim + data_dim() + cfg.hint_embed_dim;
    }

    size_t encoder_input_dim() const {
        return cfg.layout == EncoderLayout::SeparateConcat ? kQuadDim : kCompositeDim;
    }

    size_t feature_width() const {
        return cfg.layout == EncoderLayout::SeparateConcat ? 3 * cfg.encoder_feature_dim
                                                           : cfg.encoder_feature_dim;
    }

    size_t targeted_layer_count() const {
        size_t n = 0;
        for (const auto& layer : layers) n += layer.targeted ? 1 : 0;
        return n;
    }

    // Adapter factor parameters per targeted layer: N * r * (m + n).
    size_t adapter_params_per_layer() const {
        for (const auto& layer : layers)
            if (layer.targeted)
                return cfg.n_basis * cfg.rank * (layer.in_dim + layer.out_dim);
        return 0;
    }

    FrozenEncoder<S> encoder_view() const {
        FrozenEncoder<S> enc;
        enc.w1 = params.at(enc_w1).value;
        enc.b1 = params.at(enc_b1).value;
        enc.w2 = params.at(enc_w2).value;
        enc.b2 = params.at(enc_b2).value;
        return enc;
    }

    RouterHead<S> head_view(const LayerRef& layer) const {
        RouterHead<S> head;
        head.proj = params.at(layer.proj).value;
        head.bias = params.at(layer.proj_bias).value;
        head.mode = cfg.mode;
        head.temperature = cfg.routing_temperature;
        return head;
    }

    LoraBasis<S> basis_view(const LayerRef& layer) const {
        LoraBasis<S> basis;
        basis.keys = params.at(layer.keys).value;
        basis.modules.reserve(cfg.n_basis);
        for (size_t i = 0; i < cfg.n_basis; ++i) {
            LoraModule<S> m;
            m.up = params.at(layer.ups[i]).value;
            m.down = params.at(layer.downs[i]).value;
            m.alpha = cfg.alpha;
            m.rank = cfg.rank;
            basis.modules.push_back(std::move(m));
        }
        return basis;
    }
};

namespace detail {
inline std::string index2(size_t i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02zu", i);
    return buf;
}
}  // namespace detail

template <typename S>
Model<S> build_model(const ModelConfig& cfg, uint64_t seed) {
    Model<S> model;
    model.cfg = cfg;
    model.init_seed = seed;
    auto& P = model.params;

    // Frozen encoder, weights N(0, 1/fan_in).
    {
        FrozenEncoder<S> enc = FrozenEncoder<S>::seeded(
            model.encoder_input_dim(), cfg.encoder_hidden_dim, cfg.encoder_feature_dim,
            derive_seed(seed, "init.encoder"));
        model.enc_b1 = P.add("enc.b1", std::move(enc.b1), ParamGroup::Encoder);
        model.enc_b2 = P.add("enc.b2", std::move(enc.b2), ParamGroup::Encoder);
        model.enc_w1 = P.add("enc.w1", std::move(enc.w1), ParamGroup::Encoder);
        model.enc_w2 = P.add("enc.w2", std::move(enc.w2), ParamGroup::Encoder);
    }

    // Hint embedding table, one row per transform family.
    {
        Rng rng = derive_stream(seed, "init.hint");
        model.hint_table = P.add(
            "hint.table",
            randn<S>(rng, {kFamilyCount, cfg.hint_embed_dim},
                     1.0 / std::sqrt(double(cfg.hint_embed_dim))),
            ParamGroup::Hint);
    }

    // Velocity net layers: hidden stack then the linear output layer.
    const size_t layer_count = cfg.hidden_layers + 1;
    for (size_t i = 0; i < layer_count; ++i) {
        typename Model<S>::LayerRef layer;
        layer.in_dim = i == 0 ? model.input_dim() : cfg.hidden_width;
        layer.out_dim = i < cfg.hidden_layers ? cfg.hidden_width : Model<S>::data_dim();
        const std::string tag = detail::index2(i);
        Rng rng = derive_stream(seed, "init.net", i);
        layer.weight = P.add("net.l" + tag + ".w",
                             randn<S>(rng, {layer.out_dim, layer.in_dim},
                                      1.0 / std::sqrt(double(layer.in_dim))),
                             ParamGroup::BaseNet);
        layer.bias = P.add("net.l" + tag + ".b", Tensor<S>::zeros({layer.out_dim}),
                           ParamGroup::BaseNet);
        model.layers.push_back(std::move(layer));
    }

    // Routed adapter sets on the targeted hidden layers.
    for (size_t t : cfg.target_layers) {
        require(t < cfg.hidden_layers, ErrorKind::Validation,
                "target layer " + std::to_string(t) + " does not exist");
        auto& layer = model.layers[t];
        require(!layer.targeted, ErrorKind::Validation,
                "target layer " + std::to_string(t) + " listed twice");
        layer.targeted = true;
        require(cfg.rank <= std::min(layer.in_dim, layer.out_dim), ErrorKind::Validation,
                "rank exceeds the adapted matrix extents at layer " + std::to_string(t));
        const std::string tag = detail::index2(t);

        Rng key_rng = derive_stream(seed, "init.keys", t);
        layer.keys = P.add("route.l" + tag + ".keys",
                           randn<S>(key_rng, {cfg.n_basis, cfg.key_dim},
                                    1.0 / std::sqrt(double(cfg.key_dim))),
                           ParamGroup::Adapters);
        Rng proj_rng = derive_stream(seed, "init.proj", t);
        layer.proj = P.add("route.l" + tag + ".proj.w",
                           randn<S>(proj_rng, {model.feature_width(), cfg.key_dim},
                                    1.0 / std::sqrt(double(model.feature_width()))),
                           ParamGroup::Adapters);
        layer.proj_bias = P.add("route.l" + tag + ".proj.b", Tensor<S>::zeros({cfg.key_dim}),
                                ParamGroup::Adapters);

        for (size_t m = 0; m < cfg.n_basis; ++m) {
            const std::string mtag = detail::index2(m);
            // Down factors N(0, 1/in); up factors zero so the update vanishes
            // at step 0 and the frozen base behavior is preserved.
            Rng down_rng = derive_stream(seed, "init.down", t * 1000 + m);
            layer.downs.push_back(P.add("basis.l" + tag + ".dn" + mtag,
                                        randn<S>(down_rng, {cfg.rank, layer.in_dim},
                                                 1.0 / std::sqrt(double(layer.in_dim))),
                                        ParamGroup::Adapters));
            layer.ups.push_back(P.add("basis.l" + tag + ".up" + mtag,
                                      Tensor<S>::zeros({layer.out_dim, cfg.rank}),
                                      ParamGroup::Adapters));
        }
    }
    return model;
}

// ---------------------------------------------------------------------------
// Tape binding
// ---------------------------------------------------------------------------

enum class BindMode {
    Inference,  // everything constant (bound by reference, no copies)
    Phase1,     // base net + hint table trainable
    Phase2,     // adapters + hint table trainable
};

template <typename S>
struct BoundParams {
    Tape<S>* tape = nullptr;
    const Model<S>* model = nullptr;
    std::vector<Var<S>> vars;       // aligned with the parameter store
    std::vector<size_t> trainable;  // store indices bound as leaves

    Var<S> operator[](size_t param_index) const { return vars[param_index]; }
};

template <typename S>
bool group_trainable(ParamGroup group, BindMode mode) {
    switch (mode) {
        case BindMode::Inference: return false;
        case BindMode::Phase1: return group == ParamGroup::BaseNet || group == ParamGroup::Hint;
        case BindMode::Phase2: return group == ParamGroup::Adapters || group == ParamGroup::Hint;
    }
    return false;
}

template <typename S>
BoundParams<S> bind_params(Tape<S>& tape, const Model<S>& model, BindMode mode) {
    BoundParams<S> bound;
    bound.tape = &tape;
    bound.model = &model;
    bound.vars.reserve(model.params.size());
    for (size_t i = 0; i < model.params.size(); ++i) {
        const auto& entry = model.params.at(i);
        const bool disabled_bias =
            !model.cfg.proj_bias && entry.group == ParamGroup::Adapters &&
            entry.name.find(".proj.b") != std::string::npos;
        if (!disabled_bias && group_trainable<S>(entry.group, mode)) {
            bound.vars.push_back(tape.leaf(entry.value));
            bound.trainable.push_back(i);
        } else {
            bound.vars.push_back(tape.constant_ref(&entry.value));
        }
    }
    return bound;
}

// Plain routing coefficients per targeted layer for a precomputed feature
// vector (analysis path; shares kernels with the tape forward).
template <typename S>
std::vector<Tensor<S>> routing_coefficients(const Model<S>& model, const Tensor<S>& features) {
    std::vector<Tensor<S>> out;
    for (const auto& layer : model.layers) {
        if (!layer.targeted) continue;
        Tensor<S> query = encode_query(features, model.head_view(layer));
        out.push_back(route(query, model.params.at(layer.keys).value, model.cfg.mode,
                            model.cfg.routing_temperature));
    }
    return out;
}

template <typename S>
Tensor<S> model_routing_features(const Model<S>& model, const Raster& a, const Raster& a_prime,
                                 const Raster& b) {
    return routing_features(model.encoder_view(), a, a_prime, b, model.cfg.layout);
}

}  // namespace analora
