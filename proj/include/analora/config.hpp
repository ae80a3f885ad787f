// Copyright (C) 2026 analora authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: strict `key = value` grammar with optional [section]
// headers and '#' comments, merged over a named profile (desk or paper).
// Unknown keys are rejected with their line number.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "analora/data.hpp"

namespace analora {

enum class RoutingMode { Softmax, Tanh };
enum class EncoderLayout { SeparateConcat, Composite };

const char* routing_mode_name(RoutingMode mode);
const char* encoder_layout_name(EncoderLayout layout);

struct ModelConfig {
    size_t hidden_width = 128;
    size_t hidden_layers = 3;
    size_t time_embed_dim = 16;
    size_t hint_embed_dim = 8;
    std::vector<size_t> target_layers = {0, 1, 2};

    size_t n_basis = 8;
    size_t rank = 2;
    size_t key_dim = 16;
    double alpha = 2.0;                 // defaults to rank (net scale 1)
    double routing_temperature = 4.0;   // defaults to sqrt(key_dim)
    RoutingMode mode = RoutingMode::Softmax;
    EncoderLayout layout = EncoderLayout::SeparateConcat;

    size_t encoder_hidden_dim = 64;
    size_t encoder_feature_dim = 32;
    bool proj_bias = true;

    size_t sampler_steps = 32;

    bool operator==(const ModelConfig&) const = default;
};

struct TrainConfig {
    std::string profile = "desk";
    ModelConfig model;
    SplitConfig split;

    size_t phase1_steps = 2000;
    size_t phase2_steps = 3000;
    size_t batch_size = 16;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double weight_decay = 0.05;
    double eps = 1e-8;
    double grad_clip = 0.0;  // 0 disables clipping
    uint64_t seed = 0;
    size_t eval_triplets_per_task = 16;
};

TrainConfig desk_profile();
TrainConfig paper_profile();

// Parses and validates config text. Errors carry the offending line number.
TrainConfig parse_config(const std::string& text);
TrainConfig parse_config_file(const std::string& path);

// Canonical re-emission; parse_config(canonical_config_text(c)) reproduces c.
std::string canonical_config_text(const TrainConfig& config);

// An ablation grid: shared keys at the top, one [section] per variant.
// Variant sections may only override the declared comparison axes
// (n_basis, rank, mode, layout).
struct AblateGrid {
    TrainConfig base;
    std::vector<std::pair<std::string, TrainConfig>> variants;
};

AblateGrid parse_grid(const std::string& text);
AblateGrid parse_grid_file(const std::string& path);

}  // namespace analora
