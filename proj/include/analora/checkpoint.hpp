// Copyright (C) 2026 analora authors
// SPDX-License-Identifier: Apache-2.0
//
// Bit-exact checkpoint container.
//
// File layout: magic "LWB1"; u32 little-endian version = 1; u64 little-endian
// header byte length; UTF-8 header of lines `name:dtype:dim0xdim1x...`;
// zero padding to the next 8-byte boundary; raw little-endian payloads in
// header order. Entry names are unique and stored lexicographically, so
// save -> load -> save reproduces the file byte for byte.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "analora/config.hpp"
#include "analora/model.hpp"
#include "analora/tensor.hpp"

namespace analora {

struct CheckpointEntry {
    std::string name;
    Dtype dtype = Dtype::F32;
    std::vector<size_t> shape;
    std::vector<std::byte> payload;

    size_t scalar_size() const { return dtype == Dtype::F32 ? 4 : 8; }
};

class Checkpoint {
public:
    void add(const std::string& name, const Tensor<float>& tensor);
    void add(const std::string& name, const Tensor<double>& tensor);

    bool contains(const std::string& name) const;
    const CheckpointEntry& entry(const std::string& name) const;
    Tensor<float> tensor_f32(const std::string& name) const;
    Tensor<double> tensor_f64(const std::string& name) const;

    const std::vector<CheckpointEntry>& entries() const { return entries_; }

    std::vector<std::byte> serialize() const;
    void save(const std::string& path) const;
    static Checkpoint deserialize(const std::vector<std::byte>& bytes);
    static Checkpoint load(const std::string& path);

    // One line per entry, lexicographic order: `name dtype dims bytes`.
    std::string describe() const;

private:
    std::vector<CheckpointEntry> entries_;
};

// ---------------------------------------------------------------------------
// Model glue: parameters plus metadata (config echo and root seed) embedded
// as tensor entries, so a checkpoint is self-contained.
// ---------------------------------------------------------------------------

inline constexpr const char* kMetaConfigEntry = "meta.config_utf8";
inline constexpr const char* kMetaSeedEntry = "meta.seed";

Checkpoint checkpoint_from_model(const Model<float>& model, const TrainConfig& config,
                                 uint64_t seed);

struct LoadedModel {
    Model<float> model;
    TrainConfig config;
    uint64_t seed = 0;
};

LoadedModel model_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace analora
