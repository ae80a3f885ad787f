// Copyright (C) 2026 analora authors
// SPDX-License-Identifier: Apache-2.0
//
// Procedural analogy corpus: 8x8 rasters in [0,1], a fixed catalogue of
// pixel transformations with exact oracles, 2x2 composite assembly, and the
// seen / unseen-parameter / unseen-family task split.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "analora/tensor.hpp"

namespace analora {

using Raster = Tensor<double>;

inline constexpr size_t kQuadSide = 8;
inline constexpr size_t kQuadDim = kQuadSide * kQuadSide;          // 64
inline constexpr size_t kCompositeSide = 2 * kQuadSide;            // 16
inline constexpr size_t kCompositeDim = kCompositeSide * kCompositeSide;  // 256

// Hint ids follow lexicographic family-name order and never encode the
// transform parameters.
enum class Family : uint8_t {
    BoxBlur3 = 0,
    Brightness,
    Contrast,
    HFlip,
    Invert,
    RollRight,
    Transpose,
    VFlip,
};

inline constexpr size_t kFamilyCount = 8;

const char* family_name(Family family);
Family family_from_name(const std::string& name);  // Validation error on unknown names
inline size_t hint_id(Family family) { return static_cast<size_t>(family); }

struct TransformSpec {
    Family family = Family::Invert;
    // brightness: delta in [-0.5, 0.5]; contrast: gamma in [0.5, 2.0];
    // roll_right: integer shift in {1, 2, 3}; unused otherwise.
    double param = 0.0;

    std::string label() const;
    bool operator==(const TransformSpec&) const = default;
};

struct AnalogyTriplet {
    Raster a;
    Raster a_prime;
    Raster b;
    Raster b_prime_oracle;
    TransformSpec spec;
    uint64_t seed_a = 0;
    uint64_t seed_b = 0;
};

struct CompositeSample {
    Raster context;  // [a, a'; b, b]
    Raster target;   // [a, a'; b, b']
};

enum class Quadrant { TopLeft, TopRight, BottomLeft, BottomRight };

Raster gen_content(uint64_t seed);
Raster apply_transform(const TransformSpec& spec, const Raster& raster);
AnalogyTriplet make_triplet(const TransformSpec& spec, uint64_t seed_a, uint64_t seed_b);
CompositeSample make_composite(const AnalogyTriplet& triplet);

Raster grid2x2(const Raster& tl, const Raster& tr, const Raster& bl, const Raster& br);
Raster extract_quadrant(const Raster& composite, Quadrant which);

// Flat <-> composite views for the flow model's data vectors.
template <typename S>
Tensor<S> flatten_composite(const Raster& composite) {
    require(composite.numel() == kCompositeDim, ErrorKind::InvalidArgument,
            "flatten_composite: expected a 16x16 composite");
    std::vector<S> out(kCompositeDim);
    for (size_t i = 0; i < kCompositeDim; ++i) out[i] = static_cast<S>(composite.data[i]);
    return Tensor<S>({kCompositeDim}, std::move(out));
}

template <typename S>
Raster composite_from_flat(const Tensor<S>& flat) {
    require(flat.numel() == kCompositeDim, ErrorKind::InvalidArgument,
            "composite_from_flat: expected 256 elements");
    Raster out = Tensor<double>::zeros({kCompositeSide, kCompositeSide});
    for (size_t i = 0; i < kCompositeDim; ++i) out.data[i] = static_cast<double>(flat.data[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Task split
// ---------------------------------------------------------------------------

struct TaskCell {
    TransformSpec spec;
    std::string label;
};

struct TaskSplit {
    std::vector<TaskCell> seen;
    std::vector<TaskCell> unseen_params;
    std::vector<TaskCell> unseen_families;
};

struct SplitConfig {
    std::vector<Family> seen_families;
    // When absent, every family outside seen_families is held out whole.
    std::optional<std::vector<Family>> unseen_families;
};

SplitConfig default_split_config();

// Builds the split from the per-family default parameter cells. Rejects
// configurations where a family appears both seen and held out.
TaskSplit split_tasks(const SplitConfig& config);

// Per-family default cells (seen and held-out-parameter values).
std::vector<TransformSpec> seen_cells_for(Family family);
std::vector<TransformSpec> unseen_param_cells_for(Family family);

// ---------------------------------------------------------------------------
// PGM (P5, maxval 255) import/export for visual inspection.
// ---------------------------------------------------------------------------

std::string pgm_bytes(const Raster& raster);
void write_pgm(const std::string& path, const Raster& raster);
Raster read_pgm(const std::string& path);
Raster parse_pgm(const std::string& bytes);

}  // namespace analora
