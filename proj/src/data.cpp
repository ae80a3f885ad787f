// Copyright (C) 2026 analora authors
// SPDX-License-Identifier: Apache-2.0

#include "analora/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace analora {

namespace {

constexpr std::array<const char*, kFamilyCount> kFamilyNames = {
    "box_blur3", "brightness", "contrast", "hflip",
    "invert",    "roll_right", "transpose", "vflip",
};

double pixel(const Raster& r, size_t row, size_t col) { return r.data[row * r.shape[1] + col]; }

// Mirror index with edge repetition: -1 -> 0, n -> n-1.
size_t reflect_index(long idx, long n) {
    if (idx < 0) idx = -idx - 1;
    if (idx >= n) idx = 2 * n - 1 - idx;
    return static_cast<size_t>(idx);
}

// Rescale so the raster spans exactly [0.1, 0.9]; generators below always
// produce non-constant images.
Raster normalize_span(Raster raster) {
    const auto [lo_it, hi_it] = std::minmax_element(raster.data.begin(), raster.data.end());
    const double lo = *lo_it, hi = *hi_it;
    require(hi - lo > 1e-9, ErrorKind::Validation, "gen_content: degenerate raster");
    for (auto& v : raster.data) v = 0.1 + 0.8 * (v - lo) / (hi - lo);
    return raster;
}

}  // namespace

const char* family_name(Family family) { return kFamilyNames[static_cast<size_t>(family)]; }

Family family_from_name(const std::string& name) {
    for (size_t i = 0; i < kFamilyCount; ++i)
        if (name == kFamilyNames[i]) return static_cast<Family>(i);
    fail(ErrorKind::Validation, "unknown transform family '" + name + "'");
}

std::string TransformSpec::label() const {
    switch (family) {
        case Family::Brightness:
        case Family::Contrast: {
            char buf[48];
            std::snprintf(buf, sizeof buf, "%s(%+.2f)", family_name(family), param);
            return buf;
        }
        case Family::RollRight: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "roll_right(%d)", static_cast<int>(param));
            return buf;
        }
        default:
            return family_name(family);
    }
}

Raster gen_content(uint64_t seed) {
    Rng rng(derive_seed(seed, "content"));
    Raster out = Tensor<double>::zeros({kQuadSide, kQuadSide});
    const uint64_t kind = rng.next_below(3);

    if (kind == 0) {
        // 1-3 soft blobs on a flat background.
        const uint64_t blobs = 1 + rng.next_below(3);
        for (uint64_t k = 0; k < blobs; ++k) {
            const double cy = 1.5 + 5.0 * rng.next_uniform();
            const double cx = 1.5 + 5.0 * rng.next_uniform();
            const double sigma = 1.2 + 1.3 * rng.next_uniform();
            const double amp = 0.6 + 0.4 * rng.next_uniform();
            for (size_t i = 0; i < kQuadSide; ++i)
                for (size_t j = 0; j < kQuadSide; ++j) {
                    const double dy = static_cast<double>(i) - cy;
                    const double dx = static_cast<double>(j) - cx;
                    out.at(i, j) += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                }
        }
    } else if (kind == 1) {
        // Axis-aligned stripes.
        const bool horizontal = rng.next_below(2) == 0;
        const size_t band = rng.next_below(2) == 0 ? 2 : 4;
        const size_t phase = rng.next_below(band);
        for (size_t i = 0; i < kQuadSide; ++i)
            for (size_t j = 0; j < kQuadSide; ++j) {
                const size_t axis = horizontal ? i : j;
                out.at(i, j) = ((axis + phase) / (band / 2)) % 2 == 0 ? 0.0 : 1.0;
            }
    } else {
        // Diagonal gradient in one of four orientations.
        const uint64_t orientation = rng.next_below(4);
        for (size_t i = 0; i < kQuadSide; ++i)
            for (size_t j = 0; j < kQuadSide; ++j) {
                const double u = static_cast<double>(i) / (kQuadSide - 1);
                const double v = static_cast<double>(j) / (kQuadSide - 1);
                switch (orientation) {
                    case 0: out.at(i, j) = (u + v) / 2.0; break;
                    case 1: out.at(i, j) = (u + 1.0 - v) / 2.0; break;
                    case 2: out.at(i, j) = (1.0 - u + v) / 2.0; break;
                    default: out.at(i, j) = 1.0 - (u + v) / 2.0; break;
                }
            }
    }
    return normalize_span(std::move(out));
}

Raster apply_transform(const TransformSpec& spec, const Raster& raster) {
    require(raster.numel() == kQuadDim, ErrorKind::InvalidArgument,
            "apply_transform: expected an 8x8 raster");
    Raster out = Tensor<double>::zeros({kQuadSide, kQuadSide});
    switch (spec.family) {
        case Family::Invert:
            for (size_t i = 0; i < kQuadDim; ++i) out.data[i] = 1.0 - raster.data[i];
            break;
        case Family::HFlip:
            for (size_t i = 0; i < kQuadSide; ++i)
                for (size_t j = 0; j < kQuadSide; ++j)
                    out.at(i, j) = pixel(raster, i, kQuadSide - 1 - j);
            break;
        case Family::VFlip:
            for (size_t i = 0; i < kQuadSide; ++i)
                for (size_t j = 0; j < kQuadSide; ++j)
                    out.at(i, j) = pixel(raster, kQuadSide - 1 - i, j);
            break;
        case Family::Transpose:
            for (size_t i = 0; i < kQuadSide; ++i)
                for (size_t j = 0; j < kQuadSide; ++j) out.at(i, j) = pixel(raster, j, i);
            break;
        case Family::RollRight: {
            const long k = static_cast<long>(spec.param);
            require(k >= 1 && k <= 3, ErrorKind::Validation,
                    "roll_right: shift must lie in {1, 2, 3}");
            for (size_t i = 0; i < kQuadSide; ++i)
                for (size_t j = 0; j < kQuadSide; ++j) {
                    const size_t src = (j + kQuadSide - static_cast<size_t>(k)) % kQuadSide;
                    out.at(i, j) = pixel(raster, i, src);
                }
            break;
        }
        case Family::Brightness:
            require(spec.param >= -0.5 && spec.param <= 0.5, ErrorKind::Validation,
                    "brightness: delta must lie in [-0.5, 0.5]");
            for (size_t i = 0; i < kQuadDim; ++i)
                out.data[i] = std::clamp(raster.data[i] + spec.param, 0.0, 1.0);
            break;
        case Family::Contrast:
            require(spec.param >= 0.5 && spec.param <= 2.0, ErrorKind::Validation,
                    "contrast: gamma must lie in [0.5, 2.0]");
            for (size_t i = 0; i < kQuadDim; ++i)
                out.data[i] = std::clamp(0.5 + spec.param * (raster.data[i] - 0.5), 0.0, 1.0);
            break;
        case Family::BoxBlur3:
            for (size_t i = 0; i < kQuadSide; ++i)
                for (size_t j = 0; j < kQuadSide; ++j) {
                    double acc = 0.0;
                    for (long di = -1; di <= 1; ++di)
                        for (long dj = -1; dj <= 1; ++dj)
                            acc += pixel(raster,
                                         reflect_index(static_cast<long>(i) + di, kQuadSide),
                                         reflect_index(static_cast<long>(j) + dj, kQuadSide));
                    out.at(i, j) = acc / 9.0;
                }
            break;
    }
    return out;
}

AnalogyTriplet make_triplet(const TransformSpec& spec, uint64_t seed_a, uint64_t seed_b) {
    AnalogyTriplet t;
    t.spec = spec;
    t.seed_a = seed_a;
    t.seed_b = seed_b;
    t.a = gen_content(seed_a);
    t.b = gen_content(seed_b);
    t.a_prime = apply_transform(spec, t.a);
    t.b_prime_oracle = apply_transform(spec, t.b);
    return t;
}

CompositeSample make_composite(const AnalogyTriplet& triplet) {
    CompositeSample s;
    s.context = grid2x2(triplet.a, triplet.a_prime, triplet.b, triplet.b);
    s.target = grid2x2(triplet.a, triplet.a_prime, triplet.b, triplet.b_prime_oracle);
    return s;
}

Raster grid2x2(const Raster& tl, const Raster& tr, const Raster& bl, const Raster& br) {
    for (const Raster* q : {&tl, &tr, &bl, &br})
        require(q->numel() == kQuadDim, ErrorKind::InvalidArgument,
                "grid2x2: quadrants must be 8x8");
    Raster out = Tensor<double>::zeros({kCompositeSide, kCompositeSide});
    for (size_t i = 0; i < kQuadSide; ++i)
        for (size_t j = 0; j < kQuadSide; ++j) {
            out.at(i, j) = pixel(tl, i, j);
            out.at(i, j + kQuadSide) = pixel(tr, i, j);
            out.at(i + kQuadSide, j) = pixel(bl, i, j);
            out.at(i + kQuadSide, j + kQuadSide) = pixel(br, i, j);
        }
    return out;
}

Raster extract_quadrant(const Raster& composite, Quadrant which) {
    require(composite.numel() == kCompositeDim, ErrorKind::InvalidArgument,
            "extract_quadrant: expected a 16x16 composite");
    const size_t row0 = (which == Quadrant::BottomLeft || which == Quadrant::BottomRight)
                            ? kQuadSide : 0;
    const size_t col0 = (which == Quadrant::TopRight || which == Quadrant::BottomRight)
                            ? kQuadSide : 0;
    Raster out = Tensor<double>::zeros({kQuadSide, kQuadSide});
    for (size_t i = 0; i < kQuadSide; ++i)
        for (size_t j = 0; j < kQuadSide; ++j)
            out.at(i, j) = composite.at(row0 + i, col0 + j);
    return out;
}

// ---------------------------------------------------------------------------
// Task split
// ---------------------------------------------------------------------------

std::vector<TransformSpec> seen_cells_for(Family family) {
    switch (family) {
        case Family::Invert: return {{Family::Invert, 0.0}};
        case Family::HFlip: return {{Family::HFlip, 0.0}};
        case Family::VFlip: return {{Family::VFlip, 0.0}};
        case Family::Transpose: return {{Family::Transpose, 0.0}};
        case Family::BoxBlur3: return {{Family::BoxBlur3, 0.0}};
        case Family::RollRight: return {{Family::RollRight, 1.0}, {Family::RollRight, 2.0}};
        case Family::Brightness:
            return {{Family::Brightness, 0.2}, {Family::Brightness, -0.2},
                    {Family::Brightness, 0.4}, {Family::Brightness, -0.4}};
        case Family::Contrast:
            return {{Family::Contrast, 0.75}, {Family::Contrast, 1.5}};
    }
    fail(ErrorKind::InvalidArgument, "unknown family");
}

std::vector<TransformSpec> unseen_param_cells_for(Family family) {
    switch (family) {
        case Family::RollRight: return {{Family::RollRight, 3.0}};
        case Family::Brightness:
            return {{Family::Brightness, 0.3}, {Family::Brightness, -0.3}};
        case Family::Contrast: return {{Family::Contrast, 0.6}, {Family::Contrast, 1.8}};
        default: return {};
    }
}

SplitConfig default_split_config() {
    return {{Family::Invert, Family::HFlip, Family::RollRight, Family::Brightness,
             Family::Contrast},
            std::nullopt};
}

TaskSplit split_tasks(const SplitConfig& config) {
    require(!config.seen_families.empty(), ErrorKind::Validation,
            "split: at least one seen family is required");
    std::set<Family> seen(config.seen_families.begin(), config.seen_families.end());
    require(seen.size() == config.seen_families.size(), ErrorKind::Validation,
            "split: duplicate family in seen_families");

    std::vector<Family> held_out;
    if (config.unseen_families) {
        held_out = *config.unseen_families;
        for (Family f : held_out)
            require(!seen.count(f), ErrorKind::Validation,
                    std::string("split: family '") + family_name(f) +
                        "' appears in both seen and unseen sets");
    } else {
        for (size_t i = 0; i < kFamilyCount; ++i) {
            Family f = static_cast<Family>(i);
            if (!seen.count(f)) held_out.push_back(f);
        }
    }

    TaskSplit split;
    auto add_cells = [](std::vector<TaskCell>& out, const std::vector<TransformSpec>& cells) {
        for (const auto& spec : cells) out.push_back({spec, spec.label()});
    };
    for (size_t i = 0; i < kFamilyCount; ++i) {
        // Family iteration order is lexicographic, matching hint ids.
        Family f = static_cast<Family>(i);
        if (seen.count(f)) {
            add_cells(split.seen, seen_cells_for(f));
            add_cells(split.unseen_params, unseen_param_cells_for(f));
        }
    }
    for (Family f : held_out) {
        add_cells(split.unseen_families, seen_cells_for(f));
        add_cells(split.unseen_families, unseen_param_cells_for(f));
    }
    return split;
}

// ---------------------------------------------------------------------------
// PGM
// ---------------------------------------------------------------------------

std::string pgm_bytes(const Raster& raster) {
    require(raster.rank() == 2, ErrorKind::InvalidArgument, "pgm: expected a rank-2 raster");
    std::ostringstream out;
    out << "P5\n" << raster.shape[1] << ' ' << raster.shape[0] << "\n255\n";
    for (double v : raster.data) {
        require(v >= 0.0 && v <= 1.0, ErrorKind::Validation, "pgm: pixel outside [0,1]");
        // Round half away from zero; values are non-negative here.
        const int level = static_cast<int>(std::floor(v * 255.0 + 0.5));
        out.put(static_cast<char>(std::clamp(level, 0, 255)));
    }
    return out.str();
}

void write_pgm(const std::string& path, const Raster& raster) {
    std::ofstream file(path, std::ios::binary);
    require(static_cast<bool>(file), ErrorKind::Io, "cannot open '" + path + "' for writing");
    const std::string bytes = pgm_bytes(raster);
    file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(file), ErrorKind::Io, "short write to '" + path + "'");
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_pgm_token(const std::string& bytes, size_t& pos) {
    while (pos < bytes.size()) {
        if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
            ++pos;
        } else if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    const size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    require(pos > start, ErrorKind::Format, "pgm: truncated header");
    return bytes.substr(start, pos - start);
}

}  // namespace

Raster parse_pgm(const std::string& bytes) {
    size_t pos = 0;
    require(next_pgm_token(bytes, pos) == "P5", ErrorKind::Format, "pgm: not a P5 file");
    const size_t width = std::stoul(next_pgm_token(bytes, pos));
    const size_t height = std::stoul(next_pgm_token(bytes, pos));
    const size_t maxval = std::stoul(next_pgm_token(bytes, pos));
    require(maxval == 255, ErrorKind::Format, "pgm: expected maxval 255");
    require(pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos])),
            ErrorKind::Format, "pgm: missing header terminator");
    ++pos;
    require(bytes.size() - pos >= width * height, ErrorKind::Format, "pgm: truncated payload");
    Raster out = Tensor<double>::zeros({height, width});
    for (size_t i = 0; i < width * height; ++i)
        out.data[i] = static_cast<unsigned char>(bytes[pos + i]) / 255.0;
    return out;
}

Raster read_pgm(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    require(static_cast<bool>(file), ErrorKind::Io, "cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << file.rdbuf();
    return parse_pgm(buf.str());
}

}  // namespace analora
