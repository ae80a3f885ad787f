// Copyright (C) 2026 analora authors
// SPDX-License-Identifier: Apache-2.0

#include "analora/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace analora {

namespace {

constexpr char kMagic[4] = {'L', 'W', 'B', '1'};
constexpr uint32_t kVersion = 1;

size_t padded_to_8(size_t n) { return (n + 7) & ~size_t{7}; }

template <typename T>
void append_raw(std::vector<std::byte>& out, T value) {
    std::byte buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.insert(out.end(), buf, buf + sizeof(T));
}

std::string shape_token(const std::vector<size_t>& shape) {
    std::string out;
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) out += 'x';
        out += std::to_string(shape[i]);
    }
    return out;
}

template <typename S>
CheckpointEntry make_entry(const std::string& name, const Tensor<S>& tensor) {
    require(!name.empty() && name.find(':') == std::string::npos &&
                name.find('\n') == std::string::npos,
            ErrorKind::InvalidArgument, "checkpoint entry names must not contain ':' or newlines");
    CheckpointEntry e;
    e.name = name;
    e.dtype = dtype_of<S>();
    e.shape = tensor.shape;
    e.payload.resize(tensor.numel() * sizeof(S));
    std::memcpy(e.payload.data(), tensor.data.data(), e.payload.size());
    return e;
}

}  // namespace

void Checkpoint::add(const std::string& name, const Tensor<float>& tensor) {
    require(!contains(name), ErrorKind::InvalidArgument,
            "duplicate checkpoint entry '" + name + "'");
    entries_.push_back(make_entry(name, tensor));
}

void Checkpoint::add(const std::string& name, const Tensor<double>& tensor) {
    require(!contains(name), ErrorKind::InvalidArgument,
            "duplicate checkpoint entry '" + name + "'");
    entries_.push_back(make_entry(name, tensor));
}

bool Checkpoint::contains(const std::string& name) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const CheckpointEntry& e) { return e.name == name; });
}

const CheckpointEntry& Checkpoint::entry(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e;
    fail(ErrorKind::InvalidArgument, "checkpoint entry '" + name + "' not found");
}

Tensor<float> Checkpoint::tensor_f32(const std::string& name) const {
    const CheckpointEntry& e = entry(name);
    require(e.dtype == Dtype::F32, ErrorKind::InvalidArgument,
            "entry '" + name + "' is not f32");
    Tensor<float> out = Tensor<float>::zeros(e.shape);
    std::memcpy(out.data.data(), e.payload.data(), e.payload.size());
    return out;
}

Tensor<double> Checkpoint::tensor_f64(const std::string& name) const {
    const CheckpointEntry& e = entry(name);
    require(e.dtype == Dtype::F64, ErrorKind::InvalidArgument,
            "entry '" + name + "' is not f64");
    Tensor<double> out = Tensor<double>::zeros(e.shape);
    std::memcpy(out.data.data(), e.payload.data(), e.payload.size());
    return out;
}

std::vector<std::byte> Checkpoint::serialize() const {
    std::vector<CheckpointEntry> sorted = entries_;
    std::sort(sorted.begin(), sorted.end(),
              [](const CheckpointEntry& a, const CheckpointEntry& b) { return a.name < b.name; });
    for (size_t i = 1; i < sorted.size(); ++i)
        require(sorted[i - 1].name != sorted[i].name, ErrorKind::Format,
                "duplicate checkpoint entry '" + sorted[i].name + "'");

    std::string header;
    for (const auto& e : sorted) {
        header += e.name;
        header += ':';
        header += dtype_name(e.dtype);
        header += ':';
        header += shape_token(e.shape);
        header += '\n';
    }

    std::vector<std::byte> out;
    out.reserve(16 + header.size() + 64);
    out.insert(out.end(), reinterpret_cast<const std::byte*>(kMagic),
               reinterpret_cast<const std::byte*>(kMagic) + 4);
    append_raw(out, kVersion);
    append_raw(out, static_cast<uint64_t>(header.size()));
    out.insert(out.end(), reinterpret_cast<const std::byte*>(header.data()),
               reinterpret_cast<const std::byte*>(header.data()) + header.size());
    out.resize(padded_to_8(out.size()), std::byte{0});
    for (const auto& e : sorted) out.insert(out.end(), e.payload.begin(), e.payload.end());
    return out;
}

void Checkpoint::save(const std::string& path) const {
    const std::vector<std::byte> bytes = serialize();
    std::ofstream file(path, std::ios::binary);
    require(static_cast<bool>(file), ErrorKind::Io, "cannot open '" + path + "' for writing");
    file.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(file), ErrorKind::Io, "short write to '" + path + "'");
}

Checkpoint Checkpoint::deserialize(const std::vector<std::byte>& bytes) {
    require(bytes.size() >= 16, ErrorKind::Format, "checkpoint too short for its fixed header");
    require(std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorKind::Format,
            "bad checkpoint magic (expected LWB1)");
    uint32_t version = 0;
    std::memcpy(&version, bytes.data() + 4, 4);
    require(version == kVersion, ErrorKind::Format,
            "unsupported checkpoint version " + std::to_string(version));
    uint64_t header_len = 0;
    std::memcpy(&header_len, bytes.data() + 8, 8);
    require(16 + header_len <= bytes.size(), ErrorKind::Format, "truncated checkpoint header");

    const std::string header(reinterpret_cast<const char*>(bytes.data()) + 16,
                             static_cast<size_t>(header_len));
    Checkpoint ckpt;
    std::set<std::string> names;
    std::istringstream lines(header);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        const size_t c1 = line.find(':');
        const size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(':', c1 + 1);
        require(c1 != std::string::npos && c2 != std::string::npos, ErrorKind::Format,
                "malformed checkpoint header line '" + line + "'");
        CheckpointEntry e;
        e.name = line.substr(0, c1);
        const std::string dtype = line.substr(c1 + 1, c2 - c1 - 1);
        if (dtype == "f32") e.dtype = Dtype::F32;
        else if (dtype == "f64") e.dtype = Dtype::F64;
        else fail(ErrorKind::Format, "unknown dtype '" + dtype + "' in checkpoint header");
        const std::string dims = line.substr(c2 + 1);
        size_t pos = 0;
        while (pos < dims.size()) {
            size_t end = dims.find('x', pos);
            if (end == std::string::npos) end = dims.size();
            size_t extent = 0;
            auto [ptr, ec] = std::from_chars(dims.data() + pos, dims.data() + end, extent);
            require(ec == std::errc() && ptr == dims.data() + end && extent > 0,
                    ErrorKind::Format, "bad extent in checkpoint header line '" + line + "'");
            e.shape.push_back(extent);
            pos = end + 1;
        }
        require(!e.shape.empty(), ErrorKind::Format,
                "missing shape in checkpoint header line '" + line + "'");
        require(names.insert(e.name).second, ErrorKind::Format,
                "duplicate checkpoint entry '" + e.name + "'");
        ckpt.entries_.push_back(std::move(e));
    }

    size_t offset = padded_to_8(16 + static_cast<size_t>(header_len));
    for (auto& e : ckpt.entries_) {
        const size_t nbytes = shape_numel(e.shape) * e.scalar_size();
        require(offset + nbytes <= bytes.size(), ErrorKind::Format,
                "truncated checkpoint payload for entry '" + e.name + "'");
        e.payload.assign(bytes.begin() + static_cast<ptrdiff_t>(offset),
                         bytes.begin() + static_cast<ptrdiff_t>(offset + nbytes));
        offset += nbytes;
    }
    require(offset == bytes.size(), ErrorKind::Format, "checkpoint has trailing bytes");
    return ckpt;
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    require(static_cast<bool>(file), ErrorKind::Io, "cannot open '" + path + "' for reading");
    std::vector<std::byte> bytes;
    file.seekg(0, std::ios::end);
    bytes.resize(static_cast<size_t>(file.tellg()));
    file.seekg(0, std::ios::beg);
    file.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(file), ErrorKind::Io, "short read from '" + path + "'");
    return deserialize(bytes);
}

std::string Checkpoint::describe() const {
    std::vector<const CheckpointEntry*> sorted;
    sorted.reserve(entries_.size());
    for (const auto& e : entries_) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(),
              [](const CheckpointEntry* a, const CheckpointEntry* b) { return a->name < b->name; });
    std::ostringstream out;
    for (const CheckpointEntry* e : sorted)
        out << e->name << ' ' << dtype_name(e->dtype) << ' ' << shape_token(e->shape) << ' '
            << e->payload.size() << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Model glue
// ---------------------------------------------------------------------------

Checkpoint checkpoint_from_model(const Model<float>& model, const TrainConfig& config,
                                 uint64_t seed) {
    Checkpoint ckpt;
    for (const auto& entry : model.params.entries()) ckpt.add(entry.name, entry.value);

    const std::string text = canonical_config_text(config);
    Tensor<float> encoded = Tensor<float>::zeros({text.size()});
    for (size_t i = 0; i < text.size(); ++i)
        encoded.data[i] = static_cast<float>(static_cast<unsigned char>(text[i]));
    ckpt.add(kMetaConfigEntry, encoded);
    ckpt.add(kMetaSeedEntry, Tensor<double>::scalar(static_cast<double>(seed)));
    return ckpt;
}

LoadedModel model_from_checkpoint(const Checkpoint& ckpt) {
    Tensor<float> encoded = ckpt.tensor_f32(kMetaConfigEntry);
    std::string text(encoded.numel(), '\0');
    for (size_t i = 0; i < encoded.numel(); ++i)
        text[i] = static_cast<char>(static_cast<unsigned char>(encoded.data[i]));

    LoadedModel out{Model<float>{}, parse_config(text),
                    static_cast<uint64_t>(ckpt.tensor_f64(kMetaSeedEntry).data[0])};
    out.model = build_model<float>(out.config.model, out.seed);
    for (auto& entry : out.model.params.entries()) {
        require(ckpt.contains(entry.name), ErrorKind::Format,
                "checkpoint is missing parameter '" + entry.name + "'");
        Tensor<float> value = ckpt.tensor_f32(entry.name);
        require(value.shape == entry.value.shape, ErrorKind::Format,
                "checkpoint entry '" + entry.name + "' has shape " + shape_str(value.shape) +
                    " but the model expects " + shape_str(entry.value.shape));
        entry.value = std::move(value);
    }
    return out;
}

}  // namespace analora
