// Copyright (C) 2026 analora authors
// SPDX-License-Identifier: Apache-2.0

#include "analora/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace analora {

const char* routing_mode_name(RoutingMode mode) {
    return mode == RoutingMode::Softmax ? "softmax" : "tanh";
}

const char* encoder_layout_name(EncoderLayout layout) {
    return layout == EncoderLayout::SeparateConcat ? "separate_concat" : "composite";
}

TrainConfig desk_profile() { return TrainConfig{}; }

TrainConfig paper_profile() {
    TrainConfig c;
    c.profile = "paper";
    c.model.n_basis = 32;
    c.model.rank = 4;
    c.model.alpha = 4.0;
    c.model.key_dim = 128;
    c.model.routing_temperature = std::sqrt(128.0);
    c.batch_size = 6;
    c.phase2_steps = 10000;
    return c;
}

namespace {

[[noreturn]] void line_fail(size_t line, const std::string& message) {
    fail(ErrorKind::Validation, "config line " + std::to_string(line) + ": " + message);
}

struct RawValue {
    enum class Kind { Integer, Float, String, Boolean, List } kind;
    long long integer = 0;
    double number = 0.0;
    bool boolean = false;
    std::string text;
    std::vector<RawValue> items;
    size_t line = 0;
};

struct RawLine {
    std::string section;  // empty outside any [section]
    std::string key;
    RawValue value;
    size_t line = 0;
};

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Strips a '#' comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

RawValue parse_value(const std::string& text, size_t line);

RawValue parse_scalar(const std::string& text, size_t line) {
    RawValue v;
    v.line = line;
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
        v.kind = RawValue::Kind::String;
        v.text = text.substr(1, text.size() - 2);
        return v;
    }
    if (text == "true" || text == "false") {
        v.kind = RawValue::Kind::Boolean;
        v.boolean = text == "true";
        return v;
    }
    // Integer first, then float.
    {
        long long out = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
        if (ec == std::errc() && ptr == text.data() + text.size()) {
            v.kind = RawValue::Kind::Integer;
            v.integer = out;
            return v;
        }
    }
    {
        double out = 0.0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
        if (ec == std::errc() && ptr == text.data() + text.size()) {
            v.kind = RawValue::Kind::Float;
            v.number = out;
            return v;
        }
    }
    line_fail(line, "cannot parse value '" + text + "'");
}

RawValue parse_value(const std::string& text, size_t line) {
    if (!text.empty() && text.front() == '[') {
        if (text.back() != ']') line_fail(line, "unterminated list");
        RawValue v;
        v.kind = RawValue::Kind::List;
        v.line = line;
        std::string body = text.substr(1, text.size() - 2);
        size_t pos = 0;
        while (pos < body.size()) {
            bool quoted = false;
            size_t end = pos;
            while (end < body.size() && (quoted || body[end] != ',')) {
                if (body[end] == '"') quoted = !quoted;
                ++end;
            }
            std::string item = trim(body.substr(pos, end - pos));
            if (!item.empty()) v.items.push_back(parse_scalar(item, line));
            pos = end + 1;
        }
        return v;
    }
    return parse_scalar(text, line);
}

std::vector<RawLine> tokenize(const std::string& text) {
    std::vector<RawLine> out;
    std::istringstream stream(text);
    std::string line;
    std::string section;
    size_t lineno = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') line_fail(lineno, "unterminated section header");
            section = trim(body.substr(1, body.size() - 2));
            if (section.empty()) line_fail(lineno, "empty section name");
            continue;
        }
        size_t eq = body.find('=');
        if (eq == std::string::npos) line_fail(lineno, "expected 'key = value'");
        std::string key = trim(body.substr(0, eq));
        std::string value = trim(body.substr(eq + 1));
        if (key.empty()) line_fail(lineno, "missing key");
        if (value.empty()) line_fail(lineno, "missing value for '" + key + "'");
        RawLine rl;
        rl.section = section;
        rl.key = key;
        rl.value = parse_value(value, lineno);
        rl.line = lineno;
        out.push_back(std::move(rl));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Key application
// ---------------------------------------------------------------------------

size_t as_size(const RawValue& v, const std::string& key) {
    if (v.kind != RawValue::Kind::Integer || v.integer < 0)
        line_fail(v.line, "key '" + key + "' expects a non-negative integer");
    return static_cast<size_t>(v.integer);
}

double as_double(const RawValue& v, const std::string& key) {
    if (v.kind == RawValue::Kind::Float) return v.number;
    if (v.kind == RawValue::Kind::Integer) return static_cast<double>(v.integer);
    line_fail(v.line, "key '" + key + "' expects a number");
}

bool as_bool(const RawValue& v, const std::string& key) {
    if (v.kind != RawValue::Kind::Boolean)
        line_fail(v.line, "key '" + key + "' expects true or false");
    return v.boolean;
}

std::string as_string(const RawValue& v, const std::string& key) {
    if (v.kind != RawValue::Kind::String)
        line_fail(v.line, "key '" + key + "' expects a quoted string");
    return v.text;
}

std::vector<size_t> as_size_list(const RawValue& v, const std::string& key) {
    if (v.kind != RawValue::Kind::List)
        line_fail(v.line, "key '" + key + "' expects a bracketed list");
    std::vector<size_t> out;
    for (const auto& item : v.items) out.push_back(as_size(item, key));
    return out;
}

std::vector<Family> as_family_list(const RawValue& v, const std::string& key) {
    if (v.kind != RawValue::Kind::List)
        line_fail(v.line, "key '" + key + "' expects a bracketed list");
    std::vector<Family> out;
    for (const auto& item : v.items) {
        if (item.kind != RawValue::Kind::String)
            line_fail(v.line, "key '" + key + "' expects quoted family names");
        try {
            out.push_back(family_from_name(item.text));
        } catch (const Error& e) {
            line_fail(v.line, e.what());
        }
    }
    return out;
}

struct PendingOverrides {
    std::optional<double> alpha;
    std::optional<double> routing_temperature;
};

void apply_key(TrainConfig& c, PendingOverrides& pending, const std::string& key,
               const RawValue& v) {
    if (key == "profile") {
        line_fail(v.line, "'profile' must appear before any other key");
    } else if (key == "seed") {
        c.seed = static_cast<uint64_t>(as_size(v, key));
    } else if (key == "n_basis") {
        c.model.n_basis = as_size(v, key);
    } else if (key == "rank") {
        c.model.rank = as_size(v, key);
    } else if (key == "key_dim") {
        c.model.key_dim = as_size(v, key);
    } else if (key == "alpha") {
        pending.alpha = as_double(v, key);
    } else if (key == "routing_temperature") {
        pending.routing_temperature = as_double(v, key);
    } else if (key == "mode") {
        const std::string s = as_string(v, key);
        if (s == "softmax") c.model.mode = RoutingMode::Softmax;
        else if (s == "tanh") c.model.mode = RoutingMode::Tanh;
        else line_fail(v.line, "mode must be \"softmax\" or \"tanh\"");
    } else if (key == "layout") {
        const std::string s = as_string(v, key);
        if (s == "separate_concat") c.model.layout = EncoderLayout::SeparateConcat;
        else if (s == "composite") c.model.layout = EncoderLayout::Composite;
        else line_fail(v.line, "layout must be \"separate_concat\" or \"composite\"");
    } else if (key == "proj_bias") {
        c.model.proj_bias = as_bool(v, key);
    } else if (key == "hidden_width") {
        c.model.hidden_width = as_size(v, key);
    } else if (key == "hidden_layers") {
        c.model.hidden_layers = as_size(v, key);
    } else if (key == "time_embed_dim") {
        c.model.time_embed_dim = as_size(v, key);
    } else if (key == "hint_embed_dim") {
        c.model.hint_embed_dim = as_size(v, key);
    } else if (key == "target_layers") {
        c.model.target_layers = as_size_list(v, key);
    } else if (key == "encoder_hidden_dim") {
        c.model.encoder_hidden_dim = as_size(v, key);
    } else if (key == "encoder_feature_dim") {
        c.model.encoder_feature_dim = as_size(v, key);
    } else if (key == "sampler_steps") {
        c.model.sampler_steps = as_size(v, key);
    } else if (key == "seen_families") {
        c.split.seen_families = as_family_list(v, key);
    } else if (key == "unseen_families") {
        c.split.unseen_families = as_family_list(v, key);
    } else if (key == "phase1_steps") {
        c.phase1_steps = as_size(v, key);
    } else if (key == "phase2_steps") {
        c.phase2_steps = as_size(v, key);
    } else if (key == "batch_size") {
        c.batch_size = as_size(v, key);
    } else if (key == "lr") {
        c.lr = as_double(v, key);
    } else if (key == "beta1") {
        c.beta1 = as_double(v, key);
    } else if (key == "beta2") {
        c.beta2 = as_double(v, key);
    } else if (key == "weight_decay") {
        c.weight_decay = as_double(v, key);
    } else if (key == "eps") {
        c.eps = as_double(v, key);
    } else if (key == "grad_clip") {
        c.grad_clip = as_double(v, key);
    } else if (key == "eval_triplets_per_task") {
        c.eval_triplets_per_task = as_size(v, key);
    } else {
        line_fail(v.line, "unknown key '" + key + "'");
    }
}

void finalize(TrainConfig& c, const PendingOverrides& pending, size_t err_line) {
    if (pending.alpha)
        c.model.alpha = *pending.alpha;
    else
        c.model.alpha = static_cast<double>(c.model.rank);
    if (pending.routing_temperature)
        c.model.routing_temperature = *pending.routing_temperature;
    else
        c.model.routing_temperature = std::sqrt(static_cast<double>(c.model.key_dim));

    auto check = [&](bool ok, const std::string& message) {
        if (!ok) {
            if (err_line) line_fail(err_line, message);
            fail(ErrorKind::Validation, "config: " + message);
        }
    };
    check(c.model.n_basis >= 1, "n_basis must be at least 1");
    check(c.model.rank >= 1, "rank must be at least 1");
    check(c.model.key_dim >= 1, "key_dim must be at least 1");
    check(c.model.hidden_layers >= 1, "hidden_layers must be at least 1");
    check(c.model.hidden_width >= 1, "hidden_width must be at least 1");
    check(c.model.time_embed_dim % 2 == 0, "time_embed_dim must be even");
    check(c.model.routing_temperature > 0.0, "routing_temperature must be positive");
    check(c.batch_size >= 1, "batch_size must be at least 1");
    check(c.lr > 0.0, "lr must be positive");
    check(c.beta1 >= 0.0 && c.beta1 < 1.0, "beta1 must lie in [0, 1)");
    check(c.beta2 >= 0.0 && c.beta2 < 1.0, "beta2 must lie in [0, 1)");
    check(c.weight_decay >= 0.0, "weight_decay must be non-negative");
    check(c.eps > 0.0, "eps must be positive");
    check(c.grad_clip >= 0.0, "grad_clip must be non-negative");
    for (size_t layer : c.model.target_layers)
        check(layer < c.model.hidden_layers,
              "target layer " + std::to_string(layer) + " does not exist (hidden_layers = " +
                  std::to_string(c.model.hidden_layers) + ")");
    check(c.model.rank <= c.model.hidden_width,
          "rank must not exceed the smaller adapted matrix extent");
    split_tasks(c.split);  // surfaces overlapping/duplicate family errors
}

TrainConfig build_from_lines(const std::vector<RawLine>& lines) {
    // The profile key, when present, must come first and selects the base.
    TrainConfig config = desk_profile();
    size_t start = 0;
    if (!lines.empty() && lines[0].key == "profile") {
        const std::string name = as_string(lines[0].value, "profile");
        if (name == "desk") config = desk_profile();
        else if (name == "paper") config = paper_profile();
        else line_fail(lines[0].line, "profile must be \"desk\" or \"paper\"");
        start = 1;
    }
    PendingOverrides pending;
    size_t last_line = 0;
    for (size_t i = start; i < lines.size(); ++i) {
        apply_key(config, pending, lines[i].key, lines[i].value);
        last_line = lines[i].line;
    }
    finalize(config, pending, last_line);
    return config;
}

}  // namespace

TrainConfig parse_config(const std::string& text) { return build_from_lines(tokenize(text)); }

TrainConfig parse_config_file(const std::string& path) {
    std::ifstream file(path);
    require(static_cast<bool>(file), ErrorKind::Io, "cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << file.rdbuf();
    return parse_config(buf.str());
}

namespace {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    std::string s(buf, ptr);
    // Keep floats recognizable as floats in the grammar.
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

std::string format_family_list(const std::vector<Family>& families) {
    std::string out = "[";
    for (size_t i = 0; i < families.size(); ++i) {
        if (i) out += ", ";
        out += '"';
        out += family_name(families[i]);
        out += '"';
    }
    return out + "]";
}

}  // namespace

std::string canonical_config_text(const TrainConfig& c) {
    std::ostringstream out;
    out << "profile = \"" << c.profile << "\"\n";
    out << "seed = " << c.seed << "\n";
    out << "\n[model]\n";
    out << "hidden_width = " << c.model.hidden_width << "\n";
    out << "hidden_layers = " << c.model.hidden_layers << "\n";
    out << "time_embed_dim = " << c.model.time_embed_dim << "\n";
    out << "hint_embed_dim = " << c.model.hint_embed_dim << "\n";
    out << "target_layers = [";
    for (size_t i = 0; i < c.model.target_layers.size(); ++i)
        out << (i ? ", " : "") << c.model.target_layers[i];
    out << "]\n";
    out << "sampler_steps = " << c.model.sampler_steps << "\n";
    out << "\n[basis]\n";
    out << "n_basis = " << c.model.n_basis << "\n";
    out << "rank = " << c.model.rank << "\n";
    out << "key_dim = " << c.model.key_dim << "\n";
    out << "alpha = " << format_double(c.model.alpha) << "\n";
    out << "routing_temperature = " << format_double(c.model.routing_temperature) << "\n";
    out << "mode = \"" << routing_mode_name(c.model.mode) << "\"\n";
    out << "layout = \"" << encoder_layout_name(c.model.layout) << "\"\n";
    out << "proj_bias = " << (c.model.proj_bias ? "true" : "false") << "\n";
    out << "encoder_hidden_dim = " << c.model.encoder_hidden_dim << "\n";
    out << "encoder_feature_dim = " << c.model.encoder_feature_dim << "\n";
    out << "\n[data]\n";
    out << "seen_families = " << format_family_list(c.split.seen_families) << "\n";
    if (c.split.unseen_families)
        out << "unseen_families = " << format_family_list(*c.split.unseen_families) << "\n";
    out << "eval_triplets_per_task = " << c.eval_triplets_per_task << "\n";
    out << "\n[train]\n";
    out << "phase1_steps = " << c.phase1_steps << "\n";
    out << "phase2_steps = " << c.phase2_steps << "\n";
    out << "batch_size = " << c.batch_size << "\n";
    out << "lr = " << format_double(c.lr) << "\n";
    out << "beta1 = " << format_double(c.beta1) << "\n";
    out << "beta2 = " << format_double(c.beta2) << "\n";
    out << "weight_decay = " << format_double(c.weight_decay) << "\n";
    out << "eps = " << format_double(c.eps) << "\n";
    out << "grad_clip = " << format_double(c.grad_clip) << "\n";
    return out.str();
}

AblateGrid parse_grid(const std::string& text) {
    const std::vector<RawLine> lines = tokenize(text);
    static const std::set<std::string> kAxisKeys = {"n_basis", "rank", "mode", "layout"};

    std::vector<RawLine> shared;
    std::vector<std::pair<std::string, std::vector<RawLine>>> sections;
    for (const RawLine& line : lines) {
        if (line.section.empty()) {
            shared.push_back(line);
        } else {
            if (!kAxisKeys.count(line.key))
                line_fail(line.line,
                          "grid variants may only override n_basis, rank, mode or layout "
                          "(got '" + line.key + "'); shared keys belong before the first "
                          "section so all variants use one corpus");
            if (sections.empty() || sections.back().first != line.section) {
                for (const auto& [name, _] : sections)
                    if (name == line.section)
                        line_fail(line.line, "duplicate variant section '" + line.section + "'");
                sections.emplace_back(line.section, std::vector<RawLine>{});
            }
            sections.back().second.push_back(line);
        }
    }
    require(!sections.empty(), ErrorKind::Validation, "grid: no variant sections found");

    AblateGrid grid;
    grid.base = build_from_lines(shared);
    for (auto& [name, overrides] : sections) {
        std::vector<RawLine> merged = shared;
        merged.insert(merged.end(), overrides.begin(), overrides.end());
        grid.variants.emplace_back(name, build_from_lines(merged));
    }
    return grid;
}

AblateGrid parse_grid_file(const std::string& path) {
    std::ifstream file(path);
    require(static_cast<bool>(file), ErrorKind::Io, "cannot open grid '" + path + "'");
    std::ostringstream buf;
    buf << file.rdbuf();
    return parse_grid(buf.str());
}

}  // namespace analora
