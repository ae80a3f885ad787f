// Copyright (C) 2026 analora authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace analora {

enum class ErrorKind {
    InvalidArgument,  // bad call: shape mismatch, null handle, bad enum
    Validation,       // domain rule violated: steps=0, overlapping split, unknown key
    Io,               // file system failure
    Format,           // malformed checkpoint/config/PGM payload
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

}  // namespace analora
