// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mmrag {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem or stream failure; the message always names the path.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed input data (schema, invariants, references).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A backend call failed. Carries the pipeline stage that issued it.
class BackendError : public Error {
public:
    BackendError(std::string stage, const std::string& message)
        : Error(stage + ": " + message), m_stage(std::move(stage)) {}

    const std::string& stage() const noexcept { return m_stage; }

private:
    std::string m_stage;
};

}  // namespace mmrag
