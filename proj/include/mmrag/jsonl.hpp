// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace mmrag {

using json = nlohmann::json;

/// Calls `fn(object, line_number)` for every non-blank line of a JSONL file.
/// Line numbers are 1-based. Parse failures raise ValidationError citing the line.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& fn);

/// Writes one compact JSON object per line. Overwrites `path`.
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);

void write_json(const std::filesystem::path& path, const json& value);
json read_json(const std::filesystem::path& path);

// Typed field access that reports the missing or mistyped field by name.
std::string require_string(const json& obj, const char* field);
std::vector<std::string> require_string_list(const json& obj, const char* field);

}  // namespace mmrag
