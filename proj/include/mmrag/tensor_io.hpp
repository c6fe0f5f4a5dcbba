// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mmrag {

/// Raw little-endian float32 blocks. Both the `.emb` embedding matrix and the
/// distortion tensors use this layout with a JSON sidecar at `<path>.json`.
std::vector<float> read_f32_block(const std::filesystem::path& path, std::size_t expected_count);
void write_f32_block(const std::filesystem::path& path, std::span<const float> values);

std::string encode_f32_le(std::span<const float> values);
std::vector<float> decode_f32_le(std::string_view bytes);

/// `foo.emb` -> `foo.emb.json`
std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace mmrag
