// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmrag/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "mmrag/error.hpp"

namespace mmrag {

namespace {

static_assert(sizeof(float) == 4);

void to_little_endian(char* bytes) {
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes, bytes + 4);
    }
}

}  // namespace

std::string encode_f32_le(std::span<const float> values) {
    std::string out(values.size() * 4, '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::memcpy(out.data() + 4 * i, &values[i], 4);
        to_little_endian(out.data() + 4 * i);
    }
    return out;
}

std::vector<float> decode_f32_le(std::string_view bytes) {
    if (bytes.size() % 4 != 0) {
        throw ValidationError("float32 block size " + std::to_string(bytes.size()) +
                              " is not a multiple of 4");
    }
    std::vector<float> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        char word[4];
        std::memcpy(word, bytes.data() + 4 * i, 4);
        to_little_endian(word);
        std::memcpy(&out[i], word, 4);
    }
    return out;
}

std::vector<float> read_f32_block(const std::filesystem::path& path, std::size_t expected_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() != expected_count * 4) {
        throw ValidationError(path.string() + ": expected " + std::to_string(expected_count) +
                              " float32 values, found " + std::to_string(bytes.size()) +
                              " bytes");
    }
    return decode_f32_le(bytes);
}

void write_f32_block(const std::filesystem::path& path, std::span<const float> values) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    const auto bytes = encode_f32_le(values);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".json";
    return p;
}

}  // namespace mmrag
