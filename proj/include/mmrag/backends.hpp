// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mmrag/noise.hpp"
#include "mmrag/reranker.hpp"

namespace mmrag {

enum class EmbedKind { text, image };

std::string_view to_string(EmbedKind kind);

/// Dual-encoder front end: text queries and images into the shared space.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<float> embed(EmbedKind kind, std::string_view payload) = 0;
};

struct GenerateRequest {
    std::string question;
    std::vector<std::string> image_refs;
    bool greedy = true;
};

class Generator {
public:
    virtual ~Generator() = default;
    virtual std::string generate(const GenerateRequest& request) = 0;
};

/// Multi-image QA instruction: one placeholder per image in the given order,
/// then the question. With no images this is just the question.
std::string render_generation_prompt(std::size_t image_count, std::string_view question);

}  // namespace mmrag
