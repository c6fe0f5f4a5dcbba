// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

#include "mmrag/backends.hpp"
#include "mmrag/jsonl.hpp"

namespace mmrag {

struct HttpOptions {
    // e.g. "http://127.0.0.1:8080"
    std::string endpoint;
    std::chrono::milliseconds timeout{30000};
    int retries = 2;
    std::chrono::milliseconds backoff{200};
};

/// Requests issued by every HTTP backend in this process, attempts included.
std::uint64_t network_request_count();

/// JSON POST with retry and exponential backoff. Thread-safe; each call opens its
/// own connection.
class HttpTransport {
public:
    explicit HttpTransport(HttpOptions options);

    json post(const std::string& path, const json& body, const std::string& stage) const;

    const HttpOptions& options() const noexcept { return m_options; }

private:
    HttpOptions m_options;
};

class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(HttpOptions options) : m_transport(std::move(options)) {}
    std::vector<float> embed(EmbedKind kind, std::string_view payload) override;

private:
    HttpTransport m_transport;
};

/// POST /score {question, caption, image_ref, template} -> {logit_yes, logit_no}.
/// The server owns tokenisation of the literal "Yes" / "No" first tokens.
class HttpRelevanceScorer final : public RelevanceScorer {
public:
    explicit HttpRelevanceScorer(HttpOptions options) : m_transport(std::move(options)) {}
    LogitPair score(const ScoreRequest& request) override;

private:
    HttpTransport m_transport;
};

/// POST /teacher_forced. Distorted tensors travel inline as
/// {"shape": [...], "data_b64": <base64 of little-endian float32 block>}.
class HttpTeacherForcedScorer final : public TeacherForcedScorer {
public:
    explicit HttpTeacherForcedScorer(HttpOptions options) : m_transport(std::move(options)) {}
    TeacherForcedResponse score(const TeacherForcedRequest& request) override;

private:
    HttpTransport m_transport;
};

class HttpGenerator final : public Generator {
public:
    explicit HttpGenerator(HttpOptions options) : m_transport(std::move(options)) {}
    std::string generate(const GenerateRequest& request) override;

private:
    HttpTransport m_transport;
};

// Wire encodings, shared with tests that stand up a fake server.
json to_json(const ScoreRequest& request);
json to_json(const TeacherForcedRequest& request);
json to_json(const GenerateRequest& request);
json tensor_to_wire(const ImageTensor& tensor);
ImageTensor tensor_from_wire(const json& obj);

}  // namespace mmrag
