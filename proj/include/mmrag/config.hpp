// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "mmrag/backends.hpp"
#include "mmrag/corpus.hpp"
#include "mmrag/reranker.hpp"
#include "mmrag/threshold.hpp"

namespace mmrag {

/// Either a mock name or an HTTP endpoint, never both.
///   embed:          mock "hash"
///   relevance:      mock "oracle" | "image_blind" | "adversarial"
///   generate:       mock "echo"
///   teacher_forced: mock "image_blind"
struct BackendSpec {
    std::string mock{};
    std::string endpoint{};
    double timeout_s = 30.0;
    int retries = 2;
    // Mock parameters.
    std::size_t dim = 64;
    double margin = 5.0;
};

enum class CalibrationPool { top_k, top_n };

struct PipelineConfig {
    int top_k = 20;
    int top_n = 2;
    Threshold threshold = Threshold::natural();
    TemplateKind template_kind = TemplateKind::caption_aware;
    int max_inflight = 8;
    int query_parallelism = 4;
    std::uint64_t seed = 0;
    // Largest tolerated fraction of failed queries in an eval run.
    double failure_cap = 0.0;
    CalibrationPool calibration_pool = CalibrationPool::top_k;

    BackendSpec embed{.mock = "hash"};
    BackendSpec relevance{.mock = "oracle"};
    BackendSpec generate{.mock = "echo"};
    BackendSpec teacher_forced{.mock = "image_blind"};

    /// Throws ValidationError unless 1 <= N <= K and the remaining fields are sane.
    void validate() const;
};

PipelineConfig pipeline_config_from_json(const json& obj);
json to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

struct Backends {
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<RelevanceScorer> relevance;
    std::shared_ptr<Generator> generator;
    std::shared_ptr<TeacherForcedScorer> teacher_forced;
};

/// Instantiates backends from the config. Gold-aware mocks (oracle,
/// adversarial, echo) read their answers from `qa`.
Backends make_backends(const PipelineConfig& config, const std::vector<QAExample>& qa,
                       const Corpus& corpus);

}  // namespace mmrag
