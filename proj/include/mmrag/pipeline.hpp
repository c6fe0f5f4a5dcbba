// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "mmrag/config.hpp"
#include "mmrag/evaluation.hpp"
#include "mmrag/memory_index.hpp"
#include "mmrag/reranker.hpp"
#include "mmrag/threshold.hpp"

namespace mmrag {

/// A query that failed at one pipeline stage.
class QueryError : public BackendError {
public:
    QueryError(const std::string& stage, std::string qid, const std::string& message)
        : BackendError(stage, "query '" + qid + "': " + message), m_qid(std::move(qid)) {}

    const std::string& qid() const noexcept { return m_qid; }

private:
    std::string m_qid;
};

struct PipelineTrace {
    std::string qid;
    std::string question;
    RetrievalResult retrieved;
    // Top-N before thresholding.
    RerankedSet reranked;
    // Survivors of the threshold, in reranked order. May be empty.
    std::vector<std::string> images_fed;
    std::string answer;
};

json to_json(const PipelineTrace& trace);

struct QueryFailure {
    std::string qid;
    std::string stage;
    std::string message;
};

struct EvalRun {
    EvalReport report;
    // In QA order; failed queries keep their slot with empty contents.
    std::vector<PipelineTrace> traces;
    std::vector<QueryFailure> failures;
};

/// retrieve -> rerank -> threshold -> generate over an immutable memory and corpus.
/// run_query is safe to call from several threads.
class Pipeline {
public:
    Pipeline(PipelineConfig config, const Memory& memory, const Corpus& corpus, Backends backends);

    PipelineTrace run_query(const std::string& qid, const std::string& question);

    /// Runs every query (bounded parallelism across queries) and scores the run.
    /// Throws if the share of failed queries exceeds config.failure_cap.
    EvalRun run_eval(const std::vector<QAExample>& qa);

    /// Scored recalls for threshold calibration: every candidate of the configured
    /// pool (top-K or top-N) labelled by gold membership.
    std::vector<CalibrationSample> collect_calibration_samples(const std::vector<QAExample>& qa);

    const PipelineConfig& config() const noexcept { return m_config; }
    std::size_t embed_calls() const;

private:
    std::vector<float> embed_question(const std::string& qid, const std::string& question);
    RerankedSet rerank_query(const std::string& qid, const std::string& question,
                             const RetrievalResult& retrieved, int depth);

    PipelineConfig m_config;
    const Memory& m_memory;
    const Corpus& m_corpus;
    Backends m_backends;

    mutable std::mutex m_cache_mutex;
    std::map<std::string, std::vector<float>> m_query_cache;
    std::size_t m_embed_calls = 0;
};

/// Evaluates finished traces against their QA examples (same order).
/// Rows "Single." / "Multi." split queries by their number of gold images.
EvalReport score_traces(const std::vector<PipelineTrace>& traces,
                        const std::vector<QAExample>& qa, const PipelineConfig& config,
                        std::size_t failures = 0);

/// Key entities for a QA example: its `key_entities` extra field when present,
/// otherwise the first answer.
std::vector<std::string> key_entities(const QAExample& example);

}  // namespace mmrag
