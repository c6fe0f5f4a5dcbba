// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmrag/corpus.hpp"
#include "mmrag/error.hpp"
#include "mmrag/memory_index.hpp"
#include "mmrag/threshold.hpp"

namespace mmrag {

inline constexpr std::string_view kImagePlaceholder = "<image>";

enum class TemplateKind { caption_aware, caption_agnostic };

std::string_view to_string(TemplateKind kind);
TemplateKind parse_template_kind(std::string_view text);

struct RankingPrompt {
    TemplateKind kind = TemplateKind::caption_aware;
    std::string text;
    std::string image_ref;
};

/// Renders the single-image Yes/No ranking instruction.
///
/// caption_aware:
///   <image> Image Caption:{caption} Question:{question} Based on the image and its
///   caption, is the image relevant to the question? Answer "Yes" or "No".
/// caption_agnostic:
///   <image> Question:{question} Is this image relevant to the question? Answer 'Yes' or 'No'.
///
/// An empty caption with caption_aware is an error; callers choose the
/// caption_agnostic template explicitly instead.
RankingPrompt render_prompt(TemplateKind kind, std::string_view caption, std::string_view question,
                            std::string image_ref = {});

/// First-token logits for the literal tokens "Yes" and "No".
struct LogitPair {
    double logit_yes = 0.0;
    double logit_no = 0.0;
};

/// exp(yes) / (exp(yes) + exp(no)), evaluated after subtracting the larger logit.
double relevance_probability(const LogitPair& logits);

struct ScoreRequest {
    std::string question;
    std::string caption;
    std::string image_ref;
    TemplateKind template_kind = TemplateKind::caption_aware;
};

/// Pointwise relevance model. Implementations must tolerate concurrent calls.
class RelevanceScorer {
public:
    virtual ~RelevanceScorer() = default;
    virtual LogitPair score(const ScoreRequest& request) = 0;
};

/// Raised when the scorer fails on one candidate; the whole query fails with it.
class CandidateScoringError : public BackendError {
public:
    CandidateScoringError(std::string record_id, const std::string& message)
        : BackendError("rerank", "candidate '" + record_id + "': " + message),
          m_record_id(std::move(record_id)) {}

    const std::string& record_id() const noexcept { return m_record_id; }

private:
    std::string m_record_id;
};

struct RerankedCandidate {
    std::string record_id;
    double relevance_p = 0.0;
    // First-stage inner product, kept for provenance only; it plays no part in ordering.
    double retrieval_score = 0.0;
};

struct RerankedSet {
    std::string query_id;
    std::vector<RerankedCandidate> candidates;
    std::optional<Threshold> threshold_applied;
};

struct RerankOptions {
    int top_n = 2;
    TemplateKind template_kind = TemplateKind::caption_aware;
    int max_inflight = 8;
};

/// Scores every retrieved candidate once, sorts by relevance (ties: ascending id)
/// and keeps the best `top_n`. Scorer calls run with bounded concurrency; the
/// output does not depend on completion order.
RerankedSet rerank(const RetrievalResult& candidates, RelevanceScorer& scorer,
                   const Corpus& corpus, std::string_view question, const RerankOptions& options);

/// Drops candidates with relevance_p < eta and records the threshold used.
RerankedSet apply_threshold(RerankedSet set, const Threshold& threshold);

/// Turns a reranked set back into a retrieval list (score = retrieval_score).
RetrievalResult as_retrieval_result(const RerankedSet& set);

}  // namespace mmrag
