// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmrag/reranker.hpp"

#include <algorithm>
#include <cmath>

#include "mmrag/parallel.hpp"

namespace mmrag {

std::string_view to_string(TemplateKind kind) {
    return kind == TemplateKind::caption_aware ? "caption_aware" : "caption_agnostic";
}

TemplateKind parse_template_kind(std::string_view text) {
    if (text == "caption_aware") return TemplateKind::caption_aware;
    if (text == "caption_agnostic") return TemplateKind::caption_agnostic;
    throw ValidationError("unknown template kind '" + std::string(text) + "'");
}

RankingPrompt render_prompt(TemplateKind kind, std::string_view caption, std::string_view question,
                            std::string image_ref) {
    if (question.empty()) {
        throw ValidationError("ranking prompt needs a non-empty question");
    }
    std::string text(kImagePlaceholder);
    if (kind == TemplateKind::caption_aware) {
        if (caption.empty()) {
            throw ValidationError(
                "caption_aware prompt needs a caption; use caption_agnostic for caption-less images");
        }
        text += " Image Caption:";
        text += caption;
        text += " Question:";
        text += question;
        text += " Based on the image and its caption, is the image relevant to the question?"
                " Answer \"Yes\" or \"No\".";
    } else {
        text += " Question:";
        text += question;
        text += " Is this image relevant to the question? Answer 'Yes' or 'No'.";
    }
    return {kind, std::move(text), std::move(image_ref)};
}

double relevance_probability(const LogitPair& logits) {
    const double yes = logits.logit_yes;
    const double no = logits.logit_no;
    if (!std::isfinite(yes) || !std::isfinite(no)) {
        throw ValidationError("relevance logits must be finite");
    }
    const double top = std::max(yes, no);
    const double e_yes = std::exp(yes - top);
    const double e_no = std::exp(no - top);
    return e_yes / (e_yes + e_no);
}

RerankedSet rerank(const RetrievalResult& candidates, RelevanceScorer& scorer,
                   const Corpus& corpus, std::string_view question, const RerankOptions& options) {
    if (options.top_n < 1) {
        throw ValidationError("rerank depth N must be at least 1, got " +
                              std::to_string(options.top_n));
    }
    const auto& items = candidates.candidates;
    std::vector<RerankedCandidate> scored(items.size());
    // Resolve records up front so a dangling id fails before any backend call.
    std::vector<const ImageRecord*> records;
    records.reserve(items.size());
    for (const auto& c : items) {
        records.push_back(&corpus.at(c.record_id));
    }

    bounded_parallel_for(
        items.size(), static_cast<std::size_t>(std::max(1, options.max_inflight)),
        [&](std::size_t i) {
            const auto& record = *records[i];
            ScoreRequest request{std::string(question), record.caption, record.image_ref,
                                 options.template_kind};
            if (options.template_kind == TemplateKind::caption_aware && record.caption.empty()) {
                throw CandidateScoringError(record.id,
                                            "caption_aware scoring needs a caption");
            }
            try {
                const auto logits = scorer.score(request);
                scored[i] = {record.id, relevance_probability(logits), items[i].score};
            } catch (const CandidateScoringError&) {
                throw;
            } catch (const std::exception& e) {
                throw CandidateScoringError(record.id, e.what());
            }
        });

    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return ranks_before(a.relevance_p, a.record_id, b.relevance_p, b.record_id);
    });
    if (scored.size() > static_cast<std::size_t>(options.top_n)) {
        scored.resize(static_cast<std::size_t>(options.top_n));
    }
    return {candidates.query_id, std::move(scored), std::nullopt};
}

RerankedSet apply_threshold(RerankedSet set, const Threshold& threshold) {
    if (!(threshold.eta >= 0.0 && threshold.eta <= 1.0)) {
        throw ValidationError("threshold eta must lie in [0, 1]");
    }
    std::erase_if(set.candidates,
                  [&](const RerankedCandidate& c) { return c.relevance_p < threshold.eta; });
    set.threshold_applied = threshold;
    return set;
}

RetrievalResult as_retrieval_result(const RerankedSet& set) {
    RetrievalResult r{set.query_id, {}};
    r.candidates.reserve(set.candidates.size());
    for (const auto& c : set.candidates) {
        r.candidates.push_back({c.record_id, c.retrieval_score});
    }
    return r;
}

}  // namespace mmrag
