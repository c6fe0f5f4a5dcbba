// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mmrag/backends.hpp"
#include "mmrag/corpus.hpp"

namespace mmrag {

/// Deterministic pseudo-embedding: unit-norm Gaussian vector seeded by an
/// FNV-1a hash of (kind, payload, seed).
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 64, std::uint64_t seed = 0);
    std::vector<float> embed(EmbedKind kind, std::string_view payload) override;
    std::size_t dim() const noexcept { return m_dim; }

private:
    std::size_t m_dim;
    std::uint64_t m_seed;
};

/// What the test doubles know about each question: its gold image refs and answer.
class GoldIndex {
public:
    struct Entry {
        std::set<std::string> gold_refs;
        std::string answer;
    };

    GoldIndex() = default;
    GoldIndex(const std::vector<QAExample>& qa, const Corpus& corpus);

    const Entry* find(std::string_view question) const;

private:
    std::map<std::string, Entry, std::less<>> m_entries;
};

/// logit_yes = +margin for gold images of the question, -margin otherwise; logit_no = 0.
class OracleScorer final : public RelevanceScorer {
public:
    explicit OracleScorer(GoldIndex gold, double margin = 5.0)
        : m_gold(std::move(gold)), m_margin(margin) {}
    LogitPair score(const ScoreRequest& request) override;

private:
    GoldIndex m_gold;
    double m_margin;
};

/// The oracle with its labels flipped.
class AdversarialScorer final : public RelevanceScorer {
public:
    explicit AdversarialScorer(GoldIndex gold, double margin = 5.0)
        : m_gold(std::move(gold)), m_margin(margin) {}
    LogitPair score(const ScoreRequest& request) override;

private:
    GoldIndex m_gold;
    double m_margin;
};

/// Same logits for every input, so every candidate gets the same relevance.
class ImageBlindScorer final : public RelevanceScorer {
public:
    explicit ImageBlindScorer(LogitPair logits = {}) : m_logits(logits) {}
    LogitPair score(const ScoreRequest&) override { return m_logits; }

private:
    LogitPair m_logits;
};

/// Returns the question's first gold answer iff every gold image was fed, else `wrong`.
class EchoGenerator final : public Generator {
public:
    explicit EchoGenerator(GoldIndex gold, std::string wrong = "unknown")
        : m_gold(std::move(gold)), m_wrong(std::move(wrong)) {}
    std::string generate(const GenerateRequest& request) override;

private:
    GoldIndex m_gold;
    std::string m_wrong;
};

/// Teacher-forced scorer that ignores the images: the clean and distorted
/// streams are identical functions of the gold tokens.
class ImageBlindTeacherScorer final : public TeacherForcedScorer {
public:
    TeacherForcedResponse score(const TeacherForcedRequest& request) override;
};

/// Wraps another scorer and counts calls.
class CountingScorer final : public RelevanceScorer {
public:
    explicit CountingScorer(RelevanceScorer& inner) : m_inner(inner) {}
    LogitPair score(const ScoreRequest& request) override {
        ++m_calls;
        return m_inner.score(request);
    }
    std::size_t calls() const noexcept { return m_calls.load(); }

private:
    RelevanceScorer& m_inner;
    std::atomic<std::size_t> m_calls{0};
};

std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace mmrag
