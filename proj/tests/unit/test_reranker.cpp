// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "mmrag/mock_backends.hpp"
#include "mmrag/reranker.hpp"

using namespace mmrag;

namespace {

Corpus small_corpus() {
    Corpus c;
    for (const char* id : {"a", "b", "c", "d", "e"}) {
        c.insert({id, std::string("caption ") + id, std::string("ref/") + id, Split::val,
                  json::object()});
    }
    return c;
}

RetrievalResult retrieved(std::initializer_list<const char*> ids) {
    RetrievalResult r{"q", {}};
    double score = 10.0;
    for (const char* id : ids) r.candidates.push_back({id, score--});
    return r;
}

std::vector<std::string> ids(const RerankedSet& s) {
    std::vector<std::string> out;
    for (const auto& c : s.candidates) out.push_back(c.record_id);
    return out;
}

// logit_yes = +1 for ids in `gold`, -1 otherwise; logit_no = 0.
class GoldByRef final : public RelevanceScorer {
public:
    explicit GoldByRef(std::set<std::string> refs) : m_refs(std::move(refs)) {}
    LogitPair score(const ScoreRequest& r) override {
        return {m_refs.contains(r.image_ref) ? 1.0 : -1.0, 0.0};
    }

private:
    std::set<std::string> m_refs;
};

class FailingOn final : public RelevanceScorer {
public:
    explicit FailingOn(std::string ref) : m_ref(std::move(ref)) {}
    LogitPair score(const ScoreRequest& r) override {
        if (r.image_ref == m_ref) throw std::runtime_error("backend exploded");
        return {0.0, 0.0};
    }

private:
    std::string m_ref;
};

RerankedSet with_p(std::initializer_list<double> ps) {
    RerankedSet s{"q", {}, std::nullopt};
    int i = 0;
    for (double p : ps) s.candidates.push_back({"id" + std::to_string(i++), p, 0.0});
    return s;
}

}  // namespace

TEST_CASE("render_prompt produces the exact instruction strings") {
    const auto aware = render_prompt(TemplateKind::caption_aware, "Eiffel Tower at night",
                                     "What color is the tower?", "img.jpg");
    CHECK(aware.text ==
          "<image> Image Caption:Eiffel Tower at night Question:What color is the tower? "
          "Based on the image and its caption, is the image relevant to the question? "
          "Answer \"Yes\" or \"No\".");
    CHECK(aware.image_ref == "img.jpg");

    const auto agnostic = render_prompt(TemplateKind::caption_agnostic, "", "Is it tall?");
    CHECK(agnostic.text ==
          "<image> Question:Is it tall? Is this image relevant to the question? Answer 'Yes' or "
          "'No'.");

    CHECK_THROWS_AS(render_prompt(TemplateKind::caption_aware, "", "q"), ValidationError);
    CHECK_THROWS_AS(render_prompt(TemplateKind::caption_agnostic, "c", ""), ValidationError);
}

TEST_CASE("relevance_probability values") {
    CHECK(relevance_probability({0.0, 0.0}) == 0.5);
    // 1 / (1 + e^-2) from a 40-digit arbitrary-precision evaluation.
    CHECK(relevance_probability({2.0, 0.0}) == doctest::Approx(0.8807970779778824).epsilon(1e-15));
    CHECK(relevance_probability({1000.0, -1000.0}) == 1.0);
    CHECK(relevance_probability({-745.0, 745.0}) >= 0.0);
    CHECK_THROWS_AS(relevance_probability({std::nan(""), 0.0}), ValidationError);
    CHECK_THROWS_AS(relevance_probability({0.0, INFINITY}), ValidationError);
}

TEST_CASE("property: shift invariance, complementarity, monotonicity") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> logit(-20.0, 20.0);
    for (int i = 0; i < 2000; ++i) {
        const double a = logit(rng);
        const double b = logit(rng);
        const double s = logit(rng);
        const double p = relevance_probability({a, b});
        CHECK(std::abs(relevance_probability({a + s, b + s}) - p) < 1e-12);
        CHECK(std::abs(p + relevance_probability({b, a}) - 1.0) < 1e-12);
        // Strict only while p is representable below 1 (|a - b| well under ~37).
        const double d = std::abs(logit(rng)) * 0.1 + 1e-3;
        if (std::abs(a + d - b) < 30.0) {
            CHECK(relevance_probability({a + d, b}) > p);
        }
    }
}

TEST_CASE("rerank puts gold candidates first and calls the scorer once per candidate") {
    const auto corpus = small_corpus();
    GoldByRef inner({"ref/c", "ref/e"});
    CountingScorer scorer(inner);
    const auto out = rerank(retrieved({"a", "b", "c", "d", "e"}), scorer, corpus, "question?",
                            RerankOptions{2, TemplateKind::caption_aware, 3});
    CHECK(ids(out) == std::vector<std::string>{"c", "e"});
    CHECK(scorer.calls() == 5);
    CHECK(out.candidates[0].retrieval_score == 8.0);
}

TEST_CASE("equal relevance falls back to ascending id for every input permutation") {
    const auto corpus = small_corpus();
    ImageBlindScorer scorer;
    std::vector<const char*> order{"a", "b", "c", "d"};
    do {
        RetrievalResult r{"q", {}};
        for (const char* id : order) r.candidates.push_back({id, 1.0});
        const auto out = rerank(r, scorer, corpus, "q?", RerankOptions{4});
        CHECK(ids(out) == std::vector<std::string>{"a", "b", "c", "d"});
    } while (std::next_permutation(order.begin(), order.end(),
                                   [](const char* x, const char* y) { return std::string(x) < y; }));
}

TEST_CASE("N larger than the candidate count returns everything ranked") {
    const auto corpus = small_corpus();
    GoldByRef scorer({"ref/b"});
    const auto out = rerank(retrieved({"a", "b"}), scorer, corpus, "q?", RerankOptions{10});
    CHECK(ids(out) == std::vector<std::string>{"b", "a"});
    CHECK_THROWS_AS(rerank(retrieved({"a"}), scorer, corpus, "q?", RerankOptions{0}),
                    ValidationError);
}

TEST_CASE("scorer failure fails the whole query and names the candidate") {
    const auto corpus = small_corpus();
    FailingOn scorer("ref/d");
    try {
        rerank(retrieved({"a", "b", "c", "d", "e"}), scorer, corpus, "q?", RerankOptions{2});
        FAIL("expected a scoring error");
    } catch (const CandidateScoringError& e) {
        CHECK(e.record_id() == "d");
        CHECK(std::string(e.what()).find("backend exploded") != std::string::npos);
    }
}

TEST_CASE("rerank is idempotent on its own output") {
    const auto corpus = small_corpus();
    GoldByRef scorer({"ref/a", "ref/d"});
    const auto once = rerank(retrieved({"e", "d", "c", "b", "a"}), scorer, corpus, "q?",
                             RerankOptions{3});
    const auto twice = rerank(as_retrieval_result(once), scorer, corpus, "q?", RerankOptions{3});
    CHECK(ids(twice) == ids(once));
}

TEST_CASE("apply_threshold") {
    const auto t = apply_threshold(with_p({0.9, 0.4}), Threshold::natural());
    REQUIRE(t.candidates.size() == 1);
    CHECK(t.candidates[0].relevance_p == 0.9);

    CHECK(apply_threshold(with_p({0.9, 0.4, 0.0}), Threshold::fixed(0.0)).candidates.size() == 3);

    const auto none = apply_threshold(with_p({0.3, 0.2}), Threshold::natural());
    CHECK(none.candidates.empty());
    REQUIRE(none.threshold_applied.has_value());
    CHECK(none.threshold_applied->eta == 0.5);

    CHECK_THROWS_AS(Threshold::fixed(1.5), ValidationError);
}

TEST_CASE("property: raising eta only removes candidates") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        RerankedSet s{"q", {}, std::nullopt};
        for (int i = 0; i < 8; ++i) s.candidates.push_back({"id" + std::to_string(i), u(rng), 0.0});
        double e1 = u(rng), e2 = u(rng);
        if (e1 > e2) std::swap(e1, e2);
        const auto low = ids(apply_threshold(s, Threshold::fixed(e1)));
        const auto high = ids(apply_threshold(s, Threshold::fixed(e2)));
        for (const auto& id : high) {
            CHECK(std::find(low.begin(), low.end(), id) != low.end());
        }
        for (const auto& c : apply_threshold(s, Threshold::fixed(e2)).candidates) {
            CHECK(c.relevance_p >= e2);
        }
    }
}
