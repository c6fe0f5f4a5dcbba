// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmrag/mock_backends.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mmrag/error.hpp"

namespace mmrag {

std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed) : m_dim(dim), m_seed(seed) {
    if (dim == 0) {
        throw ValidationError("hash embedder dim must be positive");
    }
}

std::vector<float> HashEmbedder::embed(EmbedKind kind, std::string_view payload) {
    const auto h = fnv1a64(payload, fnv1a64(to_string(kind)) ^ m_seed);
    std::mt19937_64 rng(h);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(m_dim);
    double norm = 0.0;
    for (auto& x : v) {
        x = normal(rng);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    std::vector<float> out(m_dim);
    std::transform(v.begin(), v.end(), out.begin(),
                   [norm](double x) { return static_cast<float>(x / norm); });
    return out;
}

GoldIndex::GoldIndex(const std::vector<QAExample>& qa, const Corpus& corpus) {
    for (const auto& q : qa) {
        if (m_entries.contains(q.question)) {
            continue;
        }
        Entry e;
        for (const auto& id : q.positive_ids) {
            e.gold_refs.insert(corpus.at(id).image_ref);
        }
        e.answer = q.answers.empty() ? std::string() : q.answers.front();
        m_entries.emplace(q.question, std::move(e));
    }
}

const GoldIndex::Entry* GoldIndex::find(std::string_view question) const {
    auto it = m_entries.find(question);
    return it == m_entries.end() ? nullptr : &it->second;
}

LogitPair OracleScorer::score(const ScoreRequest& request) {
    const auto* e = m_gold.find(request.question);
    const bool gold = e != nullptr && e->gold_refs.contains(request.image_ref);
    return {gold ? m_margin : -m_margin, 0.0};
}

LogitPair AdversarialScorer::score(const ScoreRequest& request) {
    const auto* e = m_gold.find(request.question);
    const bool gold = e != nullptr && e->gold_refs.contains(request.image_ref);
    return {gold ? -m_margin : m_margin, 0.0};
}

std::string EchoGenerator::generate(const GenerateRequest& request) {
    const auto* e = m_gold.find(request.question);
    if (e == nullptr) {
        return m_wrong;
    }
    const bool all_fed = std::all_of(e->gold_refs.begin(), e->gold_refs.end(), [&](const auto& ref) {
        return std::find(request.image_refs.begin(), request.image_refs.end(), ref) !=
               request.image_refs.end();
    });
    return all_fed ? e->answer : m_wrong;
}

TeacherForcedResponse ImageBlindTeacherScorer::score(const TeacherForcedRequest& request) {
    TeacherForcedResponse out;
    std::uint64_t h = fnv1a64(request.question);
    for (const auto& token : request.gold_tokens) {
        h = fnv1a64(token, h);
        const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
        out.gold_token_logits.push_back(4.0 * u);
        out.gold_token_log_probs.push_back(-(0.05 + 2.0 * u));
    }
    return out;
}

}  // namespace mmrag
