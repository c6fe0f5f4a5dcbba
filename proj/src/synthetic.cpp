// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmrag/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "mmrag/error.hpp"

namespace mmrag {

namespace {

enum class Role { gold, hard_negative, background };

struct Item {
    int query = -1;
    Role role = Role::background;
    std::vector<float> vec;
};

std::vector<double> unit_gaussian(std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dim);
    double norm = 0.0;
    for (auto& x : v) {
        x = normal(rng);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

// Unit vector with cosine `alignment` to `anchor` (assumed unit-norm).
std::vector<float> aligned(const std::vector<float>& anchor, double alignment, std::mt19937_64& rng) {
    auto r = unit_gaussian(anchor.size(), rng);
    double dot = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) dot += r[i] * anchor[i];
    double norm = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] -= dot * anchor[i];
        norm += r[i] * r[i];
    }
    norm = std::sqrt(norm);
    const double side = std::sqrt(std::max(0.0, 1.0 - alignment * alignment));
    std::vector<float> out(anchor.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<float>(alignment * anchor[i] + side * r[i] / norm);
    }
    return out;
}

std::string padded(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%05d", prefix, i);
    return buf;
}

}  // namespace

SyntheticBenchmark make_synthetic_benchmark(const SyntheticSpec& spec, Embedder& text_embedder) {
    if (spec.queries < 0 || spec.hard_negatives_per_query < 0 || spec.background_items < 0) {
        throw ValidationError("synthetic benchmark sizes must be non-negative");
    }
    std::mt19937_64 rng(spec.seed);
    std::vector<std::string> questions;
    std::vector<Item> items;

    for (int q = 0; q < spec.queries; ++q) {
        questions.push_back("Synthetic question " + std::to_string(q) + ": what is shown?");
        const auto qvec = text_embedder.embed(EmbedKind::text, questions.back());
        const int golds = spec.multi_gold_every > 0 && q % spec.multi_gold_every == 0 ? 2 : 1;
        for (int g = 0; g < golds; ++g) {
            items.push_back({q, Role::gold, aligned(qvec, spec.gold_alignment, rng)});
        }
        for (int h = 0; h < spec.hard_negatives_per_query; ++h) {
            items.push_back({q, Role::hard_negative, aligned(qvec, spec.hard_negative_alignment, rng)});
        }
    }
    const std::size_t dim = items.empty() ? text_embedder.embed(EmbedKind::text, "").size()
                                          : items.front().vec.size();
    for (int b = 0; b < spec.background_items; ++b) {
        const auto v = unit_gaussian(dim, rng);
        items.push_back({-1, Role::background, std::vector<float>(v.begin(), v.end())});
    }

    std::vector<int> numbering(items.size());
    for (std::size_t i = 0; i < numbering.size(); ++i) numbering[i] = static_cast<int>(i);
    std::shuffle(numbering.begin(), numbering.end(), rng);

    SyntheticBenchmark out;
    out.corpus.metadata().name = "synthetic";
    out.corpus.metadata().embedding_dim = dim;
    out.qa.resize(static_cast<std::size_t>(spec.queries));
    for (int q = 0; q < spec.queries; ++q) {
        auto& ex = out.qa[static_cast<std::size_t>(q)];
        ex.qid = padded("q", q);
        ex.question = questions[static_cast<std::size_t>(q)];
        ex.answers = {"answer " + std::to_string(q)};
        ex.split = Split::test;
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto id = padded("img", numbering[i]);
        ImageRecord r{id, "Synthetic caption for " + id, "synthetic://" + id, Split::test, json::object()};
        out.corpus.insert(r);
        out.embeddings.append(id, items[i].vec);
        if (items[i].query >= 0) {
            auto& ex = out.qa[static_cast<std::size_t>(items[i].query)];
            (items[i].role == Role::gold ? ex.positive_ids : ex.hard_negative_ids).push_back(id);
        }
    }
    return out;
}

}  // namespace mmrag
