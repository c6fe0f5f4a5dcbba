// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "mmrag/backends.hpp"
#include "mmrag/corpus.hpp"
#include "mmrag/memory_index.hpp"

namespace mmrag {

struct SyntheticSpec {
    int queries = 100;
    // Every n-th query gets two gold images; 0 keeps every query single-gold.
    int multi_gold_every = 3;
    int hard_negatives_per_query = 3;
    int background_items = 100;
    // Cosine of gold / hard-negative embeddings with their question embedding.
    double gold_alignment = 0.8;
    double hard_negative_alignment = 0.7;
    std::uint64_t seed = 7;
};

struct SyntheticBenchmark {
    Corpus corpus;
    std::vector<QAExample> qa;
    EmbeddingMatrix embeddings;
};

/// A separable toy benchmark: gold and hard-negative images sit close to their
/// question's text embedding (from `text_embedder`), background images are
/// random directions. Record ids are assigned in shuffled order so id order
/// carries no label information.
SyntheticBenchmark make_synthetic_benchmark(const SyntheticSpec& spec, Embedder& text_embedder);

}  // namespace mmrag
