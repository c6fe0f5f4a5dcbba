// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mmrag/corpus.hpp"

namespace mmrag {

/// Dense row-major embedding matrix; ids[i] labels row i.
struct EmbeddingMatrix {
    std::size_t dim = 0;
    std::vector<std::string> ids;
    std::vector<float> values;

    std::size_t rows() const noexcept { return ids.size(); }
    std::span<const float> row(std::size_t i) const {
        return {values.data() + i * dim, dim};
    }
    void append(std::string id, std::span<const float> vec);
};

/// Reads `path` (float32 rows) and its `path.json` header {"dim","count","ids"}.
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);
void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

struct ScoredId {
    std::string record_id;
    double score = 0.0;

    bool operator==(const ScoredId&) const = default;
};

/// Candidates in descending score order, ties broken by ascending record id.
struct RetrievalResult {
    std::string query_id;
    std::vector<ScoredId> candidates;
};

/// Total order used by every ranking in the library: higher score first, then lower id.
inline bool ranks_before(double score_a, const std::string& id_a, double score_b,
                         const std::string& id_b) {
    if (score_a != score_b) {
        return score_a > score_b;
    }
    return id_a < id_b;
}

class Memory;

/// Search strategy behind Memory::top_k. Only the exact flat scan ships; an
/// approximate backend can be plugged in here without touching callers.
class SearchBackend {
public:
    virtual ~SearchBackend() = default;
    virtual std::vector<ScoredId> search(const Memory& memory, std::span<const float> query,
                                         std::size_t k) const = 0;
    virtual std::string name() const = 0;
};

/// Exact scan. Rows are split into chunks scanned on up to `threads` workers,
/// each keeping its own k-best; the merge uses the same total order so the
/// result is identical to a serial scan.
class FlatScanBackend final : public SearchBackend {
public:
    explicit FlatScanBackend(std::size_t threads = 0, std::size_t min_rows_per_thread = 4096);

    std::vector<ScoredId> search(const Memory& memory, std::span<const float> query,
                                 std::size_t k) const override;
    std::string name() const override { return "flat"; }

private:
    std::size_t m_threads;
    std::size_t m_min_rows_per_thread;
};

/// Immutable embedding store answering maximum-inner-product queries.
/// Safe for concurrent readers once built.
class Memory {
public:
    std::size_t size() const noexcept { return m_ids.size(); }
    std::size_t dim() const noexcept { return m_dim; }
    const std::string& id(std::size_t row) const { return m_ids[row]; }
    std::span<const float> row(std::size_t i) const { return {m_values.data() + i * m_dim, m_dim}; }
    const SearchBackend& backend() const { return *m_backend; }

private:
    friend Memory build_index(const Corpus&, const EmbeddingMatrix&,
                              std::shared_ptr<const SearchBackend>);

    std::size_t m_dim = 0;
    std::vector<std::string> m_ids;
    std::vector<float> m_values;
    std::shared_ptr<const SearchBackend> m_backend;
};

/// Requires the embeddings to cover exactly the corpus ids with finite values.
/// Rows are stored in corpus (ascending id) order.
Memory build_index(const Corpus& corpus, const EmbeddingMatrix& embeddings,
                   std::shared_ptr<const SearchBackend> backend = nullptr);

/// Raw inner product, accumulated in double in index order.
double inner_product(std::span<const float> a, std::span<const float> b);

RetrievalResult top_k(const Memory& memory, std::span<const float> query, int k,
                      std::string query_id = {});

/// Exhaustive O(n*d) scan with a full sort; the reference every backend must match.
RetrievalResult brute_force_search(const Memory& memory, std::span<const float> query, int k,
                                   std::string query_id = {});

}  // namespace mmrag
