// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmrag/memory_index.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>
#include <unordered_map>

#include "mmrag/error.hpp"
#include "mmrag/parallel.hpp"
#include "mmrag/tensor_io.hpp"

namespace mmrag {

namespace {

struct HeapEntry {
    double score;
    std::size_t row;
};

void check_query(const Memory& memory, std::span<const float> query, int k) {
    if (k <= 0) {
        throw ValidationError("K must be positive, got " + std::to_string(k));
    }
    if (query.size() != memory.dim()) {
        throw ValidationError("query dim " + std::to_string(query.size()) +
                              " does not match memory dim " + std::to_string(memory.dim()));
    }
}

}  // namespace

void EmbeddingMatrix::append(std::string id, std::span<const float> vec) {
    if (dim == 0) {
        dim = vec.size();
    }
    if (vec.size() != dim) {
        throw ValidationError("embedding for '" + id + "' has dim " + std::to_string(vec.size()) +
                              ", expected " + std::to_string(dim));
    }
    ids.push_back(std::move(id));
    values.insert(values.end(), vec.begin(), vec.end());
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
    const json header = read_json(sidecar_path(path));
    EmbeddingMatrix m;
    try {
        m.dim = header.at("dim").get<std::size_t>();
        const auto count = header.at("count").get<std::size_t>();
        m.ids = header.at("ids").get<std::vector<std::string>>();
        if (m.ids.size() != count) {
            throw ValidationError(sidecar_path(path).string() + ": count " +
                                  std::to_string(count) + " but " +
                                  std::to_string(m.ids.size()) + " ids");
        }
    } catch (const json::exception& e) {
        throw ValidationError(sidecar_path(path).string() + ": " + e.what());
    }
    m.values = read_f32_block(path, m.dim * m.ids.size());
    return m;
}

void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
    write_f32_block(path, matrix.values);
    write_json(sidecar_path(path),
               json{{"dim", matrix.dim}, {"count", matrix.rows()}, {"ids", matrix.ids}});
}

double inner_product(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

Memory build_index(const Corpus& corpus, const EmbeddingMatrix& embeddings,
                   std::shared_ptr<const SearchBackend> backend) {
    if (embeddings.dim == 0) {
        throw ValidationError("embedding dim must be positive");
    }
    if (embeddings.values.size() != embeddings.dim * embeddings.rows()) {
        throw ValidationError("embedding matrix holds " + std::to_string(embeddings.values.size()) +
                              " values for " + std::to_string(embeddings.rows()) + " rows of dim " +
                              std::to_string(embeddings.dim));
    }

    std::unordered_map<std::string_view, std::size_t> row_of;
    row_of.reserve(embeddings.rows());
    std::vector<std::string> extra;
    for (std::size_t i = 0; i < embeddings.rows(); ++i) {
        const auto& id = embeddings.ids[i];
        if (!row_of.emplace(id, i).second) {
            throw ValidationError("embedding id '" + id + "' appears more than once");
        }
        if (!corpus.contains(id)) {
            extra.push_back(id);
        }
    }
    std::vector<std::string> missing;
    for (const auto& [id, record] : corpus) {
        if (!row_of.contains(id)) {
            missing.push_back(id);
        }
    }
    if (!missing.empty() || !extra.empty()) {
        auto join = [](const std::vector<std::string>& v) {
            std::string s;
            for (std::size_t i = 0; i < v.size() && i < 20; ++i) {
                s += (i ? ", " : "") + v[i];
            }
            if (v.size() > 20) s += ", ...";
            return s;
        };
        std::string msg = "embeddings do not cover the corpus exactly;";
        if (!missing.empty()) msg += " missing ids: [" + join(missing) + "]";
        if (!extra.empty()) msg += " extra ids: [" + join(extra) + "]";
        throw ValidationError(msg);
    }

    Memory memory;
    memory.m_dim = embeddings.dim;
    memory.m_ids.reserve(corpus.size());
    memory.m_values.reserve(corpus.size() * embeddings.dim);
    for (const auto& [id, record] : corpus) {
        const auto vec = embeddings.row(row_of.at(id));
        for (float v : vec) {
            if (!std::isfinite(v)) {
                throw ValidationError("embedding for '" + id + "' has a non-finite component");
            }
        }
        memory.m_ids.push_back(id);
        memory.m_values.insert(memory.m_values.end(), vec.begin(), vec.end());
    }
    memory.m_backend = backend ? std::move(backend) : std::make_shared<FlatScanBackend>();
    return memory;
}

FlatScanBackend::FlatScanBackend(std::size_t threads, std::size_t min_rows_per_thread)
    : m_threads(threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads),
      m_min_rows_per_thread(std::max<std::size_t>(1, min_rows_per_thread)) {}

std::vector<ScoredId> FlatScanBackend::search(const Memory& memory, std::span<const float> query,
                                              std::size_t k) const {
    const std::size_t n = memory.size();
    k = std::min(k, n);
    if (k == 0) {
        return {};
    }
    // Heap ordered by `better`: the front is the worst of the current k best.
    auto better = [&memory](const HeapEntry& a, const HeapEntry& b) {
        return ranks_before(a.score, memory.id(a.row), b.score, memory.id(b.row));
    };

    const std::size_t chunks =
        std::clamp<std::size_t>(n / m_min_rows_per_thread, 1, m_threads);
    const std::size_t chunk_rows = (n + chunks - 1) / chunks;
    std::vector<std::vector<HeapEntry>> partial(chunks);

    bounded_parallel_for(chunks, chunks, [&](std::size_t c) {
        auto& heap = partial[c];
        heap.reserve(k + 1);
        const std::size_t begin = c * chunk_rows;
        const std::size_t end = std::min(n, begin + chunk_rows);
        for (std::size_t r = begin; r < end; ++r) {
            HeapEntry e{inner_product(memory.row(r), query), r};
            if (heap.size() < k) {
                heap.push_back(e);
                std::push_heap(heap.begin(), heap.end(), better);
            } else if (better(e, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), better);
                heap.back() = e;
                std::push_heap(heap.begin(), heap.end(), better);
            }
        }
    });

    std::vector<HeapEntry> merged;
    for (auto& p : partial) {
        merged.insert(merged.end(), p.begin(), p.end());
    }
    std::sort(merged.begin(), merged.end(), better);
    merged.resize(std::min(k, merged.size()));

    std::vector<ScoredId> out;
    out.reserve(merged.size());
    for (const auto& e : merged) {
        out.push_back({memory.id(e.row), e.score});
    }
    return out;
}

RetrievalResult top_k(const Memory& memory, std::span<const float> query, int k,
                      std::string query_id) {
    check_query(memory, query, k);
    return {std::move(query_id), memory.backend().search(memory, query, static_cast<std::size_t>(k))};
}

RetrievalResult brute_force_search(const Memory& memory, std::span<const float> query, int k,
                                   std::string query_id) {
    check_query(memory, query, k);
    std::vector<ScoredId> all;
    all.reserve(memory.size());
    for (std::size_t r = 0; r < memory.size(); ++r) {
        all.push_back({memory.id(r), inner_product(memory.row(r), query)});
    }
    std::sort(all.begin(), all.end(), [](const ScoredId& a, const ScoredId& b) {
        return ranks_before(a.score, a.record_id, b.score, b.record_id);
    });
    all.resize(std::min<std::size_t>(all.size(), static_cast<std::size_t>(k)));
    return {std::move(query_id), std::move(all)};
}

}  // namespace mmrag
