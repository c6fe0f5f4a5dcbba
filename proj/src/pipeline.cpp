// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmrag/pipeline.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mmrag/parallel.hpp"

namespace mmrag {

namespace {

std::string cache_key(const std::string& question) {
    std::istringstream words(question);
    std::string word;
    std::string key;
    while (words >> word) {
        if (!key.empty()) key.push_back(' ');
        key += word;
    }
    return key;
}

std::vector<std::string> ids_of(const RetrievalResult& r) {
    std::vector<std::string> out;
    for (const auto& c : r.candidates) out.push_back(c.record_id);
    return out;
}

std::vector<std::string> ids_of(const RerankedSet& r) {
    std::vector<std::string> out;
    for (const auto& c : r.candidates) out.push_back(c.record_id);
    return out;
}

// Inner backend errors already carry "<stage>: "; keep it once.
std::string without_stage(const std::exception& e, const std::string& stage) {
    std::string msg = e.what();
    const auto prefix = stage + ": ";
    if (msg.starts_with(prefix)) msg.erase(0, prefix.size());
    return msg;
}

}  // namespace

json to_json(const PipelineTrace& trace) {
    json retrieved = json::array();
    for (const auto& c : trace.retrieved.candidates) {
        retrieved.push_back({{"id", c.record_id}, {"score", c.score}});
    }
    json reranked = json::array();
    for (const auto& c : trace.reranked.candidates) {
        reranked.push_back({{"id", c.record_id}, {"p", c.relevance_p}});
    }
    return json{{"qid", trace.qid},
                {"question", trace.question},
                {"retrieved", retrieved},
                {"reranked", reranked},
                {"images_fed", trace.images_fed},
                {"answer", trace.answer}};
}

Pipeline::Pipeline(PipelineConfig config, const Memory& memory, const Corpus& corpus,
                   Backends backends)
    : m_config(std::move(config)), m_memory(memory), m_corpus(corpus),
      m_backends(std::move(backends)) {
    m_config.validate();
    if (!m_backends.embedder || !m_backends.relevance || !m_backends.generator) {
        throw ValidationError("pipeline needs embedder, relevance and generator backends");
    }
}

std::size_t Pipeline::embed_calls() const {
    std::lock_guard lock(m_cache_mutex);
    return m_embed_calls;
}

std::vector<float> Pipeline::embed_question(const std::string& qid, const std::string& question) {
    const auto key = cache_key(question);
    {
        std::lock_guard lock(m_cache_mutex);
        if (auto it = m_query_cache.find(key); it != m_query_cache.end()) {
            return it->second;
        }
    }
    std::vector<float> vec;
    try {
        vec = m_backends.embedder->embed(EmbedKind::text, question);
    } catch (const std::exception& e) {
        throw QueryError("embed", qid, without_stage(e, "embed"));
    }
    std::lock_guard lock(m_cache_mutex);
    ++m_embed_calls;
    m_query_cache.emplace(key, vec);
    return vec;
}

RerankedSet Pipeline::rerank_query(const std::string& qid, const std::string& question,
                                   const RetrievalResult& retrieved, int depth) {
    try {
        return rerank(retrieved, *m_backends.relevance, m_corpus, question,
                      RerankOptions{depth, m_config.template_kind, m_config.max_inflight});
    } catch (const std::exception& e) {
        throw QueryError("rerank", qid, without_stage(e, "rerank"));
    }
}

PipelineTrace Pipeline::run_query(const std::string& qid, const std::string& question) {
    PipelineTrace trace;
    trace.qid = qid;
    trace.question = question;

    const auto query_vec = embed_question(qid, question);
    try {
        trace.retrieved = top_k(m_memory, query_vec, m_config.top_k, qid);
    } catch (const std::exception& e) {
        throw QueryError("retrieve", qid, without_stage(e, "retrieve"));
    }
    trace.reranked = rerank_query(qid, question, trace.retrieved, m_config.top_n);
    const auto kept = apply_threshold(trace.reranked, m_config.threshold);
    trace.images_fed = ids_of(kept);

    GenerateRequest request{question, {}, true};
    for (const auto& id : trace.images_fed) {
        request.image_refs.push_back(m_corpus.at(id).image_ref);
    }
    try {
        trace.answer = m_backends.generator->generate(request);
    } catch (const std::exception& e) {
        throw QueryError("generate", qid, without_stage(e, "generate"));
    }
    return trace;
}

EvalRun Pipeline::run_eval(const std::vector<QAExample>& qa) {
    EvalRun run;
    run.traces.resize(qa.size());
    std::vector<std::optional<QueryFailure>> failed(qa.size());

    // Failures are recorded per slot, so the helper never sees an exception.
    bounded_parallel_for(qa.size(), static_cast<std::size_t>(m_config.query_parallelism),
                         [&](std::size_t i) {
                             try {
                                 run.traces[i] = run_query(qa[i].qid, qa[i].question);
                             } catch (const BackendError& e) {
                                 failed[i] = QueryFailure{qa[i].qid, e.stage(), e.what()};
                                 run.traces[i] = PipelineTrace{qa[i].qid, qa[i].question, {}, {}, {}, {}};
                             } catch (const std::exception& e) {
                                 failed[i] = QueryFailure{qa[i].qid, "pipeline", e.what()};
                                 run.traces[i] = PipelineTrace{qa[i].qid, qa[i].question, {}, {}, {}, {}};
                             }
                         });
    for (auto& f : failed) {
        if (f) {
            spdlog::warn("{}", f->message);
            run.failures.push_back(std::move(*f));
        }
    }
    if (!qa.empty()) {
        const double rate = static_cast<double>(run.failures.size()) / static_cast<double>(qa.size());
        if (rate > m_config.failure_cap) {
            throw Error(std::to_string(run.failures.size()) + " of " + std::to_string(qa.size()) +
                        " queries failed, above the configured cap; first: " +
                        run.failures.front().message);
        }
    }
    run.report = score_traces(run.traces, qa, m_config, run.failures.size());
    return run;
}

std::vector<CalibrationSample> Pipeline::collect_calibration_samples(
    const std::vector<QAExample>& qa) {
    const int depth =
        m_config.calibration_pool == CalibrationPool::top_k ? m_config.top_k : m_config.top_n;
    std::vector<std::vector<CalibrationSample>> per_query(qa.size());
    bounded_parallel_for(
        qa.size(), static_cast<std::size_t>(m_config.query_parallelism), [&](std::size_t i) {
            const auto& q = qa[i];
            const auto vec = embed_question(q.qid, q.question);
            const auto retrieved = top_k(m_memory, vec, m_config.top_k, q.qid);
            const auto reranked = rerank_query(q.qid, q.question, retrieved, depth);
            const std::set<std::string> gold(q.positive_ids.begin(), q.positive_ids.end());
            for (const auto& c : reranked.candidates) {
                per_query[i].push_back({c.relevance_p, gold.contains(c.record_id)});
            }
        });
    std::vector<CalibrationSample> out;
    for (auto& v : per_query) {
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

std::vector<std::string> key_entities(const QAExample& example) {
    if (auto it = example.extra.find("key_entities");
        it != example.extra.end() && it->is_array() && !it->empty()) {
        return it->get<std::vector<std::string>>();
    }
    return {example.answers.front()};
}

EvalReport score_traces(const std::vector<PipelineTrace>& traces,
                        const std::vector<QAExample>& qa, const PipelineConfig& config,
                        std::size_t failures) {
    if (traces.size() != qa.size()) {
        throw ValidationError("trace count does not match QA count");
    }
    struct Bucket {
        std::vector<RetrievalJudgment> retrieved;
        std::vector<RetrievalJudgment> reranked;
        QuerySets fed;
        QuerySets gold;
        double em = 0.0;
        double entity = 0.0;
        std::size_t n = 0;
    };
    Bucket overall;
    Bucket single;
    Bucket multi;
    std::vector<json> rows;

    for (std::size_t i = 0; i < qa.size(); ++i) {
        const auto& q = qa[i];
        const auto& t = traces[i];
        const std::set<std::string> gold(q.positive_ids.begin(), q.positive_ids.end());
        const int em = exact_match(t.answer, q.answers);
        const int entity = key_entity_accuracy(t.answer, key_entities(q));
        for (Bucket* b : {&overall, gold.size() > 1 ? &multi : &single}) {
            b->retrieved.push_back({q.qid, ids_of(t.retrieved), gold});
            b->reranked.push_back({q.qid, ids_of(t.reranked), gold});
            b->fed[q.qid] = std::set<std::string>(t.images_fed.begin(), t.images_fed.end());
            b->gold[q.qid] = gold;
            b->em += em;
            b->entity += entity;
            ++b->n;
        }
        rows.push_back({{"qid", q.qid},
                        {"images_fed", t.images_fed},
                        {"answer", t.answer},
                        {"exact_match", em},
                        {"key_entity", entity}});
    }

    const auto k_name = "R@" + std::to_string(config.top_k);
    const auto n_name = "R@" + std::to_string(config.top_n);
    auto summarize = [&](const Bucket& b) {
        std::map<std::string, double> m;
        if (b.n == 0) {
            return m;
        }
        const auto prf = precision_recall_f1(b.fed, b.gold);
        m[k_name] = recall_at_k(b.retrieved, config.top_k);
        m[n_name] = recall_at_k(b.reranked, config.top_n);
        m[n_name + " all-in"] = recall_at_k(b.reranked, config.top_n, RecallMode::all_in);
        m["P"] = prf.precision;
        m["R"] = prf.recall;
        m["F1"] = prf.f1;
        m["Accuracy"] = 100.0 * b.em / static_cast<double>(b.n);
        m["KeyEntity"] = 100.0 * b.entity / static_cast<double>(b.n);
        return m;
    };

    std::vector<EvalRow> partitions;
    if (single.n > 0) partitions.push_back({"Single.", summarize(single), single.n});
    if (multi.n > 0) partitions.push_back({"Multi.", summarize(multi), multi.n});
    if (overall.n > 0) partitions.push_back({"Overall", summarize(overall), overall.n});
    return build_report(summarize(overall), std::move(partitions), std::move(rows),
                        {{"queries", qa.size()}, {"failures", failures}});
}

}  // namespace mmrag
