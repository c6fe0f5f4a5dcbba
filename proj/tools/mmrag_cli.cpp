// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

// mmrag command-line front end.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "mmrag/config.hpp"
#include "mmrag/corpus.hpp"
#include "mmrag/data_construction.hpp"
#include "mmrag/error.hpp"
#include "mmrag/evaluation.hpp"
#include "mmrag/memory_index.hpp"
#include "mmrag/mock_backends.hpp"
#include "mmrag/noise.hpp"
#include "mmrag/pipeline.hpp"
#include "mmrag/synthetic.hpp"
#include "mmrag/threshold.hpp"

namespace fs = std::filesystem;
using namespace mmrag;

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string log_level = "info";
};

PipelineConfig resolve_config(const Globals& g) {
    PipelineConfig c = g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
    if (g.seed) c.seed = *g.seed;
    return c;
}

void apply_overrides(PipelineConfig& c, int k, int n, std::optional<double> eta) {
    if (k > 0) c.top_k = k;
    if (n > 0) c.top_n = n;
    if (eta) c.threshold = Threshold::fixed(*eta);
    c.validate();
}

json retrieval_to_json(const RetrievalResult& r) {
    json cands = json::array();
    for (const auto& c : r.candidates) cands.push_back({{"id", c.record_id}, {"score", c.score}});
    return {{"qid", r.query_id}, {"candidates", cands}};
}

RetrievalResult retrieval_from_json(const json& obj) {
    RetrievalResult r;
    r.query_id = require_string(obj, "qid");
    try {
        for (const auto& c : obj.at("candidates")) {
            r.candidates.push_back({c.at("id").get<std::string>(), c.at("score").get<double>()});
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad retrieval line: ") + e.what());
    }
    return r;
}

std::map<std::string, const QAExample*> by_qid(const std::vector<QAExample>& qa) {
    std::map<std::string, const QAExample*> out;
    for (const auto& q : qa) out[q.qid] = &q;
    return out;
}

// synth -----------------------------------------------------------------------

struct SynthArgs {
    std::string out_dir;
    int queries = 100;
    int background = 100;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
    const auto config = resolve_config(g);
    HashEmbedder text(config.embed.dim, config.seed);
    SyntheticSpec spec;
    spec.queries = a.queries;
    spec.background_items = a.background;
    const auto bench = make_synthetic_benchmark(spec, text);
    fs::create_directories(a.out_dir);
    save_corpus(bench.corpus, fs::path(a.out_dir) / "corpus.jsonl");
    save_qa(bench.qa, fs::path(a.out_dir) / "qa.jsonl");
    write_embeddings(bench.embeddings, fs::path(a.out_dir) / "memory.emb");
    spdlog::info("wrote {} records and {} queries to {}", bench.corpus.size(), bench.qa.size(), a.out_dir);
    return 0;
}

// index -----------------------------------------------------------------------

struct IndexArgs {
    std::string corpus;
    std::string emb;
    std::string text;
    int k = 0;
    bool caption_less = false;
};

int cmd_index_build(const Globals& g, const IndexArgs& a) {
    const auto config = resolve_config(g);
    const auto corpus = load_corpus(a.corpus, {a.caption_less, {}});
    const auto backends = make_backends(config, {}, corpus);
    EmbeddingMatrix m;
    for (const auto& [id, record] : corpus) {
        auto v = backends.embedder->embed(EmbedKind::image, record.image_ref);
        if (m.dim == 0) m.dim = v.size();
        m.append(id, v);
    }
    build_index(corpus, m);
    write_embeddings(m, a.emb);
    spdlog::info("indexed {} records (dim {}) into {}", corpus.size(), m.dim, a.emb);
    return 0;
}

int cmd_index_query(const Globals& g, const IndexArgs& a) {
    auto config = resolve_config(g);
    apply_overrides(config, a.k, 0, std::nullopt);
    const auto corpus = load_corpus(a.corpus, {a.caption_less, {}});
    const auto memory = build_index(corpus, read_embeddings(a.emb));
    const auto backends = make_backends(config, {}, corpus);
    const auto q = backends.embedder->embed(EmbedKind::text, a.text);
    std::cout << retrieval_to_json(top_k(memory, q, config.top_k, "query")).dump(2) << "\n";
    return 0;
}

// retrieve --------------------------------------------------------------------

struct RetrieveArgs {
    std::string corpus;
    std::string emb;
    std::string qa;
    std::string out;
    int k = 0;
};

int cmd_retrieve(const Globals& g, const RetrieveArgs& a) {
    auto config = resolve_config(g);
    apply_overrides(config, a.k, 0, std::nullopt);
    const auto corpus = load_corpus(a.corpus);
    const auto qa = load_qa(a.qa, corpus);
    const auto memory = build_index(corpus, read_embeddings(a.emb));
    const auto backends = make_backends(config, qa, corpus);
    std::vector<json> rows;
    for (const auto& q : qa) {
        const auto vec = backends.embedder->embed(EmbedKind::text, q.question);
        rows.push_back(retrieval_to_json(top_k(memory, vec, config.top_k, q.qid)));
    }
    write_jsonl(a.out, rows);
    spdlog::info("retrieved top-{} for {} queries", config.top_k, qa.size());
    return 0;
}

// rerank ----------------------------------------------------------------------

struct RerankArgs {
    std::string corpus;
    std::string qa;
    std::string retrieved;
    std::string out;
    std::string recalls_out;
    std::string pool;
    int n = 0;
    std::optional<double> eta;
};

int cmd_rerank(const Globals& g, const RerankArgs& a) {
    auto config = resolve_config(g);
    apply_overrides(config, 0, a.n, a.eta);
    if (!a.pool.empty()) {
        config.calibration_pool = a.pool == "top_n" ? CalibrationPool::top_n : CalibrationPool::top_k;
    }
    const auto corpus = load_corpus(a.corpus);
    const auto qa = load_qa(a.qa, corpus);
    const auto index = by_qid(qa);
    const auto backends = make_backends(config, qa, corpus);

    std::vector<json> rows;
    std::vector<json> recalls;
    for_each_jsonl(a.retrieved, [&](const json& obj, std::size_t) {
        const auto retrieved = retrieval_from_json(obj);
        const auto it = index.find(retrieved.query_id);
        if (it == index.end()) {
            throw ValidationError("retrieval line for unknown qid '" + retrieved.query_id + "'");
        }
        const auto& q = *it->second;
        const bool full_pool = !a.recalls_out.empty() && config.calibration_pool == CalibrationPool::top_k;
        const int depth = full_pool ? static_cast<int>(retrieved.candidates.size()) : config.top_n;
        auto scored = rerank(retrieved, *backends.relevance, corpus, q.question,
                             {std::max(depth, 1), config.template_kind, config.max_inflight});
        const std::set<std::string> gold(q.positive_ids.begin(), q.positive_ids.end());
        for (const auto& c : scored.candidates) {
            recalls.push_back({{"qid", q.qid}, {"record_id", c.record_id}, {"p", c.relevance_p},
                               {"correct", gold.contains(c.record_id)}});
        }
        if (scored.candidates.size() > static_cast<std::size_t>(config.top_n)) {
            scored.candidates.resize(static_cast<std::size_t>(config.top_n));
        }
        const auto kept = apply_threshold(scored, config.threshold);
        json cands = json::array();
        for (const auto& c : scored.candidates) {
            cands.push_back({{"id", c.record_id}, {"p", c.relevance_p}, {"retrieval_score", c.retrieval_score}});
        }
        json fed = json::array();
        for (const auto& c : kept.candidates) fed.push_back(c.record_id);
        rows.push_back({{"qid", q.qid}, {"candidates", cands}, {"threshold", to_json(config.threshold)},
                        {"images_fed", fed}});
    });
    write_jsonl(a.out, rows);
    if (!a.recalls_out.empty()) write_jsonl(a.recalls_out, recalls);
    spdlog::info("reranked {} queries to top-{}", rows.size(), config.top_n);
    return 0;
}

// calibrate -------------------------------------------------------------------

struct CalibrateArgs {
    std::string recalls;
    std::string out;
    std::string curves;
    int grid = kDefaultDensityGrid;
};

int cmd_calibrate(const Globals&, const CalibrateArgs& a) {
    std::vector<CalibrationSample> samples;
    for_each_jsonl(a.recalls, [&](const json& obj, std::size_t line) {
        try {
            samples.push_back({obj.at("p").get<double>(), obj.at("correct").get<bool>()});
        } catch (const json::exception&) {
            throw ValidationError(a.recalls + ":" + std::to_string(line) + ": needs numeric 'p' and boolean 'correct'");
        }
    });
    const auto t = calibrate(samples, a.grid);
    write_json(a.out, to_json(t));
    const std::string prefix = a.curves.empty() ? fs::path(a.out).replace_extension().string() : a.curves;
    if (t.curves) {
        write_curve(t.curves->first, prefix + ".correct.txt");
        write_curve(t.curves->second, prefix + ".incorrect.txt");
    }
    std::printf("eta = %.6f (%s)\n", t.eta, std::string(to_string(t.source)).c_str());
    return 0;
}

// data ------------------------------------------------------------------------

struct DataArgs {
    std::string corpus;
    std::string qa;
    std::string out;
    std::string template_kind;
    int negs = 1;
    int max_images = 2;
};

int cmd_data_rank(const Globals& g, const DataArgs& a) {
    const auto config = resolve_config(g);
    const auto corpus = load_corpus(a.corpus);
    const auto qa = load_qa(a.qa, corpus);
    const auto kind = a.template_kind.empty() ? config.template_kind : parse_template_kind(a.template_kind);
    const auto d = build_ranking_dataset(qa, corpus, a.negs, kind, config.seed);
    std::vector<json> rows;
    for (const auto& e : d.examples) rows.push_back(to_json(e));
    write_jsonl(a.out, rows);
    spdlog::info("{} ranking examples, {} queries skipped", rows.size(), d.skipped_qids.size());
    return 0;
}

int cmd_data_noise(const Globals& g, const DataArgs& a) {
    const auto config = resolve_config(g);
    const auto corpus = load_corpus(a.corpus);
    const auto qa = load_qa(a.qa, corpus);
    const auto d = build_noise_injected_qa(qa, corpus, a.max_images, config.seed);
    std::vector<json> rows;
    std::size_t fallback = 0;
    for (const auto& e : d) {
        rows.push_back(to_json(e));
        fallback += e.used_fallback_negatives ? 1 : 0;
    }
    write_jsonl(a.out, rows);
    spdlog::info("{} noise-injected examples ({} used fallback negatives)", rows.size(), fallback);
    return 0;
}

// distort ---------------------------------------------------------------------

struct DistortArgs {
    std::string in;
    std::string out;
    double gamma = 0.05;
    int steps = 10;
};

int cmd_distort(const Globals& g, const DistortArgs& a) {
    const auto config = resolve_config(g);
    write_tensor(distort_image(read_tensor(a.in), {a.gamma, a.steps}, config.seed), a.out);
    return 0;
}

// eval ------------------------------------------------------------------------

struct EvalArgs {
    std::string corpus;
    std::string qa;
    std::string predictions;
    std::string out;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
    const auto config = resolve_config(g);
    const auto corpus = load_corpus(a.corpus);
    const auto qa = load_qa(a.qa, corpus);
    std::map<std::string, PipelineTrace> preds;
    for_each_jsonl(a.predictions, [&](const json& obj, std::size_t) {
        PipelineTrace t;
        t.qid = require_string(obj, "qid");
        t.answer = require_string(obj, "prediction");
        const auto ids = obj.contains("retrieved_ids") ? require_string_list(obj, "retrieved_ids")
                                                       : std::vector<std::string>{};
        t.retrieved.query_id = t.qid;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            t.retrieved.candidates.push_back({ids[i], -static_cast<double>(i)});
            if (i < static_cast<std::size_t>(config.top_n)) {
                t.reranked.candidates.push_back({ids[i], 1.0, -static_cast<double>(i)});
            }
        }
        t.images_fed = ids;
        preds[t.qid] = std::move(t);
    });
    std::vector<PipelineTrace> traces;
    for (const auto& q : qa) {
        auto it = preds.find(q.qid);
        if (it == preds.end()) {
            spdlog::warn("no prediction for '{}'; scored as a miss", q.qid);
            traces.push_back(PipelineTrace{q.qid, q.question, {}, {}, {}, {}});
        } else {
            traces.push_back(it->second);
        }
    }
    const auto report = score_traces(traces, qa, config);
    if (!a.out.empty()) write_json(a.out, to_json(report));
    std::cout << format_report(report);
    return 0;
}

// run -------------------------------------------------------------------------

struct RunArgs {
    std::string corpus;
    std::string emb;
    std::string qa;
    std::string out_dir;
    int k = 0;
    int n = 0;
    std::optional<double> eta;
    std::string threshold_file;
};

int cmd_run(const Globals& g, const RunArgs& a) {
    auto config = resolve_config(g);
    if (!a.threshold_file.empty()) config.threshold = threshold_from_json(read_json(a.threshold_file));
    apply_overrides(config, a.k, a.n, a.eta);
    const auto corpus = load_corpus(a.corpus);
    const auto qa = load_qa(a.qa, corpus);
    const auto memory = build_index(corpus, read_embeddings(a.emb));
    Pipeline pipeline(config, memory, corpus, make_backends(config, qa, corpus));
    const auto run = pipeline.run_eval(qa);
    if (!a.out_dir.empty()) {
        fs::create_directories(a.out_dir);
        std::vector<json> rows;
        for (const auto& t : run.traces) rows.push_back(to_json(t));
        write_jsonl(fs::path(a.out_dir) / "traces.jsonl", rows);
        write_json(fs::path(a.out_dir) / "report.json", to_json(run.report));
    }
    std::cout << format_report(run.report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mmrag: retrieve, rerank and generate over an image-caption memory"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "Pipeline config (JSON)")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Seed for mocks, sampling and noise");
    app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

    std::function<int()> action;

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Write a separable synthetic benchmark");
    s->add_option("--out-dir", synth.out_dir)->required();
    s->add_option("--queries", synth.queries);
    s->add_option("--background", synth.background);
    s->callback([&] { action = [&] { return cmd_synth(g, synth); }; });

    IndexArgs index;
    auto* idx = app.add_subcommand("index", "Build or query the image memory");
    idx->require_subcommand(1);
    auto* build = idx->add_subcommand("build", "Embed every corpus image into a .emb file");
    build->add_option("--corpus", index.corpus)->required()->check(CLI::ExistingFile);
    build->add_option("--out", index.emb)->required();
    build->add_flag("--caption-less", index.caption_less);
    build->callback([&] { action = [&] { return cmd_index_build(g, index); }; });
    auto* query = idx->add_subcommand("query", "Top-K records for one text query");
    query->add_option("--corpus", index.corpus)->required()->check(CLI::ExistingFile);
    query->add_option("--emb", index.emb)->required()->check(CLI::ExistingFile);
    query->add_option("--text", index.text)->required();
    query->add_option("-k,--top-k", index.k);
    query->add_flag("--caption-less", index.caption_less);
    query->callback([&] { action = [&] { return cmd_index_query(g, index); }; });

    RetrieveArgs retrieve;
    auto* ret = app.add_subcommand("retrieve", "Top-K retrieval for every query of a QA file");
    ret->add_option("--corpus", retrieve.corpus)->required()->check(CLI::ExistingFile);
    ret->add_option("--emb", retrieve.emb)->required()->check(CLI::ExistingFile);
    ret->add_option("--qa", retrieve.qa)->required()->check(CLI::ExistingFile);
    ret->add_option("--out", retrieve.out)->required();
    ret->add_option("-k,--top-k", retrieve.k);
    ret->callback([&] { action = [&] { return cmd_retrieve(g, retrieve); }; });

    RerankArgs rr;
    auto* rer = app.add_subcommand("rerank", "Score retrieved candidates and keep the top-N");
    rer->add_option("--corpus", rr.corpus)->required()->check(CLI::ExistingFile);
    rer->add_option("--qa", rr.qa)->required()->check(CLI::ExistingFile);
    rer->add_option("--retrieved", rr.retrieved)->required()->check(CLI::ExistingFile);
    rer->add_option("--out", rr.out)->required();
    rer->add_option("-n,--top-n", rr.n);
    rer->add_option("--eta", rr.eta)->check(CLI::Range(0.0, 1.0));
    rer->add_option("--recalls-out", rr.recalls_out, "Scored recalls for calibrate");
    rer->add_option("--calibration-pool", rr.pool)->check(CLI::IsMember({"top_k", "top_n"}));
    rer->callback([&] { action = [&] { return cmd_rerank(g, rr); }; });

    CalibrateArgs cal;
    auto* calc = app.add_subcommand("calibrate", "Adaptive threshold from scored recalls");
    calc->add_option("--recalls", cal.recalls)->required()->check(CLI::ExistingFile);
    calc->add_option("--out", cal.out)->required();
    calc->add_option("--curves", cal.curves, "Prefix for the two density curve files");
    calc->add_option("--grid", cal.grid)->check(CLI::Range(8, 1 << 20));
    calc->callback([&] { action = [&] { return cmd_calibrate(g, cal); }; });

    DataArgs data;
    auto* dat = app.add_subcommand("data", "Build training datasets");
    dat->require_subcommand(1);
    auto* rank = dat->add_subcommand("rank", "Yes/No ranking instructions");
    auto* noise = dat->add_subcommand("noise", "QA examples padded with distractor images");
    for (auto* sub : {rank, noise}) {
        sub->add_option("--corpus", data.corpus)->required()->check(CLI::ExistingFile);
        sub->add_option("--qa", data.qa)->required()->check(CLI::ExistingFile);
        sub->add_option("--out", data.out)->required();
    }
    rank->add_option("--negs", data.negs)->check(CLI::NonNegativeNumber);
    rank->add_option("--template", data.template_kind)->check(CLI::IsMember({"caption_aware", "caption_agnostic"}));
    noise->add_option("--max-images", data.max_images)->check(CLI::PositiveNumber);
    rank->callback([&] { action = [&] { return cmd_data_rank(g, data); }; });
    noise->callback([&] { action = [&] { return cmd_data_noise(g, data); }; });

    DistortArgs dist;
    auto* dis = app.add_subcommand("distort", "Forward-diffuse a tensor file");
    dis->add_option("--in", dist.in)->required()->check(CLI::ExistingFile);
    dis->add_option("--out", dist.out)->required();
    dis->add_option("--gamma", dist.gamma);
    dis->add_option("--steps", dist.steps);
    dis->callback([&] { action = [&] { return cmd_distort(g, dist); }; });

    EvalArgs ev;
    auto* eva = app.add_subcommand("eval", "Score a predictions file against a QA file");
    eva->add_option("--corpus", ev.corpus)->required()->check(CLI::ExistingFile);
    eva->add_option("--qa", ev.qa)->required()->check(CLI::ExistingFile);
    eva->add_option("--predictions", ev.predictions)->required()->check(CLI::ExistingFile);
    eva->add_option("--out", ev.out);
    eva->callback([&] { action = [&] { return cmd_eval(g, ev); }; });

    RunArgs run;
    auto* rn = app.add_subcommand("run", "Full retrieve, rerank, generate and evaluate");
    rn->add_option("--corpus", run.corpus)->required()->check(CLI::ExistingFile);
    rn->add_option("--emb", run.emb)->required()->check(CLI::ExistingFile);
    rn->add_option("--qa", run.qa)->required()->check(CLI::ExistingFile);
    rn->add_option("--out-dir", run.out_dir);
    rn->add_option("-k,--top-k", run.k);
    rn->add_option("-n,--top-n", run.n);
    rn->add_option("--eta", run.eta)->check(CLI::Range(0.0, 1.0));
    rn->add_option("--threshold", run.threshold_file, "Threshold JSON written by calibrate")
        ->check(CLI::ExistingFile);
    rn->callback([&] { action = [&] { return cmd_run(g, run); }; });

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(g.log_level));
    try {
        return action();
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
}
