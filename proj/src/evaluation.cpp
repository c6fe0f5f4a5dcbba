// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmrag/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "mmrag/error.hpp"

namespace mmrag {

double recall_at_k(const std::vector<RetrievalJudgment>& judgments, int k, RecallMode mode) {
    if (k < 1) {
        throw ValidationError("recall@k needs k >= 1");
    }
    if (judgments.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& j : judgments) {
        if (j.gold_ids.empty()) {
            throw ValidationError("query '" + j.qid + "' has an empty gold set");
        }
        const auto depth = std::min(j.retrieved_ids.size(), static_cast<std::size_t>(k));
        std::size_t hits = 0;
        for (std::size_t i = 0; i < depth; ++i) {
            hits += j.gold_ids.contains(j.retrieved_ids[i]) ? 1 : 0;
        }
        if (mode == RecallMode::fraction) {
            total += static_cast<double>(hits) / static_cast<double>(j.gold_ids.size());
        } else {
            total += hits == j.gold_ids.size() ? 1.0 : 0.0;
        }
    }
    return 100.0 * total / static_cast<double>(judgments.size());
}

double f1_score(double precision, double recall) {
    if (precision + recall == 0.0) {
        return 0.0;
    }
    return 2.0 * precision * recall / (precision + recall);
}

PrecisionRecallF1 prf_from_counts(const PrfCounts& counts) {
    PrecisionRecallF1 out;
    if (counts.predicted > 0) {
        out.precision = 100.0 * static_cast<double>(counts.true_positives) /
                        static_cast<double>(counts.predicted);
    }
    if (counts.gold > 0) {
        out.recall =
            100.0 * static_cast<double>(counts.true_positives) / static_cast<double>(counts.gold);
    }
    out.f1 = f1_score(out.precision, out.recall);
    return out;
}

PrecisionRecallF1 precision_recall_f1(const QuerySets& predicted, const QuerySets& gold) {
    PrfCounts counts;
    auto p = predicted.begin();
    auto g = gold.begin();
    for (; p != predicted.end() && g != gold.end(); ++p, ++g) {
        if (p->first != g->first) {
            break;
        }
        for (const auto& id : p->second) {
            counts.true_positives += g->second.contains(id) ? 1 : 0;
        }
        counts.predicted += p->second.size();
        counts.gold += g->second.size();
    }
    if (p != predicted.end() || g != gold.end()) {
        const auto& qid = p != predicted.end() ? p->first : g->first;
        throw ValidationError("predicted and gold query ids are misaligned at '" + qid + "'");
    }
    return prf_from_counts(counts);
}

std::string normalize_answer(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::ispunct(c)) {
            continue;
        }
        cleaned.push_back(static_cast<char>(std::tolower(c)));
    }
    std::istringstream words(cleaned);
    std::string word;
    std::string out;
    while (words >> word) {
        if (word == "a" || word == "an" || word == "the") {
            continue;
        }
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += word;
    }
    return out;
}

int exact_match(std::string_view prediction, const std::vector<std::string>& golds) {
    const auto pred = normalize_answer(prediction);
    return std::any_of(golds.begin(), golds.end(),
                       [&](const std::string& g) { return normalize_answer(g) == pred; })
               ? 1
               : 0;
}

int key_entity_accuracy(std::string_view prediction,
                        const std::vector<std::string>& gold_entities) {
    const auto pred = normalize_answer(prediction);
    if (pred.empty() || gold_entities.empty()) {
        return 0;
    }
    for (const auto& entity : gold_entities) {
        const auto e = normalize_answer(entity);
        if (pred.find(e) == std::string::npos) {
            return 0;
        }
    }
    return 1;
}

double round2(double value) { return std::round(value * 100.0) / 100.0; }

EvalReport build_report(std::map<std::string, double> metrics, std::vector<EvalRow> partitions,
                        std::vector<json> per_query, std::map<std::string, std::size_t> counts) {
    auto check = [](const std::string& name, double v) {
        if (!(v >= 0.0 && v <= 100.0)) {
            throw ValidationError("metric '" + name + "' = " + std::to_string(v) +
                                  " is outside [0, 100]");
        }
    };
    for (const auto& [name, v] : metrics) {
        check(name, v);
    }
    for (const auto& row : partitions) {
        for (const auto& [name, v] : row.metrics) {
            check(row.name + "/" + name, v);
        }
    }
    return {std::move(metrics), std::move(partitions), std::move(per_query), std::move(counts)};
}

json to_json(const EvalReport& report) {
    json metrics = json::object();
    for (const auto& [name, v] : report.metrics) {
        metrics[name] = round2(v);
    }
    json partitions = json::array();
    for (const auto& row : report.partitions) {
        json m = json::object();
        for (const auto& [name, v] : row.metrics) {
            m[name] = round2(v);
        }
        partitions.push_back({{"name", row.name}, {"count", row.count}, {"metrics", m}});
    }
    return json{{"metrics", metrics},
                {"partitions", partitions},
                {"counts", report.counts},
                {"per_query", report.per_query}};
}

EvalReport eval_report_from_json(const json& obj) {
    try {
        EvalReport r;
        r.metrics = obj.at("metrics").get<std::map<std::string, double>>();
        for (const auto& p : obj.at("partitions")) {
            r.partitions.push_back({p.at("name").get<std::string>(),
                                    p.at("metrics").get<std::map<std::string, double>>(),
                                    p.at("count").get<std::size_t>()});
        }
        r.counts = obj.at("counts").get<std::map<std::string, std::size_t>>();
        r.per_query = obj.at("per_query").get<std::vector<json>>();
        return r;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad report object: ") + e.what());
    }
}

std::string format_report(const EvalReport& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    for (const auto& [name, v] : report.metrics) {
        out << std::left << std::setw(14) << name << std::right << std::setw(8) << round2(v)
            << '\n';
    }
    if (!report.partitions.empty()) {
        std::set<std::string> columns;
        for (const auto& row : report.partitions) {
            for (const auto& [name, v] : row.metrics) {
                columns.insert(name);
            }
        }
        out << '\n' << std::left << std::setw(10) << "" << std::right << std::setw(8) << "n";
        for (const auto& c : columns) {
            out << std::setw(12) << c;
        }
        out << '\n';
        for (const auto& row : report.partitions) {
            out << std::left << std::setw(10) << row.name << std::right << std::setw(8)
                << row.count;
            for (const auto& c : columns) {
                auto it = row.metrics.find(c);
                if (it == row.metrics.end()) {
                    out << std::setw(12) << "-";
                } else {
                    out << std::setw(12) << round2(it->second);
                }
            }
            out << '\n';
        }
    }
    for (const auto& [name, n] : report.counts) {
        out << name << ": " << n << '\n';
    }
    return out.str();
}

}  // namespace mmrag
