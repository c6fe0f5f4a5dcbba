// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mmrag/jsonl.hpp"

namespace mmrag {

struct RetrievalJudgment {
    std::string qid;
    std::vector<std::string> retrieved_ids;
    std::set<std::string> gold_ids;
};

enum class RecallMode {
    // |gold ∩ top-k| / |gold|, averaged over queries.
    fraction,
    // 1 when every gold id is inside the top-k, else 0.
    all_in,
};

/// Macro-averaged Recall@k in percent.
double recall_at_k(const std::vector<RetrievalJudgment>& judgments, int k,
                   RecallMode mode = RecallMode::fraction);

struct PrfCounts {
    std::size_t true_positives = 0;
    std::size_t predicted = 0;
    std::size_t gold = 0;
};

struct PrecisionRecallF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Percentages from pooled counts. No predictions gives P = 0; P = R = 0 gives F1 = 0.
PrecisionRecallF1 prf_from_counts(const PrfCounts& counts);

/// F1 as the harmonic mean of two percentages.
double f1_score(double precision, double recall);

using QuerySets = std::map<std::string, std::set<std::string>>;

/// Micro-aggregated over queries; both maps must hold exactly the same qids.
PrecisionRecallF1 precision_recall_f1(const QuerySets& predicted, const QuerySets& gold);

/// Lowercase, drop ASCII punctuation, drop the articles a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view text);

int exact_match(std::string_view prediction, const std::vector<std::string>& golds);

/// 1 iff every normalised entity is a substring of the normalised prediction.
int key_entity_accuracy(std::string_view prediction, const std::vector<std::string>& gold_entities);

struct EvalRow {
    std::string name;
    std::map<std::string, double> metrics;
    std::size_t count = 0;

    bool operator==(const EvalRow&) const = default;
};

struct EvalReport {
    std::map<std::string, double> metrics;
    // Partition rows such as "Single.", "Multi.", "Overall".
    std::vector<EvalRow> partitions;
    std::vector<json> per_query;
    std::map<std::string, std::size_t> counts;

    bool operator==(const EvalReport&) const = default;
};

/// Values are percentages; anything outside [0, 100] is rejected.
EvalReport build_report(std::map<std::string, double> metrics,
                        std::vector<EvalRow> partitions = {},
                        std::vector<json> per_query = {},
                        std::map<std::string, std::size_t> counts = {});

/// Metric values rounded to two decimals.
json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const json& obj);

/// Human-readable table.
std::string format_report(const EvalReport& report);

double round2(double value);

}  // namespace mmrag
