// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmrag/corpus.hpp"
#include "mmrag/reranker.hpp"

namespace mmrag {

enum class RankingLabel { yes, no };

std::string_view to_string(RankingLabel label);

struct RankingExample {
    std::string qid;
    std::string record_id;
    std::string image_ref;
    TemplateKind template_kind = TemplateKind::caption_aware;
    std::string prompt_text;
    RankingLabel label = RankingLabel::no;
};

struct RankingDataset {
    std::vector<RankingExample> examples;
    // Queries dropped because they had no hard negatives to sample from.
    std::vector<std::string> skipped_qids;
};

/// One "Yes" example per gold image and up to `negs_per_query` "No" examples
/// drawn without replacement from the query's hard negatives, shuffled by `seed`.
RankingDataset build_ranking_dataset(const std::vector<QAExample>& qa, const Corpus& corpus,
                                     int negs_per_query, TemplateKind template_kind,
                                     std::uint64_t seed);

struct NoiseInjectedQA {
    std::string qid;
    std::string question;
    std::vector<std::string> answers;
    std::vector<std::string> image_ids;
    std::vector<bool> distractor_flags;
    // Set when hard negatives ran out and same-split corpus records filled the gap.
    bool used_fallback_negatives = false;
};

/// Pads every query's image list with hard negatives up to `max_images`, then
/// shuffles the list so a distractor's position carries no signal.
std::vector<NoiseInjectedQA> build_noise_injected_qa(const std::vector<QAExample>& qa,
                                                     const Corpus& corpus, int max_images,
                                                     std::uint64_t seed);

json to_json(const RankingExample& example);
json to_json(const NoiseInjectedQA& example);

}  // namespace mmrag
