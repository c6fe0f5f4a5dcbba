// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmrag/data_construction.hpp"

#include <algorithm>
#include <random>
#include <set>

#include <spdlog/spdlog.h>

#include "mmrag/error.hpp"

namespace mmrag {

std::string_view to_string(RankingLabel label) {
    return label == RankingLabel::yes ? "Yes" : "No";
}

RankingDataset build_ranking_dataset(const std::vector<QAExample>& qa, const Corpus& corpus,
                                     int negs_per_query, TemplateKind template_kind,
                                     std::uint64_t seed) {
    if (negs_per_query < 0) {
        throw ValidationError("negs_per_query must be >= 0");
    }
    std::mt19937_64 rng(seed);
    RankingDataset out;

    auto make = [&](const QAExample& q, const std::string& id, RankingLabel label) {
        const auto& record = corpus.at(id);
        auto prompt = render_prompt(template_kind, record.caption, q.question, record.image_ref);
        return RankingExample{q.qid,       id, record.image_ref, template_kind,
                              std::move(prompt.text), label};
    };

    for (const auto& q : qa) {
        validate_qa(q, corpus);
        if (negs_per_query > 0 && q.hard_negative_ids.empty()) {
            spdlog::warn("query '{}' has no hard negatives; skipped for ranking data", q.qid);
            out.skipped_qids.push_back(q.qid);
            continue;
        }
        for (const auto& id : q.positive_ids) {
            out.examples.push_back(make(q, id, RankingLabel::yes));
        }
        auto pool = q.hard_negative_ids;
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(std::min(pool.size(), static_cast<std::size_t>(negs_per_query)));
        for (const auto& id : pool) {
            out.examples.push_back(make(q, id, RankingLabel::no));
        }
    }
    std::shuffle(out.examples.begin(), out.examples.end(), rng);
    return out;
}

std::vector<NoiseInjectedQA> build_noise_injected_qa(const std::vector<QAExample>& qa,
                                                     const Corpus& corpus, int max_images,
                                                     std::uint64_t seed) {
    if (max_images < 1) {
        throw ValidationError("max_images must be at least 1");
    }
    const auto target = static_cast<std::size_t>(max_images);
    std::mt19937_64 rng(seed);
    std::vector<NoiseInjectedQA> out;
    out.reserve(qa.size());

    for (const auto& q : qa) {
        validate_qa(q, corpus);
        if (q.positive_ids.size() > target) {
            throw ValidationError("qa '" + q.qid + "' has " + std::to_string(q.positive_ids.size()) +
                                  " positives, more than max_images = " +
                                  std::to_string(max_images));
        }
        NoiseInjectedQA item{q.qid, q.question, q.answers, {}, {}, false};
        std::vector<std::pair<std::string, bool>> images;
        for (const auto& id : q.positive_ids) {
            images.emplace_back(id, false);
        }
        const std::size_t need = target - images.size();
        if (need > 0) {
            auto pool = q.hard_negative_ids;
            std::shuffle(pool.begin(), pool.end(), rng);
            if (pool.size() > need) {
                pool.resize(need);
            }
            if (pool.size() < need) {
                std::set<std::string> taken(q.positive_ids.begin(), q.positive_ids.end());
                taken.insert(pool.begin(), pool.end());
                std::vector<std::string> fallback;
                for (const auto& [id, record] : corpus) {
                    if (record.split == q.split && !taken.contains(id)) {
                        fallback.push_back(id);
                    }
                }
                std::shuffle(fallback.begin(), fallback.end(), rng);
                const std::size_t extra = std::min(fallback.size(), need - pool.size());
                if (extra < need - pool.size()) {
                    throw ValidationError("qa '" + q.qid + "': not enough negatives in split '" +
                                          std::string(to_string(q.split)) + "' to pad to " +
                                          std::to_string(max_images) + " images");
                }
                pool.insert(pool.end(), fallback.begin(),
                            fallback.begin() + static_cast<std::ptrdiff_t>(extra));
                item.used_fallback_negatives = true;
            }
            for (auto& id : pool) {
                images.emplace_back(std::move(id), true);
            }
            std::shuffle(images.begin(), images.end(), rng);
        }
        for (auto& [id, flag] : images) {
            item.image_ids.push_back(std::move(id));
            item.distractor_flags.push_back(flag);
        }
        out.push_back(std::move(item));
    }
    return out;
}

json to_json(const RankingExample& example) {
    return json{{"qid", example.qid},
                {"record_id", example.record_id},
                {"image_ref", example.image_ref},
                {"template", to_string(example.template_kind)},
                {"prompt", example.prompt_text},
                {"label", to_string(example.label)}};
}

json to_json(const NoiseInjectedQA& example) {
    json obj{{"qid", example.qid},
             {"question", example.question},
             {"answers", example.answers},
             {"image_ids", example.image_ids},
             {"distractor_flags", example.distractor_flags}};
    if (example.used_fallback_negatives) {
        obj["fallback_negatives"] = true;
    }
    return obj;
}

}  // namespace mmrag
