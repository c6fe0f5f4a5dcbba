// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmrag/corpus.hpp"

#include <algorithm>
#include <set>

#include "mmrag/error.hpp"

namespace mmrag {

namespace {

constexpr const char* kRecordFields[] = {"id", "caption", "image_ref", "split"};
constexpr const char* kQaFields[] = {"qid",          "question",          "answers",
                                     "positive_ids", "hard_negative_ids", "split"};

template <std::size_t N>
json collect_extra(const json& obj, const char* const (&known)[N]) {
    json extra = json::object();
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const bool is_known = std::any_of(std::begin(known), std::end(known),
                                          [&](const char* k) { return it.key() == k; });
        if (!is_known) {
            extra[it.key()] = it.value();
        }
    }
    return extra;
}

}  // namespace

std::string_view to_string(Split split) {
    switch (split) {
        case Split::train:
            return "train";
        case Split::val:
            return "val";
        case Split::test:
            return "test";
    }
    return "train";
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::train;
    if (text == "val") return Split::val;
    if (text == "test") return Split::test;
    throw ValidationError("unknown split '" + std::string(text) + "'");
}

void Corpus::insert(ImageRecord record) {
    if (record.id.empty()) {
        throw ValidationError("record id must be non-empty");
    }
    if (record.image_ref.empty()) {
        throw ValidationError("record '" + record.id + "' has an empty image_ref");
    }
    if (record.caption.empty() && !m_metadata.caption_less) {
        throw ValidationError("record '" + record.id +
                              "' has an empty caption in a captioned corpus");
    }
    auto id = record.id;
    auto [it, inserted] = m_records.try_emplace(std::move(id), std::move(record));
    if (!inserted) {
        throw ValidationError("duplicate id '" + it->first + "'");
    }
}

const ImageRecord& Corpus::at(std::string_view id) const {
    const auto* r = find(id);
    if (r == nullptr) {
        throw ValidationError("unknown record id '" + std::string(id) + "'");
    }
    return *r;
}

const ImageRecord* Corpus::find(std::string_view id) const {
    auto it = m_records.find(id);
    return it == m_records.end() ? nullptr : &it->second;
}

json to_json(const ImageRecord& record) {
    json obj = record.extra.is_object() ? record.extra : json::object();
    obj["id"] = record.id;
    obj["caption"] = record.caption;
    obj["image_ref"] = record.image_ref;
    obj["split"] = to_string(record.split);
    return obj;
}

ImageRecord image_record_from_json(const json& obj) {
    ImageRecord r;
    r.id = require_string(obj, "id");
    r.caption = require_string(obj, "caption");
    r.image_ref = require_string(obj, "image_ref");
    r.split = parse_split(require_string(obj, "split"));
    r.extra = collect_extra(obj, kRecordFields);
    return r;
}

json to_json(const QAExample& example) {
    json obj = example.extra.is_object() ? example.extra : json::object();
    obj["qid"] = example.qid;
    obj["question"] = example.question;
    obj["answers"] = example.answers;
    obj["positive_ids"] = example.positive_ids;
    obj["hard_negative_ids"] = example.hard_negative_ids;
    obj["split"] = to_string(example.split);
    return obj;
}

QAExample qa_example_from_json(const json& obj) {
    QAExample q;
    q.qid = require_string(obj, "qid");
    q.question = require_string(obj, "question");
    q.answers = require_string_list(obj, "answers");
    q.positive_ids = require_string_list(obj, "positive_ids");
    q.hard_negative_ids = require_string_list(obj, "hard_negative_ids");
    q.split = parse_split(require_string(obj, "split"));
    q.extra = collect_extra(obj, kQaFields);
    return q;
}

Corpus load_corpus(const std::filesystem::path& path, const CorpusLoadOptions& options) {
    CorpusMetadata meta;
    meta.name = options.name.empty() ? path.stem().string() : options.name;
    meta.caption_less = options.caption_less;
    Corpus corpus(std::move(meta));
    for_each_jsonl(path, [&](const json& obj, std::size_t) {
        corpus.insert(image_record_from_json(obj));
    });
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::vector<json> rows;
    rows.reserve(corpus.size());
    for (const auto& [id, record] : corpus) {
        rows.push_back(to_json(record));
    }
    write_jsonl(path, rows);
}

void validate_qa(const QAExample& example, const Corpus& corpus) {
    const auto& qid = example.qid;
    if (example.answers.empty()) {
        throw ValidationError("qa '" + qid + "' has no answers");
    }
    if (example.positive_ids.empty()) {
        throw ValidationError("qa '" + qid + "' has no positive_ids");
    }
    const std::set<std::string> positives(example.positive_ids.begin(),
                                          example.positive_ids.end());
    for (const auto& id : example.hard_negative_ids) {
        if (positives.contains(id)) {
            throw ValidationError("qa '" + qid + "' lists '" + id +
                                  "' as both positive and hard negative");
        }
    }
    for (const auto* ids : {&example.positive_ids, &example.hard_negative_ids}) {
        for (const auto& id : *ids) {
            if (!corpus.contains(id)) {
                throw ValidationError("qa '" + qid + "' references unknown id '" + id + "'");
            }
        }
    }
}

std::vector<QAExample> load_qa(const std::filesystem::path& path, const Corpus& corpus) {
    std::vector<QAExample> out;
    std::set<std::string, std::less<>> seen;
    for_each_jsonl(path, [&](const json& obj, std::size_t) {
        auto example = qa_example_from_json(obj);
        validate_qa(example, corpus);
        if (!seen.insert(example.qid).second) {
            throw ValidationError("duplicate qid '" + example.qid + "'");
        }
        out.push_back(std::move(example));
    });
    return out;
}

void save_qa(const std::vector<QAExample>& examples, const std::filesystem::path& path) {
    std::vector<json> rows;
    rows.reserve(examples.size());
    for (const auto& e : examples) {
        rows.push_back(to_json(e));
    }
    write_jsonl(path, rows);
}

}  // namespace mmrag
