// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmrag/jsonl.hpp"

namespace mmrag {

enum class Split { train, val, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

/// One item of the external image memory: an image locator and its caption.
/// Fields the schema does not know about are kept in `extra` and written back on save.
struct ImageRecord {
    std::string id;
    std::string caption;
    std::string image_ref;
    Split split = Split::train;
    json extra = json::object();

    bool operator==(const ImageRecord&) const = default;
};

/// A knowledge-seeking question with its gold images and dataset-provided distractors.
struct QAExample {
    std::string qid;
    std::string question;
    std::vector<std::string> answers;
    std::vector<std::string> positive_ids;
    std::vector<std::string> hard_negative_ids;
    Split split = Split::train;
    json extra = json::object();

    bool operator==(const QAExample&) const = default;
};

struct CorpusMetadata {
    std::string name;
    std::optional<std::size_t> embedding_dim;
    // Captions may be empty only when this is set.
    bool caption_less = false;

    bool operator==(const CorpusMetadata&) const = default;
};

/// Id-keyed image memory. Iteration is in ascending id order.
class Corpus {
public:
    using Records = std::map<std::string, ImageRecord, std::less<>>;

    Corpus() = default;
    explicit Corpus(CorpusMetadata metadata) : m_metadata(std::move(metadata)) {}

    /// Validates and adds a record. Throws ValidationError on a duplicate id,
    /// an empty image_ref, or an empty caption in a captioned corpus.
    void insert(ImageRecord record);

    const ImageRecord& at(std::string_view id) const;
    const ImageRecord* find(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }

    std::size_t size() const noexcept { return m_records.size(); }
    bool empty() const noexcept { return m_records.empty(); }

    const Records& records() const noexcept { return m_records; }
    auto begin() const { return m_records.begin(); }
    auto end() const { return m_records.end(); }

    const CorpusMetadata& metadata() const noexcept { return m_metadata; }
    CorpusMetadata& metadata() noexcept { return m_metadata; }

private:
    CorpusMetadata m_metadata;
    Records m_records;
};

struct CorpusLoadOptions {
    bool caption_less = false;
    // Defaults to the file stem when empty.
    std::string name;
};

Corpus load_corpus(const std::filesystem::path& path, const CorpusLoadOptions& options = {});
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Loads QA examples in file order and checks every referenced id against `corpus`.
std::vector<QAExample> load_qa(const std::filesystem::path& path, const Corpus& corpus);
void save_qa(const std::vector<QAExample>& examples, const std::filesystem::path& path);

/// Throws ValidationError naming the qid (and id) on any broken invariant.
void validate_qa(const QAExample& example, const Corpus& corpus);

json to_json(const ImageRecord& record);
ImageRecord image_record_from_json(const json& obj);
json to_json(const QAExample& example);
QAExample qa_example_from_json(const json& obj);

}  // namespace mmrag
