// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "mmrag/corpus.hpp"
#include "mmrag/error.hpp"
#include "test_helpers.hpp"

using namespace mmrag;
using mmrag::testing::TempDir;
using mmrag::testing::write_text;

namespace {

const char* kTwoRecords =
    R"({"id": "img_1", "caption": "Eiffel Tower at night", "image_ref": "a.jpg", "split": "train"})"
    "\n"
    R"({"id": "img_2", "caption": "A red turaco", "image_ref": "b.jpg", "split": "val"})"
    "\n";

Corpus three_records() {
    Corpus c;
    c.insert({"c", "third", "c.png", Split::test, json::object()});
    c.insert({"a", "first", "a.png", Split::train, json::object()});
    c.insert({"b", "second", "b.png", Split::val, json{{"source", "webqa"}}});
    return c;
}

}  // namespace

TEST_CASE("load_corpus parses well-formed lines") {
    TempDir dir;
    write_text(dir / "corpus.jsonl", kTwoRecords);
    const auto corpus = load_corpus(dir / "corpus.jsonl");
    CHECK(corpus.size() == 2);
    CHECK(corpus.at("img_1").caption == "Eiffel Tower at night");
    CHECK(corpus.at("img_2").split == Split::val);
    CHECK(corpus.metadata().name == "corpus");
}

TEST_CASE("load_corpus rejects duplicate ids by name") {
    TempDir dir;
    write_text(dir / "dup.jsonl",
               R"({"id": "img_1", "caption": "x", "image_ref": "a", "split": "train"})"
               "\n"
               R"({"id": "img_1", "caption": "y", "image_ref": "b", "split": "train"})"
               "\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir / "dup.jsonl"), doctest::Contains("img_1"),
                         ValidationError);
}

TEST_CASE("load_corpus reports malformed lines and missing fields") {
    TempDir dir;
    write_text(dir / "bad.jsonl",
               R"({"id": "a", "caption": "x", "image_ref": "a", "split": "train"})"
               "\n{not json\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir / "bad.jsonl"), doctest::Contains(":2:"),
                         ValidationError);

    write_text(dir / "missing.jsonl", R"({"id": "a", "caption": "x", "split": "train"})"
                                      "\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir / "missing.jsonl"), doctest::Contains("image_ref"),
                         ValidationError);
}

TEST_CASE("empty file gives an empty corpus") {
    TempDir dir;
    write_text(dir / "empty.jsonl", "");
    CHECK(load_corpus(dir / "empty.jsonl").empty());
}

TEST_CASE("captions may be empty only in a caption-less corpus") {
    TempDir dir;
    write_text(dir / "nocap.jsonl",
               R"({"id": "a", "caption": "", "image_ref": "a.png", "split": "train"})"
               "\n");
    CHECK_THROWS_AS(load_corpus(dir / "nocap.jsonl"), ValidationError);
    CorpusLoadOptions opts;
    opts.caption_less = true;
    CHECK(load_corpus(dir / "nocap.jsonl", opts).size() == 1);
}

TEST_CASE("save then load reproduces the corpus, extra fields and unicode included") {
    TempDir dir;
    auto corpus = three_records();
    corpus.insert({"u", "Château de Versailles · 夜景 🌙", "u.png", Split::train, json::object()});
    save_corpus(corpus, dir / "out.jsonl");
    const auto loaded = load_corpus(dir / "out.jsonl");
    CHECK(loaded.records() == corpus.records());
    CHECK(loaded.at("b").extra.at("source") == "webqa");

    // Lines are sorted by id and stable across saves.
    save_corpus(loaded, dir / "again.jsonl");
    const auto text = mmrag::testing::read_text(dir / "out.jsonl");
    CHECK(text == mmrag::testing::read_text(dir / "again.jsonl"));
    CHECK(text.find("\"a\"") < text.find("\"b\""));
}

TEST_CASE("save_corpus surfaces I/O failures with the path") {
    CHECK_THROWS_WITH_AS(save_corpus(three_records(), "/nonexistent_dir_xyz/out.jsonl"),
                         doctest::Contains("/nonexistent_dir_xyz/out.jsonl"), IoError);
}

TEST_CASE("load_qa validates references") {
    TempDir dir;
    write_text(dir / "corpus.jsonl", kTwoRecords);
    const auto corpus = load_corpus(dir / "corpus.jsonl");

    write_text(dir / "qa.jsonl",
               R"({"qid": "q1", "question": "What color?", "answers": ["red"], "positive_ids": ["img_2"], "hard_negative_ids": ["img_1"], "split": "val"})"
               "\n");
    const auto qa = load_qa(dir / "qa.jsonl", corpus);
    REQUIRE(qa.size() == 1);
    CHECK(qa[0].positive_ids == std::vector<std::string>{"img_2"});

    write_text(dir / "ghost.jsonl",
               R"({"qid": "q1", "question": "?", "answers": ["x"], "positive_ids": ["ghost"], "hard_negative_ids": [], "split": "val"})"
               "\n");
    CHECK_THROWS_WITH_AS(load_qa(dir / "ghost.jsonl", corpus), doctest::Contains("ghost"),
                         ValidationError);

    write_text(dir / "overlap.jsonl",
               R"({"qid": "q9", "question": "?", "answers": ["x"], "positive_ids": ["img_1"], "hard_negative_ids": ["img_1"], "split": "val"})"
               "\n");
    CHECK_THROWS_WITH_AS(load_qa(dir / "overlap.jsonl", corpus), doctest::Contains("q9"),
                         ValidationError);

    write_text(dir / "noanswer.jsonl",
               R"({"qid": "q2", "question": "?", "answers": [], "positive_ids": ["img_1"], "hard_negative_ids": [], "split": "val"})"
               "\n");
    CHECK_THROWS_AS(load_qa(dir / "noanswer.jsonl", corpus), ValidationError);
}

TEST_CASE("qa round trip preserves order") {
    TempDir dir;
    const auto corpus = three_records();
    std::vector<QAExample> qa{
        {"z", "second?", {"b"}, {"b"}, {"a"}, Split::val, json::object()},
        {"y", "first?", {"a", "alt"}, {"a", "c"}, {}, Split::test, json{{"key_entities", {"a"}}}},
    };
    save_qa(qa, dir / "qa.jsonl");
    CHECK(load_qa(dir / "qa.jsonl", corpus) == qa);
}
