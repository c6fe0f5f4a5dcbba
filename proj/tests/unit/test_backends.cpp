// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cmath>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "mmrag/error.hpp"
#include "mmrag/http_backends.hpp"
#include "mmrag/mock_backends.hpp"

using namespace mmrag;

namespace {

// Local server on an ephemeral port, stopped on destruction.
class LocalServer {
public:
    LocalServer() = default;
    ~LocalServer() {
        server.stop();
        if (m_thread.joinable()) m_thread.join();
    }
    void start() {
        m_port = server.bind_to_any_port("127.0.0.1");
        m_thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    HttpOptions options() const {
        return {"http://127.0.0.1:" + std::to_string(m_port), std::chrono::milliseconds(5000), 2,
                std::chrono::milliseconds(1)};
    }

    httplib::Server server;

private:
    int m_port = 0;
    std::thread m_thread;
};

Corpus two_items() {
    Corpus c;
    c.insert({"a", "cap a", "ref/a", Split::test, json::object()});
    c.insert({"b", "cap b", "ref/b", Split::test, json::object()});
    return c;
}

}  // namespace

TEST_CASE("hash embedder is deterministic, unit norm, kind-sensitive") {
    HashEmbedder e(16, 3);
    const auto v = e.embed(EmbedKind::text, "hello");
    CHECK(v.size() == 16);
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(v == e.embed(EmbedKind::text, "hello"));
    CHECK(v != e.embed(EmbedKind::image, "hello"));
    CHECK(v != HashEmbedder(16, 4).embed(EmbedKind::text, "hello"));
    CHECK_THROWS_AS(HashEmbedder(0), ValidationError);
}

TEST_CASE("oracle, adversarial, image-blind and echo mocks") {
    const auto c = two_items();
    const std::vector<QAExample> qa{{"q1", "which?", {"A"}, {"a"}, {"b"}, Split::test, json::object()}};
    const GoldIndex gold(qa, c);
    OracleScorer oracle(gold);
    AdversarialScorer adversarial(gold);
    const ScoreRequest on_gold{"which?", "cap a", "ref/a", TemplateKind::caption_aware};
    const ScoreRequest off_gold{"which?", "cap b", "ref/b", TemplateKind::caption_aware};
    CHECK(relevance_probability(oracle.score(on_gold)) > 0.99);
    CHECK(relevance_probability(oracle.score(off_gold)) < 0.01);
    CHECK(relevance_probability(adversarial.score(on_gold)) < 0.01);
    ImageBlindScorer blind;
    CHECK(relevance_probability(blind.score(on_gold)) == 0.5);
    CountingScorer counting(oracle);
    counting.score(on_gold);
    counting.score(off_gold);
    CHECK(counting.calls() == 2);

    EchoGenerator echo(gold);
    CHECK(echo.generate({"which?", {"ref/a"}}) == "A");
    CHECK(echo.generate({"which?", {"ref/b"}}) == "unknown");
    CHECK(echo.generate({"other?", {"ref/a"}}) == "unknown");
    CHECK(render_generation_prompt(2, "Q?") == "<image> <image> Q?");
}

TEST_CASE("tensor wire format round-trips through base64") {
    ImageTensor t{{2, 2, 3}, {}};
    for (int i = 0; i < 12; ++i) t.data.push_back(static_cast<float>(i) * -0.37f + 1e-3f);
    const auto wire = tensor_to_wire(t);
    CHECK(wire.at("data_b64").is_string());
    CHECK(tensor_from_wire(wire) == t);
    for (std::size_t n : {1u, 2u, 3u, 5u}) {
        ImageTensor s{{n}, std::vector<float>(n, 2.5f)};
        CHECK(tensor_from_wire(tensor_to_wire(s)) == s);
    }
    CHECK_THROWS_AS(tensor_from_wire(json{{"shape", {2}}, {"data_b64", "!!!"}}), ValidationError);
}

TEST_CASE("HTTP backends speak the documented JSON") {
    LocalServer srv;
    json last_score, last_teacher;
    srv.server.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        const float tag = body.at("kind") == "text" ? 1.f : 2.f;
        res.set_content(json{{"vector", {tag, 0.5f, -0.25f}}}.dump(), "application/json");
    });
    srv.server.Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
        last_score = json::parse(req.body);
        res.set_content(R"({"logit_yes": 2.0, "logit_no": 0.0})", "application/json");
    });
    srv.server.Post("/teacher_forced", [&](const httplib::Request& req, httplib::Response& res) {
        last_teacher = json::parse(req.body);
        const auto n = last_teacher.at("gold_tokens").size();
        res.set_content(json{{"gold_token_logits", std::vector<double>(n, 1.5)},
                             {"gold_token_log_probs", std::vector<double>(n, -0.2)}}
                            .dump(),
                        "application/json");
    });
    srv.server.Post("/generate", [](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        res.set_content(json{{"answer", "saw " + std::to_string(body.at("image_refs").size())}}.dump(),
                        "application/json");
    });
    srv.start();

    const auto before = network_request_count();
    HttpEmbedder embedder(srv.options());
    CHECK(embedder.embed(EmbedKind::image, "ref/a") == std::vector<float>{2.f, 0.5f, -0.25f});

    HttpRelevanceScorer scorer(srv.options());
    const auto logits = scorer.score({"q?", "a cap", "ref/a", TemplateKind::caption_agnostic});
    CHECK(relevance_probability(logits) == doctest::Approx(0.8807970779778824).epsilon(1e-15));
    CHECK(last_score.at("image_ref") == "ref/a");
    CHECK(last_score.at("caption") == "a cap");

    HttpTeacherForcedScorer teacher(srv.options());
    ImageTensor t{{3}, {0.f, 1.f, 2.f}};
    const auto out = teacher.score({"q?", {"ref/a"}, {t}, {"x", "y"}});
    CHECK(out.gold_token_logits.size() == 2);
    REQUIRE(last_teacher.contains("distorted_images"));
    CHECK(tensor_from_wire(last_teacher.at("distorted_images").at(0)) == t);

    HttpGenerator generator(srv.options());
    CHECK(generator.generate({"q?", {"ref/a", "ref/b"}}) == "saw 2");
    CHECK(network_request_count() - before == 4);
}

TEST_CASE("HTTP transport retries server errors but not client errors") {
    LocalServer srv;
    std::atomic<int> flaky_calls{0};
    std::atomic<int> bad_calls{0};
    srv.server.Post("/flaky", [&](const httplib::Request&, httplib::Response& res) {
        if (++flaky_calls < 3) {
            res.status = 503;
            return;
        }
        res.set_content(R"({"ok": true})", "application/json");
    });
    srv.server.Post("/bad", [&](const httplib::Request&, httplib::Response& res) {
        ++bad_calls;
        res.status = 400;
        res.set_content("nope", "text/plain");
    });
    srv.server.Post("/down", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    srv.start();

    HttpTransport transport(srv.options());
    CHECK(transport.post("/flaky", json::object(), "embed").at("ok") == true);
    CHECK(flaky_calls == 3);

    try {
        transport.post("/bad", json::object(), "rerank");
        FAIL("expected a backend error");
    } catch (const BackendError& e) {
        CHECK(e.stage() == "rerank");
        CHECK(std::string(e.what()).find("400") != std::string::npos);
    }
    CHECK(bad_calls == 1);

    const auto before = network_request_count();
    CHECK_THROWS_AS(transport.post("/down", json::object(), "generate"), BackendError);
    CHECK(network_request_count() - before == 3);

    CHECK_THROWS_AS(HttpTransport(HttpOptions{}), ValidationError);
}

TEST_CASE("unreachable endpoint surfaces a stage-tagged error") {
    HttpOptions opts{"http://127.0.0.1:1", std::chrono::milliseconds(200), 1,
                     std::chrono::milliseconds(1)};
    HttpEmbedder embedder(opts);
    try {
        embedder.embed(EmbedKind::text, "x");
        FAIL("expected a backend error");
    } catch (const BackendError& e) {
        CHECK(e.stage() == "embed");
    }
}
