// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmrag/config.hpp"

#include "mmrag/error.hpp"
#include "mmrag/http_backends.hpp"
#include "mmrag/mock_backends.hpp"

namespace mmrag {

namespace {

BackendSpec backend_from_json(const json& obj, BackendSpec spec) {
    if (!obj.is_object()) {
        throw ValidationError("backend spec must be an object");
    }
    if (obj.contains("mock") || obj.contains("endpoint")) {
        spec.mock = obj.value("mock", std::string());
        spec.endpoint = obj.value("endpoint", std::string());
    }
    spec.timeout_s = obj.value("timeout_s", spec.timeout_s);
    spec.retries = obj.value("retries", spec.retries);
    spec.dim = obj.value("dim", spec.dim);
    spec.margin = obj.value("margin", spec.margin);
    return spec;
}

json backend_to_json(const BackendSpec& spec) {
    json obj{{"timeout_s", spec.timeout_s}, {"retries", spec.retries}};
    if (!spec.mock.empty()) {
        obj["mock"] = spec.mock;
        obj["dim"] = spec.dim;
        obj["margin"] = spec.margin;
    } else {
        obj["endpoint"] = spec.endpoint;
    }
    return obj;
}

void validate_backend(const char* role, const BackendSpec& spec) {
    if (spec.mock.empty() == spec.endpoint.empty()) {
        throw ValidationError(std::string("backend '") + role +
                              "' needs exactly one of 'mock' or 'endpoint'");
    }
    if (!(spec.timeout_s > 0.0) || spec.retries < 0) {
        throw ValidationError(std::string("backend '") + role + "' has a bad timeout or retry count");
    }
}

HttpOptions http_options(const BackendSpec& spec) {
    HttpOptions o;
    o.endpoint = spec.endpoint;
    o.timeout = std::chrono::milliseconds(static_cast<long long>(spec.timeout_s * 1000.0));
    o.retries = spec.retries;
    return o;
}

}  // namespace

void PipelineConfig::validate() const {
    if (top_n < 1 || top_k < 1 || top_n > top_k) {
        throw ValidationError("config needs 1 <= N <= K, got K = " + std::to_string(top_k) +
                              ", N = " + std::to_string(top_n));
    }
    if (!(threshold.eta >= 0.0 && threshold.eta <= 1.0)) {
        throw ValidationError("threshold eta must lie in [0, 1]");
    }
    if (max_inflight < 1 || query_parallelism < 1) {
        throw ValidationError("parallelism settings must be >= 1");
    }
    if (!(failure_cap >= 0.0 && failure_cap <= 1.0)) {
        throw ValidationError("failure_cap must lie in [0, 1]");
    }
    validate_backend("embed", embed);
    validate_backend("relevance", relevance);
    validate_backend("generate", generate);
    validate_backend("teacher_forced", teacher_forced);
}

PipelineConfig pipeline_config_from_json(const json& obj) {
    PipelineConfig c;
    try {
        c.top_k = obj.value("K", c.top_k);
        c.top_n = obj.value("N", c.top_n);
        if (obj.contains("threshold")) {
            c.threshold = threshold_from_json(obj.at("threshold"));
        }
        if (obj.contains("template")) {
            c.template_kind = parse_template_kind(obj.at("template").get<std::string>());
        }
        c.max_inflight = obj.value("max_inflight", c.max_inflight);
        c.query_parallelism = obj.value("query_parallelism", c.query_parallelism);
        c.seed = obj.value("seed", c.seed);
        c.failure_cap = obj.value("failure_cap", c.failure_cap);
        if (obj.contains("calibration_pool")) {
            const auto pool = obj.at("calibration_pool").get<std::string>();
            if (pool == "top_k") {
                c.calibration_pool = CalibrationPool::top_k;
            } else if (pool == "top_n") {
                c.calibration_pool = CalibrationPool::top_n;
            } else {
                throw ValidationError("calibration_pool must be 'top_k' or 'top_n'");
            }
        }
        if (obj.contains("embed")) c.embed = backend_from_json(obj.at("embed"), c.embed);
        if (obj.contains("relevance")) c.relevance = backend_from_json(obj.at("relevance"), c.relevance);
        if (obj.contains("generate")) c.generate = backend_from_json(obj.at("generate"), c.generate);
        if (obj.contains("teacher_forced")) {
            c.teacher_forced = backend_from_json(obj.at("teacher_forced"), c.teacher_forced);
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad config: ") + e.what());
    }
    c.validate();
    return c;
}

json to_json(const PipelineConfig& config) {
    return json{{"K", config.top_k},
                {"N", config.top_n},
                {"threshold", to_json(config.threshold)},
                {"template", to_string(config.template_kind)},
                {"max_inflight", config.max_inflight},
                {"query_parallelism", config.query_parallelism},
                {"seed", config.seed},
                {"failure_cap", config.failure_cap},
                {"calibration_pool",
                 config.calibration_pool == CalibrationPool::top_k ? "top_k" : "top_n"},
                {"embed", backend_to_json(config.embed)},
                {"relevance", backend_to_json(config.relevance)},
                {"generate", backend_to_json(config.generate)},
                {"teacher_forced", backend_to_json(config.teacher_forced)}};
}

PipelineConfig load_config(const std::filesystem::path& path) {
    try {
        return pipeline_config_from_json(read_json(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

Backends make_backends(const PipelineConfig& config, const std::vector<QAExample>& qa,
                       const Corpus& corpus) {
    config.validate();
    Backends b;
    const bool needs_gold = config.relevance.mock == "oracle" ||
                            config.relevance.mock == "adversarial" ||
                            config.generate.mock == "echo";
    const GoldIndex gold = needs_gold ? GoldIndex(qa, corpus) : GoldIndex();

    auto unknown = [](const char* role, const std::string& name) {
        return ValidationError(std::string("unknown mock '") + name + "' for backend '" + role + "'");
    };

    if (!config.embed.endpoint.empty()) {
        b.embedder = std::make_shared<HttpEmbedder>(http_options(config.embed));
    } else if (config.embed.mock == "hash") {
        b.embedder = std::make_shared<HashEmbedder>(config.embed.dim, config.seed);
    } else {
        throw unknown("embed", config.embed.mock);
    }

    if (!config.relevance.endpoint.empty()) {
        b.relevance = std::make_shared<HttpRelevanceScorer>(http_options(config.relevance));
    } else if (config.relevance.mock == "oracle") {
        b.relevance = std::make_shared<OracleScorer>(gold, config.relevance.margin);
    } else if (config.relevance.mock == "adversarial") {
        b.relevance = std::make_shared<AdversarialScorer>(gold, config.relevance.margin);
    } else if (config.relevance.mock == "image_blind") {
        b.relevance = std::make_shared<ImageBlindScorer>();
    } else {
        throw unknown("relevance", config.relevance.mock);
    }

    if (!config.generate.endpoint.empty()) {
        b.generator = std::make_shared<HttpGenerator>(http_options(config.generate));
    } else if (config.generate.mock == "echo") {
        b.generator = std::make_shared<EchoGenerator>(gold);
    } else {
        throw unknown("generate", config.generate.mock);
    }

    if (!config.teacher_forced.endpoint.empty()) {
        b.teacher_forced =
            std::make_shared<HttpTeacherForcedScorer>(http_options(config.teacher_forced));
    } else if (config.teacher_forced.mock == "image_blind") {
        b.teacher_forced = std::make_shared<ImageBlindTeacherScorer>();
    } else {
        throw unknown("teacher_forced", config.teacher_forced.mock);
    }
    return b;
}

}  // namespace mmrag
