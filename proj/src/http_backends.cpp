// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmrag/http_backends.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "mmrag/error.hpp"
#include "mmrag/tensor_io.hpp"

namespace mmrag {

namespace {

std::atomic<std::uint64_t> g_requests{0};

std::string base64_decode(std::string_view in) {
    static constexpr std::string_view alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve(in.size() * 3 / 4);
    std::uint32_t acc = 0;
    int bits = 0;
    for (char c : in) {
        if (c == '=') {
            break;
        }
        const auto pos = alphabet.find(c);
        if (pos == std::string_view::npos) {
            throw ValidationError("invalid base64 character in tensor payload");
        }
        acc = (acc << 6) | static_cast<std::uint32_t>(pos);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<char>((acc >> bits) & 0xff));
        }
    }
    return out;
}

std::vector<double> double_list(const json& obj, const char* field) {
    try {
        return obj.at(field).get<std::vector<double>>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("response field '") + field + "' must be a number list");
    }
}

}  // namespace

std::string_view to_string(EmbedKind kind) { return kind == EmbedKind::text ? "text" : "image"; }

std::string render_generation_prompt(std::size_t image_count, std::string_view question) {
    std::string out;
    for (std::size_t i = 0; i < image_count; ++i) {
        out += kImagePlaceholder;
        out += ' ';
    }
    out += question;
    return out;
}

std::uint64_t network_request_count() { return g_requests.load(); }

HttpTransport::HttpTransport(HttpOptions options) : m_options(std::move(options)) {
    if (m_options.endpoint.empty()) {
        throw ValidationError("HTTP backend needs an endpoint");
    }
    if (m_options.retries < 0) {
        throw ValidationError("HTTP retries must be >= 0");
    }
}

json HttpTransport::post(const std::string& path, const json& body, const std::string& stage) const {
    const auto payload = body.dump();
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(m_options.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
        m_options.timeout - seconds);
    std::string last_error;
    auto delay = m_options.backoff;
    for (int attempt = 0; attempt <= m_options.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        httplib::Client client(m_options.endpoint);
        client.set_connection_timeout(seconds.count(), micros.count());
        client.set_read_timeout(seconds.count(), micros.count());
        client.set_write_timeout(seconds.count(), micros.count());
        ++g_requests;
        auto res = client.Post(path, payload, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
        } else if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
        } else if (res->status != 200) {
            // Client errors will not improve on retry.
            throw BackendError(stage, m_options.endpoint + path + " returned HTTP " +
                                          std::to_string(res->status) + ": " + res->body);
        } else {
            try {
                return json::parse(res->body);
            } catch (const json::parse_error& e) {
                throw BackendError(stage, m_options.endpoint + path + " returned invalid JSON: " +
                                              e.what());
            }
        }
        spdlog::debug("{} attempt {} to {}{} failed: {}", stage, attempt + 1, m_options.endpoint,
                      path, last_error);
    }
    throw BackendError(stage, m_options.endpoint + path + " failed after " +
                                  std::to_string(m_options.retries + 1) +
                                  " attempts: " + last_error);
}

json to_json(const ScoreRequest& request) {
    return json{{"question", request.question},
                {"caption", request.caption},
                {"image_ref", request.image_ref},
                {"template", to_string(request.template_kind)}};
}

json tensor_to_wire(const ImageTensor& tensor) {
    return json{{"shape", tensor.shape},
                {"data_b64", httplib::detail::base64_encode(encode_f32_le(tensor.data))}};
}

ImageTensor tensor_from_wire(const json& obj) {
    ImageTensor t;
    try {
        t.shape = obj.at("shape").get<std::vector<std::size_t>>();
        t.data = decode_f32_le(base64_decode(obj.at("data_b64").get<std::string>()));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad tensor payload: ") + e.what());
    }
    t.validate();
    return t;
}

json to_json(const TeacherForcedRequest& request) {
    json obj{{"question", request.question},
             {"image_refs", request.image_refs},
             {"gold_tokens", request.gold_tokens}};
    if (!request.distorted_images.empty()) {
        json tensors = json::array();
        for (const auto& t : request.distorted_images) {
            tensors.push_back(tensor_to_wire(t));
        }
        obj["distorted_images"] = std::move(tensors);
    }
    return obj;
}

json to_json(const GenerateRequest& request) {
    return json{{"question", request.question},
                {"image_refs", request.image_refs},
                {"greedy", request.greedy}};
}

std::vector<float> HttpEmbedder::embed(EmbedKind kind, std::string_view payload) {
    const auto res = m_transport.post(
        "/embed", json{{"kind", to_string(kind)}, {"payload", std::string(payload)}}, "embed");
    try {
        return res.at("vector").get<std::vector<float>>();
    } catch (const json::exception&) {
        throw BackendError("embed", "response lacks a numeric 'vector'");
    }
}

LogitPair HttpRelevanceScorer::score(const ScoreRequest& request) {
    const auto res = m_transport.post("/score", to_json(request), "rerank");
    try {
        return {res.at("logit_yes").get<double>(), res.at("logit_no").get<double>()};
    } catch (const json::exception&) {
        throw BackendError("rerank", "response lacks numeric 'logit_yes' / 'logit_no'");
    }
}

TeacherForcedResponse HttpTeacherForcedScorer::score(const TeacherForcedRequest& request) {
    const auto res = m_transport.post("/teacher_forced", to_json(request), "teacher_forced");
    return {double_list(res, "gold_token_logits"), double_list(res, "gold_token_log_probs")};
}

std::string HttpGenerator::generate(const GenerateRequest& request) {
    const auto res = m_transport.post("/generate", to_json(request), "generate");
    try {
        return res.at("answer").get<std::string>();
    } catch (const json::exception&) {
        throw BackendError("generate", "response lacks a string 'answer'");
    }
}

}  // namespace mmrag
