// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmrag/noise.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "mmrag/error.hpp"
#include "mmrag/jsonl.hpp"
#include "mmrag/tensor_io.hpp"

namespace mmrag {

namespace {

void check_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw ValidationError(std::string(what) + " must be finite");
        }
    }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 finaliser
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

void NoiseSchedule::validate() const {
    if (steps < 0) {
        throw ValidationError("noise schedule steps must be >= 0");
    }
    if (steps == 0) {
        return;
    }
    const bool ok = allow_zero_gamma ? (gamma >= 0.0 && gamma <= 1.0) : (gamma > 0.0 && gamma <= 1.0);
    if (!ok) {
        throw ValidationError("noise schedule gamma must lie in (0, 1], got " +
                              std::to_string(gamma));
    }
}

double NoiseSchedule::signal_variance() const {
    const double alpha = 1.0 - gamma;
    double prod = 1.0;
    for (int t = 0; t < steps; ++t) {
        prod *= alpha;
    }
    return prod;
}

void ImageTensor::validate() const {
    const std::size_t expected = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                                 std::multiplies<>());
    if (shape.empty() || expected != data.size()) {
        throw ValidationError("tensor shape does not match its " + std::to_string(data.size()) +
                              " values");
    }
    for (float v : data) {
        if (!std::isfinite(v)) {
            throw ValidationError("tensor contains a non-finite value");
        }
    }
}

ImageTensor distort_image(const ImageTensor& original, const NoiseSchedule& schedule,
                          std::uint64_t seed) {
    original.validate();
    schedule.validate();
    if (schedule.steps == 0) {
        return original;
    }
    const double alpha_bar = schedule.signal_variance();
    const double signal = std::sqrt(alpha_bar);
    const double noise = std::sqrt(1.0 - alpha_bar);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    ImageTensor out{original.shape, std::vector<float>(original.data.size())};
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = static_cast<float>(signal * original.data[i] + noise * normal(rng));
    }
    return out;
}

ImageTensor stepwise_distort(const ImageTensor& original, const NoiseSchedule& schedule,
                             std::uint64_t seed) {
    original.validate();
    schedule.validate();
    const double alpha = 1.0 - schedule.gamma;
    const double keep = std::sqrt(alpha);
    const double add = std::sqrt(1.0 - alpha);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(original.data.begin(), original.data.end());
    for (int t = 0; t < schedule.steps; ++t) {
        for (auto& x : v) {
            x = keep * x + add * normal(rng);
        }
    }
    ImageTensor out{original.shape, std::vector<float>(v.size())};
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.data[i] = static_cast<float>(v[i]);
    }
    return out;
}

std::vector<double> delta_logits(std::span<const double> clean, std::span<const double> distorted) {
    if (clean.size() != distorted.size()) {
        throw ValidationError("logit streams differ in length: " + std::to_string(clean.size()) +
                              " vs " + std::to_string(distorted.size()));
    }
    check_finite(clean, "clean logits");
    check_finite(distorted, "distorted logits");
    std::vector<double> out(clean.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = clean[i] - distorted[i];
    }
    return out;
}

MovingAverageSmoother::MovingAverageSmoother(double floor_eps, int window)
    : m_floor(floor_eps), m_window(window) {
    if (!(floor_eps > 0.0) || !std::isfinite(floor_eps)) {
        throw ValidationError("smoothing floor must be positive");
    }
    if (window < 1 || window % 2 == 0) {
        throw ValidationError("smoothing window must be a positive odd integer, got " +
                              std::to_string(window));
    }
}

TokenWeights MovingAverageSmoother::smooth(std::span<const double> raw) const {
    if (raw.empty()) {
        throw ValidationError("cannot smooth an empty weight sequence");
    }
    check_finite(raw, "raw weights");
    const auto n = static_cast<std::ptrdiff_t>(raw.size());
    const std::ptrdiff_t half = m_window / 2;

    TokenWeights w;
    w.raw.assign(raw.begin(), raw.end());
    w.smoothed.resize(raw.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto lo = std::max<std::ptrdiff_t>(0, i - half);
        const auto hi = std::min<std::ptrdiff_t>(n - 1, i + half);
        double sum = 0.0;
        for (auto j = lo; j <= hi; ++j) {
            sum += std::max(raw[static_cast<std::size_t>(j)], 0.0);
        }
        w.smoothed[static_cast<std::size_t>(i)] = sum / static_cast<double>(hi - lo + 1) + m_floor;
    }
    const double total = std::accumulate(w.smoothed.begin(), w.smoothed.end(), 0.0);
    w.normalized.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        w.normalized[i] = w.smoothed[i] / total;
    }
    return w;
}

TokenWeights smooth_weights(std::span<const double> raw, double floor_eps, int window) {
    return MovingAverageSmoother(floor_eps, window).smooth(raw);
}

double reweighted_loss(std::span<const double> gold_log_probs, const TokenWeights& weights) {
    if (gold_log_probs.size() != weights.normalized.size()) {
        throw ValidationError("log-prob length " + std::to_string(gold_log_probs.size()) +
                              " does not match weight length " +
                              std::to_string(weights.normalized.size()));
    }
    if (gold_log_probs.empty()) {
        throw ValidationError("loss needs at least one token");
    }
    check_finite(gold_log_probs, "log-probs");
    double loss = 0.0;
    for (std::size_t t = 0; t < gold_log_probs.size(); ++t) {
        if (gold_log_probs[t] > 0.0) {
            throw ValidationError("log-prob at token " + std::to_string(t) + " is positive");
        }
        loss += weights.normalized[t] * -gold_log_probs[t];
    }
    return loss;
}

TokenWeightingResult token_weighting_pass(const TrainingSample& sample, TeacherForcedScorer& scorer,
                                          const NoiseSchedule& schedule,
                                          const WeightSmoother& smoother, std::uint64_t seed) {
    if (sample.gold_tokens.empty()) {
        throw ValidationError("sample '" + sample.id + "' has an empty gold token sequence");
    }
    if (sample.images.size() != sample.image_refs.size()) {
        throw ValidationError("sample '" + sample.id + "' has " +
                              std::to_string(sample.images.size()) + " tensors for " +
                              std::to_string(sample.image_refs.size()) + " image refs");
    }

    TeacherForcedRequest clean{sample.question, sample.image_refs, {}, sample.gold_tokens};
    TeacherForcedRequest distorted = clean;
    distorted.distorted_images.reserve(sample.images.size());
    for (std::size_t i = 0; i < sample.images.size(); ++i) {
        distorted.distorted_images.push_back(distort_image(sample.images[i], schedule, mix_seed(seed, i)));
    }

    TeacherForcedResponse clean_out;
    TeacherForcedResponse distorted_out;
    try {
        clean_out = scorer.score(clean);
        distorted_out = scorer.score(distorted);
    } catch (const std::exception& e) {
        throw BackendError("teacher_forced", "sample '" + sample.id + "': " + e.what());
    }
    const auto l = sample.gold_tokens.size();
    if (clean_out.gold_token_logits.size() != l || distorted_out.gold_token_logits.size() != l ||
        clean_out.gold_token_log_probs.size() != l) {
        throw BackendError("teacher_forced",
                           "sample '" + sample.id + "': response length does not match " +
                               std::to_string(l) + " gold tokens");
    }

    TokenWeightingResult result;
    result.delta = delta_logits(clean_out.gold_token_logits, distorted_out.gold_token_logits);
    result.weights = smoother.smooth(result.delta);
    result.loss = reweighted_loss(clean_out.gold_token_log_probs, result.weights);
    return result;
}

ImageTensor read_tensor(const std::filesystem::path& path) {
    const json header = read_json(sidecar_path(path));
    ImageTensor t;
    try {
        t.shape = header.at("shape").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
        throw ValidationError(sidecar_path(path).string() + ": " + e.what());
    }
    const std::size_t count =
        std::accumulate(t.shape.begin(), t.shape.end(), std::size_t{1}, std::multiplies<>());
    t.data = read_f32_block(path, count);
    t.validate();
    return t;
}

void write_tensor(const ImageTensor& tensor, const std::filesystem::path& path) {
    tensor.validate();
    write_f32_block(path, tensor.data);
    write_json(sidecar_path(path), json{{"shape", tensor.shape}});
}

}  // namespace mmrag
