// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mmrag {

/// Forward-diffusion schedule: `steps` Gaussian steps with per-step noise variance `gamma`.
struct NoiseSchedule {
    double gamma = 0.05;
    int steps = 10;
    // gamma = 0 is rejected unless a test forces it on purpose.
    bool allow_zero_gamma = false;

    void validate() const;
    /// prod_t (1 - gamma), the surviving signal variance after all steps.
    double signal_variance() const;
};

struct ImageTensor {
    std::vector<std::size_t> shape;
    std::vector<float> data;

    void validate() const;
    bool operator==(const ImageTensor&) const = default;
};

/// v_T = sqrt(a) * v_0 + sqrt(1 - a) * eps with a = (1 - gamma)^T and one seeded
/// standard-normal draw per element. Same seed, same output.
ImageTensor distort_image(const ImageTensor& original, const NoiseSchedule& schedule,
                          std::uint64_t seed);

/// The literal T-step chain v_t = sqrt(1 - gamma) * v_{t-1} + sqrt(gamma) * eps_t.
/// The t-th step consumes the t-th block of draws from the same generator, so
/// T = 1 reproduces distort_image exactly.
ImageTensor stepwise_distort(const ImageTensor& original, const NoiseSchedule& schedule,
                             std::uint64_t seed);

/// Elementwise clean - distorted gold-token logits.
std::vector<double> delta_logits(std::span<const double> clean, std::span<const double> distorted);

struct TokenWeights {
    std::vector<double> raw;
    std::vector<double> smoothed;
    std::vector<double> normalized;
};

/// Post-processing from raw per-token weights to loss coefficients.
class WeightSmoother {
public:
    virtual ~WeightSmoother() = default;
    virtual TokenWeights smooth(std::span<const double> raw) const = 0;
};

/// Clamp at 0, centred moving average (edge windows shrink), add a floor, normalise.
class MovingAverageSmoother final : public WeightSmoother {
public:
    explicit MovingAverageSmoother(double floor_eps = 1e-3, int window = 3);
    TokenWeights smooth(std::span<const double> raw) const override;

private:
    double m_floor;
    int m_window;
};

TokenWeights smooth_weights(std::span<const double> raw, double floor_eps = 1e-3, int window = 3);

/// sum_t normalized_t * (-log p_t).
double reweighted_loss(std::span<const double> gold_log_probs, const TokenWeights& weights);

struct TeacherForcedRequest {
    std::string question;
    std::vector<std::string> image_refs;
    // When non-empty, these replace the referenced images (one per ref).
    std::vector<ImageTensor> distorted_images;
    std::vector<std::string> gold_tokens;
};

struct TeacherForcedResponse {
    std::vector<double> gold_token_logits;
    std::vector<double> gold_token_log_probs;
};

/// Runs the generator under teacher forcing and reports, per gold token, its
/// logit and log-probability. Implementations must tolerate concurrent calls.
class TeacherForcedScorer {
public:
    virtual ~TeacherForcedScorer() = default;
    virtual TeacherForcedResponse score(const TeacherForcedRequest& request) = 0;
};

struct TrainingSample {
    std::string id;
    std::string question;
    std::vector<std::string> image_refs;
    std::vector<ImageTensor> images;
    std::vector<std::string> gold_tokens;
};

struct TokenWeightingResult {
    std::vector<double> delta;
    TokenWeights weights;
    double loss = 0.0;
};

/// Distort the sample's images, score the gold answer with clean and distorted
/// inputs, and turn the logit gap into per-token loss weights. Observational only.
TokenWeightingResult token_weighting_pass(const TrainingSample& sample, TeacherForcedScorer& scorer,
                                          const NoiseSchedule& schedule,
                                          const WeightSmoother& smoother, std::uint64_t seed);

/// Tensor file: float32 little-endian block plus `<path>.json` {"shape": [...]}.
ImageTensor read_tensor(const std::filesystem::path& path);
void write_tensor(const ImageTensor& tensor, const std::filesystem::path& path);

}  // namespace mmrag
