// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "mmrag/jsonl.hpp"

namespace mmrag {

inline constexpr double kNaturalThreshold = 0.5;
inline constexpr int kDefaultDensityGrid = 512;

/// Density sampled on an ascending grid over [0, 1].
struct DensityCurve {
    std::vector<double> grid;
    std::vector<double> density;

    /// Trapezoidal integral over the grid.
    double integral() const;
};

enum class ThresholdSource { natural, adaptive };

std::string_view to_string(ThresholdSource source);
ThresholdSource parse_threshold_source(std::string_view text);

/// Relevance cut-off eta. Candidates with p < eta are dropped.
struct Threshold {
    double eta = kNaturalThreshold;
    ThresholdSource source = ThresholdSource::natural;
    // (correct recalls, incorrect recalls) when produced by calibration.
    std::optional<std::pair<DensityCurve, DensityCurve>> curves;

    static Threshold natural() { return {}; }
    /// A user-supplied or previously calibrated cut-off. Throws if eta is outside [0, 1].
    static Threshold fixed(double eta);
};

struct CalibrationSample {
    double relevance_p = 0.0;
    bool is_correct = false;
};

/// Silverman's rule of thumb, 0.9 * min(sd, IQR / 1.34) * n^(-1/5).
/// Returns 0 for a degenerate sample.
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian KDE on a uniform grid over [0, 1], reflected at both edges and
/// renormalised to unit trapezoidal mass.
DensityCurve estimate_density(std::span<const double> samples,
                              int grid_size = kDefaultDensityGrid);

/// x where (pos - neg) changes sign, interpolated linearly inside the grid cell.
/// A single sign change is returned whatever its direction. With several, the
/// largest-x crossing where pos - neg goes from negative to positive wins.
std::optional<double> find_intersection(const DensityCurve& pos, const DensityCurve& neg);

/// Adaptive threshold from scored recalls; falls back to the natural threshold
/// when the two density curves never cross.
Threshold calibrate(std::span<const CalibrationSample> samples,
                    int grid_size = kDefaultDensityGrid);

json to_json(const Threshold& threshold);
Threshold threshold_from_json(const json& obj);

/// Two whitespace-separated columns, x and density, one grid point per line.
void write_curve(const DensityCurve& curve, const std::filesystem::path& path);

}  // namespace mmrag
