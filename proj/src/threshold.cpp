// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmrag/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mmrag/error.hpp"

namespace mmrag {

namespace {

// Linear-interpolated quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double DensityCurve::integral() const {
    double total = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        total += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
    }
    return total;
}

std::string_view to_string(ThresholdSource source) {
    return source == ThresholdSource::natural ? "natural" : "adaptive";
}

ThresholdSource parse_threshold_source(std::string_view text) {
    if (text == "natural") return ThresholdSource::natural;
    if (text == "adaptive") return ThresholdSource::adaptive;
    throw ValidationError("unknown threshold source '" + std::string(text) + "'");
}

Threshold Threshold::fixed(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw ValidationError("threshold eta must lie in [0, 1], got " + std::to_string(eta));
    }
    if (eta == kNaturalThreshold) {
        return natural();
    }
    return Threshold{eta, ThresholdSource::adaptive, std::nullopt};
}

double silverman_bandwidth(std::span<const double> samples) {
    const auto n = static_cast<double>(samples.size());
    if (samples.size() < 2) {
        return 0.0;
    }
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : samples) {
        ss += (x - mean) * (x - mean);
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (spread <= 0.0) {
        spread = sd;
    }
    return 0.9 * spread * std::pow(n, -0.2);
}

DensityCurve estimate_density(std::span<const double> samples, int grid_size) {
    if (samples.size() < 2) {
        throw ValidationError("density estimation needs at least 2 samples, got " +
                              std::to_string(samples.size()));
    }
    if (grid_size < 16) {
        throw ValidationError("density grid needs at least 16 points, got " +
                              std::to_string(grid_size));
    }
    for (double x : samples) {
        if (!(x >= 0.0 && x <= 1.0)) {
            throw ValidationError("density samples must lie in [0, 1], got " + std::to_string(x));
        }
    }

    const auto points = static_cast<std::size_t>(grid_size);
    const double cell = 1.0 / static_cast<double>(points - 1);
    // All-identical samples have zero spread; use one grid cell so the kernel stays resolvable.
    const double h = std::max(silverman_bandwidth(samples), cell);

    DensityCurve curve;
    curve.grid.resize(points);
    curve.density.assign(points, 0.0);
    const double inv_h = 1.0 / h;
    for (std::size_t g = 0; g < points; ++g) {
        const double x = g == points - 1 ? 1.0 : static_cast<double>(g) * cell;
        curve.grid[g] = x;
        double acc = 0.0;
        for (double s : samples) {
            // Mirror images at -s and 2 - s put back the mass the kernel leaks past the edges.
            for (double centre : {s, -s, 2.0 - s}) {
                const double u = (x - centre) * inv_h;
                acc += std::exp(-0.5 * u * u);
            }
        }
        curve.density[g] = acc;
    }
    const double mass = curve.integral();
    for (auto& d : curve.density) {
        d /= mass;
    }
    return curve;
}

std::optional<double> find_intersection(const DensityCurve& pos, const DensityCurve& neg) {
    if (pos.grid != neg.grid || pos.density.size() != pos.grid.size() ||
        neg.density.size() != neg.grid.size()) {
        throw ValidationError("density curves must share an identical grid");
    }
    struct Crossing {
        double x;
        bool rising;
    };
    std::vector<Crossing> crossings;
    // Walk the nonzero values of d = pos - neg; exact zeros sit inside the
    // bracket of the surrounding sign change.
    std::optional<std::size_t> last;
    for (std::size_t i = 0; i < pos.grid.size(); ++i) {
        const double d = pos.density[i] - neg.density[i];
        if (d == 0.0) {
            continue;
        }
        if (last) {
            const double d_last = pos.density[*last] - neg.density[*last];
            if ((d_last < 0.0) != (d < 0.0)) {
                const double x0 = pos.grid[*last];
                const double x1 = pos.grid[i];
                crossings.push_back({x0 + (x1 - x0) * (-d_last) / (d - d_last), d > 0.0});
            }
        }
        last = i;
    }
    if (crossings.empty()) {
        return std::nullopt;
    }
    if (crossings.size() == 1) {
        return crossings.front().x;
    }
    for (auto it = crossings.rbegin(); it != crossings.rend(); ++it) {
        if (it->rising) {
            return it->x;
        }
    }
    return std::nullopt;
}

Threshold calibrate(std::span<const CalibrationSample> samples, int grid_size) {
    std::vector<double> correct;
    std::vector<double> incorrect;
    for (const auto& s : samples) {
        (s.is_correct ? correct : incorrect).push_back(s.relevance_p);
    }
    if (correct.size() < 2 || incorrect.size() < 2) {
        throw ValidationError("calibration needs at least 2 correct and 2 incorrect samples, got " +
                              std::to_string(correct.size()) + " correct and " +
                              std::to_string(incorrect.size()) + " incorrect");
    }
    auto pos = estimate_density(correct, grid_size);
    auto neg = estimate_density(incorrect, grid_size);
    const auto crossing = find_intersection(pos, neg);

    Threshold t;
    if (crossing) {
        t.eta = std::clamp(*crossing, 0.0, 1.0);
        t.source = ThresholdSource::adaptive;
    }
    t.curves.emplace(std::move(pos), std::move(neg));
    return t;
}

json to_json(const Threshold& threshold) {
    return json{{"eta", threshold.eta}, {"source", to_string(threshold.source)}};
}

Threshold threshold_from_json(const json& obj) {
    try {
        const auto source = parse_threshold_source(obj.value("source", std::string("adaptive")));
        if (source == ThresholdSource::natural) {
            if (obj.contains("eta") && obj.at("eta").get<double>() != kNaturalThreshold) {
                throw ValidationError("a natural threshold must have eta = 0.5");
            }
            return Threshold::natural();
        }
        auto t = Threshold::fixed(obj.at("eta").get<double>());
        t.source = ThresholdSource::adaptive;
        return t;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad threshold object: ") + e.what());
    }
}

void write_curve(const DensityCurve& curve, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.precision(10);
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        out << curve.grid[i] << ' ' << curve.density[i] << '\n';
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace mmrag
