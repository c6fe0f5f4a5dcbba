// Copyright (C) 2026 The mmrag Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mmrag/error.hpp"
#include "mmrag/threshold.hpp"
#include "test_helpers.hpp"

using namespace mmrag;

namespace {

// Normal(mu, sigma) truncated to [0, 1], evaluated analytically.
double truncated_normal_pdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    const double mass = 0.5 * (std::erf((1.0 - mu) / (sigma * std::sqrt(2.0))) -
                               std::erf((0.0 - mu) / (sigma * std::sqrt(2.0))));
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI)) / mass;
}

std::vector<double> truncated_normal_samples(double mu, double sigma, std::size_t n,
                                             std::mt19937_64& rng) {
    std::normal_distribution<double> normal(mu, sigma);
    std::vector<double> out;
    while (out.size() < n) {
        const double x = normal(rng);
        if (x >= 0.0 && x <= 1.0) out.push_back(x);
    }
    return out;
}

DensityCurve analytic_curve(double mu, double sigma, int points) {
    DensityCurve c;
    for (int i = 0; i < points; ++i) {
        const double x = i == points - 1 ? 1.0 : i / double(points - 1);
        c.grid.push_back(x);
        c.density.push_back(truncated_normal_pdf(x, mu, sigma));
    }
    return c;
}

// Largest rising crossing of pos - neg on a 1e-5 grid.
double dense_scan_root(double mu_p, double s_p, double mu_n, double s_n) {
    double root = -1.0;
    double prev = truncated_normal_pdf(0.0, mu_p, s_p) - truncated_normal_pdf(0.0, mu_n, s_n);
    for (int i = 1; i <= 100000; ++i) {
        const double x = i * 1e-5;
        const double d = truncated_normal_pdf(x, mu_p, s_p) - truncated_normal_pdf(x, mu_n, s_n);
        if (prev < 0.0 && d >= 0.0) root = x;
        prev = d;
    }
    return root;
}

double accuracy_at(const std::vector<CalibrationSample>& s, double eta) {
    std::size_t right = 0;
    for (const auto& x : s) right += ((x.relevance_p >= eta) == x.is_correct) ? 1 : 0;
    return double(right) / double(s.size());
}

std::vector<CalibrationSample> labelled(const std::vector<double>& pos,
                                        const std::vector<double>& neg) {
    std::vector<CalibrationSample> out;
    for (double p : pos) out.push_back({p, true});
    for (double p : neg) out.push_back({p, false});
    return out;
}

}  // namespace

TEST_CASE("density of uniform samples is flat on the interior") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> xs(10000);
    for (auto& x : xs) x = u(rng);
    const auto c = estimate_density(xs);
    CHECK(c.grid.size() == 512);
    CHECK(std::abs(c.integral() - 1.0) < 1e-6);
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
        if (c.grid[i] >= 0.1 && c.grid[i] <= 0.9) {
            CHECK(std::abs(c.density[i] - 1.0) < 0.1);
        }
    }
}

TEST_CASE("identical samples give a kernel centred at the value") {
    const std::vector<double> xs(50, 0.7);
    const auto c = estimate_density(xs, 101);
    const auto peak = std::max_element(c.density.begin(), c.density.end()) - c.density.begin();
    CHECK(c.grid[static_cast<std::size_t>(peak)] == doctest::Approx(0.7));
    // Unimodal: rises to the peak, falls after.
    for (long i = 1; i <= peak; ++i) CHECK(c.density[i] >= c.density[i - 1]);
    for (std::size_t i = static_cast<std::size_t>(peak) + 1; i < c.density.size(); ++i) {
        CHECK(c.density[i] <= c.density[i - 1]);
    }
}

TEST_CASE("estimate_density preconditions") {
    CHECK_THROWS_AS(estimate_density(std::vector<double>{0.5}), ValidationError);
    CHECK_THROWS_AS(estimate_density(std::vector<double>{0.5, 0.6}, 8), ValidationError);
    CHECK_THROWS_AS(estimate_density(std::vector<double>{0.5, 1.2}), ValidationError);
}

TEST_CASE("find_intersection on analytic densities matches the dense root") {
    const double root = dense_scan_root(0.9, 0.05, 0.5, 0.15);
    CHECK(root == doctest::Approx(0.78028).epsilon(1e-4));
    const auto pos = analytic_curve(0.9, 0.05, 512);
    const auto neg = analytic_curve(0.5, 0.15, 512);
    const auto x = find_intersection(pos, neg);
    REQUIRE(x.has_value());
    CHECK(std::abs(*x - root) <= 1.0 / 511.0);

    // Swapping the labels finds the same unique crossing.
    const auto swapped = find_intersection(neg, pos);
    REQUIRE(swapped.has_value());
    CHECK(*swapped == doctest::Approx(*x).epsilon(1e-12));
}

TEST_CASE("find_intersection without a sign change returns nothing") {
    const auto a = analytic_curve(0.5, 0.1, 64);
    CHECK_FALSE(find_intersection(a, a).has_value());

    auto above = a;
    for (auto& d : above.density) d += 1.0;
    CHECK_FALSE(find_intersection(above, a).has_value());

    auto other_grid = analytic_curve(0.5, 0.1, 65);
    CHECK_THROWS_AS(find_intersection(a, other_grid), ValidationError);
}

TEST_CASE("multiple crossings: the highest rising one wins") {
    DensityCurve pos{{0.0, 0.25, 0.5, 0.75, 1.0}, {1.0, -1.0, 1.0, -1.0, 1.0}};
    DensityCurve neg{{0.0, 0.25, 0.5, 0.75, 1.0}, {0.0, 0.0, 0.0, 0.0, 0.0}};
    const auto x = find_intersection(pos, neg);
    REQUIRE(x.has_value());
    CHECK(*x == doctest::Approx(0.875));
}

TEST_CASE("calibrate separates well-clustered populations") {
    std::mt19937_64 rng(17);
    const auto samples = labelled(truncated_normal_samples(0.95, 0.03, 1000, rng),
                                  truncated_normal_samples(0.05, 0.03, 1000, rng));
    const auto t = calibrate(samples);
    CHECK(t.source == ThresholdSource::adaptive);
    CHECK(t.eta > 0.3);
    CHECK(t.eta < 0.7);
    CHECK(accuracy_at(samples, t.eta) >= 0.99);

    // Exhaustive sweep: the returned eta sits on the optimal-accuracy plateau.
    double best = 0.0;
    for (int i = 0; i <= 10000; ++i) best = std::max(best, accuracy_at(samples, i * 1e-4));
    CHECK(accuracy_at(samples, t.eta) == best);
    REQUIRE(t.curves.has_value());
    CHECK(std::abs(t.curves->first.integral() - 1.0) < 1e-6);
    CHECK(std::abs(t.curves->second.integral() - 1.0) < 1e-6);
}

TEST_CASE("calibrate falls back to the natural threshold for identical populations") {
    std::mt19937_64 rng(5);
    const auto pop = truncated_normal_samples(0.6, 0.2, 500, rng);
    const auto t = calibrate(labelled(pop, pop));
    CHECK(t.source == ThresholdSource::natural);
    CHECK(t.eta == 0.5);
}

TEST_CASE("calibrate needs two samples per class") {
    CHECK_THROWS_AS(calibrate(labelled({0.9}, {0.1, 0.2, 0.3})), ValidationError);
    CHECK_THROWS_AS(calibrate(labelled({0.9, 0.8}, {0.1})), ValidationError);
}

TEST_CASE("property: calibrate is deterministic") {
    std::mt19937_64 rng(123);
    const auto pos = truncated_normal_samples(0.8, 0.1, 300, rng);
    const auto neg = truncated_normal_samples(0.3, 0.1, 300, rng);
    const auto a = calibrate(labelled(pos, neg), 256);
    const auto b = calibrate(labelled(pos, neg), 256);
    CHECK(a.eta == b.eta);
    CHECK(a.curves->first.density == b.curves->first.density);
}

TEST_CASE("property: moving the positive population up never lowers the crossing") {
    // Population level: analytic truncated normals, positive mean shifted by +0.05.
    std::mt19937_64 rng(321);
    std::uniform_real_distribution<double> mu_pos(0.65, 0.9);
    std::uniform_real_distribution<double> mu_neg(0.05, 0.45);
    std::uniform_real_distribution<double> sigma(0.04, 0.15);
    for (int trial = 0; trial < 200; ++trial) {
        const double mp = mu_pos(rng), sp = sigma(rng), mn = mu_neg(rng), sn = sigma(rng);
        const auto neg = analytic_curve(mn, sn, 512);
        const auto x1 = find_intersection(analytic_curve(mp, sp, 512), neg);
        const auto x2 = find_intersection(analytic_curve(mp + 0.05, sp, 512), neg);
        REQUIRE(x1.has_value());
        REQUIRE(x2.has_value());
        CHECK(*x2 >= *x1);
    }
}

TEST_CASE("property: shifting correct samples by +0.05 raises eta on typical instances") {
    // Finite samples leave noise bumps in the low-density tails, so a handful of
    // instances can move the crossing the wrong way; the trend must still hold.
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> mu_pos(0.65, 0.95);
    std::uniform_real_distribution<double> mu_neg(0.05, 0.45);
    std::uniform_real_distribution<double> sigma(0.04, 0.15);
    int holds = 0;
    double total_change = 0.0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
        const double mp = mu_pos(rng), sp = sigma(rng), mn = mu_neg(rng), sn = sigma(rng);
        const auto pos = truncated_normal_samples(mp, sp, 300, rng);
        const auto neg = truncated_normal_samples(mn, sn, 300, rng);
        auto shifted = pos;
        for (auto& p : shifted) p = std::min(1.0, p + 0.05);
        const double e1 = calibrate(labelled(pos, neg), 256).eta;
        const double e2 = calibrate(labelled(shifted, neg), 256).eta;
        holds += e2 >= e1 ? 1 : 0;
        total_change += e2 - e1;
    }
    CHECK(holds >= trials * 95 / 100);
    CHECK(total_change > 0.0);
}

TEST_CASE("threshold json and curve files") {
    const auto t = threshold_from_json(json{{"eta", 0.62}, {"source", "adaptive"}});
    CHECK(t.eta == 0.62);
    CHECK(to_json(t).at("source") == "adaptive");
    CHECK(threshold_from_json(json{{"source", "natural"}}).eta == 0.5);
    CHECK_THROWS_AS(threshold_from_json(json{{"eta", 0.3}, {"source", "natural"}}),
                    ValidationError);

    mmrag::testing::TempDir dir;
    write_curve(analytic_curve(0.5, 0.1, 16), dir / "c.txt");
    const auto text = mmrag::testing::read_text(dir / "c.txt");
    CHECK(std::count(text.begin(), text.end(), '\n') == 16);
}
