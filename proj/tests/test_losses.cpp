#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "adascale/errors.hpp"
#include "adascale/losses.hpp"
#include "oracles.hpp"

using namespace adascale;

namespace {

Detection scored(BoundingBox b, std::vector<double> s) { return Detection::make(b, std::move(s)); }

Assignment background(std::size_t i) { return {i, std::nullopt, 0.0}; }
Assignment matched(std::size_t i, std::size_t g) { return {i, g, 1.0}; }

// A scale whose foreground detections carry prescribed losses: a perfect box with
// class probability exp(-loss).
ScaleDetections with_losses(const std::vector<double>& fg_losses, std::size_t n_background = 0) {
    ScaleDetections s;
    for (double l : fg_losses) {
        const double p = std::exp(-l);
        s.detections.push_back(scored({0, 0, 10, 10}, {1.0 - p, p}));
        s.assignments.push_back(matched(s.detections.size() - 1, 0));
    }
    for (std::size_t i = 0; i < n_background; ++i) {
        s.detections.push_back(scored({50, 50, 60, 60}, {0.7, 0.3}));
        s.assignments.push_back(background(s.detections.size() - 1));
    }
    return s;
}

const std::vector<Annotation> kGt{{{0, 0, 10, 10}, 1}};

}  // namespace

TEST(BoxLoss, PerfectBackgroundIsFree) {
    const auto l = box_loss(scored({0, 0, 1, 1}, {1.0, 0.0}), background(0), kGt);
    EXPECT_EQ(l.total, 0.0);
    EXPECT_FALSE(l.is_foreground);
}

TEST(BoxLoss, HalfBackground) {
    const auto l = box_loss(scored({0, 0, 1, 1}, {0.5, 0.5}), background(0), kGt);
    EXPECT_NEAR(l.total, 0.6931471805599453, 1e-12);
    EXPECT_EQ(l.reg_part, 0.0);
}

TEST(BoxLoss, SmoothL1Residual) {
    // Center shifted by half the width: residual dx = 0.5, others zero.
    const auto l = box_loss(scored({-5, 0, 5, 10}, {0.0, 1.0}), matched(0, 0), kGt);
    EXPECT_TRUE(l.is_foreground);
    EXPECT_NEAR(l.cls_part, 0.0, 1e-15);
    EXPECT_NEAR(l.reg_part, 0.125, 1e-12);
    EXPECT_NEAR(l.total, 0.125, 1e-12);
}

TEST(BoxLoss, LambdaScalesRegression) {
    const auto l = box_loss(scored({-5, 0, 5, 10}, {0.2, 0.8}), matched(0, 0), kGt, LossConfig{2.0});
    EXPECT_NEAR(l.total, l.cls_part + 2.0 * l.reg_part, 1e-15);
}

TEST(BoxLoss, ClampsZeroProbability) {
    const auto l = box_loss(scored({0, 0, 10, 10}, {1.0, 0.0}), matched(0, 0), kGt);
    EXPECT_NEAR(l.cls_part, -std::log(1e-12), 1e-9);
}

TEST(BoxLoss, RejectsDanglingIndex) {
    EXPECT_THROW(box_loss(scored({0, 0, 1, 1}, {0.5, 0.5}), matched(0, 3), kGt), InvalidArgument);
}

TEST(BoxLoss, NonNegativeAndZeroOnlyWhenPerfect) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0), off(-3.0, 3.0);
    for (int i = 0; i < 500; ++i) {
        const double p = u(rng);
        const BoundingBox b{off(rng), off(rng), 10 + off(rng), 10 + off(rng)};
        const auto l = box_loss(scored(b, {1.0 - p, p}), matched(0, 0), kGt);
        EXPECT_GE(l.total, 0.0);
        EXPECT_GT(l.total, 0.0);
    }
    EXPECT_EQ(box_loss(scored({0, 0, 10, 10}, {0.0, 1.0}), matched(0, 0), kGt).total, 0.0);
}

TEST(SmoothL1, Branches) {
    EXPECT_DOUBLE_EQ(smooth_l1(0.5), 0.125);
    EXPECT_DOUBLE_EQ(smooth_l1(-0.5), 0.125);
    EXPECT_DOUBLE_EQ(smooth_l1(2.0), 1.5);
}

TEST(ScaleMetric, HandExample) {
    std::map<int, ScaleDetections> m{{600, with_losses({0.5, 0.2, 0.9})}, {240, with_losses({0.3})}};
    const auto r = compute_scale_metric(m, kGt);
    EXPECT_EQ(r.n_min, 1u);
    ASSERT_EQ(r.entries.size(), 2u);
    EXPECT_EQ(r.entries[0].scale, 600);
    EXPECT_NEAR(*r.entries[0].metric, 0.2, 1e-12);
    EXPECT_EQ(r.entries[0].selected, std::vector<std::size_t>{1});
    EXPECT_NEAR(*r.entries[1].metric, 0.3, 1e-12);
    EXPECT_EQ(r.optimal_scale, 600);
}

TEST(ScaleMetric, TiesGoToSmallerScale) {
    std::map<int, ScaleDetections> m{{600, with_losses({0.3, 0.4})}, {480, with_losses({0.3, 0.4})},
                                     {240, with_losses({0.3, 0.4})}};
    EXPECT_EQ(compute_scale_metric(m, kGt).optimal_scale, 240);
}

TEST(ScaleMetric, ScaleWithoutForegroundExcluded) {
    std::map<int, ScaleDetections> m{{600, with_losses({0.4, 0.1})}, {240, with_losses({}, 3)}};
    const auto r = compute_scale_metric(m, kGt);
    EXPECT_EQ(r.n_min, 2u);
    EXPECT_FALSE(r.entries[1].metric.has_value());
    EXPECT_EQ(r.optimal_scale, 600);
}

TEST(ScaleMetric, DegenerateDefaultsToLargest) {
    std::map<int, ScaleDetections> m{{600, with_losses({}, 2)}, {240, with_losses({})}};
    const auto r = compute_scale_metric(m, kGt);
    EXPECT_TRUE(r.degenerate);
    EXPECT_EQ(r.optimal_scale, 600);
}

TEST(OptimalScale, SingleAndTied) {
    ScaleMetricReport r;
    r.entries = {{600, 1, {0}, 0.2}, {240, 1, {0}, 0.3}};
    EXPECT_EQ(optimal_scale(r), 600);
    r.entries[1].metric = 0.2;
    EXPECT_EQ(optimal_scale(r), 240);
    r.entries = {{360, 1, {0}, 0.7}};
    EXPECT_EQ(optimal_scale(r), 360);
}

TEST(ScaleMetric, RejectsEmptyInput) {
    EXPECT_THROW(compute_scale_metric({}, kGt), InvalidArgument);
}

TEST(ScaleMetric, MatchesBruteForceEnumerator) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> nscales(1, 5), nfg(0, 10), nbg(0, 3);
    std::uniform_real_distribution<double> loss(0.0, 3.0);
    const std::vector<int> pool{600, 480, 360, 240, 128};
    for (int trial = 0; trial < 1000; ++trial) {
        std::map<int, ScaleDetections> m;
        std::map<int, std::vector<double>> fg;
        const int k = nscales(rng);
        for (int s = 0; s < k; ++s) {
            std::vector<double> losses(nfg(rng));
            for (double& l : losses) l = loss(rng);
            const auto sd = with_losses(losses, nbg(rng));
            // Per-box losses recomputed as the oracle sees them.
            std::vector<double> seen;
            for (std::size_t i = 0; i < sd.detections.size(); ++i) {
                if (sd.assignments[i].is_foreground()) seen.push_back(box_loss(sd.detections[i], sd.assignments[i], kGt).total);
            }
            m[pool[s]] = sd;
            fg[pool[s]] = seen;
        }
        const auto got = compute_scale_metric(m, kGt);
        const auto want = oracle::scale_metric(fg);
        ASSERT_EQ(got.degenerate, want.degenerate);
        ASSERT_EQ(got.n_min, want.n_min);
        ASSERT_EQ(got.optimal_scale, want.optimal);
        for (const auto& e : got.entries) {
            if (!e.metric) {
                EXPECT_TRUE(fg[e.scale].empty());
                continue;
            }
            EXPECT_EQ(e.selected.size(), got.n_min);
            EXPECT_NEAR(*e.metric, want.metric.at(e.scale), 1e-12);
        }
    }
}

TEST(ScaleMetric, PermutationInvariant) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> loss(0.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a(6), b(4);
        for (double& l : a) l = loss(rng);
        for (double& l : b) l = loss(rng);
        std::map<int, ScaleDetections> m1{{600, with_losses(a, 2)}, {240, with_losses(b, 1)}};
        std::shuffle(a.begin(), a.end(), rng);
        std::shuffle(b.begin(), b.end(), rng);
        std::map<int, ScaleDetections> m2{{600, with_losses(a, 2)}, {240, with_losses(b, 1)}};
        const auto r1 = compute_scale_metric(m1, kGt), r2 = compute_scale_metric(m2, kGt);
        for (std::size_t i = 0; i < r1.entries.size(); ++i) {
            EXPECT_NEAR(*r1.entries[i].metric, *r2.entries[i].metric, 1e-12);
        }
        EXPECT_EQ(r1.optimal_scale, r2.optimal_scale);
    }
}

TEST(ScaleMetric, AddingLargerLossLeavesMetric) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> loss(0.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a(5), b(3);
        for (double& l : a) l = loss(rng);
        for (double& l : b) l = loss(rng);
        std::map<int, ScaleDetections> m{{600, with_losses(a)}, {240, with_losses(b)}};
        const double before = *compute_scale_metric(m, kGt).entries[0].metric;
        a.push_back(*std::max_element(a.begin(), a.end()) + 0.5);
        m[600] = with_losses(a);
        EXPECT_NEAR(*compute_scale_metric(m, kGt).entries[0].metric, before, 1e-12);
    }
}
