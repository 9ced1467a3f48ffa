#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mvm/metrics.hpp"

namespace mvm {
namespace {

using V = std::vector<double>;

TEST(AccuracyTest, Examples) {
    EXPECT_EQ(accuracy(V{0.3, -2.0, 1.0}, V{1, -1, -1}), 2.0 / 3.0);
    // A zero score is a positive decision.
    EXPECT_EQ(accuracy(V{0.0}, V{1}), 1.0);
    EXPECT_EQ(accuracy(V{0.0}, V{-1}), 0.0);
}

TEST(AccuracyTest, InputErrors) {
    EXPECT_THROW(accuracy(V{1.0}, V{1, 1}), ConfigError);
    EXPECT_THROW(accuracy(V{}, V{}), ConfigError);
}

TEST(AucTest, Examples) {
    EXPECT_EQ(auc(V{0.9, 0.8, 0.2, 0.1}, V{1, 1, -1, -1}), 1.0);
    EXPECT_EQ(auc(V{0.1, 0.2, 0.8, 0.9}, V{1, 1, -1, -1}), 0.0);
    EXPECT_EQ(auc(V{0.5, 0.5, 0.5, 0.5}, V{1, -1, 1, -1}), 0.5);
    EXPECT_EQ(auc(V{0.9, 0.4, 0.6, 0.1}, V{1, 1, -1, -1}), 0.75);
}

TEST(AucTest, SingleClassIsUndefined) {
    EXPECT_THROW(auc(V{0.1, 0.2}, V{1, 1}), UndefinedMetricError);
    EXPECT_THROW(auc(V{0.1, 0.2}, V{-1, -1}), UndefinedMetricError);
}

TEST(RmseTest, Examples) {
    EXPECT_EQ(rmse(V{3.0}, V{1.0}), 2.0);
    EXPECT_EQ(rmse(V{1.0, 2.0}, V{1.0, 2.0}), 0.0);
}

TEST(LoglossTest, ZeroScoresGiveLog2) {
    EXPECT_DOUBLE_EQ(mean_logloss(V{0.0, 0.0}, V{1, -1}), std::log(2.0));
}

// Pairwise count over all positive/negative pairs, ties counted half.
double auc_pairs(const V& s, const V& y) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] > 0 && y[j] < 0) {
                pairs += 1.0;
                wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
            }
    return wins / pairs;
}

TEST(MetricsProperty, AucMatchesPairCount) {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> coarse(0, 5);
    for (int trial = 0; trial < 200; ++trial) {
        V s, y;
        for (int i = 0; i < 30; ++i) {
            s.push_back(coarse(rng));
            y.push_back(i % 3 == 0 ? 1.0 : -1.0);
        }
        EXPECT_NEAR(auc(s, y), auc_pairs(s, y), 1e-12);
    }
}

TEST(MetricsProperty, AucInvariantUnderMonotoneTransform) {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        V s, t, y;
        for (int i = 0; i < 40; ++i) {
            s.push_back(n(rng));
            t.push_back(std::exp(2.0 * s.back()) + 3.0);
            y.push_back(n(rng) + s.back() > 0 ? 1.0 : -1.0);
        }
        if (std::count(y.begin(), y.end(), 1.0) % 40 == 0) continue;
        EXPECT_EQ(auc(s, y), auc(t, y));
    }
}

TEST(MetricsProperty, AccuracyInvariantUnderPositiveScaling) {
    std::mt19937_64 rng(43);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        V s, t, y;
        for (int i = 0; i < 40; ++i) {
            s.push_back(n(rng));
            t.push_back(s.back() * 7.5);
            y.push_back(n(rng) > 0 ? 1.0 : -1.0);
        }
        EXPECT_EQ(accuracy(s, y), accuracy(t, y));
    }
}

}  // namespace
}  // namespace mvm
