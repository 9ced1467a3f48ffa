#include <gtest/gtest.h>

#include <random>

#include "mvm/baselines.hpp"
#include "mvm/metrics.hpp"
#include "test_support.hpp"

namespace mvm {
namespace {

using testing::central_difference;
using testing::dense_instance;
using testing::random_instance;
using testing::random_schema;
using Kind = BaselineCoordinate::Kind;

MvfmModel random_mvfm(std::mt19937_64& rng, const ViewSchema& s, std::size_t k) {
    std::normal_distribution<double> n(0.0, 0.8);
    MvfmModel m(s, k);
    m.for_each_parameter([&](double& t, bool) { t = n(rng); });
    return m;
}

LinearModel random_linear(std::mt19937_64& rng, const ViewSchema& s) {
    std::normal_distribution<double> n(0.0, 1.0);
    LinearModel m(s);
    m.for_each_parameter([&](double& t, bool) { t = n(rng); });
    return m;
}

TEST(LinearPredictTest, Examples) {
    LinearModel m(ViewSchema({1, 1}));
    m.w0() = 1.0;
    m.weights(0)[0] = 2.0;
    m.weights(1)[0] = 3.0;
    EXPECT_EQ(linear_predict(m, dense_instance({{1.0}, {1.0}})), 6.0);
    MultiViewInstance empty;
    empty.views.resize(2);
    EXPECT_EQ(linear_predict(m, empty), 1.0);
    EXPECT_EQ(linear_predict(LinearModel(ViewSchema({1, 1})), dense_instance({{4.0}, {5.0}})), 0.0);
}

MvfmModel example_mvfm() {
    MvfmModel m(ViewSchema({1, 1}), 1);
    m.w0() = 0.5;
    m.first_order(0)[0] = 1.0;
    m.first_order(1)[0] = 2.0;
    m.latent(0)(0, 0) = 1.0;
    m.latent(1)(0, 0) = 3.0;
    return m;
}

TEST(MvfmPredictTest, HandExample) {
    EXPECT_EQ(mvfm_predict(example_mvfm(), dense_instance({{1.0}, {1.0}})), 6.5);
}

TEST(MvfmPredictTest, SingleViewHasNoPairs) {
    std::mt19937_64 rng(1);
    const ViewSchema s({4});
    const auto fm = random_mvfm(rng, s, 3);
    LinearModel lin(s);
    lin.w0() = fm.w0();
    lin.weights(0) = fm.first_order(0);
    const auto x = random_instance(rng, s, 0.9);
    EXPECT_DOUBLE_EQ(mvfm_predict(fm, x), linear_predict(lin, x));
}

TEST(MvfmPredictTest, ZeroLatentEqualsLinear) {
    std::mt19937_64 rng(2);
    const ViewSchema s({3, 2, 4});
    auto fm = random_mvfm(rng, s, 2);
    LinearModel lin(s);
    lin.w0() = fm.w0();
    for (std::size_t v = 0; v < 3; ++v) {
        for (double& t : fm.latent(v).data()) t = 0.0;
        lin.weights(v) = fm.first_order(v);
    }
    const auto x = random_instance(rng, s, 0.9);
    EXPECT_DOUBLE_EQ(mvfm_predict(fm, x), linear_predict(lin, x));
}

TEST(MvfmGradientTest, Examples) {
    const auto m = example_mvfm();
    const auto x = dense_instance({{1.0}, {1.0}});
    EXPECT_EQ(mvfm_gradient(m, x, {Kind::bias}), 1.0);
    EXPECT_EQ(mvfm_gradient(m, x, {Kind::latent, 0, 0, 0}), 3.0);
    EXPECT_EQ(mvfm_gradient(m, x, {Kind::first_order, 1, 0, 0}), 1.0);

    MvfmModel z(ViewSchema({2, 1}), 1);
    EXPECT_EQ(mvfm_gradient(z, dense_instance({{0.0, 1.0}, {1.0}}), {Kind::latent, 0, 0, 0}), 0.0);
    EXPECT_THROW(mvfm_gradient(m, x, {Kind::latent, 0, 0, 1}), SchemaError);
    EXPECT_THROW(mvfm_gradient(m, x, {Kind::first_order, 2, 0, 0}), SchemaError);
}

TEST(BaselinesProperty, MvfmMatchesPairwiseDoubleLoop) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const auto s = random_schema(rng);
        const auto m = random_mvfm(rng, s, 1 + trial % 3);
        const auto x = random_instance(rng, s);
        const double brute = testing::mvfm_bruteforce(m, x);
        EXPECT_LE(std::abs(mvfm_predict(m, x) - brute), 1e-10 * (1.0 + std::abs(brute)));
    }
}

std::vector<BaselineCoordinate> all_mvfm_coordinates(const MvfmModel& m) {
    std::vector<BaselineCoordinate> out{{Kind::bias}};
    for (std::size_t v = 0; v < m.schema().num_views(); ++v)
        for (std::size_t i = 0; i < m.schema().dim(v); ++i) {
            out.push_back({Kind::first_order, v, i, 0});
            for (std::size_t f = 0; f < m.rank(); ++f) out.push_back({Kind::latent, v, i, f});
        }
    return out;
}

double& coordinate_ref(MvfmModel& m, const BaselineCoordinate& c) {
    switch (c.kind) {
        case Kind::bias: return m.w0();
        case Kind::first_order: return m.first_order(c.view)[c.index];
        case Kind::latent: break;
    }
    return m.latent(c.view)(c.index, c.factor);
}

TEST(BaselinesProperty, MvfmGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 60; ++trial) {
        const auto s = random_schema(rng);
        const auto m = random_mvfm(rng, s, 1 + trial % 3);
        const auto x = random_instance(rng, s);
        for (const auto& c : all_mvfm_coordinates(m)) {
            MvfmModel probe = m;
            double& slot = coordinate_ref(probe, c);
            const double theta = slot;
            const double fd = central_difference(
                [&](double t) {
                    slot = t;
                    return mvfm_predict(probe, x);
                },
                theta);
            EXPECT_LE(testing::relative_error(mvfm_gradient(m, x, c), fd), 1e-6);
        }
    }
}

TEST(BaselinesProperty, LinearGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_schema(rng);
        const auto m = random_linear(rng, s);
        const auto x = random_instance(rng, s);
        for (std::size_t v = 0; v < s.num_views(); ++v)
            for (std::size_t i = 0; i < s.dim(v); ++i) {
                LinearModel probe = m;
                const double fd = central_difference(
                    [&](double t) {
                        probe.weights(v)[i] = t;
                        return linear_predict(probe, x);
                    },
                    m.weights(v)[i]);
                EXPECT_LE(testing::relative_error(linear_gradient(m, x, {Kind::first_order, v, i, 0}), fd),
                          1e-6);
            }
    }
}

// An MVM with one factor per view (feature rows = linear weights of that
// view, bias rows of the other views = 1) plus one factor carrying w0
// through the bias rows has no surviving higher-order terms.
TEST(BaselinesProperty, MvmSubsumesLinearModel) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_schema(rng);
        const std::size_t m = s.num_views();
        const auto lin = random_linear(rng, s);
        MvmModel mvm(s, m + 1, true);
        for (std::size_t v = 0; v < m; ++v) {
            for (std::size_t u = 0; u < m; ++u) {
                Matrix& a = mvm.factor(u);
                if (u == v) {
                    for (std::size_t i = 0; i < s.dim(u); ++i) a(i, v) = lin.weights(v)[i];
                } else {
                    a(mvm.bias_row(u), v) = 1.0;
                }
            }
            mvm.factor(v)(mvm.bias_row(v), m) = v == 0 ? lin.w0() : 1.0;
        }
        for (int i = 0; i < 10; ++i) {
            const auto x = random_instance(rng, s);
            EXPECT_NEAR(predict_fast(mvm, x), linear_predict(lin, x), 1e-10);
        }
    }
}

TEST(BaselineTrainTest, LinearSeparatesLinearlySeparableData) {
    std::mt19937_64 rng(7);
    const ViewSchema s({4, 3});
    const auto teacher = random_linear(rng, s);
    Dataset d(s);
    while (d.size() < 300) {
        auto x = random_instance(rng, s, 0.8);
        const double score = linear_predict(teacher, x);
        if (std::abs(score) < 0.5) continue;
        x.label = score > 0 ? 1.0 : -1.0;
        d.push_back(std::move(x));
    }
    TrainConfig c;
    c.loss = LossKind::logit;
    c.lambda = 0.0;
    c.eta = 0.1;
    c.epochs = 200;
    c.tol = 0.0;
    const auto r = baseline_train(BaselineKind::linear, d, c);
    std::vector<double> scores;
    for (const auto& x : d.instances()) scores.push_back(baseline_predict(r.model, x));
    EXPECT_EQ(accuracy(scores, d.labels()), 1.0);
    EXPECT_LT(r.report.final_objective, r.report.initial_objective);
}

TEST(BaselineTrainTest, MvfmRejectsZeroRank) {
    Dataset d(ViewSchema({2, 2}));
    d.push_back(dense_instance({{1, 0}, {0, 1}}, 1.0));
    TrainConfig c;
    c.k = 0;
    EXPECT_THROW(baseline_train(BaselineKind::mvfm, d, c), ConfigError);
    EXPECT_THROW(MvfmModel(ViewSchema({2}), 0), ConfigError);
}

TEST(BaselineTrainTest, DeterministicUnderSeed) {
    std::mt19937_64 rng(8);
    const ViewSchema s({3, 3});
    Dataset d(s);
    for (int i = 0; i < 100; ++i) d.push_back(random_instance(rng, s));
    TrainConfig c;
    c.k = 2;
    c.epochs = 5;
    for (auto kind : {BaselineKind::linear, BaselineKind::mvfm}) {
        const auto a = baseline_train(kind, d, c);
        const auto b = baseline_train(kind, d, c);
        EXPECT_EQ(a.model, b.model);
        EXPECT_EQ(a.report.objective_trace, b.report.objective_trace);
    }
}

// One SGD step equals theta - eta * dL * grad for every coordinate, with
// gradients evaluated on the pre-update model.
TEST(BaselineTrainTest, MvfmUpdateUsesCachedSums) {
    std::mt19937_64 rng(9);
    const ViewSchema s({3, 2, 2});
    const auto m0 = random_mvfm(rng, s, 2);
    auto x = random_instance(rng, s, 0.9);
    x.label = 1.0;
    TrainConfig c;
    c.k = 2;
    c.lambda = 0.0;
    c.eta = 0.05;
    MvfmModel m1 = m0;
    mvfm_instance_update(m1, x, c, c.eta);
    const double dl = loss_derivative(c.loss, mvfm_predict(m0, x), x.label);
    for (const auto& coord : all_mvfm_coordinates(m0)) {
        MvfmModel a = m0;
        const double expect = coordinate_ref(a, coord) - c.eta * dl * mvfm_gradient(m0, x, coord);
        EXPECT_NEAR(coordinate_ref(m1, coord), expect, 1e-12);
    }
}

}  // namespace
}  // namespace mvm
