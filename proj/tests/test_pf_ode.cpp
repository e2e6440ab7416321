// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "noisediff/dataset.hpp"
#include "noisediff/errors.hpp"
#include "noisediff/gaussian_mixture.hpp"
#include "noisediff/pf_ode.hpp"

namespace nd = noisediff;
using nd::GaussianMixture;
using nd::SigmaSchedule;
using nd::Tensor;

namespace {

// Exact flow of dx/dσ = σ(x - m)/(δ² + σ²) between two noise levels.
Tensor analytic_flow(const Tensor& x, const Tensor& m, double delta, double from, double to) {
    const double g = std::sqrt((delta * delta + to * to) / (delta * delta + from * from));
    return nd::linear_combine({{1.0 - g, m}, {g, x}});
}

SigmaSchedule schedule_with(int points) {
    SigmaSchedule s;
    s.n_steps = points;
    return s;
}

class NanScore final : public nd::ScoreModel {
public:
    Tensor score(const Tensor& x, double sigma) const override {
        Tensor s(x.shape());
        if (sigma < 1.0) s[0] = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    std::size_t data_size() const override { return 2; }
};

}  // namespace

TEST(KarrasGrid, TwoPointsAreEndpoints) {
    SigmaSchedule s{0.002, 80.0, 2, 7.0};
    EXPECT_EQ(nd::karras_grid(s), (std::vector<double>{80.0, 0.002}));
}

TEST(KarrasGrid, LinearGridByHand) {
    SigmaSchedule s{1.0, 9.0, 3, 1.0};
    const auto g = nd::karras_grid(s);
    ASSERT_EQ(g.size(), 3u);
    EXPECT_EQ(g[0], 9.0);
    EXPECT_DOUBLE_EQ(g[1], 5.0);
    EXPECT_EQ(g[2], 1.0);
}

TEST(KarrasGrid, StrictlyDecreasingWithExactEndpoints) {
    for (double rho : {0.5, 1.0, 3.0, 7.0, 12.0}) {
        for (int n : {2, 3, 17, 64, 500}) {
            SigmaSchedule s{1e-3, 80.0, n, rho};
            const auto g = nd::karras_grid(s);
            ASSERT_EQ(g.size(), static_cast<std::size_t>(n));
            EXPECT_EQ(g.front(), 80.0);
            EXPECT_EQ(g.back(), 1e-3);
            for (std::size_t i = 1; i < g.size(); ++i) ASSERT_LT(g[i], g[i - 1]) << "rho " << rho << " n " << n;
        }
    }
}

TEST(KarrasGrid, RejectsInvalidSchedules) {
    EXPECT_THROW(nd::karras_grid(SigmaSchedule{1e-3, 80.0, 1, 7.0}), nd::ValidationError);
    EXPECT_THROW(nd::karras_grid(SigmaSchedule{1.0, 1.0, 10, 7.0}), nd::ValidationError);
    EXPECT_THROW(nd::karras_grid(SigmaSchedule{2.0, 1.0, 10, 7.0}), nd::ValidationError);
    EXPECT_THROW(nd::karras_grid(SigmaSchedule{0.0, 1.0, 10, 7.0}), nd::ValidationError);
    EXPECT_THROW(nd::karras_grid(SigmaSchedule{1e-3, 80.0, 10, 0.0}), nd::ValidationError);
}

TEST(HeunStep, ZeroFieldLeavesPointInPlace) {
    const nd::ZeroScore zero(3);
    const Tensor x = Tensor::vector({1.5, -2.0, 0.25});
    EXPECT_EQ(nd::heun_step(x, 5.0, 1.0, zero), x);
    EXPECT_EQ(nd::heun_step(x, 1.0, 5.0, zero), x);
}

TEST(HeunStep, LocalErrorIsThirdOrder) {
    nd::SeededRng rng(1);
    const double delta = 0.5;
    const Tensor m = nd::sample_gaussian(rng, {8});
    const auto model = GaussianMixture::single(m, delta);
    const Tensor x = nd::sample_gaussian(rng, {8}, 2.0);
    const double from = 1.0;
    std::vector<double> errors;
    for (double h : {0.2, 0.1, 0.05, 0.025}) {
        const Tensor stepped = nd::heun_step(x, from, from - h, model);
        errors.push_back(nd::norm(stepped - analytic_flow(x, m, delta, from, from - h)));
    }
    for (std::size_t i = 1; i < errors.size(); ++i) {
        EXPECT_GE(std::log2(errors[i - 1] / errors[i]), 2.7) << "halving " << i;
    }
}

TEST(HeunStep, LinearForCenteredGaussian) {
    const auto model = GaussianMixture::single(Tensor({5}), 0.3);
    nd::SeededRng rng(2);
    const Tensor x = nd::sample_gaussian(rng, {5});
    for (double c : {2.0, -0.5, 8.0}) {
        const Tensor lhs = nd::heun_step(nd::scale(x, c), 3.0, 1.5, model);
        const Tensor rhs = nd::scale(nd::heun_step(x, 3.0, 1.5, model), c);
        EXPECT_LE(nd::relative_error(lhs, rhs), 1e-14);
    }
}

TEST(HeunStep, StepIntoZeroIsPlainEuler) {
    const auto model = GaussianMixture::single(Tensor::vector({1.0, 1.0}), 0.2);
    const Tensor x = Tensor::vector({0.0, 2.0});
    const double from = 0.1;
    const Tensor s = model.score(x, from);
    const Tensor euler = nd::linear_combine({{1.0, x}, {from * from, s}});
    EXPECT_LE(nd::relative_error(nd::heun_step(x, from, 0.0, model), euler), 1e-15);
}

TEST(HeunStep, NonFiniteDriftReportsStep) {
    const NanScore bad;
    try {
        nd::heun_step(Tensor({2}), 2.0, 0.5, bad);
        FAIL() << "expected NumericalError";
    } catch (const nd::NumericalError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("2 -> 0.5"), std::string::npos) << msg;
    }
}

TEST(HeunStep, RejectsEqualLevels) {
    const nd::ZeroScore zero(1);
    EXPECT_THROW(nd::heun_step(Tensor({1}), 1.0, 1.0, zero), nd::ValidationError);
    EXPECT_THROW(nd::heun_step(Tensor({1}), -1.0, 1.0, zero), nd::ValidationError);
}

TEST(Encode, MatchesClosedFormMapWithFineGrid) {
    nd::SeededRng rng(3);
    const double delta = 0.05;
    const Tensor m = nd::sample_gaussian(rng, {16, 16}, 0.3);
    const auto model = GaussianMixture::single(m, delta);
    const Tensor x0 = model.sample(rng);
    const nd::OdeConfig ode{schedule_with(256), model};
    const Tensor expected = analytic_flow(x0, m, delta, ode.schedule.sigma_min, ode.schedule.sigma_max);
    EXPECT_LE(nd::relative_error(nd::encode(x0, ode), expected), 1e-3);
}

TEST(Encode, ClosedFormErrorShrinksAtSecondOrder) {
    nd::SeededRng rng(4);
    const double delta = 0.05;
    const Tensor m = nd::sample_gaussian(rng, {64}, 0.3);
    const auto model = GaussianMixture::single(m, delta);
    const Tensor x0 = model.sample(rng);
    std::vector<double> errors;
    for (int points : {33, 65, 129, 257}) {
        const nd::OdeConfig ode{schedule_with(points), model};
        const Tensor expected = analytic_flow(x0, m, delta, ode.schedule.sigma_min, ode.schedule.sigma_max);
        errors.push_back(nd::relative_error(nd::encode(x0, ode), expected));
    }
    for (std::size_t i = 1; i < errors.size(); ++i) EXPECT_GE(errors[i - 1] / errors[i], 3.5) << i;
    EXPECT_LE(errors[1], 1e-2);
}

TEST(Encode, DegenerateScheduleIsIdentity) {
    const auto model = GaussianMixture::single(Tensor({3}));
    const nd::OdeConfig ode{SigmaSchedule{2.0, 2.0, 64, 7.0}, model};
    const Tensor x = Tensor::vector({0.1, 0.2, 0.3});
    EXPECT_EQ(nd::encode(x, ode), x);
    EXPECT_EQ(nd::decode(x, ode), x);
}

TEST(Encode, PairwiseDistancesScaleByClosedFormJacobian) {
    nd::SeededRng rng(5);
    const double delta = 0.05;
    const auto model = GaussianMixture::single(nd::sample_gaussian(rng, {32}, 0.3), delta);
    const nd::OdeConfig ode{SigmaSchedule{}, model};
    const double gain = std::sqrt((delta * delta + 80.0 * 80.0) / (delta * delta + 1e-6));
    std::vector<Tensor> xs, zs;
    for (int i = 0; i < 8; ++i) {
        xs.push_back(model.sample(rng));
        zs.push_back(nd::encode(xs.back(), ode));
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = i + 1; j < xs.size(); ++j) {
            const double ratio = nd::norm(zs[i] - zs[j]) / nd::norm(xs[i] - xs[j]);
            EXPECT_GT(ratio, 0.0);
            EXPECT_NEAR(ratio / gain, 1.0, 1e-2);
        }
    }
}

TEST(Encode, DeterministicAndShapePreserving) {
    const auto model = nd::template_mixture(8, 3);
    nd::SeededRng rng(6);
    const Tensor x0 = model.sample(rng);
    const nd::OdeConfig ode{SigmaSchedule{}, model};
    const Tensor a = nd::encode(x0, ode);
    EXPECT_EQ(a.shape(), x0.shape());
    EXPECT_EQ(a, nd::encode(x0, ode));
}

TEST(Encode, BackendSizeMismatchRejected) {
    const auto model = GaussianMixture::single(Tensor({4}));
    const nd::OdeConfig ode{SigmaSchedule{}, model};
    EXPECT_THROW(nd::encode(Tensor({5}), ode), nd::ShapeError);
}

TEST(Encode, NonFiniteInputRejected) {
    const auto model = GaussianMixture::single(Tensor({2}));
    const nd::OdeConfig ode{SigmaSchedule{}, model};
    Tensor x({2});
    x[0] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(nd::encode(x, ode), nd::NumericalError);
}

TEST(Decode, RoundTripOnMixture) {
    const auto model = nd::template_mixture(16, 4);
    const nd::OdeConfig ode{SigmaSchedule{}, model};
    nd::SeededRng rng(7);
    for (int i = 0; i < 4; ++i) {
        const Tensor x0 = model.sample(rng);
        EXPECT_LE(nd::relative_error(nd::decode(nd::encode(x0, ode), ode), x0), 1e-2);
    }
}

TEST(Decode, RoundTripErrorShrinksWhenStepsDouble) {
    const auto model = nd::template_mixture(16, 4);
    nd::SeededRng rng(8);
    const Tensor x0 = model.sample(rng);
    double previous = 0.0;
    for (int points : {32, 64}) {
        const nd::OdeConfig ode{schedule_with(points), model};
        const double err = nd::relative_error(nd::decode(nd::encode(x0, ode), ode), x0);
        if (previous > 0.0) EXPECT_GE(previous / err, 3.5);
        previous = err;
    }
}

TEST(Decode, CenterIsFixedPoint) {
    nd::SeededRng rng(9);
    const Tensor m = nd::sample_gaussian(rng, {10});
    const auto model = GaussianMixture::single(m, 0.05);
    const nd::OdeConfig ode{SigmaSchedule{}, model};
    EXPECT_LE(nd::relative_error(nd::decode(m, ode), m), 1e-15);
}

TEST(Decode, MatchesClosedFormShrink) {
    nd::SeededRng rng(10);
    const double delta = 0.05;
    const Tensor m = nd::sample_gaussian(rng, {64}, 0.3);
    const auto model = GaussianMixture::single(m, delta);
    const nd::OdeConfig ode{schedule_with(128), model};
    const Tensor xt = nd::sample_gaussian(rng, {64}, 80.0);
    const Tensor expected = analytic_flow(xt, m, delta, 80.0, 1e-3);
    EXPECT_LE(nd::relative_error(nd::decode(xt, ode), expected), 1e-3);
}

TEST(Decode, PriorSamplesLandOnDataDistribution) {
    nd::SeededRng rng(11);
    const double delta = 0.05;
    const std::size_t n = 64;
    const Tensor m = nd::sample_gaussian(rng, {n}, 0.5);
    const auto model = GaussianMixture::single(m, delta);
    const nd::OdeConfig ode{SigmaSchedule{}, model};
    Tensor mean({n});
    std::vector<Tensor> outs;
    for (int i = 0; i < 256; ++i) {
        outs.push_back(nd::decode(nd::sample_gaussian(rng, {n}, 80.0), ode));
        mean = mean + outs.back();
    }
    mean = nd::scale(mean, 1.0 / 256.0);
    double ss = 0.0;
    for (const auto& o : outs) ss += nd::squared_distance(o, mean);
    const double pooled_std = std::sqrt(ss / (255.0 * static_cast<double>(n)));
    EXPECT_LE(nd::relative_error(mean, m), 0.05);
    EXPECT_NEAR(pooled_std / delta, 1.0, 0.05);
}

TEST(Decode, FromIntermediateLevelMatchesClosedForm) {
    nd::SeededRng rng(12);
    const double delta = 0.1;
    const Tensor m = nd::sample_gaussian(rng, {16});
    const auto model = GaussianMixture::single(m, delta);
    const nd::OdeConfig ode{schedule_with(128), model};
    const Tensor x = nd::sample_gaussian(rng, {16}, 2.0);
    EXPECT_LE(nd::relative_error(nd::decode_from(x, 2.0, ode), analytic_flow(x, m, delta, 2.0, 1e-3)), 1e-3);
    const Tensor up = nd::encode_to(m + x, 2.0, ode);
    EXPECT_LE(nd::relative_error(up, analytic_flow(m + x, m, delta, 1e-3, 2.0)), 1e-3);
    EXPECT_THROW(nd::decode_from(x, 1e-4, ode), nd::ValidationError);
}

TEST(Encode, InDistributionLatentSitsOnNoiseSphere) {
    const auto model = nd::template_mixture(32, 4);
    const nd::OdeConfig ode{SigmaSchedule{}, model};
    nd::SeededRng rng(13);
    for (int i = 0; i < 3; ++i) {
        const Tensor z = nd::encode(model.sample(rng), ode);
        const double ratio = nd::norm(z) / (80.0 * std::sqrt(static_cast<double>(z.size())));
        EXPECT_GE(ratio, 0.9);
        EXPECT_LE(ratio, 1.1);
    }
}
