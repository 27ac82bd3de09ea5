#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "kinetic/bounds.hpp"

using namespace kinetic;
constexpr double pi = std::numbers::pi;

namespace {

// Classical RK4 for rho' = mu(rho).
double rk4(const RateFunction& mu, double a, double t, double h = 1e-5) {
    const int n = static_cast<int>(std::ceil(t / h));
    const double dt = t / n;
    double y = a;
    for (int i = 0; i < n; ++i) {
        const double k1 = mu(y), k2 = mu(y + dt / 2 * k1), k3 = mu(y + dt / 2 * k2), k4 = mu(y + dt * k3);
        y += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return y;
}

}  // namespace

TEST(YudovitchBound, Examples) {
    const auto mu = log_lipschitz_rate(1.0);
    const auto zero = yudovitch_bound(0.0, mu, {0.0, 1.0, 5.0});
    for (double v : zero.values) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(yudovitch_bound(0.3, mu, {0.0}).values[0], 0.3);
    const double a = std::exp(-std::numbers::e);
    const double v = yudovitch_bound(a, mu, {std::log(2.0)}).values[0];
    EXPECT_NEAR(v, rk4(mu, a, std::log(2.0)), 1e-8);
    EXPECT_NEAR(v, 0.4235, 1e-4);
    EXPECT_NEAR(v, std::exp((1 - std::numbers::e) / 2), 1e-9);
}

TEST(YudovitchBound, Errors) {
    EXPECT_THROW(yudovitch_bound(0.5, [](double) { return -1.0; }, {1.0}), DomainError);
    EXPECT_THROW(yudovitch_bound(-0.5, log_lipschitz_rate(1), {1.0}), DomainError);
    EXPECT_THROW(yudovitch_bound(0.5, log_lipschitz_rate(1), {1.0, 0.5}), DomainError);
}

TEST(YudovitchBound, LinearRateIsExponential) {
    const auto v = yudovitch_bound(0.2, [](double x) { return 0.7 * x; }, {0.5, 1.0, 2.0});
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(v.values[k], 0.2 * std::exp(0.7 * v.times[k]), 1e-9);
}

TEST(YudovitchBound, MonotoneAndContinuousAtZero) {
    const auto mu = log_lipschitz_rate(1.0);
    const std::vector<double> grid{0.0, 0.5, 1.0, 2.0};
    double prev_end = 0;
    for (double a : {1e-16, 1e-8, 1e-4, 1e-2, 0.5}) {
        const auto c = yudovitch_bound(a, mu, grid);
        for (std::size_t k = 1; k < grid.size(); ++k) EXPECT_GT(c.values[k], c.values[k - 1]);
        EXPECT_GT(c.values.back(), prev_end);
        prev_end = c.values.back();
    }
    // rho(t) -> 0 as a -> 0 at fixed t
    const double t = 1.0;
    const double r4 = yudovitch_bound(1e-4, mu, {t}).values[0];
    const double r8 = yudovitch_bound(1e-8, mu, {t}).values[0];
    const double r16 = yudovitch_bound(1e-16, mu, {t}).values[0];
    EXPECT_LT(r8, r4);
    EXPECT_LT(r16, r8);
    EXPECT_LT(r16, 1e-5);
}

TEST(HardBound, Examples) {
    const HardStabilityParams p{1.0, 1.0, 1.0};
    for (double v : hard_bound(p, 0.0, {0.0, 1.0, 3.0}).values) EXPECT_EQ(v, 0.0);
    EXPECT_NEAR(hard_bound(p, 0.25, {0.0}).values[0], 0.25, 1e-15);
    const double a = std::exp(-std::numbers::e);
    EXPECT_NEAR(hard_bound(p, a, {std::log(2.0)}).values[0], 0.4235, 1e-4);
    EXPECT_NEAR(hard_bound(p, a, {std::log(2.0)}).values[0], rk4(log_lipschitz_rate(1.0), a, std::log(2.0)), 1e-8);
    EXPECT_THROW(hard_bound(HardStabilityParams{0.0, 1.0, 1.0}, 0.1, {1.0}), DomainError);
    EXPECT_THROW(hard_bound(p, -0.1, {1.0}), DomainError);
}

TEST(HardBound, ClosedFormMatchesInversionOnGrid) {
    const std::vector<double> grid{0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    for (double a : {1e-3, 0.01, 0.1, 0.5, 1.0}) {
        for (double K : {0.1, 0.5, 1.0, 2.0, 5.0}) {
            const HardStabilityParams p{K, 1.0, 1.0};
            // log space: at K = 5, t = 3 the envelope is about exp(3e6)
            const auto closed = hard_log_bound(p, a, grid);
            const auto numeric = hard_log_bound_numeric(p, a, grid);
            for (std::size_t k = 0; k < grid.size(); ++k) {
                EXPECT_NEAR(closed[k], numeric[k], 1e-6 * std::max(1.0, std::abs(closed[k])))
                    << "a=" << a << " K=" << K << " t=" << grid[k];
            }
            if (K <= 1.0) {
                const auto c = hard_bound(p, a, grid), n = hard_bound_numeric(p, a, grid);
                for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_NEAR(c.values[k], n.values[k], 1e-6 * c.values[k]);
            }
        }
    }
}

TEST(HardBound, PastOneMatchesRk4) {
    const auto mu = log_lipschitz_rate(0.8);
    for (double a : {0.3, 1.0, 2.0}) {
        for (double t : {0.5, 2.0}) EXPECT_NEAR(log_lipschitz_envelope(a, 0.8, t), rk4(mu, a, t), 1e-7 * rk4(mu, a, t));
    }
}

TEST(SoftBound, Examples) {
    SoftStabilityParams p{1.0, 1.0, 1.0, 2.0};
    EXPECT_EQ(soft_bound(p, 0.0, 1.0), 0.0);
    EXPECT_NEAR(soft_bound(p, 0.1, 1.0), 0.1 * std::exp(3.0), 1e-14);
    EXPECT_NEAR(soft_bound(p, 0.1, 1.0), 2.0086, 1e-4);
    EXPECT_EQ(soft_bound(SoftStabilityParams{0.0, 1.0, 1.0, 2.0}, 0.3, 5.0), 0.3);
    for (double d : {0.01, 0.5, 3.0}) EXPECT_NEAR(soft_bound(p, d, 0.7), d * soft_bound(p, 1.0, 0.7), 1e-14);
}

TEST(SoftBound, Validation) {
    SoftStabilityParams p{1.0, 0.0, 0.0, 1.1};
    EXPECT_THROW(p.validate(3, -0.5), DomainError);
    p.p = 1.3;
    EXPECT_NO_THROW(p.validate(3, -0.5));
    EXPECT_THROW(soft_bound(p, -1.0, 1.0), DomainError);
}

TEST(ExpMoment, Examples) {
    EXPECT_EQ(exp_moment(std::vector<Velocity>(4, Velocity(3)), 0.5, 1.0), 1.0);
    EXPECT_NEAR(exp_moment({Velocity{1, 0, 0}}, 1.0, 1.0), std::numbers::e, 1e-15);
    EXPECT_TRUE(std::isinf(exp_moment({Velocity{1e6, 0, 0}}, 1.0, 1.0)));
    EXPECT_THROW(exp_moment({Velocity{1, 0, 0}}, 0.0, 1.0), DomainError);
    EXPECT_THROW(exp_moment({Velocity{1, 0, 0}}, 1.0, 2.0), DomainError);
}

TEST(ExpMoment, GaussianMatchesQuadrature) {
    // E exp(0.1 |v|) for v ~ N(0, I_3): |v| has density sqrt(2/pi) r^2 e^{-r^2/2}.
    double want = 0;
    for (double r0 = 0; r0 < 40; r0 += 2)
        want += adaptive_simpson([](double r) { return std::sqrt(2 / pi) * r * r * std::exp(-r * r / 2 + 0.1 * r); },
                                 r0, r0 + 2, 1e-14);
    const std::size_t n = 100000;
    const Ensemble e = init(InitialSpec{GaussianInit{}, 123}, n, 3);
    const double got = exp_moment(e, 0.1, 1.0);
    double var = 0;
    for (const auto& v : e.velocities()) var += std::pow(std::exp(0.1 * norm(v)) - got, 2);
    const double se = std::sqrt(var / (n - 1) / n);
    EXPECT_NEAR(got, want, 3 * se);
}

TEST(Moment, Examples) {
    const std::vector<Velocity> v{Velocity{3, 4}, Velocity{0, 0}};
    EXPECT_EQ(moment(v, 0.0), 1.0);
    EXPECT_EQ(moment(v, 1.0), 2.5);
    EXPECT_EQ(moment(v, 2.0), 12.5);
    EXPECT_THROW(moment(v, -1.0), DomainError);
}

TEST(FirstMomentBound, Examples) {
    const auto k = from_inverse_power({7.0});
    EXPECT_EQ(first_moment_bound(1.5, k, 0.0), 2.5);
    // no angular mass above the cutoff
    const CollisionKernel flat(1.0 / 3, 1.0, AngularMeasure::power_law(1.0 / 3, 1.0, pi * (1 - 1e-15)), 3);
    EXPECT_NEAR(first_moment_bound(1.5, flat, 10.0), 2.5, 1e-12);
}

TEST(FirstMomentBound, MatchesOdeEnvelope) {
    // y' = rate (y + 1) with rate = C kappa1^eps |S^1|, integrated by RK4
    const auto k = from_inverse_power({7.0});
    const double rate = k.constants().kappa1_eps * sphere_area(1);
    const double y = rk4([&](double x) { return rate * (x + 1); }, 1.2, 1.0) ;
    EXPECT_NEAR(first_moment_bound(1.2, k, 1.0), y + 1, 1e-8 * y);
}

TEST(FirstMomentBound, LpBranch) {
    const CollisionKernel k(-1.5, 1.0, AngularMeasure::power_law(0.9), 3);
    EXPECT_THROW(first_moment_bound(1.0, k, 0.5), MissingLpNorm);
    const LpGrowth lp{1.0, 1.0, 2.0};
    EXPECT_EQ(first_moment_bound(1.0, k, 0.0, lp), 1.0);
    const double t = 0.3;
    const double A1 = 0.5 * k.constants().kappa1_eps * sphere_area(1);
    const double integral =
        adaptive_simpson([](double s) { return std::tan(std::atan(1.0) + s); }, 0.0, t, 1e-14);
    EXPECT_NEAR(first_moment_bound(1.0, k, t, lp), 1.0 + 2 * A1 * integral + A1 * t, 1e-10);
    EXPECT_TRUE(std::isinf(first_moment_bound(1.0, k, pi / 4, lp)));
}

TEST(Tstar, Examples) {
    EXPECT_EQ(tstar(1.0, 1.0), pi / 2 - pi / 4);
    EXPECT_EQ(tstar(0.0, 2.0), pi / 4);
    EXPECT_LT(tstar(1e12, 1.0), 1e-11);
    EXPECT_THROW(tstar(1.0, 0.0), DomainError);
}

TEST(MomentThreshold, Examples) {
    const double s0 = 2 * std::sqrt(5.0) - 1;
    EXPECT_NEAR(moment_threshold({s0}), 2.0, 1e-12);
    EXPECT_EQ(moment_threshold({5.0}), 0.0);
    // gamma^2/(nu+gamma) at s = 3.01 is 1.99^2 / (2.01 * 0.01)
    EXPECT_NEAR(moment_threshold({3.01}), 1.99 * 1.99 / (2.01 * 0.01), 1e-9);
    EXPECT_NEAR(moment_threshold({3.01}), 200.0, 0.02 * 200);
    EXPECT_THROW(moment_threshold({3.0}), DomainError);
    // continuity around s0
    EXPECT_NEAR(moment_threshold({s0 + 1e-9}), 2.0, 1e-6);
}

TEST(Fit, HardRateIsSmallestDominating) {
    std::vector<Observation> obs;
    for (double a : {0.1, 0.01, 0.001}) obs.push_back({a, 1.0, log_lipschitz_envelope(a, 0.8, 1.0), 0.0});
    const double K = fit_hard_rate(obs);
    EXPECT_NEAR(K, 0.8, 1e-8);
    EXPECT_TRUE(hard_dominates(K, obs));
    EXPECT_FALSE(hard_dominates(K * (1 - 1e-6), obs));
    EXPECT_EQ(fit_hard_rate({{0.1, 1.0, 0.05, 0.0}}), 0.0);
}

TEST(Fit, SoftRate) {
    const std::vector<Observation> obs{{0.1, 1.0, 0.1 * std::exp(0.3), 0.0}, {0.01, 2.0, 0.01 * std::exp(0.2), 0.0}};
    EXPECT_NEAR(fit_soft_rate(obs), 0.3, 1e-8);
}

TEST(WriteCurveCsv, Format) {
    std::ostringstream os;
    write_curve_csv(os, BoundCurve{{0.0, 0.5}, {1.0, 0.25}});
    EXPECT_EQ(os.str(), "t,value\n0,1\n0.5,0.25\n");
}
