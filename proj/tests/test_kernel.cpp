#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "kinetic/kernel.hpp"
#include "kinetic/quadrature.hpp"

using namespace kinetic;
constexpr double pi = std::numbers::pi;

TEST(SphereArea, KnownValues) {
    EXPECT_NEAR(sphere_area(0), 2.0, 1e-15);
    EXPECT_NEAR(sphere_area(1), 2 * pi, 1e-14);
    EXPECT_NEAR(sphere_area(2), 4 * pi, 1e-14);
}

TEST(Phi, Examples) {
    const auto a = AngularMeasure::power_law(0.5);
    const CollisionKernel maxwell(0.0, 2.5, a, 3);
    for (double z : {0.0, 0.1, 1.0, 50.0}) EXPECT_EQ(phi(maxwell, z), 2.5);
    for (double g : {-0.5, 0.0, 1.0 / 3, 1.0}) EXPECT_DOUBLE_EQ(phi(CollisionKernel(g, 1.7, a, 3), 1.0), 1.7);
    EXPECT_NEAR(phi(CollisionKernel(1.0 / 3, 1.0, a, 3), 8.0), 2.0, 1e-15);
}

TEST(Phi, CapAndMonotonicity) {
    const auto a = AngularMeasure::power_law(0.5);
    const CollisionKernel soft(-0.5, 1.0, a, 3);
    EXPECT_EQ(soft.phi_cap(), 1e6);
    EXPECT_EQ(soft.phi(0.0), 1e6);
    EXPECT_EQ(soft.phi(1e-20), 1e6);
    const CollisionKernel hard(0.5, 1.0, a, 3);
    EXPECT_EQ(hard.phi(0.0), 0.0);
    double prev_soft = soft.phi(1e-3), prev_hard = hard.phi(1e-3);
    for (double z = 2e-3; z < 100; z *= 1.5) {
        EXPECT_LE(soft.phi(z), prev_soft);
        EXPECT_GE(hard.phi(z), prev_hard);
        prev_soft = soft.phi(z);
        prev_hard = hard.phi(z);
    }
}

TEST(CollisionKernel, Validation) {
    const auto a = AngularMeasure::power_law(0.5);
    EXPECT_THROW(CollisionKernel(1.5, 1.0, a, 3), DomainError);
    EXPECT_THROW(CollisionKernel(-3.0, 1.0, a, 3), DomainError);
    EXPECT_THROW(CollisionKernel(0.0, -1.0, a, 3), DomainError);
    EXPECT_THROW(CollisionKernel(0.0, 1.0, a, 3, 2.0), DomainError);
    EXPECT_THROW(CollisionKernel(0.0, 1.0, a, 1), DomainError);
    EXPECT_NO_THROW(CollisionKernel(0.0, 1.0, a, 3, 0.5));
    EXPECT_THROW(AngularMeasure::power_law(1.0), DomainError);
    EXPECT_THROW(AngularMeasure::power_law(0.5, 1.0, 4.0), DomainError);
}

TEST(FromInversePower, Exponents) {
    const auto k7 = from_inverse_power({7.0});
    EXPECT_NEAR(k7.gamma(), 1.0 / 3, 1e-15);
    EXPECT_NEAR(k7.angular().nu(), 1.0 / 3, 1e-15);
    const auto k5 = from_inverse_power({5.0});
    EXPECT_EQ(k5.gamma(), 0.0);
    EXPECT_EQ(k5.angular().nu(), 0.5);
    const auto k = from_inverse_power({11.0 / 3});
    EXPECT_NEAR(k.gamma(), -0.5, 1e-15);
    EXPECT_NEAR(k.angular().nu(), 0.75, 1e-15);
    EXPECT_THROW(from_inverse_power({3.0}), DomainError);
    EXPECT_THROW(from_inverse_power({2.0}), DomainError);
}

TEST(AngularConstants, ClosedFormValues) {
    const auto c = angular_constants(AngularMeasure::power_law(0.5, 1.0, 0.01), 3);
    EXPECT_NEAR(c.S_eps, 118.57, 0.01);
    EXPECT_NEAR(c.alpha_eps, 1.2566, 1e-4);
    EXPECT_NEAR(c.S_eps, 2 * pi * (10 - 1 / std::sqrt(pi)) / 0.5, 1e-10);
    EXPECT_NEAR(c.alpha_eps, 2 * pi * 0.1 / 0.5, 1e-12);
    EXPECT_NEAR(c.kappa1_eps, (std::sqrt(pi) - 0.1) / 0.5, 1e-12);
    EXPECT_NEAR(c.kappa1, std::sqrt(pi) / 0.5, 1e-12);
}

TEST(AngularConstants, MatchQuadrature) {
    for (double nu : {0.2, 1.0 / 3, 0.5, 0.75, 0.9}) {
        for (double eps : {1e-3, 1e-2, 0.3}) {
            const auto a = AngularMeasure::power_law(nu, 1.3, eps);
            const auto c = angular_constants(a, 3);
            const double area = 2 * pi;
            // substitution theta = e^s keeps the quadrature well conditioned
            const double mass = adaptive_simpson([&](double s) { return a.density(std::exp(s)) * std::exp(s); },
                                                 std::log(eps), std::log(pi), 1e-11);
            const double m1 = adaptive_simpson([&](double s) { return a.density(std::exp(s)) * std::exp(2 * s); },
                                               std::log(eps), std::log(pi), 1e-11);
            const double m0 = adaptive_simpson([&](double s) { return a.density(std::exp(s)) * std::exp(2 * s); },
                                               std::log(eps) - 30 / (1 - nu), std::log(eps), 1e-11);
            EXPECT_NEAR(c.S_eps, area * mass, 1e-8 * c.S_eps);
            EXPECT_NEAR(c.kappa1_eps, m1, 1e-8 * c.kappa1_eps);
            EXPECT_NEAR(c.alpha_eps, area * m0, 1e-8 * c.alpha_eps);
        }
    }
}

TEST(AngularConstants, MonotoneInEps) {
    double prev_alpha = 1e300, prev_S = 0;
    for (double eps = 0.5; eps > 1e-6; eps /= 2) {
        const auto c = angular_constants(AngularMeasure::power_law(0.5, 1.0, eps), 3);
        EXPECT_LT(c.alpha_eps, prev_alpha);
        EXPECT_GT(c.S_eps, prev_S);
        prev_alpha = c.alpha_eps;
        prev_S = c.S_eps;
    }
    EXPECT_LT(prev_alpha, 0.02);
    const auto near_pi = angular_constants(AngularMeasure::power_law(0.5, 1.0, pi * (1 - 1e-12)), 3);
    EXPECT_NEAR(near_pi.S_eps, 0.0, 1e-9);
}

TEST(SampleTheta, Endpoints) {
    const auto a = AngularMeasure::power_law(0.5, 1.0, 0.01);
    EXPECT_NEAR(sample_theta(a, 0.0).value(), 0.01, 1e-15);
    EXPECT_NEAR(sample_theta(a, 1.0).value(), pi, 1e-12);
}

TEST(SampleTheta, MedianMatchesBisectionOracle) {
    const auto a = AngularMeasure::power_law(0.5, 1.0, 0.01);
    // bisection on the numerically integrated CDF
    const double total = a.mass(0.01, pi);
    auto cdf = [&](double th) {
        return adaptive_simpson([&](double s) { return a.density(std::exp(s)) * std::exp(s); }, std::log(0.01),
                                std::log(th), 1e-14) /
               total;
    };
    double lo = 0.01, hi = pi;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < 0.5 ? lo : hi) = mid;
    }
    EXPECT_NEAR(sample_theta(a, 0.5).value(), lo, 1e-10);
    EXPECT_NEAR(sample_theta(a, 0.5).value(), 0.035841, 1e-6);
}

TEST(SampleTheta, KolmogorovSmirnov) {
    const auto a = AngularMeasure::power_law(0.5, 1.0, 1e-3);
    Rng rng(42);
    std::vector<double> xs(200000);
    for (auto& x : xs) x = sample_theta(a, rng.uniform()).value();
    std::sort(xs.begin(), xs.end());
    const double e = std::pow(1e-3, -0.5), p = std::pow(pi, -0.5);
    double ks = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double F = (e - std::pow(xs[i], -0.5)) / (e - p);
        ks = std::max({ks, std::abs(F - double(i) / xs.size()), std::abs(F - double(i + 1) / xs.size())});
    }
    EXPECT_LT(ks, 0.01);
}

TEST(SampleXi, Distribution) {
    Rng rng(7);
    int plus = 0;
    for (int i = 0; i < 100000; ++i) plus += sample_xi(2, rng)[0] > 0;
    EXPECT_NEAR(plus / 1e5, 0.5, 3 * 0.5 / std::sqrt(1e5));

    Velocity mean(2);
    const int n = 1000000;
    for (int i = 0; i < n; ++i) mean += sample_xi(3, rng).vec();
    EXPECT_LT(norm((1.0 / n) * mean), 0.005);

    for (int i = 0; i < 1000; ++i) EXPECT_NEAR(norm(sample_xi(4, rng).vec()), 1.0, 1e-12);
}

TEST(MaxwellUniform, ConstantDensity) {
    const auto a = AngularMeasure::maxwell_uniform(2.0, 0.1);
    EXPECT_EQ(a.density(0.5), a.density(2.0));
    EXPECT_NEAR(a.mass(0.1, pi), a.density(1.0) * (pi - 0.1), 1e-12);
    const double u = 0.3;
    EXPECT_NEAR(a.inverse_cdf(0.1, u), 0.1 + u * (pi - 0.1), 1e-12);
}

TEST(UserTable, MatchesPowerLawWhenSampledFromIt) {
    AngularTable t;
    for (double th = 0.05; th < pi; th += 0.01) {
        t.theta.push_back(th);
        t.beta.push_back(std::pow(th, -1.5));
    }
    t.theta.push_back(pi);
    t.beta.push_back(std::pow(pi, -1.5));
    const auto tab = AngularMeasure::user_table(t, 0.5, 1e-3);
    const auto ref = AngularMeasure::power_law(0.5, 1.0, 1e-3);
    const auto ct = angular_constants(tab, 3);
    const auto cr = angular_constants(ref, 3);
    EXPECT_NEAR(ct.S_eps, cr.S_eps, 1e-3 * cr.S_eps);
    EXPECT_NEAR(ct.kappa1_eps, cr.kappa1_eps, 1e-3 * cr.kappa1_eps);
    EXPECT_NEAR(ct.alpha_eps, cr.alpha_eps, 1e-9 * cr.alpha_eps);
    for (double u : {0.0, 0.2, 0.5, 0.9, 1.0}) {
        EXPECT_NEAR(tab.inverse_cdf(1e-3, u), ref.inverse_cdf(1e-3, u), 2e-3 * ref.inverse_cdf(1e-3, u));
    }
}

TEST(ProposalFloor, AlignedDraws) {
    auto a = AngularMeasure::power_law(0.5, 1.0, 4e-3);
    a.set_proposal_floor(1e-3);
    const auto b = AngularMeasure::power_law(0.5, 1.0, 1e-3);
    for (double u : {0.1, 0.5, 0.9}) EXPECT_EQ(a.inverse_cdf(a.proposal_floor(), u), b.inverse_cdf(b.proposal_floor(), u));
    EXPECT_THROW(a.set_proposal_floor(5e-3), DomainError);
}
