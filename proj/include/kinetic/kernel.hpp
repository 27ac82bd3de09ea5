#pragma once

// Collision kernels B = Phi(|v - v_*|) beta(d theta).
//
// Phi(z) = C z^gamma is the canonical velocity part (capped at phi_cap for
// soft potentials). beta is a singular angular measure with
// beta(theta) ~ strength * theta^{-1-nu}, nu in (0, 1), so that the first
// angular moment kappa_1 = int theta beta(d theta) is finite while the total
// mass diverges. Simulation uses the measure truncated to [eps_theta, pi].

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "kinetic/errors.hpp"
#include "kinetic/geometry.hpp"
#include "kinetic/quadrature.hpp"
#include "kinetic/rng.hpp"

namespace kinetic {

/// Surface measure |S^{k}| of the unit sphere in R^{k+1}; |S^0| = 2.
inline double sphere_area(int k) {
    const double n = k + 1;
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

enum class AngularMode { power_law, maxwell_uniform, user_table };

inline std::string to_string(AngularMode m) {
    switch (m) {
        case AngularMode::power_law: return "power_law";
        case AngularMode::maxwell_uniform: return "maxwell_uniform";
        case AngularMode::user_table: return "user_table";
    }
    return "?";
}

/// Piecewise-linear beta on [theta.front(), pi]; below theta.front() the
/// density continues as beta(theta_0) (theta/theta_0)^{-1-nu}.
struct AngularTable {
    std::vector<double> theta;
    std::vector<double> beta;
};

class AngularMeasure {
public:
    static AngularMeasure power_law(double nu, double strength = 1.0, double eps_theta = 1e-3) {
        AngularMeasure a;
        a.nu_ = nu;
        a.strength_ = strength;
        a.eps_theta_ = eps_theta;
        a.proposal_floor_ = eps_theta;
        a.mode_ = AngularMode::power_law;
        a.validate();
        return a;
    }

    /// Bounded density beta(theta) = strength on (0, pi].
    static AngularMeasure maxwell_uniform(double strength = 1.0, double eps_theta = 1e-3) {
        AngularMeasure a;
        a.nu_ = 0.5;  // unused by the density; kept inside (0, 1)
        a.strength_ = strength;
        a.eps_theta_ = eps_theta;
        a.proposal_floor_ = eps_theta;
        a.mode_ = AngularMode::maxwell_uniform;
        a.validate();
        return a;
    }

    static AngularMeasure user_table(AngularTable table, double nu, double eps_theta = 1e-3) {
        AngularMeasure a;
        a.nu_ = nu;
        a.strength_ = 1.0;
        a.eps_theta_ = eps_theta;
        a.proposal_floor_ = eps_theta;
        a.mode_ = AngularMode::user_table;
        a.table_ = std::move(table);
        a.validate();
        a.build_table_cdf();
        return a;
    }

    double nu() const noexcept { return nu_; }
    double strength() const noexcept { return strength_; }
    double eps_theta() const noexcept { return eps_theta_; }
    AngularMode mode() const noexcept { return mode_; }
    const std::optional<AngularTable>& table() const noexcept { return table_; }

    /// beta is nondecreasing in cos(theta), convex and C^1 (recorded, not checked).
    bool monotone_convex() const noexcept { return monotone_convex_; }
    void set_monotone_convex(bool flag) noexcept { monotone_convex_ = flag; }

    /// Angles are proposed from the measure truncated at this floor and
    /// collisions with theta < eps_theta are discarded. With the floor below
    /// eps_theta the random stream consumed per event no longer depends on
    /// eps_theta, so runs at several cutoffs can share one stream.
    double proposal_floor() const noexcept { return proposal_floor_; }
    void set_proposal_floor(double floor) {
        if (!(floor > 0.0 && floor <= eps_theta_)) {
            throw DomainError("proposal floor must lie in (0, eps_theta]");
        }
        proposal_floor_ = floor;
    }

    AngularMeasure with_eps(double eps_theta) const {
        AngularMeasure a = *this;
        a.eps_theta_ = eps_theta;
        a.proposal_floor_ = std::min(a.proposal_floor_, eps_theta);
        a.validate();
        return a;
    }

    /// Density of beta at theta in (0, pi].
    double density(double theta) const {
        switch (mode_) {
            case AngularMode::power_law: return strength_ * std::pow(theta, -1.0 - nu_);
            case AngularMode::maxwell_uniform: return strength_;
            case AngularMode::user_table: return table_density(theta);
        }
        return 0.0;
    }

    /// int_lo^hi beta(d theta), 0 < lo <= hi <= pi.
    double mass(double lo, double hi) const {
        switch (mode_) {
            case AngularMode::power_law: return strength_ * (std::pow(lo, -nu_) - std::pow(hi, -nu_)) / nu_;
            case AngularMode::maxwell_uniform: return strength_ * (hi - lo);
            case AngularMode::user_table: return table_cumulative(hi) - table_cumulative(lo);
        }
        return 0.0;
    }

    /// int_lo^hi theta beta(d theta), 0 <= lo <= hi <= pi.
    double first_moment(double lo, double hi) const {
        switch (mode_) {
            case AngularMode::power_law: {
                const double p = 1.0 - nu_;
                return strength_ * (std::pow(hi, p) - std::pow(lo, p)) / p;
            }
            case AngularMode::maxwell_uniform: return 0.5 * strength_ * (hi * hi - lo * lo);
            case AngularMode::user_table: return table_first_moment(lo, hi);
        }
        return 0.0;
    }

    /// Inverse CDF of the normalized measure on [floor, pi].
    double inverse_cdf(double floor, double u) const {
        constexpr double pi = std::numbers::pi;
        switch (mode_) {
            case AngularMode::power_law: {
                const double a = std::pow(floor, -nu_);
                const double b = std::pow(pi, -nu_);
                const double th = std::pow(a - u * (a - b), -1.0 / nu_);
                return std::clamp(th, floor, pi);
            }
            case AngularMode::maxwell_uniform: return floor + u * (pi - floor);
            case AngularMode::user_table: return table_inverse(floor, u);
        }
        return floor;
    }

private:
    void validate() const {
        if (!(nu_ > 0.0)) throw DomainError("nu must be positive");
        if (!(nu_ < 1.0)) throw DomainError("nu >= 1 makes kappa_1 infinite");
        if (!(strength_ > 0.0)) throw DomainError("angular strength must be positive");
        if (!(eps_theta_ > 0.0 && eps_theta_ < std::numbers::pi)) {
            throw DomainError("eps_theta must lie in (0, pi)");
        }
        if (mode_ == AngularMode::user_table) {
            if (!table_ || table_->theta.size() < 2 || table_->theta.size() != table_->beta.size()) {
                throw DomainError("angular table needs at least two (theta, beta) rows");
            }
            const auto& t = table_->theta;
            if (!(t.front() > 0.0) || std::abs(t.back() - std::numbers::pi) > 1e-9) {
                throw DomainError("angular table must span [theta_0 > 0, pi]");
            }
            for (std::size_t i = 1; i < t.size(); ++i) {
                if (!(t[i] > t[i - 1])) throw DomainError("angular table angles must increase");
            }
            for (double b : table_->beta) {
                if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("angular table densities must be positive");
            }
        }
    }

    // --- user table ------------------------------------------------------

    double tail_density(double theta) const {
        const double t0 = table_->theta.front();
        return table_->beta.front() * std::pow(theta / t0, -1.0 - nu_);
    }

    double table_density(double theta) const {
        const auto& t = table_->theta;
        const auto& b = table_->beta;
        if (theta <= t.front()) return tail_density(theta);
        const auto it = std::upper_bound(t.begin(), t.end(), theta);
        if (it == t.end()) return b.back();
        const std::size_t k = static_cast<std::size_t>(it - t.begin());
        const double w = (theta - t[k - 1]) / (t[k] - t[k - 1]);
        return (1.0 - w) * b[k - 1] + w * b[k];
    }

    // node cumulative masses measured from theta_0
    void build_table_cdf() {
        const auto& t = table_->theta;
        cum_.assign(t.size(), 0.0);
        for (std::size_t k = 1; k < t.size(); ++k) {
            const double seg = adaptive_simpson([&](double x) { return table_density(x); }, t[k - 1], t[k], 1e-14);
            cum_[k] = cum_[k - 1] + seg;
        }
    }

    // signed mass from theta_0 to theta
    double table_cumulative(double theta) const {
        const auto& t = table_->theta;
        const double t0 = t.front();
        if (theta <= t0) {
            const double s = table_->beta.front() * t0 / nu_;
            return -s * (std::pow(theta / t0, -nu_) - 1.0);
        }
        const auto it = std::upper_bound(t.begin(), t.end(), theta);
        const std::size_t k = it == t.end() ? t.size() - 1 : static_cast<std::size_t>(it - t.begin());
        const double lo = t[k - 1];
        return cum_[k - 1] + adaptive_simpson([&](double x) { return table_density(x); }, lo, theta, 1e-14);
    }

    double table_first_moment(double lo, double hi) const {
        const auto& t = table_->theta;
        const double t0 = t.front();
        double total = 0.0;
        if (lo < t0) {
            const double top = std::min(hi, t0);
            const double p = 1.0 - nu_;
            const double c = table_->beta.front() * std::pow(t0, 1.0 + nu_);
            total += c * (std::pow(top, p) - std::pow(lo, p)) / p;
            lo = top;
        }
        if (hi > lo) {
            // integrate piecewise so the kinks of the table fall on endpoints
            double a = lo;
            for (std::size_t k = 0; k < t.size() && a < hi; ++k) {
                if (t[k] <= a) continue;
                const double b = std::min(t[k], hi);
                total += adaptive_simpson([&](double x) { return x * table_density(x); }, a, b, 1e-14);
                a = b;
            }
        }
        return total;
    }

    double table_inverse(double floor, double u) const {
        // bisection on the monotone cumulative; 80 halvings reach double precision
        const double base = table_cumulative(floor);
        const double target = base + u * (table_cumulative(std::numbers::pi) - base);
        double lo = floor;
        double hi = std::numbers::pi;
        for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (table_cumulative(mid) < target) lo = mid; else hi = mid;
        }
        return 0.5 * (lo + hi);
    }

    double nu_ = 0.5;
    double strength_ = 1.0;
    double eps_theta_ = 1e-3;
    double proposal_floor_ = 1e-3;
    AngularMode mode_ = AngularMode::power_law;
    bool monotone_convex_ = true;
    std::optional<AngularTable> table_;
    std::vector<double> cum_;
};

/// Truncation constants of the angular measure in dimension d.
struct AngularConstants {
    double S_eps;       // |S^{d-2}| int_eps^pi beta
    double alpha_eps;   // |S^{d-2}| int_0^eps theta beta
    double kappa1_eps;  // int_eps^pi theta beta
    double kappa1;      // int_0^pi theta beta
};

inline AngularConstants angular_constants(const AngularMeasure& a, int d) {
    if (!(a.nu() < 1.0)) throw DomainError("nu >= 1 makes kappa_1 infinite");
    const double area = sphere_area(d - 2);
    const double eps = a.eps_theta();
    constexpr double pi = std::numbers::pi;
    return AngularConstants{
        area * a.mass(eps, pi),
        area * a.first_moment(0.0, eps),
        a.first_moment(eps, pi),
        a.first_moment(0.0, pi),
    };
}

/// Deviation angle from the normalized truncated measure on [eps_theta, pi].
inline DeviationAngle sample_theta(const AngularMeasure& a, double u) {
    return DeviationAngle(a.inverse_cdf(a.eps_theta(), u));
}

/// Uniform direction on S^{d-2}; for d = 2 a fair sign.
inline SphereDirection sample_xi(int d, Rng& rng) {
    if (d < 2) throw DomainError("dimension must be at least 2");
    if (d == 2) return SphereDirection{rng.uniform() < 0.5 ? 1.0 : -1.0};
    Velocity g(d - 1);
    for (;;) {
        for (int i = 0; i < d - 1; i += 2) {
            const auto [a, b] = rng.normal_pair();
            g[i] = a;
            if (i + 1 < d - 1) g[i + 1] = b;
        }
        if (norm2(g) > 0.0) return SphereDirection::normalized(g);
    }
}

/// Inverse-power interaction 1/r^s in dimension 3.
struct PowerLawSpec {
    double s;

    double gamma() const noexcept { return (s - 5.0) / (s - 1.0); }
    double nu() const noexcept { return 2.0 / (s - 1.0); }
};

class CollisionKernel {
public:
    CollisionKernel(double gamma, double phi_upper, AngularMeasure angular, int dimension,
                    std::optional<double> phi_lower = std::nullopt, std::optional<double> phi_cap = std::nullopt)
        : gamma_(gamma), C_(phi_upper), c_(phi_lower), angular_(std::move(angular)), d_(dimension) {
        if (d_ < 2 || d_ > kMaxDim) throw DomainError("dimension must lie in [2, " + std::to_string(kMaxDim) + "]");
        if (!(gamma_ > -d_ && gamma_ <= 1.0)) throw DomainError("gamma must lie in (-d, 1]");
        if (!(C_ > 0.0) || !std::isfinite(C_)) throw DomainError("Phi upper constant C must be positive");
        if (c_ && !(*c_ > 0.0 && *c_ <= C_)) throw DomainError("Phi lower constant c must lie in (0, C]");
        cap_ = phi_cap.value_or(1e6 * C_);
        if (!(cap_ >= C_)) throw DomainError("phi_cap must be at least C");
    }

    double gamma() const noexcept { return gamma_; }
    double phi_upper() const noexcept { return C_; }
    std::optional<double> phi_lower() const noexcept { return c_; }
    double phi_cap() const noexcept { return cap_; }
    int dim() const noexcept { return d_; }
    const AngularMeasure& angular() const noexcept { return angular_; }
    AngularMeasure& angular() noexcept { return angular_; }

    /// Phi(z) = C z^gamma, capped at phi_cap when gamma < 0.
    double phi(double z) const noexcept {
        if (gamma_ == 0.0) return C_;
        if (z <= 0.0) return gamma_ > 0.0 ? 0.0 : cap_;
        const double p = C_ * std::pow(z, gamma_);
        return gamma_ < 0.0 ? std::min(p, cap_) : p;
    }

    AngularConstants constants() const { return angular_constants(angular_, d_); }

private:
    double gamma_;
    double C_;
    std::optional<double> c_;
    double cap_ = 0.0;
    AngularMeasure angular_;
    int d_;
};

inline double phi(const CollisionKernel& k, double z) { return k.phi(z); }

/// Kernel of the inverse-power interaction: gamma = (s-5)/(s-1),
/// nu = 2/(s-1), d = 3.
inline CollisionKernel from_inverse_power(PowerLawSpec spec, double C = 1.0, double strength = 1.0,
                                          double eps_theta = 1e-3, std::optional<double> phi_cap = std::nullopt) {
    if (!(spec.s > 3.0)) throw DomainError("inverse-power exponent s must exceed 3");
    return CollisionKernel(spec.gamma(), C, AngularMeasure::power_law(spec.nu(), strength, eps_theta), 3,
                           std::nullopt, phi_cap);
}

}  // namespace kinetic
