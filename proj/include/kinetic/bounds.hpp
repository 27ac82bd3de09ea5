#pragma once

// Theoretical envelopes for d_1 and for moments, plus the smallest-constant
// fits used to test their functional form against measured runs.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <vector>

#include "kinetic/ensemble.hpp"
#include "kinetic/errors.hpp"
#include "kinetic/kernel.hpp"
#include "kinetic/quadrature.hpp"
#include "kinetic/velocity.hpp"

namespace kinetic {

struct BoundCurve {
    std::vector<double> times;
    std::vector<double> values;
};

inline void write_curve_csv(std::ostream& os, const BoundCurve& c) {
    os << "t,value\n";
    char buf[96];
    for (std::size_t i = 0; i < c.times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", c.times[i], c.values[i]);
        os << buf;
    }
}

namespace detail {

inline void check_grid(const std::vector<double>& t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] >= 0.0) || !std::isfinite(t[i])) throw DomainError("time grid must be finite and nonnegative");
        if (i > 0 && t[i] < t[i - 1]) throw DomainError("time grid must be sorted");
    }
}

}  // namespace detail

using RateFunction = std::function<double(double)>;

/// log rho(t) for rho' = mu(rho), rho(0) = a > 0, given the integrand in
/// log variables g(s) = e^s / mu(e^s). The time to climb from a to e^s is
/// int_{log a}^s g; it is accumulated over segments of doubling length and
/// inverted by bisection in s to relative 1e-12. Working in s keeps doubly
/// exponential growth representable. +inf when the solution escapes past
/// s = 1e12.
inline std::vector<double> yudovitch_log_bound(double a, const std::function<double(double)>& g,
                                               const std::vector<double>& t_grid) {
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("log bound needs a finite positive initial value");
    detail::check_grid(t_grid);
    auto checked = [&](double s) {
        const double v = g(s);
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("rate function must be positive and finite");
        return v;
    };
    auto integral = [&](double lo, double hi) { return adaptive_simpson(checked, lo, hi, 1e-15, 40); };
    const double s0 = std::log(a);
    constexpr double s_max = 1e12;

    std::vector<double> out(t_grid.size());
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        const double t = t_grid[k];
        if (t == 0.0) {
            out[k] = s0;
            continue;
        }
        double lo = s0;
        double t_lo = 0.0;  // time to reach e^lo
        double step = 0.5;
        double hi = lo + step;
        double seg = integral(lo, hi);
        bool escaped = false;
        while (t_lo + seg < t) {
            if (hi >= s_max) {
                escaped = true;
                break;
            }
            lo = hi;
            t_lo += seg;
            step *= 2.0;
            hi = std::min(lo + step, s_max);
            seg = integral(lo, hi);
        }
        if (escaped) {
            out[k] = std::numeric_limits<double>::infinity();
            continue;
        }
        const double base = lo;
        while (hi - lo > 1e-12 * std::max(1.0, std::abs(hi))) {
            const double mid = 0.5 * (lo + hi);
            if (t_lo + integral(base, mid) < t) lo = mid;
            else hi = mid;
        }
        out[k] = 0.5 * (lo + hi);
    }
    return out;
}

/// Largest solution of rho' = mu(rho), rho(0) = a, obtained from
/// m(a) - m(rho(t)) = t with m(x) = int_x^1 dy / mu(y).
inline BoundCurve yudovitch_bound(double a, const RateFunction& mu, const std::vector<double>& t_grid) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("initial value must be finite and nonnegative");
    detail::check_grid(t_grid);
    BoundCurve out{t_grid, std::vector<double>(t_grid.size(), 0.0)};
    if (a == 0.0) return out;
    const auto logs = yudovitch_log_bound(
        a,
        [&](double s) {
            const double x = std::exp(s);
            return x / mu(x);
        },
        t_grid);
    for (std::size_t k = 0; k < logs.size(); ++k) out.values[k] = std::exp(logs[k]);
    return out;
}

struct HardStabilityParams {
    double K_eps = 1.0;
    double C_exp = 1.0;  // sup_t of the exponential moment of f + f~
    double eps = 1.0;    // its exponent parameter

    double rate() const { return K_eps * C_exp; }

    void validate() const {
        for (double x : {K_eps, C_exp, eps}) {
            if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("hard stability parameters must be positive");
        }
    }
};

/// mu(x) = K x (1 + |log x|).
inline RateFunction log_lipschitz_rate(double K) {
    return [K](double x) { return K * x * (1.0 + std::abs(std::log(x))); };
}

/// log of the exact solution of rho' = K rho (1 + |log rho|), rho(0) = a > 0.
/// In w = log rho: w' = K (1 - w) below 0 and K (1 + w) above, so
///   w(t) = 1 - (1 - w0) e^{-Kt}      until w reaches 0 at t1 = log(1 - w0) / K,
///   w(t) = e^{K (t - t1)} - 1        afterwards.
inline double log_lipschitz_log_envelope(double a, double K, double t) {
    const double w0 = std::log(a);
    if (w0 > 0.0) return (1.0 + w0) * std::exp(K * t) - 1.0;
    const double t1 = std::log1p(-w0) / K;
    return t <= t1 ? 1.0 - (1.0 - w0) * std::exp(-K * t) : std::expm1(K * (t - t1));
}

inline double log_lipschitz_envelope(double a, double K, double t) {
    if (a == 0.0 || t == 0.0) return a;  // exp(log a) may miss a by an ulp
    return std::exp(log_lipschitz_log_envelope(a, K, t));
}

inline BoundCurve hard_bound(const HardStabilityParams& p, double d1_0, const std::vector<double>& t_grid) {
    p.validate();
    if (!(d1_0 >= 0.0) || !std::isfinite(d1_0)) throw DomainError("d1(0) must be finite and nonnegative");
    detail::check_grid(t_grid);
    BoundCurve out{t_grid, std::vector<double>(t_grid.size())};
    for (std::size_t k = 0; k < t_grid.size(); ++k) out.values[k] = log_lipschitz_envelope(d1_0, p.rate(), t_grid[k]);
    return out;
}

/// Same envelope by quadrature and inversion, for cross-checking.
inline BoundCurve hard_bound_numeric(const HardStabilityParams& p, double d1_0, const std::vector<double>& t_grid) {
    p.validate();
    return yudovitch_bound(d1_0, log_lipschitz_rate(p.rate()), t_grid);
}

/// log of hard_bound, closed form and numeric; finite where the envelope
/// itself overflows a double. d1_0 must be positive.
inline std::vector<double> hard_log_bound(const HardStabilityParams& p, double d1_0, const std::vector<double>& t_grid) {
    p.validate();
    if (!(d1_0 > 0.0)) throw DomainError("log envelope needs d1(0) > 0");
    detail::check_grid(t_grid);
    std::vector<double> out(t_grid.size());
    for (std::size_t k = 0; k < t_grid.size(); ++k) out[k] = log_lipschitz_log_envelope(d1_0, p.rate(), t_grid[k]);
    return out;
}

inline std::vector<double> hard_log_bound_numeric(const HardStabilityParams& p, double d1_0,
                                                  const std::vector<double>& t_grid) {
    p.validate();
    const double K = p.rate();
    return yudovitch_log_bound(d1_0, [K](double s) { return 1.0 / (K * (1.0 + std::abs(s))); }, t_grid);
}

struct SoftStabilityParams {
    double K_p = 1.0;
    double lp_f = 0.0;       // C(t, f, p)
    double lp_ftilde = 0.0;  // C(t, f~, p)
    double p = 2.0;

    /// p must exceed d / (d + gamma).
    void validate(int d, double gamma) const {
        if (!(p > d / (d + gamma))) throw DomainError("integrability exponent p must exceed d/(d+gamma)");
    }
};

inline double soft_bound(const SoftStabilityParams& p, double d1_0, double t) {
    if (!(d1_0 >= 0.0) || !(t >= 0.0) || !(p.K_p >= 0.0) || !(p.lp_f >= 0.0) || !(p.lp_ftilde >= 0.0)) {
        throw DomainError("soft bound inputs must be nonnegative");
    }
    if (d1_0 == 0.0) return 0.0;
    return d1_0 * std::exp(p.K_p * (p.lp_f + p.lp_ftilde + t));
}

// --- moments ----------------------------------------------------------------

/// (1/N) sum exp(eps |v_i|^s); +inf if any term overflows.
inline double exp_moment(const std::vector<Velocity>& v, double eps, double s_exp) {
    if (!(eps > 0.0)) throw DomainError("exponential moment needs eps > 0");
    if (!(s_exp > 0.0 && s_exp < 2.0)) throw DomainError("exponential moment exponent must lie in (0, 2)");
    if (v.empty()) throw DomainError("empty ensemble");
    double sum = 0.0;
    for (const auto& x : v) {
        const double term = std::exp(eps * std::pow(norm(x), s_exp));
        if (std::isinf(term)) return std::numeric_limits<double>::infinity();
        sum += term;
    }
    return sum / static_cast<double>(v.size());
}

inline double exp_moment(const Ensemble& e, double eps, double s_exp) { return exp_moment(e.velocities(), eps, s_exp); }

/// (1/N) sum |v_i|^p.
inline double moment(const std::vector<Velocity>& v, double p) {
    if (!(p >= 0.0)) throw DomainError("moment order must be nonnegative");
    if (v.empty()) throw DomainError("empty ensemble");
    double sum = 0.0;
    for (const auto& x : v) sum += p == 2.0 ? norm2(x) : std::pow(norm(x), p);
    return sum / static_cast<double>(v.size());
}

inline double moment(const Ensemble& e, double p) { return moment(e.velocities(), p); }

/// Inputs for the first-moment envelope when 1 + gamma < 0.
struct LpGrowth {
    double lp_norm_f0;     // ||f_0||_{L^p}
    double growth;         // C in d/dt ||f||_p <= C (1 + ||f||_p^2)
    double interpolation;  // C_{1+gamma,p} bounding int |v - w|^{1+gamma} f(dw)
};

inline double tstar(double lp_norm_f0, double C) {
    if (!(C > 0.0)) throw DomainError("growth constant must be positive");
    if (!(lp_norm_f0 >= 0.0)) throw DomainError("L^p norm must be nonnegative");
    return (std::numbers::pi / 2.0 - std::atan(lp_norm_f0)) / C;
}

/// Envelope for m_1(t) = (1/N) sum |v_i| with the truncated kappa_1^eps.
///   1 + gamma >= 0:  e^{C kappa1 |S| t} (m1_0 + 1)
///   1 + gamma <  0:  m1_0 + A int_0^t tan(arctan L + G s) ds + A' t,
///                    A' = C kappa1 |S| / 2, A = A' C_{1+gamma,p};
///                    +inf from T* on.
inline double first_moment_bound(double m1_0, const CollisionKernel& k, double t,
                                 std::optional<LpGrowth> lp = std::nullopt) {
    if (!(m1_0 >= 0.0) || !(t >= 0.0)) throw DomainError("first moment bound needs nonnegative inputs");
    const double rate = k.phi_upper() * k.constants().kappa1_eps * sphere_area(k.dim() - 2);
    if (1.0 + k.gamma() >= 0.0) return std::exp(rate * t) * (m1_0 + 1.0);
    if (!lp) throw MissingLpNorm("1 + gamma < 0 needs the L^p norm of f_0");
    if (t >= tstar(lp->lp_norm_f0, lp->growth)) return std::numeric_limits<double>::infinity();
    const double A1 = 0.5 * rate;
    const double A = A1 * lp->interpolation;
    const double a0 = std::atan(lp->lp_norm_f0);
    const double integral = std::log(std::cos(a0) / std::cos(a0 + lp->growth * t)) / lp->growth;
    return m1_0 + A * integral + A1 * t;
}

/// q_0 = gamma^2 / (nu + gamma).
inline double moment_threshold(PowerLawSpec spec) {
    if (!(spec.s > 3.0)) throw DomainError("inverse power s must exceed 3");
    const double g = spec.gamma();
    return g * g / (spec.nu() + g);
}

// --- constant fitting ---------------------------------------------------------

/// One measured point: a run started at d1_0, observed d1 at time t, with an
/// allowed slack tol.
struct Observation {
    double d1_0 = 0.0;
    double t = 0.0;
    double d1 = 0.0;
    double tol = 0.0;
};

/// Smallest K in [0, hi] with dominates(K) true, assuming monotonicity, by
/// bisection to relative 1e-10. hi is doubled until it dominates.
template <class Pred>
double fit_smallest_constant(Pred&& dominates, double hi = 1.0) {
    if (dominates(0.0)) return 0.0;
    int grow = 0;
    while (!dominates(hi)) {
        hi *= 2.0;
        if (++grow > 200) throw DomainError("no finite constant makes the envelope dominate");
    }
    double lo = 0.0;
    while (hi - lo > 1e-10 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (dominates(mid)) hi = mid;
        else lo = mid;
    }
    return hi;
}

inline bool hard_dominates(double K, const std::vector<Observation>& obs) {
    for (const auto& o : obs) {
        if (log_lipschitz_envelope(o.d1_0, K, o.t) + o.tol < o.d1) return false;
    }
    return true;
}

/// Smallest K = K_eps C_exp such that every observation sits under the
/// log-Lipschitz envelope.
inline double fit_hard_rate(const std::vector<Observation>& obs) {
    return fit_smallest_constant([&](double K) { return hard_dominates(K, obs); });
}

inline bool soft_dominates(double K_p, double lp_sum, const std::vector<Observation>& obs) {
    for (const auto& o : obs) {
        if (o.d1_0 * std::exp(K_p * (lp_sum + o.t)) + o.tol < o.d1) return false;
    }
    return true;
}

inline double fit_soft_rate(const std::vector<Observation>& obs, double lp_sum = 0.0) {
    return fit_smallest_constant([&](double K) { return soft_dominates(K, lp_sum, obs); });
}

}  // namespace kinetic
