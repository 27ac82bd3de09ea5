#pragma once

// Joint evolution of two particle systems (f, f~) sharing their randomness.
//
// Pair i holds (v_i, v~_i). A proposal at pair (i, j) with thinning uniform u
// and shared majorant Lambda splits the rate along
// Phi = Phi ^ Phi~ + (Phi - Phi~)_+ (and symmetrically):
//
//   u Lambda <  min(Phi, Phi~)            both systems collide with the same
//                                         theta; the tilde system uses
//                                         xi_zero(v_i - v_j, v~_i - v~_j, xi)
//   min <= u Lambda < max(Phi, Phi~)      only the system with larger Phi
//   u Lambda >= max                       fictitious
//
// Each marginal is an exact copy of the single-system process.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <vector>

#include "kinetic/ensemble.hpp"
#include "kinetic/errors.hpp"
#include "kinetic/geometry.hpp"
#include "kinetic/kernel.hpp"
#include "kinetic/transport.hpp"

namespace kinetic {

enum class Channel { both, f_only, ftilde_only, fictitious };

struct ChannelCounts {
    std::uint64_t both = 0;
    std::uint64_t f_only = 0;
    std::uint64_t ftilde_only = 0;
    std::uint64_t fictitious = 0;

    std::uint64_t& operator[](Channel c) noexcept {
        switch (c) {
            case Channel::both: return both;
            case Channel::f_only: return f_only;
            case Channel::ftilde_only: return ftilde_only;
            case Channel::fictitious: break;
        }
        return fictitious;
    }
};

class CoupledEnsemble {
public:
    CoupledEnsemble(std::vector<Velocity> f, std::vector<Velocity> ftilde, std::uint64_t stream)
        : a_(std::move(f)), b_(std::move(ftilde)), rng_(stream) {
        if (a_.size() != b_.size()) throw SizeMismatch("coupled systems need equal particle counts");
        if (a_.size() < 2) throw DomainError("a coupled ensemble needs at least two pairs");
        const int d = a_.front().dim();
        for (std::size_t i = 0; i < a_.size(); ++i) {
            if (a_[i].dim() != d || b_[i].dim() != d) throw DomainError("mixed dimensions in coupled ensemble");
        }
    }

    std::size_t size() const noexcept { return a_.size(); }
    int dim() const noexcept { return a_.front().dim(); }
    const std::vector<Velocity>& f() const noexcept { return a_; }
    const std::vector<Velocity>& ftilde() const noexcept { return b_; }
    std::vector<Velocity>& f() noexcept { return a_; }
    std::vector<Velocity>& ftilde() noexcept { return b_; }
    double time() const noexcept { return time_; }
    void set_time(double t) noexcept { time_ = t; }
    Rng& rng() noexcept { return rng_; }
    const ChannelCounts& counts() const noexcept { return counts_; }
    ChannelCounts& counts() noexcept { return counts_; }

    /// Mean pairing distance (1/N) sum_i |v_i - v~_i|, an upper bound for d_1.
    double pairing_distance() const {
        double s = 0.0;
        for (std::size_t i = 0; i < a_.size(); ++i) s += distance(a_[i], b_[i]);
        return s / static_cast<double>(a_.size());
    }

    /// Re-pairs so that v_i is matched with the old v~_{matching[i]}.
    void repair(const std::vector<int>& matching) {
        if (matching.size() != b_.size()) throw PlanMismatch("matching size differs from N");
        std::vector<Velocity> nb(b_.size());
        for (std::size_t i = 0; i < b_.size(); ++i) nb[i] = b_[static_cast<std::size_t>(matching[i])];
        b_ = std::move(nb);
    }

private:
    std::vector<Velocity> a_;
    std::vector<Velocity> b_;
    double time_ = 0.0;
    Rng rng_;
    ChannelCounts counts_;
};

struct CoupledEvent {
    Channel channel = Channel::fictitious;
    std::size_t i = 0;
    std::size_t j = 0;
    double theta = 0.0;
};

namespace detail {

inline double ensemble_majorant(const std::vector<Velocity>& v, const CollisionKernel& k) {
    if (k.gamma() == 0.0) return k.phi_upper();
    if (k.gamma() < 0.0) return k.phi_cap();
    double e = 0.0;
    for (const auto& x : v) e += norm2(x);
    return k.phi_upper() * std::pow(2.0 * std::sqrt(e), k.gamma());
}

}  // namespace detail

class CoupledSimulator {
public:
    CoupledSimulator(const CoupledEnsemble& c, const CollisionKernel& k) : kernel_(k) {
        lambda_ = std::max(detail::ensemble_majorant(c.f(), k), detail::ensemble_majorant(c.ftilde(), k));
        const auto& a = k.angular();
        const double S_floor = sphere_area(k.dim() - 2) * a.mass(a.proposal_floor(), std::numbers::pi);
        total_rate_ = 0.5 * static_cast<double>(c.size() - 1) * lambda_ * S_floor;
    }

    double lambda() const noexcept { return lambda_; }
    double total_rate() const noexcept { return total_rate_; }

    Proposal draw(CoupledEnsemble& c) const {
        return draw_proposal(c.rng(), c.size(), c.dim(), total_rate_, kernel_.angular());
    }

    CoupledEvent apply(CoupledEnsemble& c, const Proposal& p) const {
        auto& a = c.f();
        auto& b = c.ftilde();
        const Velocity X = a[p.i] - a[p.j];
        const Velocity Y = b[p.i] - b[p.j];
        const double phi_f = kernel_.phi(norm(X));
        const double phi_t = kernel_.phi(norm(Y));
        const double lo = std::min(phi_f, phi_t);
        const double hi = std::max(phi_f, phi_t);
        const double x = p.u * lambda_;

        CoupledEvent ev{Channel::fictitious, p.i, p.j, p.theta};
        if (p.theta >= kernel_.angular().eps_theta()) {
            if (x < lo) ev.channel = Channel::both;
            else if (x < hi) ev.channel = phi_f > phi_t ? Channel::f_only : Channel::ftilde_only;
        }
        const DeviationAngle theta(p.theta);
        if (ev.channel == Channel::both || ev.channel == Channel::f_only) {
            auto [vi, vj] = post_collision(a[p.i], a[p.j], theta, p.xi);
            a[p.i] = vi;
            a[p.j] = vj;
        }
        if (ev.channel == Channel::both) {
            const bool degenerate = norm2(X) == 0.0 || norm2(Y) == 0.0;
            const SphereDirection xi0 = degenerate ? p.xi : xi_zero(X, Y, p.xi);
            auto [wi, wj] = post_collision(b[p.i], b[p.j], theta, xi0);
            b[p.i] = wi;
            b[p.j] = wj;
        } else if (ev.channel == Channel::ftilde_only) {
            auto [wi, wj] = post_collision(b[p.i], b[p.j], theta, p.xi);
            b[p.i] = wi;
            b[p.j] = wj;
        }
        ++c.counts()[ev.channel];
        return ev;
    }

    CoupledEvent step(CoupledEnsemble& c) const {
        const Proposal p = draw(c);
        c.set_time(c.time() + p.wait);
        return apply(c, p);
    }

private:
    CollisionKernel kernel_;
    double lambda_ = 0.0;
    double total_rate_ = 0.0;
};

inline CoupledEvent coupled_step(CoupledEnsemble& c, const CollisionKernel& k) { return CoupledSimulator(c, k).step(c); }

/// Integrand of the stability inequality averaged over the optimal plan:
///
///   H = kappa1_eps |S^{d-2}| / 2 * (1/N^2) sum_{i,j} [
///         8 (Phi_ij ^ Phi~_ij) |v_i - v~_i|
///       + (Phi_ij - Phi~_ij)_+ |v_i - v_j|
///       + (Phi~_ij - Phi_ij)_+ |v~_i - v~_j| ]
///
/// with v~ re-indexed by the plan and Phi_ij = Phi(|v_i - v_j|).
inline double evaluate_H(const TransportPlan& plan, const PointCloud& A, const PointCloud& B,
                         const CollisionKernel& k) {
    const std::size_t n = A.size();
    if (B.size() != n || plan.matching.size() != n) throw PlanMismatch("plan size differs from N");
    std::vector<Velocity> bm(n);
    std::vector<double> delta(n);
    for (std::size_t i = 0; i < n; ++i) {
        bm[i] = B[static_cast<std::size_t>(plan.matching[i])];
        delta[i] = distance(A[i], bm[i]);
    }
    const double phi0 = k.phi(0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += 8.0 * phi0 * delta[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            const double za = distance(A[i], A[j]);
            const double zb = distance(bm[i], bm[j]);
            const double pa = k.phi(za);
            const double pb = k.phi(zb);
            // (i, j) and (j, i) together
            sum += 8.0 * std::min(pa, pb) * (delta[i] + delta[j]);
            sum += 2.0 * (std::max(pa - pb, 0.0) * za + std::max(pb - pa, 0.0) * zb);
        }
    }
    const double nn = static_cast<double>(n);
    const double pref = 0.5 * k.constants().kappa1_eps * sphere_area(k.dim() - 2);
    return pref * sum / (nn * nn);
}

struct LedgerRow {
    double t = 0.0;
    double d1 = 0.0;
    double h_pair = 0.0;
    double H = 0.0;
    double int_H = 0.0;
    double rhs_bound = 0.0;
    double alpha_drift = 0.0;  // alpha_eps * t, the truncation drift
    ChannelCounts counts;
};

struct CouplingLedger {
    double d1_initial = 0.0;
    std::vector<LedgerRow> rows;
};

struct CouplingOptions {
    bool repair = true;         // re-pair indices to the optimal plan at checkpoints
    bool alpha_in_rhs = false;  // add alpha_eps * t to rhs_bound
};

/// Runs the coupled system to T. At time 0 and at every checkpoint the exact
/// plan is solved, H evaluated on it, and (with `repair`) the pairing reset
/// to the plan. int_H is the trapezoid rule over {0} and the checkpoints.
/// `observer(row, state)` is called after each checkpoint row is formed.
template <class Observer>
CouplingLedger run_coupled(CoupledEnsemble& c, const CollisionKernel& k, double T,
                           const std::vector<double>& checkpoints, const CouplingOptions& opt, Observer&& observer) {
    detail::check_checkpoints(checkpoints, T);
    CouplingLedger ledger;
    const double alpha = k.constants().alpha_eps;

    auto measure = [&](double t, LedgerRow& row) {
        const TransportPlan plan = w1_exact(c.f(), c.ftilde());
        row.t = t;
        row.d1 = plan.cost;
        row.h_pair = c.pairing_distance();
        row.H = evaluate_H(plan, c.f(), c.ftilde(), k);
        if (opt.repair) c.repair(plan.matching);
    };

    LedgerRow start;
    measure(0.0, start);
    ledger.d1_initial = start.d1;
    double prev_t = 0.0;
    double prev_H = start.H;
    double int_H = 0.0;

    const CoupledSimulator sim(c, k);
    std::size_t idx = 0;
    auto record = [&](double t) {
        LedgerRow row = start;
        if (t != 0.0) measure(t, row);
        int_H += 0.5 * (row.H + prev_H) * (t - prev_t);
        prev_t = t;
        prev_H = row.H;
        row.int_H = int_H;
        row.alpha_drift = alpha * t;
        row.rhs_bound = ledger.d1_initial + int_H + (opt.alpha_in_rhs ? row.alpha_drift : 0.0);
        row.counts = c.counts();
        ledger.rows.push_back(row);
        observer(ledger.rows.back(), static_cast<const CoupledEnsemble&>(c));
    };

    while (true) {
        const Proposal p = sim.draw(c);
        const double t = c.time() + p.wait;
        while (idx < checkpoints.size() && checkpoints[idx] < t) {
            c.set_time(checkpoints[idx]);
            record(checkpoints[idx]);
            ++idx;
        }
        if (!(t <= T)) break;
        c.set_time(t);
        sim.apply(c, p);
    }
    c.set_time(T);
    return ledger;
}

inline CouplingLedger run_coupled(CoupledEnsemble& c, const CollisionKernel& k, double T,
                                  const std::vector<double>& checkpoints, const CouplingOptions& opt = {}) {
    return run_coupled(c, k, T, checkpoints, opt, [](const LedgerRow&, const CoupledEnsemble&) {});
}

inline void write_ledger_csv(std::ostream& os, const CouplingLedger& ledger) {
    os << "t,d1,h_pair,H,int_H,rhs_bound,n_both,n_f,n_ftilde,n_fict\n";
    char buf[512];
    for (const auto& r : ledger.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%llu,%llu,%llu,%llu\n", r.t, r.d1, r.h_pair,
                      r.H, r.int_H, r.rhs_bound, static_cast<unsigned long long>(r.counts.both),
                      static_cast<unsigned long long>(r.counts.f_only),
                      static_cast<unsigned long long>(r.counts.ftilde_only),
                      static_cast<unsigned long long>(r.counts.fictitious));
        os << buf;
    }
}

}  // namespace kinetic
