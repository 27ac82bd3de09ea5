#pragma once

// Experiment orchestration: one job per replica, fanned out over a worker
// pool and merged in replica order, so the report does not depend on the
// number of workers.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "kinetic/bounds.hpp"
#include "kinetic/coupling.hpp"
#include "kinetic/ensemble.hpp"
#include "kinetic/harness/config.hpp"
#include "kinetic/transport.hpp"

namespace kinetic::harness {

/// Moments of one system at one checkpoint.
struct MomentRow {
    double t = 0.0;
    double energy = 0.0;        // sum |v_i|^2
    double energy_drift = 0.0;  // |E - E(0)| / E(0)
    double m1 = 0.0;
    double m1_envelope = 0.0;  // NaN when 1 + gamma < 0
    double exp_moment = 0.0;
    std::uint64_t collisions = 0;
};

struct ReplicaResult {
    ReplicaId id;
    CouplingLedger ledger;            // couple and verify modes
    std::vector<MomentRow> f;         // first system
    std::vector<MomentRow> ftilde;    // second system (couple and verify)
};

/// Mean and standard error over replicas; the error is absent below two
/// replicas.
struct Stat {
    double mean = 0.0;
    std::optional<double> se;
};

inline Stat summarize(const std::vector<double>& xs) {
    Stat s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() >= 2) {
        double v = 0.0;
        for (double x : xs) v += (x - s.mean) * (x - s.mean);
        v /= static_cast<double>(xs.size() - 1);
        s.se = std::sqrt(v / static_cast<double>(xs.size()));
    }
    return s;
}

/// Per-checkpoint aggregate and verdict of the predicate
/// d1(t) <= rhs_bound(t) + tau_N, tau_N = 5 (SE(d1) + 2 / sqrt(N)).
struct CheckpointSummary {
    double t = 0.0;
    Stat d1;
    Stat H;
    Stat rhs;
    Stat m1;
    double tau = 0.0;
    std::size_t passed = 0;
    std::size_t total = 0;
    bool pass = true;
};

struct RunReport {
    ExperimentConfig config;
    std::vector<ReplicaResult> replicas;
    std::vector<CheckpointSummary> summary;
    bool all_pass = true;

    // w1 mode
    std::optional<TransportPlan> plan;
    PointCloud points_a;
    PointCloud points_b;
    bool certified = false;

    // bounds mode
    BoundCurve hard;
    BoundCurve soft;
    std::vector<std::pair<std::string, double>> constants;

    double wall_seconds = 0.0;  // never written to output files
};

namespace detail {

inline InitialSpec initial_spec(const InitConfig& c, std::uint64_t seed) {
    InitialSpec s;
    s.seed = seed ^ c.seed_offset;
    if (c.kind == "gaussian") s.kind = GaussianInit{c.mean, c.scale};
    else if (c.kind == "two_gaussians") s.kind = TwoGaussiansInit{c.mean, c.mean2, c.scale, c.weight};
    else if (c.kind == "uniform_ball") s.kind = UniformBallInit{c.radius};
    else if (c.kind == "file") s.kind = FileInit{c.path};
    else throw ValidationError("unknown initial law '" + c.kind + "'");
    return s;
}

inline std::vector<Velocity> tilde_velocities(const InitConfig& c, const std::vector<Velocity>& f, std::uint64_t seed,
                                              std::size_t N, int d) {
    if (c.kind != "dilate") return init(initial_spec(c, seed), N, d).velocities();
    // v~ = lambda v; the radial map is an optimal plan, so d1 = (lambda - 1) m_1
    const double lambda = c.dilation > 0.0 ? c.dilation : 1.0 + c.d1_target / moment(f, 1.0);
    std::vector<Velocity> out(f);
    for (auto& v : out) v *= lambda;
    return out;
}

inline double exp_moment_exponent(const ExperimentConfig& c) {
    if (c.exp_s) return *c.exp_s;
    const double g = c.kernel_gamma();
    return g > 0.0 ? g : 1.0;
}

class MomentTracker {
public:
    MomentTracker(const std::vector<Velocity>& v0, const CollisionKernel& k, double exp_eps, double exp_s)
        : kernel_(k), E0_(energy_of(v0)), m1_0_(moment(v0, 1.0)), exp_eps_(exp_eps), exp_s_(exp_s) {}

    MomentRow row(double t, const std::vector<Velocity>& v, std::uint64_t collisions) const {
        MomentRow r;
        r.t = t;
        r.energy = energy_of(v);
        r.energy_drift = E0_ > 0.0 ? std::abs(r.energy - E0_) / E0_ : std::abs(r.energy);
        r.m1 = moment(v, 1.0);
        r.m1_envelope = 1.0 + kernel_.gamma() >= 0.0 ? first_moment_bound(m1_0_, kernel_, t)
                                                     : std::numeric_limits<double>::quiet_NaN();
        r.exp_moment = exp_moment(v, exp_eps_, exp_s_);
        r.collisions = collisions;
        return r;
    }

private:
    static double energy_of(const std::vector<Velocity>& v) {
        double e = 0.0;
        for (const auto& x : v) e += norm2(x);
        return e;
    }

    CollisionKernel kernel_;
    double E0_;
    double m1_0_;
    double exp_eps_;
    double exp_s_;
};

constexpr std::uint64_t kCoupledStreamTag = 0xC0C0C0C0C0C0C0C0ULL;

inline ReplicaResult run_replica(const ExperimentConfig& c, const ReplicaId& id) {
    ReplicaResult out;
    out.id = id;
    const CollisionKernel k = c.kernel();
    const double es = exp_moment_exponent(c);

    if (c.mode == Mode::simulate) {
        Ensemble e = init(initial_spec(c.init, id.stream), c.N, c.d);
        const MomentTracker mt(e.velocities(), k, c.exp_eps, es);
        run_with(e, k, c.T, c.checkpoints, [&](std::size_t, const Ensemble& s) {
            out.f.push_back(mt.row(s.time(), s.velocities(), s.collision_count()));
        });
        return out;
    }

    // couple / verify
    const std::vector<Velocity> f = init(initial_spec(c.init, id.stream), c.N, c.d).velocities();
    std::vector<Velocity> ft = tilde_velocities(*c.tilde, f, id.stream, c.N, c.d);
    const MomentTracker mf(f, k, c.exp_eps, es);
    const MomentTracker mft(ft, k, c.exp_eps, es);
    CoupledEnsemble ce(f, std::move(ft), id.stream ^ kCoupledStreamTag);
    CouplingOptions opt;
    opt.repair = c.repair;
    opt.alpha_in_rhs = c.alpha_in_rhs;
    out.ledger = run_coupled(ce, k, c.T, c.checkpoints, opt, [&](const LedgerRow& row, const CoupledEnsemble& s) {
        const auto& n = row.counts;
        out.f.push_back(mf.row(row.t, s.f(), n.both + n.f_only));
        out.ftilde.push_back(mft.row(row.t, s.ftilde(), n.both + n.ftilde_only));
    });
    return out;
}

inline void summarize_coupled(RunReport& r) {
    const auto& c = r.config;
    const std::size_t R = r.replicas.size();
    const double floor_term = 2.0 / std::sqrt(static_cast<double>(c.N));
    for (std::size_t k = 0; k < c.checkpoints.size(); ++k) {
        std::vector<double> d1, H, rhs, m1;
        for (const auto& rep : r.replicas) {
            d1.push_back(rep.ledger.rows[k].d1);
            H.push_back(rep.ledger.rows[k].H);
            rhs.push_back(rep.ledger.rows[k].rhs_bound);
            m1.push_back(rep.f[k].m1);
        }
        CheckpointSummary s;
        s.t = c.checkpoints[k];
        s.d1 = summarize(d1);
        s.H = summarize(H);
        s.rhs = summarize(rhs);
        s.m1 = summarize(m1);
        s.tau = 5.0 * (s.d1.se.value_or(0.0) + floor_term);
        s.total = R;
        for (std::size_t i = 0; i < R; ++i) s.passed += d1[i] <= rhs[i] + s.tau;
        s.pass = static_cast<double>(s.passed) >= c.pass_fraction * static_cast<double>(R) - 1e-12;
        r.all_pass = r.all_pass && s.pass;
        r.summary.push_back(s);
    }
}

inline void summarize_simulate(RunReport& r) {
    for (std::size_t k = 0; k < r.config.checkpoints.size(); ++k) {
        std::vector<double> m1;
        for (const auto& rep : r.replicas) m1.push_back(rep.f[k].m1);
        CheckpointSummary s;
        s.t = r.config.checkpoints[k];
        s.m1 = summarize(m1);
        s.total = r.replicas.size();
        s.passed = s.total;
        r.summary.push_back(s);
    }
}

inline void run_w1(RunReport& r) {
    const auto& c = r.config;
    r.points_a = kinetic::detail::read_velocity_file(c.points_a, c.d);
    r.points_b = kinetic::detail::read_velocity_file(c.points_b, c.d);
    if (c.N != 0 && (r.points_a.size() != c.N || r.points_b.size() != c.N)) {
        throw FileError("point files hold " + std::to_string(r.points_a.size()) + " and " +
                        std::to_string(r.points_b.size()) + " rows, expected N = " + std::to_string(c.N));
    }
    r.plan = w1_exact(r.points_a, r.points_b);
    r.certified = verify_duality(*r.plan, r.points_a, r.points_b);
    r.all_pass = r.certified;
}

inline void run_bounds(RunReport& r) {
    const auto& c = r.config;
    r.hard = hard_bound(HardStabilityParams{c.bound_K, 1.0, 1.0}, c.d1_0, c.checkpoints);
    r.soft.times = c.checkpoints;
    const SoftStabilityParams sp{c.bound_Kp, c.bound_lp_sum, 0.0, 2.0};
    for (double t : c.checkpoints) r.soft.values.push_back(soft_bound(sp, c.d1_0, t));
    const auto k = c.kernel();
    const auto ac = k.constants();
    r.constants = {{"gamma", k.gamma()},       {"nu", k.angular().nu()},       {"S_eps", ac.S_eps},
                   {"alpha_eps", ac.alpha_eps}, {"kappa1_eps", ac.kappa1_eps}, {"kappa1", ac.kappa1}};
    if (c.s) r.constants.emplace_back("q0", moment_threshold(PowerLawSpec{*c.s}));
}

}  // namespace detail

/// Runs every replica on `workers` threads (at least one) and merges the
/// results in replica order. Errors are rethrown tagged with the replica.
inline RunReport run_experiment(const ExperimentConfig& cfg, unsigned workers = 1) {
    validate(cfg);
    const auto start = std::chrono::steady_clock::now();
    RunReport r;
    r.config = cfg;

    if (cfg.mode == Mode::w1) {
        detail::run_w1(r);
    } else if (cfg.mode == Mode::bounds) {
        detail::run_bounds(r);
    } else {
        const auto ids = cfg.replica_ids();
        std::vector<ReplicaResult> results(ids.size());
        std::vector<std::exception_ptr> errors(ids.size());
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t i = next++; i < ids.size(); i = next++) {
                try {
                    results[i] = detail::run_replica(cfg, ids[i]);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(ids.size())));
        std::vector<std::thread> pool;
        for (unsigned w = 1; w < n; ++w) pool.emplace_back(work);
        work();
        for (auto& t : pool) t.join();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (!errors[i]) continue;
            const std::string tag = "replica " + std::to_string(i) + " (seed " + std::to_string(ids[i].seed) +
                                    ", stream " + std::to_string(ids[i].stream) + "): ";
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                throw Error(tag + e.what());
            }
        }
        r.replicas = std::move(results);
        if (cfg.mode == Mode::simulate) detail::summarize_simulate(r);
        else detail::summarize_coupled(r);
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace kinetic::harness
