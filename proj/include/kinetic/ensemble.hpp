#pragma once

// N-particle Kac-type jump process for the spatially homogeneous Boltzmann
// equation.
//
// Every unordered pair {i, j} collides at rate Phi(|v_i - v_j|) S_eps / N
// (Kac scaling, so that the empirical measure follows the mean-field weak
// equation as N grows). The process is simulated exactly: proposals arrive
// at the total majorant rate (N - 1)/2 * Lambda * S_floor, a uniform pair is
// drawn, the proposal is accepted with probability Phi_ij / Lambda, and the
// angle is drawn from the measure truncated at the proposal floor (angles
// below eps_theta are discarded). An accepted collision updates both
// particles, so momentum and energy are conserved event by event.
//
// Every proposal consumes the same number of random draws whatever its
// outcome.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "kinetic/errors.hpp"
#include "kinetic/geometry.hpp"
#include "kinetic/kernel.hpp"
#include "kinetic/rng.hpp"
#include "kinetic/velocity.hpp"

namespace kinetic {

// --- initial conditions -----------------------------------------------------

struct GaussianInit {
    std::vector<double> mean;  // empty means the origin
    double covariance_scale = 1.0;
};

struct TwoGaussiansInit {
    std::vector<double> mean1;
    std::vector<double> mean2;
    double covariance_scale = 1.0;
    double mixture_weight = 0.5;  // probability of the first component
};

struct UniformBallInit {
    double radius = 1.0;
};

struct FileInit {
    std::string path;
};

struct InitialSpec {
    std::variant<GaussianInit, TwoGaussiansInit, UniformBallInit, FileInit> kind = GaussianInit{};
    std::uint64_t seed = 0;
};

class Ensemble {
public:
    Ensemble() = default;
    Ensemble(std::vector<Velocity> v, std::uint64_t stream, std::uint64_t seed_label = 0)
        : v_(std::move(v)), rng_(stream), seed_(seed_label) {
        if (v_.size() < 2) throw DomainError("an ensemble needs at least two particles");
        const int d = v_.front().dim();
        for (const auto& x : v_) {
            if (x.dim() != d) throw DomainError("mixed dimensions in ensemble");
            if (!x.finite()) throw DomainError("non-finite velocity in ensemble");
        }
    }

    std::size_t size() const noexcept { return v_.size(); }
    int dim() const noexcept { return v_.empty() ? 0 : v_.front().dim(); }
    const std::vector<Velocity>& velocities() const noexcept { return v_; }
    std::vector<Velocity>& velocities() noexcept { return v_; }
    const Velocity& operator[](std::size_t i) const noexcept { return v_[i]; }
    Velocity& operator[](std::size_t i) noexcept { return v_[i]; }

    double time() const noexcept { return time_; }
    void set_time(double t) noexcept { time_ = t; }
    std::uint64_t collision_count() const noexcept { return collisions_; }
    void count_collision() noexcept { ++collisions_; }
    Rng& rng() noexcept { return rng_; }
    std::uint64_t seed() const noexcept { return seed_; }

    Velocity momentum() const {
        Velocity p(dim());
        for (const auto& x : v_) p += x;
        return p;
    }

    double energy() const {
        double e = 0.0;
        for (const auto& x : v_) e += norm2(x);
        return e;
    }

private:
    std::vector<Velocity> v_;
    double time_ = 0.0;
    std::uint64_t collisions_ = 0;
    Rng rng_;
    std::uint64_t seed_ = 0;
};

namespace detail {

inline Velocity mean_or_zero(const std::vector<double>& m, int d) {
    if (m.empty()) return Velocity(d);
    if (static_cast<int>(m.size()) != d) throw DomainError("initial mean has the wrong dimension");
    for (double x : m) {
        if (!std::isfinite(x)) throw DomainError("non-finite initial mean");
    }
    return Velocity(std::span<const double>(m));
}

inline Velocity gaussian_point(const Velocity& mean, double sd, Rng& rng) {
    Velocity x = mean;
    const int d = mean.dim();
    for (int i = 0; i < d; i += 2) {
        const auto [a, b] = rng.normal_pair();
        x[i] += sd * a;
        if (i + 1 < d) x[i + 1] += sd * b;
    }
    return x;
}

inline std::vector<Velocity> read_velocity_file(const std::string& path, int d) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open velocity file '" + path + "'");
    std::vector<Velocity> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("t=", 0) == 0) continue;
        std::istringstream ss(line);
        std::vector<double> xs;
        double x;
        while (ss >> x) xs.push_back(x);
        if (xs.empty()) continue;
        if (static_cast<int>(xs.size()) != d) {
            throw FileError("velocity file '" + path + "': expected " + std::to_string(d) + " components per row");
        }
        out.emplace_back(std::span<const double>(xs));
    }
    return out;
}

}  // namespace detail

/// N samples from the initial law; deterministic in spec.seed. The returned
/// ensemble's dynamics stream is derived from the same seed (callers that
/// want separate streams reseed it).
inline Ensemble init(const InitialSpec& spec, std::size_t N, int d) {
    if (N < 2) throw DomainError("N must be at least 2");
    if (d < 2 || d > kMaxDim) throw DomainError("dimension out of range");
    Rng rng = Rng::substream(spec.seed, 0x1417);
    std::vector<Velocity> v;
    v.reserve(N);

    if (const auto* g = std::get_if<GaussianInit>(&spec.kind)) {
        if (!(g->covariance_scale >= 0.0) || !std::isfinite(g->covariance_scale)) {
            throw DomainError("gaussian covariance scale must be finite and nonnegative");
        }
        const Velocity m = detail::mean_or_zero(g->mean, d);
        const double sd = std::sqrt(g->covariance_scale);
        for (std::size_t i = 0; i < N; ++i) v.push_back(detail::gaussian_point(m, sd, rng));
    } else if (const auto* t = std::get_if<TwoGaussiansInit>(&spec.kind)) {
        if (!(t->covariance_scale >= 0.0) || !std::isfinite(t->covariance_scale)) {
            throw DomainError("mixture covariance scale must be finite and nonnegative");
        }
        if (!(t->mixture_weight >= 0.0 && t->mixture_weight <= 1.0)) {
            throw DomainError("mixture weight must lie in [0, 1]");
        }
        const Velocity m1 = detail::mean_or_zero(t->mean1, d);
        const Velocity m2 = detail::mean_or_zero(t->mean2, d);
        const double sd = std::sqrt(t->covariance_scale);
        for (std::size_t i = 0; i < N; ++i) {
            const bool first = rng.uniform() < t->mixture_weight;
            v.push_back(detail::gaussian_point(first ? m1 : m2, sd, rng));
        }
    } else if (const auto* b = std::get_if<UniformBallInit>(&spec.kind)) {
        if (!(b->radius >= 0.0) || !std::isfinite(b->radius)) throw DomainError("ball radius must be finite");
        for (std::size_t i = 0; i < N; ++i) {
            // direction from normals, radius by inverse CDF r = R u^{1/d}
            Velocity x = detail::gaussian_point(Velocity(d), 1.0, rng);
            const double n = norm(x);
            const double r = b->radius * std::pow(rng.uniform(), 1.0 / d);
            v.push_back(n > 0.0 ? (r / n) * x : Velocity(d));
        }
    } else if (const auto* f = std::get_if<FileInit>(&spec.kind)) {
        v = detail::read_velocity_file(f->path, d);
        if (v.size() != N) {
            throw FileError("velocity file '" + f->path + "' holds " + std::to_string(v.size()) + " rows, expected " +
                            std::to_string(N));
        }
    }
    return Ensemble(std::move(v), spec.seed ^ 0xE5E5E5E5ULL, spec.seed);
}

// --- dynamics ---------------------------------------------------------------

/// Upper bound Lambda >= Phi(|v_i - v_j|) over all pairs.
///   gamma = 0: C.  gamma > 0: C (2R)^gamma with R^2 = sum |v_i|^2 (every
///   relative speed is at most 2R, and R is conserved).  gamma < 0: phi_cap.
inline double majorant_rate(const Ensemble& e, const CollisionKernel& k) {
    if (k.gamma() == 0.0) return k.phi_upper();
    if (k.gamma() < 0.0) return k.phi_cap();
    const double R = std::sqrt(e.energy());
    return k.phi_upper() * std::pow(2.0 * R, k.gamma());
}

/// One proposal of the process: the random draws it consumed and what
/// became of it.
struct Proposal {
    double wait = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    double u = 0.0;      // thinning uniform
    double theta = 0.0;  // proposed deviation angle
    SphereDirection xi;
};

inline Proposal draw_proposal(Rng& rng, std::size_t N, int d, double total_rate, const AngularMeasure& a) {
    Proposal p;
    p.wait = rng.exponential(total_rate);
    p.i = rng.index(N);
    p.j = rng.index(N - 1);
    if (p.j >= p.i) ++p.j;
    p.u = rng.uniform();
    p.theta = a.inverse_cdf(a.proposal_floor(), rng.uniform());
    p.xi = sample_xi(d, rng);
    return p;
}

/// Precomputed rates for a fixed (ensemble, kernel) pair. Lambda depends on
/// the ensemble only through its energy, which collisions conserve.
class Simulator {
public:
    Simulator(const Ensemble& e, const CollisionKernel& k) : kernel_(k) {
        const auto& a = k.angular();
        lambda_ = majorant_rate(e, k);
        S_floor_ = sphere_area(k.dim() - 2) * a.mass(a.proposal_floor(), std::numbers::pi);
        total_rate_ = 0.5 * static_cast<double>(e.size() - 1) * lambda_ * S_floor_;
    }

    double lambda() const noexcept { return lambda_; }
    double total_rate() const noexcept { return total_rate_; }
    const CollisionKernel& kernel() const noexcept { return kernel_; }

    Proposal draw(Ensemble& e) const {
        return draw_proposal(e.rng(), e.size(), e.dim(), total_rate_, kernel_.angular());
    }

    /// Applies a drawn proposal; returns true for a real collision.
    bool apply(Ensemble& e, const Proposal& p) const {
        Velocity& vi = e[p.i];
        Velocity& vj = e[p.j];
        const double phi_ij = kernel_.phi(distance(vi, vj));
        if (!(p.u * lambda_ < phi_ij) || p.theta < kernel_.angular().eps_theta()) return false;
        auto [a, b] = post_collision(vi, vj, DeviationAngle(p.theta), p.xi);
        vi = a;
        vj = b;
        e.count_collision();
        return true;
    }

    /// One proposal: advance time by its waiting time, then apply it.
    bool step(Ensemble& e) const {
        const Proposal p = draw(e);
        e.set_time(e.time() + p.wait);
        return apply(e, p);
    }

private:
    CollisionKernel kernel_;
    double lambda_ = 0.0;
    double S_floor_ = 0.0;
    double total_rate_ = 0.0;
};

/// Single proposal with a freshly computed majorant.
inline bool step(Ensemble& e, const CollisionKernel& k) { return Simulator(e, k).step(e); }

struct Snapshot {
    double time = 0.0;
    std::vector<Velocity> velocities;
    std::uint64_t collisions = 0;
};

namespace detail {

inline void check_checkpoints(const std::vector<double>& checkpoints, double T) {
    if (!(T >= 0.0) || !std::isfinite(T)) throw DomainError("final time must be finite and nonnegative");
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        if (!(checkpoints[c] >= 0.0 && checkpoints[c] <= T)) throw DomainError("checkpoints must lie in [0, T]");
        if (c > 0 && checkpoints[c] < checkpoints[c - 1]) throw DomainError("checkpoints must be sorted");
    }
}

}  // namespace detail

/// Evolves e from time 0 to T, recording snapshots at the checkpoints.
/// `on_checkpoint(index, ensemble)` is called at each checkpoint, with the
/// ensemble time set to the checkpoint.
template <class OnCheckpoint>
void run_with(Ensemble& e, const CollisionKernel& k, double T, const std::vector<double>& checkpoints,
              OnCheckpoint&& on_checkpoint) {
    detail::check_checkpoints(checkpoints, T);
    const Simulator sim(e, k);
    std::size_t c = 0;
    while (true) {
        const Proposal p = sim.draw(e);
        const double t = e.time() + p.wait;
        while (c < checkpoints.size() && checkpoints[c] < t) {
            e.set_time(checkpoints[c]);
            on_checkpoint(c, e);
            ++c;
        }
        if (!(t <= T)) break;
        e.set_time(t);
        sim.apply(e, p);
    }
    e.set_time(T);
}

inline std::vector<Snapshot> run(Ensemble& e, const CollisionKernel& k, double T, const std::vector<double>& checkpoints) {
    std::vector<Snapshot> out;
    out.reserve(checkpoints.size());
    run_with(e, k, T, checkpoints, [&](std::size_t, const Ensemble& s) {
        out.push_back(Snapshot{s.time(), s.velocities(), s.collision_count()});
    });
    return out;
}

/// Plain-text snapshot: header "t=<time> N=<N> d=<d> seed=<seed>", then one
/// whitespace-separated row per particle.
inline void write_snapshot(std::ostream& os, const Snapshot& s, std::uint64_t seed) {
    const int d = s.velocities.empty() ? 0 : s.velocities.front().dim();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", s.time);
    os << "t=" << buf << " N=" << s.velocities.size() << " d=" << d << " seed=" << seed << '\n';
    for (const auto& v : s.velocities) {
        for (int i = 0; i < d; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", v[i]);
            if (i) os << ' ';
            os << buf;
        }
        os << '\n';
    }
}

}  // namespace kinetic
