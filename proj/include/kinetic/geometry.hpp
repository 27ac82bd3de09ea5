#pragma once

// Post-collisional kinematics in dimension d >= 2.
//
// Directions orthogonal to a relative velocity X are parameterized by
// xi in S^{d-2}:
//
//     Gamma(X, xi) = |X| S_X(Pi(xi)),
//
// where Pi(xi) = (xi_1, ..., xi_{d-1}, 0) and S_X is the reflection across
// the hyperplane orthogonal to e_d - X/|X| (the identity when X/|X| = e_d).
// S_X swaps e_d and X/|X|, so Gamma(X, .) maps S^{d-2} onto
// C_X = {U : |U| = |X|, <U, X> = 0}.
//
// xi_zero(X, Y, .) is the matching map used to couple two collisions:
// it is the restriction to S^{d-2} of the orthogonal map
// Pi^{-1} S_Y R_{X,Y} S_X Pi, with R_{X,Y} the rotation in span{X, Y}
// taking X/|X| to Y/|Y|. It guarantees
//
//     |Gamma(X, xi) - Gamma(Y, xi_zero(X, Y, xi))| <= 3 |X - Y|.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "kinetic/errors.hpp"
#include "kinetic/velocity.hpp"

namespace kinetic {

/// Tolerances used by the closed-form geometry.
struct GeometryTolerances {
    double unit_norm = 1e-12;   // SphereDirection validation
    double aligned = 1e-14;     // |e_d - X/|X|| below this: S_X = Id
    double same_direction = 1e-14;  // |X/|X| - Y/|Y|| below this: xi_zero = Id
    double antipodal = 1e-12;   // |X/|X| + Y/|Y|| below this: fixed rotation plane
};

inline constexpr GeometryTolerances kGeometryTol{};

/// A point of S^{d-2}, stored with d-1 components. For d = 2 it is +1 or -1.
class SphereDirection {
public:
    SphereDirection() = default;

    /// Validates |xi| = 1 within kGeometryTol.unit_norm.
    explicit SphereDirection(Velocity xi) : xi_(std::move(xi)) {
        const double n = norm(xi_);
        if (!xi_.finite() || std::abs(n - 1.0) > kGeometryTol.unit_norm) {
            throw DomainError("sphere direction must have unit norm (got " + std::to_string(n) + ")");
        }
    }

    SphereDirection(std::initializer_list<double> xs) : SphereDirection(Velocity(xs)) {}

    /// Rescales a nonzero vector onto the sphere.
    static SphereDirection normalized(Velocity v) {
        const double n = norm(v);
        if (!(n > 0.0)) throw ZeroVector("cannot normalize a zero vector onto the sphere");
        v *= 1.0 / n;
        SphereDirection s;
        s.xi_ = v;
        return s;
    }

    /// Dimension of the ambient velocity space (one more than stored).
    int velocity_dim() const noexcept { return xi_.dim() + 1; }
    const Velocity& vec() const noexcept { return xi_; }
    double operator[](int i) const noexcept { return xi_[i]; }

    friend bool operator==(const SphereDirection& a, const SphereDirection& b) noexcept { return a.xi_ == b.xi_; }

private:
    Velocity xi_;
};

/// Deviation angle theta in (0, pi].
class DeviationAngle {
public:
    explicit DeviationAngle(double theta) : theta_(theta) {
        if (!(theta > 0.0 && theta <= std::numbers::pi)) {
            throw DomainError("deviation angle must lie in (0, pi]");
        }
    }
    double value() const noexcept { return theta_; }

private:
    double theta_;
};

/// Pi(xi) = (xi_1, ..., xi_{d-1}, 0).
inline Velocity embed_pi(const SphereDirection& xi) {
    const int d = xi.velocity_dim();
    Velocity out(d);
    for (int i = 0; i < d - 1; ++i) out[i] = xi[i];
    return out;
}

/// Reflection S_X applied to w.
inline Velocity symmetry_sx(const Velocity& X, const Velocity& w) {
    const double nx = norm(X);
    if (!(nx > 0.0)) throw ZeroVector("S_X is undefined for X = 0");
    const int d = X.dim();
    Velocity u = (-1.0 / nx) * X;
    u[d - 1] += 1.0;  // e_d - X/|X|
    const double nu = norm(u);
    if (nu < kGeometryTol.aligned) return w;
    u *= 1.0 / nu;
    return w - (2.0 * dot(w, u)) * u;
}

/// Gamma(X, xi) = |X| S_X(Pi(xi)), a point of C_X.
inline Velocity gamma_param(const Velocity& X, const SphereDirection& xi) {
    const double nx = norm(X);
    if (!(nx > 0.0)) throw ZeroVector("Gamma(X, xi) is undefined for X = 0");
    return nx * symmetry_sx(X, embed_pi(xi));
}

namespace detail {

// Rotation in the plane span{a, b} taking unit a to unit b, identity on the
// orthogonal complement. For antipodal a, b the plane is span{a, e_k} with
// e_k the first canonical vector not parallel to a.
class PlaneRotation {
public:
    PlaneRotation(const Velocity& a, const Velocity& b) : e1_(a) {
        const double c = std::clamp(dot(a, b), -1.0, 1.0);
        Velocity perp = b - c * a;
        double s = norm(perp);
        if (norm(a + b) < kGeometryTol.antipodal) {
            perp = fixed_orthogonal(a);
            s = norm(perp);
            cos_ = -1.0;
            sin_ = 0.0;
        } else {
            cos_ = c;
            sin_ = s;
        }
        e2_ = (1.0 / s) * perp;
    }

    Velocity apply(const Velocity& w) const {
        const double p1 = dot(w, e1_);
        const double p2 = dot(w, e2_);
        const double r1 = cos_ * p1 - sin_ * p2;
        const double r2 = sin_ * p1 + cos_ * p2;
        return w + (r1 - p1) * e1_ + (r2 - p2) * e2_;
    }

private:
    static Velocity fixed_orthogonal(const Velocity& a) {
        const int d = a.dim();
        for (int k = 0; k < d; ++k) {
            // "not parallel": the component orthogonal to a is well conditioned
            if (std::abs(a[k]) < 0.9) {
                Velocity e = Velocity::unit(d, k);
                return e - dot(e, a) * a;
            }
        }
        // unreachable for a unit vector in d >= 2
        Velocity e = Velocity::unit(d, 0);
        return e - dot(e, a) * a;
    }

    Velocity e1_;
    Velocity e2_;
    double cos_ = 1.0;
    double sin_ = 0.0;
};

}  // namespace detail

/// Matching map xi_zero(X, Y, xi).
inline SphereDirection xi_zero(const Velocity& X, const Velocity& Y, const SphereDirection& xi) {
    const double nx = norm(X);
    const double ny = norm(Y);
    if (!(nx > 0.0) || !(ny > 0.0)) throw ZeroVector("xi_zero needs nonzero X and Y");
    const Velocity xh = (1.0 / nx) * X;
    const Velocity yh = (1.0 / ny) * Y;
    if (distance(xh, yh) < kGeometryTol.same_direction) return xi;

    const int d = X.dim();
    // Work on the unit sphere: Gamma(X, xi)/|X| = S_X(Pi(xi)).
    const Velocity w = symmetry_sx(X, embed_pi(xi));
    const Velocity rw = detail::PlaneRotation(xh, yh).apply(w);
    const Velocity z = symmetry_sx(Y, rw);

    if (d == 2) {
        return SphereDirection{z[0] >= 0.0 ? 1.0 : -1.0};
    }
    Velocity out(d - 1);
    for (int i = 0; i < d - 1; ++i) out[i] = z[i];
    return SphereDirection::normalized(out);
}

/// Post-collisional pair (v', v'_*).
///
///     v'   = v + (cos(theta) - 1)/2 (v - v_*) + sin(theta)/2 Gamma(v - v_*, xi)
///     v'_* = v + v_* - v'
///
/// A collision with v = v_* is the identity.
inline std::pair<Velocity, Velocity> post_collision(const Velocity& v, const Velocity& vstar, DeviationAngle theta,
                                                    const SphereDirection& xi) {
    const Velocity X = v - vstar;
    if (norm2(X) == 0.0) return {v, vstar};
    const double th = theta.value();
    const Velocity vp = v + (0.5 * (std::cos(th) - 1.0)) * X + (0.5 * std::sin(th)) * gamma_param(X, xi);
    return {vp, v + vstar - vp};
}

}  // namespace kinetic
