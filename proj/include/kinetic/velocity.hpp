#pragma once

// Small fixed-capacity vectors for particle velocities.
//
// The dimension is a runtime value (d >= 2) but storage is inline, so a
// Velocity is a plain value type that never allocates.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>

#include "kinetic/errors.hpp"

namespace kinetic {

inline constexpr int kMaxDim = 8;

class Velocity {
public:
    Velocity() = default;

    /// Zero vector of dimension d.
    explicit Velocity(int d) : dim_(d) {
        if (d < 1 || d > kMaxDim) {
            throw DomainError("velocity dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
        }
    }

    Velocity(std::initializer_list<double> xs) : Velocity(std::span<const double>(xs.begin(), xs.size())) {}

    explicit Velocity(std::span<const double> xs) : Velocity(static_cast<int>(xs.size())) {
        std::copy(xs.begin(), xs.end(), c_.begin());
    }

    int dim() const noexcept { return dim_; }
    double& operator[](int i) noexcept { return c_[static_cast<std::size_t>(i)]; }
    double operator[](int i) const noexcept { return c_[static_cast<std::size_t>(i)]; }

    std::span<const double> components() const noexcept { return {c_.data(), static_cast<std::size_t>(dim_)}; }
    std::span<double> components() noexcept { return {c_.data(), static_cast<std::size_t>(dim_)}; }

    /// Unit vector along axis k.
    static Velocity unit(int d, int k) {
        Velocity e(d);
        e[k] = 1.0;
        return e;
    }

    bool finite() const noexcept {
        for (int i = 0; i < dim_; ++i) {
            if (!std::isfinite(c_[i])) return false;
        }
        return true;
    }

    Velocity& operator+=(const Velocity& o) noexcept {
        for (int i = 0; i < dim_; ++i) c_[i] += o.c_[i];
        return *this;
    }
    Velocity& operator-=(const Velocity& o) noexcept {
        for (int i = 0; i < dim_; ++i) c_[i] -= o.c_[i];
        return *this;
    }
    Velocity& operator*=(double s) noexcept {
        for (int i = 0; i < dim_; ++i) c_[i] *= s;
        return *this;
    }

    friend Velocity operator+(Velocity a, const Velocity& b) noexcept { return a += b; }
    friend Velocity operator-(Velocity a, const Velocity& b) noexcept { return a -= b; }
    friend Velocity operator*(double s, Velocity a) noexcept { return a *= s; }
    friend Velocity operator*(Velocity a, double s) noexcept { return a *= s; }
    friend Velocity operator-(Velocity a) noexcept { return a *= -1.0; }

    friend bool operator==(const Velocity& a, const Velocity& b) noexcept {
        if (a.dim_ != b.dim_) return false;
        for (int i = 0; i < a.dim_; ++i) {
            if (a.c_[i] != b.c_[i]) return false;
        }
        return true;
    }

private:
    std::array<double, kMaxDim> c_{};
    int dim_ = 0;
};

inline double dot(const Velocity& a, const Velocity& b) noexcept {
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Velocity& a) noexcept { return dot(a, a); }

inline double norm(const Velocity& a) noexcept {
    // hypot-style scaling is not needed at simulation magnitudes
    return std::sqrt(norm2(a));
}

inline double distance(const Velocity& a, const Velocity& b) noexcept {
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        const double t = a[i] - b[i];
        s += t * t;
    }
    return std::sqrt(s);
}

}  // namespace kinetic
