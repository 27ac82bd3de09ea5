#pragma once

#include <random>
#include <vector>

#include "kinetic/geometry.hpp"
#include "kinetic/velocity.hpp"

namespace testing_support {

inline kinetic::Velocity random_velocity(std::mt19937_64& g, int d, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    kinetic::Velocity v(d);
    for (int i = 0; i < d; ++i) v[i] = n(g);
    return v;
}

inline kinetic::SphereDirection random_direction(std::mt19937_64& g, int d) {
    if (d == 2) return kinetic::SphereDirection{std::bernoulli_distribution(0.5)(g) ? 1.0 : -1.0};
    return kinetic::SphereDirection::normalized(random_velocity(g, d - 1));
}

inline std::vector<kinetic::Velocity> random_cloud(std::mt19937_64& g, std::size_t n, int d, double scale = 1.0) {
    std::vector<kinetic::Velocity> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(random_velocity(g, d, scale));
    return out;
}

}  // namespace testing_support
