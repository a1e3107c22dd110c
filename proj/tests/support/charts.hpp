#pragma once

// Random polylines seen through two graph charts.

#include "formheat/geometry.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace formheat::testing {

struct ChartPair {
    std::vector<Vec2> pts;
    SurfaceChart a, b;
};

inline ChartPair random_chart_pair(std::mt19937& rng) {
    std::uniform_real_distribution<double> U(0, 1);
    std::vector<Vec2> pts;
    double x = 0.0;
    for (int i = 0; i < 8; ++i) {
        pts.emplace_back(x, 0.4 * (U(rng) - 0.5) * 0.25);
        x += 0.1 + 0.2 * U(rng);
    }
    const Mat2 qa = SurfaceChart::rotation_to(Vec2(std::cos(0.6 * (U(rng) - 0.5)), std::sin(0.6 * (U(rng) - 0.5))));
    const Mat2 qb = SurfaceChart::rotation_to(Vec2(std::cos(0.6 * (U(rng) - 0.5)), std::sin(0.6 * (U(rng) - 0.5))));
    const Vec2 sa(U(rng), U(rng)), sb(U(rng), U(rng));
    return {pts, SurfaceChart::from_points(pts, qa, sa), SurfaceChart::from_points(pts, qb, sb)};
}

/// Uniform parameter in the chart range avoiding breakpoints.
inline double random_regular(std::mt19937& rng, const SurfaceChart& c) {
    std::uniform_real_distribution<double> U(0.01, 0.99);
    for (;;) {
        const double y = c.lower() + U(rng) * (c.upper() - c.lower());
        if (!c.h().is_breakpoint(y)) return y;
    }
}

} // namespace formheat::testing
