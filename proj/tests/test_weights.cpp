#include "fixtures.hpp"
#include "formheat/weights.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace formheat;

namespace {

// Midpoint grid over an axis-parallel square, Richardson-extrapolated from n
// and 2n points per direction (leading error term h^2).
template <class F>
double grid_oracle(const Vec2& lo, double edge, const F& f, int n) {
    auto midpoint = [&](int m) {
        const double h = edge / m;
        double s = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) s += f(lo + Vec2((i + 0.5) * h, (j + 0.5) * h));
        return s * h * h;
    };
    const double coarse = midpoint(n), fine = midpoint(2 * n);
    return (4.0 * fine - coarse) / 3.0;
}

const double kSqrt2Over3 = std::numbers::sqrt2 / 3.0;
// Integral of |x| over [-1/2,1/2]^2: 4 * (1/2)^3 / 3 * (sqrt 2 + asinh 1).
const double kPointGamma1 = (std::numbers::sqrt2 + std::asinh(1.0)) / 6.0;

} // namespace

TEST(WeightSpec, ExponentRange) {
    EXPECT_NO_THROW(WeightSpec(Submanifold::point({0, 0}), 1.5));
    EXPECT_THROW(WeightSpec(Submanifold::point({0, 0}), 2.0), InvariantError);
    EXPECT_THROW(WeightSpec(Submanifold::polyline({{0, 0}, {1, 0}}), 1.0), InvariantError);
    EXPECT_THROW(WeightSpec(Submanifold::polyline({{0, 0}, {1, 0}}), -0.1), InvariantError);
    EXPECT_EQ(WeightSpec(Submanifold::point({0, 0}), 0.5).codimension(), 2);
}

TEST(WeightEval, Examples) {
    EXPECT_EQ(weight_eval(WeightSpec(), Vec2(3, 4)), 1.0);
    EXPECT_EQ(weight_eval(WeightSpec(Submanifold::point({0, 0}), 0.0), Vec2(3, 4)), 1.0);
    EXPECT_DOUBLE_EQ(weight_eval(WeightSpec(Submanifold::point({0, 0}), 1.0), Vec2(3, 4)), 5.0);
    const WeightSpec line(Submanifold::polyline({{-1, 0}, {1, 0}}), 0.5);
    EXPECT_NEAR(weight_eval(line, Vec2(0.3, 0.09)), 0.3, 1e-15);
}

TEST(WeightEval, HoelderContinuity) {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> U(-1, 1);
    for (double gamma : {0.25, 0.5, 0.9, 1.5}) {
        const WeightSpec w(Submanifold::point({0.1, -0.2}), gamma);
        // |a^g - b^g| <= |a - b|^g for g <= 1, and <= g R^{g-1} |a - b| for g > 1 on dist <= R.
        for (int i = 0; i < 1000; ++i) {
            const Vec2 x(U(rng), U(rng)), y(U(rng), U(rng));
            const double diff = std::abs(weight_eval(w, x) - weight_eval(w, y));
            const double L = gamma <= 1.0 ? 1.0 : gamma * std::pow(3.0, gamma - 1.0);
            EXPECT_LE(diff, L * std::pow((x - y).norm(), std::min(gamma, 1.0)) + 1e-14);
        }
    }
}

TEST(WeightedIntegral, UnweightedIsArea) {
    const TriangleCell t{{0, 0}, {2, 0.3}, {0.4, 1.7}};
    EXPECT_EQ(weighted_cell_integral(WeightSpec(), t), t.area());
    EXPECT_EQ(weighted_cell_integral(WeightSpec(Submanifold::point({0, 0}), 0.0), t), t.area());
    EXPECT_THROW(weighted_cell_integral(WeightSpec(), t, 0), Error);
}

TEST(WeightedIntegral, LineHalfPowerClosedForm) {
    const WeightSpec w(Submanifold::polyline({{-1, 0}, {1, 0}}), 0.5);
    EXPECT_NEAR(weighted_cell_integral(w, SquareCell{{0, 0}, 1.0}), kSqrt2Over3, 1e-6 * kSqrt2Over3);
}

TEST(WeightedIntegral, PointGammaOneAgainstGridOracle) {
    const WeightSpec w(Submanifold::point({0, 0}), 1.0);
    const double value = weighted_cell_integral(w, SquareCell{{0, 0}, 1.0});
    const double oracle = grid_oracle(Vec2(-0.5, -0.5), 1.0, [](const Vec2& x) { return x.norm(); }, 400);
    EXPECT_NEAR(value, oracle, 1e-6 * oracle);
    EXPECT_NEAR(value, kPointGamma1, 1e-8);
}

TEST(WeightedIntegral, TrianglesAgainstClosedForm) {
    // S = {y = 0.3}; the lower triangle {0 <= y <= x <= 1} reduces to the
    // one-dimensional integral of (1 - y) |y - 0.3|^{1/2}.
    const WeightSpec w(Submanifold::polyline({{-1, 0.3}, {2, 0.3}}), 0.5);
    const TriangleCell lower{{0, 0}, {1, 0}, {1, 1}}, upper{{0, 0}, {1, 1}, {0, 1}};
    const double lower_exact = 0.7 * (2.0 / 3.0) * std::pow(0.3, 1.5) + 0.4 * std::pow(0.3, 2.5) +
                               0.7 * (2.0 / 3.0) * std::pow(0.7, 1.5) - 0.4 * std::pow(0.7, 2.5);
    const double square_exact = (std::pow(0.3, 1.5) + std::pow(0.7, 1.5)) / 1.5;
    EXPECT_NEAR(weighted_cell_integral(w, lower), lower_exact, 1e-12);
    EXPECT_NEAR(weighted_cell_integral(w, upper), square_exact - lower_exact, 1e-12);
}

TEST(WeightedIntegral, PolylineCornerAgainstGridOracle) {
    // An L-shaped S through the cube: the closed-form cells do not apply near
    // the corner, so this exercises the adaptive path for codimension one.
    const WeightSpec w(Submanifold::polyline({{-1, 0.05}, {0.1, 0.05}, {0.1, 1}}), 0.5);
    const double value = weighted_cell_integral(w, SquareCell{{0, 0}, 1.0});
    // Oracle: Richardson on a midpoint grid whose lines avoid S, with the
    // singular rate h^{1+gamma} of a codimension-one weight eliminated.
    auto f = [&](const Vec2& x) { return weight_eval(w, x); };
    auto midpoint = [&](int m) {
        const double h = 1.0 / m;
        double s = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) s += f(Vec2(-0.5 + (i + 0.5) * h, -0.5 + (j + 0.5) * h));
        return s * h * h;
    };
    const double p = 1.5;
    const double i1 = midpoint(640), i2 = midpoint(1280), i3 = midpoint(2560);
    const double r1 = (std::pow(2, p) * i2 - i1) / (std::pow(2, p) - 1);
    const double r2 = (std::pow(2, p) * i3 - i2) / (std::pow(2, p) - 1);
    const double oracle = (4 * r2 - r1) / 3;
    EXPECT_NEAR(value, oracle, 1e-6 * oracle);
}

TEST(WeightedIntegral, ScalingLaw) {
    for (const auto& [s, gamma] : {std::pair{Submanifold::point({0.2, 0.1}), 1.0},
                                   std::pair{Submanifold::point({0.2, 0.1}), 1.5},
                                   std::pair{Submanifold::polyline({{-1, 0.1}, {1, 0.1}}), 0.5}}) {
        const WeightSpec w(s, gamma);
        const Vec2 c(0.2, 0.1);
        double r = 0.5;
        double prev = weighted_cell_integral(w, SquareCell{c, r});
        for (int k = 0; k < 4; ++k) {
            r /= 2;
            const double cur = weighted_cell_integral(w, SquareCell{c, r});
            EXPECT_NEAR(prev / cur, std::pow(2.0, 2.0 + gamma), 0.01 * std::pow(2.0, 2.0 + gamma));
            prev = cur;
        }
    }
}

TEST(WeightedIntegral, MonotoneInGamma) {
    const Submanifold s = Submanifold::polyline({{-1, 0}, {1, 0}});
    const SquareCell cube{{0.1, 0.2}, 0.5}; // inside the unit tube of S
    double prev = weighted_cell_integral(WeightSpec(s, 0.0), cube);
    for (double g : {0.1, 0.3, 0.6, 0.9}) {
        const double cur = weighted_cell_integral(WeightSpec(s, g), cube);
        EXPECT_LT(cur, prev);
        prev = cur;
    }
}

TEST(WeightedIntegral, BudgetErrorReportsTolerance) {
    const WeightSpec w(Submanifold::point({0.1, 0.1}), 1.9);
    AdaptiveOptions opt = default_weight_quadrature();
    opt.max_cells = 50;
    opt.rel_tol = 1e-15;
    EXPECT_THROW(weighted_cell_integral(w, SquareCell{{0, 0}, 1.0}, 6, opt), AccuracyError);
}

TEST(DyadicScan, UnweightedIsOne) {
    const auto r = muckenhoupt_lower_bound_scan(WeightSpec(), 3, Vec2(-1, -1), Vec2(1, 1));
    EXPECT_EQ(r.c_min, 1.0);
    for (const auto& l : r.levels) EXPECT_EQ(l.c_min, 1.0);
}

TEST(DyadicScan, SegmentOnSCubesMatchClosedForm) {
    const WeightSpec w(Submanifold::polyline({{-1, 0}, {1, 0}}), 0.5);
    const auto r = muckenhoupt_lower_bound_scan(w, 4, Vec2(-0.5, -0.5), Vec2(0.5, 0.5));
    for (const auto& e : r.entries)
        if (e.cube.my == 0) EXPECT_NEAR(e.normalized, kSqrt2Over3, 1e-6) << e.cube.level;
    EXPECT_NEAR(r.c_min, kSqrt2Over3, 1e-6);
    EXPECT_GT(r.c_min, 0.0);
}

TEST(DyadicScan, PointLevelsAgree) {
    const WeightSpec w(Submanifold::point({0, 0}), 1.0);
    const auto r = muckenhoupt_lower_bound_scan(w, 4, Vec2(-1, -1), Vec2(1, 1));
    ASSERT_EQ(r.levels.size(), 5u);
    for (const auto& l : r.levels) {
        EXPECT_NEAR(l.c_min, kPointGamma1, 1e-3 * kPointGamma1);
        EXPECT_EQ(l.argmin.mx, 0);
        EXPECT_EQ(l.argmin.my, 0);
    }
}

TEST(DyadicScan, WindowWarningAndCsv) {
    const WeightSpec w(Submanifold::point({3, 3}), 0.5);
    const auto r = muckenhoupt_lower_bound_scan(w, 1, Vec2(-1, -1), Vec2(1, 1));
    EXPECT_TRUE(r.window_warning);
    std::ostringstream out;
    write_scan_csv(out, r);
    EXPECT_EQ(out.str().rfind("level,m_x,m_y,normalized_integral\n", 0), 0u);
    EXPECT_THROW(muckenhoupt_lower_bound_scan(w, 9, Vec2(-1, -1), Vec2(1, 1)), Error);
}

TEST(DyadicScan, DeterministicAcrossThreadCounts) {
    const WeightSpec w(Submanifold::point({0.1, 0.05}), 0.7);
    setenv("FORMHEAT_THREADS", "1", 1);
    const auto a = muckenhoupt_lower_bound_scan(w, 3, Vec2(-1, -1), Vec2(1, 1));
    setenv("FORMHEAT_THREADS", "4", 1);
    const auto b = muckenhoupt_lower_bound_scan(w, 3, Vec2(-1, -1), Vec2(1, 1));
    unsetenv("FORMHEAT_THREADS");
    ASSERT_EQ(a.entries.size(), b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) EXPECT_EQ(a.entries[i].normalized, b.entries[i].normalized);
    EXPECT_EQ(a.c_min, b.c_min);
    EXPECT_EQ(a.argmin.mx, b.argmin.mx);
    EXPECT_EQ(a.argmin.my, b.argmin.my);
}

TEST(ClassifyCase, Examples) {
    const Mesh m = formheat::testing::interface_square(8, EdgeLabel::dirichlet, EdgeLabel::neumann,
                                                       EdgeLabel::dynamic, EdgeLabel::neumann);
    EXPECT_EQ(classify_case(WeightSpec(), m).kind, WeightCase::nondegenerate);
    // Point at (1/2, 1/4): Sigma at y = 1/2 and the top edge are farther than one cell.
    const auto a = classify_case(WeightSpec(Submanifold::point({0.5, 0.25}), 1.5), m);
    EXPECT_EQ(a.kind, WeightCase::A);
    EXPECT_NEAR(a.separation, 0.25, 1e-15);
    EXPECT_FALSE(a.outside_theory);
    const auto b = classify_case(WeightSpec(Submanifold::polyline({{0.25, 0.5}, {0.75, 0.5}}), 0.5), m);
    EXPECT_EQ(b.kind, WeightCase::B);
    EXPECT_FALSE(b.outside_theory);
    const auto b2 = classify_case(WeightSpec(Submanifold::point({0.3, 0.5}), 1.5), m);
    EXPECT_EQ(b2.kind, WeightCase::B);
    EXPECT_TRUE(b2.outside_theory);
    // A segment crossing Sigma between its nodes is detected through edge distances.
    const auto cross = classify_case(WeightSpec(Submanifold::polyline({{0.3, 0.3}, {0.3, 0.7}}), 0.5), m, 0.0);
    EXPECT_EQ(cross.kind, WeightCase::B);
}
