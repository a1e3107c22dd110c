#pragma once

// Quadrature rules on intervals, triangles and axis-parallel squares, plus a
// global-error-driven adaptive integrator over recursively subdivided cells.

#include "formheat/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <queue>
#include <type_traits>
#include <utility>
#include <vector>

namespace formheat {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct GaussRule1D {
    std::vector<double> nodes;   // on [0, 1]
    std::vector<double> weights; // sum to 1
};

/// Gauss-Legendre rule with n points mapped to [0, 1].
inline GaussRule1D make_gauss_legendre(int n) {
    if (n < 1) throw Error("gauss-legendre: need at least one point");
    // Returns (P_n(x), P_n'(x)).
    auto legendre = [n](double x) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
    };
    GaussRule1D rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        // Tricomi initial guess, then Newton.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = legendre(x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = legendre(x).second;
        rule.nodes[n - 1 - i] = 0.5 * (x + 1.0);
        rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

/// Cached rule lookup; rules are immutable once built.
inline const GaussRule1D& gauss_legendre(int n) {
    static std::mutex mutex;
    static std::map<int, GaussRule1D> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_gauss_legendre(n)).first;
    return it->second;
}

namespace detail {

// Running sum that takes its shape from the first term, so integrands need
// not be evaluable anywhere but at the quadrature nodes.
template <class Value>
void accumulate(std::optional<Value>& sum, const Value& term) {
    if (sum)
        *sum += term;
    else
        sum = term;
}

} // namespace detail

struct TriangleCell {
    Vec2 a, b, c;

    double area() const {
        return 0.5 * std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
    }
    Vec2 centroid() const { return (a + b + c) / 3.0; }
    std::vector<Vec2> corners() const { return {a, b, c}; }
    /// Radius of the smallest centroid-centred disc containing the cell.
    double radius() const {
        const Vec2 g = centroid();
        return std::max({(a - g).norm(), (b - g).norm(), (c - g).norm()});
    }
    std::array<TriangleCell, 4> children() const {
        const Vec2 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
        return {TriangleCell{a, ab, ca}, TriangleCell{ab, b, bc}, TriangleCell{ca, bc, c},
                TriangleCell{ab, bc, ca}};
    }
};

/// Axis-parallel square of edge length `edge` centred at `center`.
struct SquareCell {
    Vec2 center;
    double edge;

    double area() const { return edge * edge; }
    Vec2 centroid() const { return center; }
    std::vector<Vec2> corners() const {
        const double q = edge / 2;
        return {center + Vec2(-q, -q), center + Vec2(q, -q), center + Vec2(q, q), center + Vec2(-q, q)};
    }
    double radius() const { return edge * std::numbers::sqrt2 / 2.0; }
    std::array<SquareCell, 4> children() const {
        const double q = edge / 4.0;
        return {SquareCell{center + Vec2(-q, -q), edge / 2}, SquareCell{center + Vec2(q, -q), edge / 2},
                SquareCell{center + Vec2(-q, q), edge / 2}, SquareCell{center + Vec2(q, q), edge / 2}};
    }
};

/// Straight segment [a, b]; `area` is its length.
struct SegmentCell {
    Vec2 a, b;

    double area() const { return (b - a).norm(); }
    Vec2 centroid() const { return 0.5 * (a + b); }
    double radius() const { return 0.5 * (b - a).norm(); }
    std::vector<Vec2> corners() const { return {a, b}; }
    std::array<SegmentCell, 2> children() const {
        const Vec2 m = centroid();
        return {SegmentCell{a, m}, SegmentCell{m, b}};
    }
};

/// Tensor Gauss rule on a square, n points per direction.
template <class F>
auto apply_rule(const SquareCell& cell, const F& f, int n) {
    const GaussRule1D& g = gauss_legendre(n);
    using Value = std::decay_t<decltype(f(Vec2{}))>;
    std::optional<Value> sum;
    const Vec2 lo = cell.center - Vec2::Constant(cell.edge / 2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec2 p = lo + cell.edge * Vec2(g.nodes[i], g.nodes[j]);
            detail::accumulate(sum, Value((g.weights[i] * g.weights[j]) * f(p)));
        }
    return Value(*sum * cell.area());
}

/// Collapsed (Duffy) Gauss rule on a triangle, n points per direction.
template <class F>
auto apply_rule(const TriangleCell& cell, const F& f, int n) {
    const GaussRule1D& g = gauss_legendre(n);
    using Value = std::decay_t<decltype(f(Vec2{}))>;
    std::optional<Value> sum;
    const Vec2 e1 = cell.b - cell.a, e2 = cell.c - cell.a;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double eta = g.nodes[j];
            const double xi = g.nodes[i] * (1.0 - eta);
            const Vec2 p = cell.a + xi * e1 + eta * e2;
            detail::accumulate(sum, Value((g.weights[i] * g.weights[j] * (1.0 - eta)) * f(p)));
        }
    return Value(*sum * (2.0 * cell.area()));
}

/// Gauss rule on the segment [a, b]; returns the integral with respect to arc length.
template <class F>
auto integrate_segment(const Vec2& a, const Vec2& b, const F& f, int n) {
    const GaussRule1D& g = gauss_legendre(n);
    using Value = std::decay_t<decltype(f(Vec2{}))>;
    std::optional<Value> sum;
    for (int i = 0; i < n; ++i) detail::accumulate(sum, Value(g.weights[i] * f(Vec2(a + g.nodes[i] * (b - a)))));
    return Value(*sum * (b - a).norm());
}

template <class F>
auto apply_rule(const SegmentCell& cell, const F& f, int n) {
    return integrate_segment(cell.a, cell.b, f, n);
}

inline double magnitude(double v) { return std::abs(v); }
template <class Derived>
double magnitude(const Eigen::MatrixBase<Derived>& v) {
    return v.template lpNorm<Eigen::Infinity>();
}

struct AdaptiveOptions {
    int order = 6;               ///< Gauss points per direction
    double rel_tol = 1e-9;       ///< on the a-posteriori error estimate
    double abs_tol = 1e-300;
    int grading_depth = 6;       ///< max depth of the geometric pre-refinement
    int max_depth = 40;
    std::size_t max_cells = 200000;
};

template <class Value>
struct AdaptiveResult {
    Value value;
    double error_estimate = 0.0;
    std::size_t cells = 0;
};

/// Integrates over `root` with a caller-supplied cell rule `rule(cell)`.
///
/// Cells for which `needs_split(cell)` holds are first subdivided geometrically
/// (up to `grading_depth`).  The leaves are then refined greedily by largest
/// estimated error, |rule(cell) - sum rule(children)|, until the summed estimate
/// is below the tolerance.  Exceeding the cell budget or the depth limit raises
/// AccuracyError.
template <class Cell, class Rule, class SplitPredicate>
auto integrate_adaptive_rule(const Cell& root, const Rule& rule, const SplitPredicate& needs_split,
                             const AdaptiveOptions& opt = {}) {
    using Value = std::decay_t<decltype(rule(root))>;

    std::vector<std::pair<Cell, int>> leaves;
    std::function<void(const Cell&, int)> grade = [&](const Cell& c, int depth) {
        if (depth < opt.grading_depth && needs_split(c)) {
            for (const Cell& child : c.children()) grade(child, depth + 1);
        } else {
            leaves.emplace_back(c, depth);
        }
    };
    grade(root, 0);

    struct Node {
        Cell cell;
        int depth;
        Value fine;
        double error;
    };
    auto evaluate = [&](const Cell& c, int depth) {
        const Value coarse = rule(c);
        Value fine = coarse * 0.0;
        for (const Cell& child : c.children()) fine += rule(child);
        return Node{c, depth, fine, magnitude(Value(fine - coarse))};
    };
    auto cmp = [](const Node& x, const Node& y) { return x.error < y.error; };
    std::priority_queue<Node, std::vector<Node>, decltype(cmp)> heap(cmp);

    Value total = rule(root) * 0.0;
    double total_error = 0.0;
    for (const auto& [c, depth] : leaves) {
        Node node = evaluate(c, depth);
        total += node.fine;
        total_error += node.error;
        heap.push(std::move(node));
    }

    std::size_t cells = heap.size();
    auto tolerance = [&] { return std::max(opt.rel_tol * magnitude(total), opt.abs_tol); };
    while (total_error > tolerance()) {
        Node worst = heap.top();
        heap.pop();
        if (worst.depth >= opt.max_depth || cells + 3 > opt.max_cells) {
            const double scale = std::max(magnitude(total), 1e-300);
            throw AccuracyError("adaptive quadrature budget exceeded", total_error / scale);
        }
        total -= worst.fine;
        total_error -= worst.error;
        for (const Cell& child : worst.cell.children()) {
            Node node = evaluate(child, worst.depth + 1);
            total += node.fine;
            total_error += node.error;
            heap.push(std::move(node));
        }
        cells += worst.cell.children().size() - 1;
    }

    // Re-sum from the leaves to shed the drift of the incremental updates.
    Value value = total * 0.0;
    double err = 0.0;
    while (!heap.empty()) {
        value += heap.top().fine;
        err += heap.top().error;
        heap.pop();
    }
    return AdaptiveResult<Value>{value, err, cells};
}

/// Adaptive integration of `f` with the Gauss rule of order `opt.order`.
template <class Cell, class F, class SplitPredicate>
auto integrate_adaptive(const Cell& root, const F& f, const SplitPredicate& needs_split,
                        const AdaptiveOptions& opt = {}) {
    return integrate_adaptive_rule(
        root, [&](const Cell& c) { return apply_rule(c, f, opt.order); }, needs_split, opt);
}

} // namespace formheat
