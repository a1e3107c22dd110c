#pragma once

// Power weights dist(x, S)^gamma, their cell integrals, and the dyadic-cube
// lower-bound scan.

#include "formheat/errors.hpp"
#include "formheat/geometry.hpp"
#include "formheat/parallel.hpp"
#include "formheat/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace formheat {

/// Degenerate bulk weight dist(., S)^gamma with 0 <= gamma < codim(S).
class WeightSpec {
public:
    /// The unweighted case (gamma = 0, S empty).
    WeightSpec() = default;

    WeightSpec(Submanifold s, double gamma) : s_(std::move(s)), gamma_(gamma) {
        s_.check();
        if (!(gamma_ >= 0.0) || !(gamma_ < s_.codimension()))
            throw InvariantError("weight exponent must satisfy 0 <= gamma < codimension (gamma = " +
                                 std::to_string(gamma_) + ", codimension " + std::to_string(s_.codimension()) + ")");
    }

    const Submanifold& set() const { return s_; }
    double gamma() const { return gamma_; }
    bool degenerate() const { return gamma_ > 0.0; }
    int codimension() const { return s_.codimension(); }

    double distance(const Vec2& x) const { return distance_to_submanifold(s_, x); }

private:
    Submanifold s_;
    double gamma_ = 0.0;
};

inline double weight_eval(const WeightSpec& w, const Vec2& x) {
    if (!w.degenerate()) return 1.0;
    return std::pow(w.distance(x), w.gamma());
}

/// True when max/min of the weight over the cell may exceed 4, bounding the
/// distance over the cell by dist(centroid) -/+ radius.
template <class Cell>
bool weight_ratio_exceeds(const WeightSpec& w, const Cell& cell, double ratio = 4.0) {
    if (!w.degenerate()) return false;
    const double d = w.distance(cell.centroid()), r = cell.radius();
    if (d <= r) return true;
    return std::pow((d + r) / (d - r), w.gamma()) > ratio;
}

inline AdaptiveOptions default_weight_quadrature() {
    AdaptiveOptions opt;
    opt.order = 6;
    opt.rel_tol = 1e-9;
    opt.grading_depth = 6;
    opt.max_depth = 40;
    opt.max_cells = 400000;
    return opt;
}

namespace detail {

/// Integral over the triangle (a, b, c) of l(x)^gamma for the nonnegative
/// linear function l with vertex values da, db, dc. Uses the Hermite-Genocchi
/// form 2|T| g[da, db, dc] with g(x) = x^{gamma+2} / ((gamma+1)(gamma+2)).
inline double linear_power_triangle(const Vec2& a, const Vec2& b, const Vec2& c, double da, double db, double dc,
                                    double gamma) {
    const double twice_area = std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
    if (twice_area == 0.0) return 0.0;
    std::array<double, 3> d{std::max(da, 0.0), std::max(db, 0.0), std::max(dc, 0.0)};
    std::sort(d.begin(), d.end());
    constexpr double close = 1e-3;
    if (d[2] - d[0] <= close * d[2]) {
        if (d[2] == 0.0) return 0.0;
        // Nearly constant l: the integrand is smooth.
        const TriangleCell ref{{0, 0}, {1, 0}, {0, 1}};
        auto f = [&](const Vec2& y) { return std::pow((1 - y.x() - y.y()) * da + y.x() * db + y.y() * dc, gamma); };
        return twice_area * apply_rule(ref, f, 4);
    }
    const double g1 = gamma + 1, g2 = gamma + 2;
    auto g = [&](double x) { return std::pow(x, g2) / (g1 * g2); };
    auto first = [&](double x, double y) {
        if (y - x <= close * y) {
            const double m = 0.5 * (x + y), h = y - x;
            if (m == 0.0) return 0.0;
            return std::pow(m, g1) / g1 + gamma * std::pow(m, gamma - 1) * h * h / 24.0;
        }
        return (g(y) - g(x)) / (y - x);
    };
    return twice_area * (first(d[1], d[2]) - first(d[0], d[1])) / (d[2] - d[0]);
}

/// Integral of |n.(x - p)|^gamma over a convex polygon: the polygon is cut by
/// the line n.(x - p) = 0 and each part is fanned into triangles.
inline double abs_linear_power_polygon(const std::vector<Vec2>& poly, const Vec2& p, const Vec2& n, double gamma) {
    std::vector<std::pair<Vec2, double>> pos, neg;
    const std::size_t m = poly.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2& u = poly[i];
        const Vec2& v = poly[(i + 1) % m];
        const double su = n.dot(u - p), sv = n.dot(v - p);
        if (su >= 0) pos.emplace_back(u, su);
        if (su <= 0) neg.emplace_back(u, -su);
        if ((su > 0 && sv < 0) || (su < 0 && sv > 0)) {
            const Vec2 x = u + (su / (su - sv)) * (v - u);
            pos.emplace_back(x, 0.0);
            neg.emplace_back(x, 0.0);
        }
    }
    double total = 0.0;
    for (const auto* part : {&pos, &neg})
        for (std::size_t k = 1; k + 1 < part->size(); ++k) {
            const auto& [x0, d0] = (*part)[0];
            const auto& [x1, d1] = (*part)[k];
            const auto& [x2, d2] = (*part)[k + 1];
            total += linear_power_triangle(x0, x1, x2, d0, d1, d2, gamma);
        }
    return total;
}

/// When dist(., S) coincides on the whole cell with the distance to the line
/// through one segment of a polyline S, returns that segment's index.
template <class Cell>
std::optional<std::size_t> single_line_segment(const WeightSpec& w, const Cell& cell) {
    const Submanifold& s = w.set();
    if (s.kind != Submanifold::Kind::polyline) return std::nullopt;
    const Vec2 g = cell.centroid();
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < s.vertices.size(); ++i) {
        const double d = point_segment_distance(g, s.vertices[i], s.vertices[i + 1]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    const Vec2 a = s.vertices[best], b = s.vertices[best + 1];
    const double len = (b - a).norm();
    if (len == 0.0) return std::nullopt;
    const Vec2 t = (b - a) / len, n(-t.y(), t.x());
    double reach = 0.0;
    for (const Vec2& v : cell.corners()) {
        const double along = t.dot(v - a);
        if (along < 0.0 || along > len) return std::nullopt;
        reach = std::max(reach, std::abs(n.dot(v - a)));
    }
    const double r = cell.radius();
    for (std::size_t j = 0; j + 1 < s.vertices.size(); ++j)
        if (j != best && point_segment_distance(g, s.vertices[j], s.vertices[j + 1]) - r < reach) return std::nullopt;
    return best;
}

} // namespace detail

/// Integral of dist(x, S)^gamma over a triangle or square.
///
/// Cells on which the distance reduces to the distance from one straight piece
/// of a polyline S are integrated in closed form. All other cells go through
/// graded adaptive subdivision, splitting while the weight ratio over a cell
/// may exceed 4. Throws AccuracyError when the cell budget is exhausted.
template <class Cell>
double weighted_cell_integral(const WeightSpec& w, const Cell& cell, int order = 6,
                              AdaptiveOptions opt = default_weight_quadrature()) {
    if (order < 1) throw Error("quadrature order must be at least 1");
    if (!w.degenerate()) return cell.area();
    opt.order = order;
    auto f = [&w](const Vec2& x) { return weight_eval(w, x); };
    auto rule = [&](const Cell& c) {
        if (auto seg = detail::single_line_segment(w, c)) {
            const Vec2 a = w.set().vertices[*seg], b = w.set().vertices[*seg + 1];
            const Vec2 t = (b - a).normalized();
            return detail::abs_linear_power_polygon(c.corners(), a, Vec2(-t.y(), t.x()), w.gamma());
        }
        return apply_rule(c, f, order);
    };
    auto split = [&w](const Cell& c) {
        return weight_ratio_exceeds(w, c) && !detail::single_line_segment(w, c);
    };
    return integrate_adaptive_rule(cell, rule, split, opt).value;
}

/// Axis-parallel dyadic square of edge 2^-level centred at 2^-level * m.
struct DyadicCube {
    int level = 0;
    std::int64_t mx = 0, my = 0;

    double edge() const { return std::ldexp(1.0, -level); }
    Vec2 center() const { return edge() * Vec2(static_cast<double>(mx), static_cast<double>(my)); }
    SquareCell cell() const { return {center(), edge()}; }
    double volume() const { return edge() * edge(); }
};

struct ScanEntry {
    DyadicCube cube;
    double normalized; ///< 2^{l(d+gamma)} times the weighted integral
};

struct ScanLevel {
    int level;
    double c_min;
    DyadicCube argmin;
    bool analytic; ///< minimum attained by the far-cube bound rather than a computed cube
};

struct ScanResult {
    double c_min = std::numeric_limits<double>::infinity();
    DyadicCube argmin;
    bool window_warning = false; ///< S not contained in the window
    std::vector<ScanLevel> levels;
    std::vector<ScanEntry> entries; ///< every numerically integrated cube
};

struct ScanOptions {
    double tube_cubes = 2.0; ///< cubes farther than this many edges from S use the analytic bound
    int order = 6;
    AdaptiveOptions quadrature = default_weight_quadrature();
};

/// Minimum over levels l <= l_max and over all dyadic cubes centred in the
/// window of 2^{l(2+gamma)} * integral of the weight over the cube.
///
/// Cubes near S are integrated numerically. For the others the weight is at
/// least (dist(center, S) - half diagonal)^gamma on the whole cube, which gives
/// the lower bound (2^l (dist - half diagonal))^gamma of the normalized value.
inline ScanResult muckenhoupt_lower_bound_scan(const WeightSpec& w, int l_max, const Vec2& window_lo,
                                               const Vec2& window_hi, const ScanOptions& opt = {}) {
    if (l_max < 0 || l_max > 8) throw Error("scan level must lie in [0, 8]");
    ScanResult result;
    if (w.degenerate()) {
        for (const auto& p : w.set().vertices)
            if ((p.array() < window_lo.array()).any() || (p.array() > window_hi.array()).any())
                result.window_warning = true;
    }
    const double d = 2.0;
    for (int l = 0; l <= l_max; ++l) {
        const double scale = std::ldexp(1.0, l);
        const auto mx0 = static_cast<std::int64_t>(std::ceil(window_lo.x() * scale - 1e-12));
        const auto mx1 = static_cast<std::int64_t>(std::floor(window_hi.x() * scale + 1e-12));
        const auto my0 = static_cast<std::int64_t>(std::ceil(window_lo.y() * scale - 1e-12));
        const auto my1 = static_cast<std::int64_t>(std::floor(window_hi.y() * scale + 1e-12));

        std::vector<DyadicCube> near;
        ScanLevel lev{l, std::numeric_limits<double>::infinity(), {}, true};
        for (auto my = my0; my <= my1; ++my)
            for (auto mx = mx0; mx <= mx1; ++mx) {
                DyadicCube q{l, mx, my};
                if (!w.degenerate()) {
                    near.push_back(q);
                    continue;
                }
                const double half_diag = q.edge() * std::numbers::sqrt2 / 2.0;
                const double gap = w.distance(q.center()) - half_diag;
                if (gap < opt.tube_cubes * q.edge()) {
                    near.push_back(q);
                } else {
                    const double bound = std::pow(scale * gap, w.gamma());
                    if (bound < lev.c_min) lev = {l, bound, q, true};
                }
            }

        std::vector<double> values(near.size());
        parallel_for(near.size(), [&](std::size_t i) {
            const double integral = weighted_cell_integral(w, near[i].cell(), opt.order, opt.quadrature);
            values[i] = integral * std::pow(scale, d + w.gamma());
        });
        for (std::size_t i = 0; i < near.size(); ++i) {
            result.entries.push_back({near[i], values[i]});
            if (values[i] < lev.c_min) lev = {l, values[i], near[i], false};
        }
        result.levels.push_back(lev);
        if (lev.c_min < result.c_min) {
            result.c_min = lev.c_min;
            result.argmin = lev.argmin;
        }
    }
    return result;
}

inline void write_scan_csv(std::ostream& out, const ScanResult& r) {
    out << "level,m_x,m_y,normalized_integral\n";
    out.precision(17);
    for (const auto& e : r.entries)
        out << e.cube.level << ',' << e.cube.mx << ',' << e.cube.my << ',' << e.normalized << '\n';
}

enum class WeightCase { nondegenerate, A, B };

inline std::string to_string(WeightCase c) {
    switch (c) {
    case WeightCase::nondegenerate: return "nondegenerate";
    case WeightCase::A: return "A";
    case WeightCase::B: return "B";
    }
    return "?";
}

struct CaseClassification {
    WeightCase kind = WeightCase::nondegenerate;
    bool outside_theory = false; ///< case B with gamma >= 1
    double separation = std::numeric_limits<double>::infinity(); ///< dist(S, dynamic part and interface)
    double tolerance = 0.0;
};

/// Case A when S keeps a positive distance (beyond `tolerance`, default one
/// mesh-cell diameter) from the dynamic boundary part and the interface, case B
/// otherwise. The distance is measured to the surface edges, not only the nodes.
inline CaseClassification classify_case(const WeightSpec& w, const Mesh& mesh, double tolerance = -1.0) {
    CaseClassification c;
    c.tolerance = tolerance >= 0.0 ? tolerance : mesh.max_diameter();
    if (!w.degenerate()) return c;
    auto visit = [&](int a, int b) {
        c.separation = std::min(c.separation, distance_to_segment(w.set(), mesh.vertex(a), mesh.vertex(b)));
    };
    for (const auto& e : mesh.boundary_edges())
        if (e.label == EdgeLabel::dynamic) visit(e.a, e.b);
    for (const auto& e : mesh.interface_edges()) visit(e.a, e.b);
    c.kind = c.separation > c.tolerance ? WeightCase::A : WeightCase::B;
    c.outside_theory = c.kind == WeightCase::B && w.gamma() >= 1.0;
    return c;
}

} // namespace formheat
