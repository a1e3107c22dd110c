#pragma once

// Triangle meshes with labelled boundary and interface edges, surface edge
// chains, Lipschitz graph charts and distances to lower-dimensional sets.
// The spatial dimension is fixed to two; surfaces are polylines.

#include "formheat/errors.hpp"
#include "formheat/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace formheat {

enum class EdgeLabel { dirichlet, neumann, dynamic };

inline std::string to_string(EdgeLabel label) {
    switch (label) {
    case EdgeLabel::dirichlet: return "dirichlet";
    case EdgeLabel::neumann: return "neumann";
    case EdgeLabel::dynamic: return "dynamic";
    }
    return "?";
}

inline std::optional<EdgeLabel> parse_edge_label(const std::string& s) {
    if (s == "dirichlet") return EdgeLabel::dirichlet;
    if (s == "neumann") return EdgeLabel::neumann;
    if (s == "dynamic") return EdgeLabel::dynamic;
    return std::nullopt;
}

struct Triangle {
    std::array<int, 3> v;
    int region = 0;
};

struct BoundaryEdge {
    int a, b;
    EdgeLabel label;
};

/// Interior interface edge. The pair is ordered; (a, b) is the stored orientation.
struct InterfaceEdge {
    int a, b;
};

using EdgeKey = std::pair<int, int>;

inline EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}

/// Conforming triangulation of a planar domain. Immutable after construction;
/// `Mesh::create` checks every structural invariant and throws InvariantError
/// naming the failed check.
class Mesh {
public:
    static Mesh create(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
                       std::vector<BoundaryEdge> boundary, std::vector<InterfaceEdge> interface) {
        Mesh m;
        m.vertices_ = std::move(vertices);
        m.triangles_ = std::move(triangles);
        m.boundary_ = std::move(boundary);
        m.interface_ = std::move(interface);
        m.validate();
        return m;
    }

    const std::vector<Vec2>& vertices() const { return vertices_; }
    const std::vector<Triangle>& triangles() const { return triangles_; }
    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_; }
    const std::vector<InterfaceEdge>& interface_edges() const { return interface_; }

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_triangles() const { return triangles_.size(); }

    const Vec2& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }

    TriangleCell cell(std::size_t t) const {
        const auto& v = triangles_[t].v;
        return {vertex(v[0]), vertex(v[1]), vertex(v[2])};
    }

    double triangle_area(std::size_t t) const {
        const auto& v = triangles_[t].v;
        return signed_area(vertex(v[0]), vertex(v[1]), vertex(v[2]));
    }

    double area() const {
        double s = 0.0;
        for (std::size_t t = 0; t < triangles_.size(); ++t) s += triangle_area(t);
        return s;
    }

    /// Area enclosed by the boundary loops, from the shoelace formula over the
    /// boundary edges oriented consistently with their triangles.
    double boundary_polygon_area() const {
        double s = 0.0;
        for (const auto& e : boundary_) {
            auto [a, b] = oriented_boundary_edge(e);
            s += vertex(a).x() * vertex(b).y() - vertex(b).x() * vertex(a).y();
        }
        return 0.5 * s;
    }

    double label_length(EdgeLabel label) const {
        double s = 0.0;
        for (const auto& e : boundary_)
            if (e.label == label) s += (vertex(e.b) - vertex(e.a)).norm();
        return s;
    }

    double interface_length() const {
        double s = 0.0;
        for (const auto& e : interface_) s += (vertex(e.b) - vertex(e.a)).norm();
        return s;
    }

    /// Longest edge over all triangles.
    double max_diameter() const {
        double h = 0.0;
        for (const auto& t : triangles_)
            for (int k = 0; k < 3; ++k)
                h = std::max(h, (vertex(t.v[k]) - vertex(t.v[(k + 1) % 3])).norm());
        return h;
    }

    /// True when no triangle has an angle larger than pi/2 (up to `tol`).
    bool is_nonobtuse(double tol = 1e-12) const {
        for (const auto& t : triangles_)
            for (int k = 0; k < 3; ++k) {
                const Vec2 p = vertex(t.v[k]);
                const Vec2 u = vertex(t.v[(k + 1) % 3]) - p, w = vertex(t.v[(k + 2) % 3]) - p;
                if (u.dot(w) < -tol * u.norm() * w.norm()) return false;
            }
        return true;
    }

    /// Triangles adjacent to each undirected edge.
    const std::map<EdgeKey, std::vector<int>>& edge_triangles() const { return edge_triangles_; }

    /// Vertices of edges carrying `label`.
    std::set<int> label_vertices(EdgeLabel label) const {
        std::set<int> s;
        for (const auto& e : boundary_)
            if (e.label == label) {
                s.insert(e.a);
                s.insert(e.b);
            }
        return s;
    }

    std::set<int> interface_vertices() const {
        std::set<int> s;
        for (const auto& e : interface_) {
            s.insert(e.a);
            s.insert(e.b);
        }
        return s;
    }

    std::set<int> boundary_vertices() const {
        std::set<int> s;
        for (const auto& e : boundary_) {
            s.insert(e.a);
            s.insert(e.b);
        }
        return s;
    }

private:
    Mesh() = default;

    std::pair<int, int> oriented_boundary_edge(const BoundaryEdge& e) const {
        const int t = edge_triangles_.at(edge_key(e.a, e.b)).front();
        const auto& v = triangles_[static_cast<std::size_t>(t)].v;
        for (int k = 0; k < 3; ++k)
            if (v[k] == e.a && v[(k + 1) % 3] == e.b) return {e.a, e.b};
        return {e.b, e.a};
    }

    void validate() {
        const int nv = static_cast<int>(vertices_.size());
        auto check_index = [nv](int i) {
            if (i < 0 || i >= nv)
                throw InvariantError("vertex index out of range: " + std::to_string(i) + " (of " +
                                     std::to_string(nv) + ")");
        };
        for (const auto& t : triangles_)
            for (int i : t.v) check_index(i);
        for (const auto& e : boundary_) {
            check_index(e.a);
            check_index(e.b);
        }
        for (const auto& e : interface_) {
            check_index(e.a);
            check_index(e.b);
        }
        for (const auto& p : vertices_)
            if (!p.allFinite()) throw InvariantError("non-finite vertex coordinate");
        if (triangles_.empty()) throw InvariantError("mesh has no triangles");

        for (std::size_t t = 0; t < triangles_.size(); ++t) {
            const auto& v = triangles_[t].v;
            if (v[0] == v[1] || v[1] == v[2] || v[0] == v[2] || !(triangle_area(t) > 0.0))
                throw InvariantError("triangle " + std::to_string(t) +
                                     " is degenerate or negatively oriented");
        }

        edge_triangles_.clear();
        for (std::size_t t = 0; t < triangles_.size(); ++t) {
            const auto& v = triangles_[t].v;
            for (int k = 0; k < 3; ++k)
                edge_triangles_[edge_key(v[k], v[(k + 1) % 3])].push_back(static_cast<int>(t));
        }
        for (const auto& [key, tris] : edge_triangles_)
            if (tris.size() > 2)
                throw InvariantError("non-conforming: edge " + std::to_string(key.first) + "-" +
                                     std::to_string(key.second) + " shared by more than two triangles");

        std::set<EdgeKey> labelled;
        for (const auto& e : boundary_) {
            const EdgeKey k = edge_key(e.a, e.b);
            auto it = edge_triangles_.find(k);
            if (it == edge_triangles_.end() || it->second.size() != 1)
                throw InvariantError("boundary edge " + std::to_string(e.a) + "-" + std::to_string(e.b) +
                                     " does not belong to exactly one triangle");
            if (!labelled.insert(k).second)
                throw InvariantError("boundary edge " + std::to_string(e.a) + "-" + std::to_string(e.b) +
                                     " labelled more than once");
        }
        for (const auto& [key, tris] : edge_triangles_)
            if (tris.size() == 1 && !labelled.count(key))
                throw InvariantError("unlabelled boundary edge " + std::to_string(key.first) + "-" +
                                     std::to_string(key.second));

        std::set<EdgeKey> iface;
        std::map<int, int> degree;
        for (const auto& e : interface_) {
            const EdgeKey k = edge_key(e.a, e.b);
            auto it = edge_triangles_.find(k);
            if (it == edge_triangles_.end() || it->second.size() != 2)
                throw InvariantError("interface edge " + std::to_string(e.a) + "-" + std::to_string(e.b) +
                                     " is not adjacent to exactly two triangles");
            if (!iface.insert(k).second)
                throw InvariantError("interface edge " + std::to_string(e.a) + "-" + std::to_string(e.b) +
                                     " listed more than once");
            ++degree[e.a];
            ++degree[e.b];
        }
        const std::set<int> bverts = boundary_vertices();
        for (const auto& [v, d] : degree) {
            if (d > 2) throw InvariantError("interface is not a simple polyline at vertex " + std::to_string(v));
            if (d == 2 && bverts.count(v))
                throw InvariantError("interface touches the boundary at interior vertex " + std::to_string(v));
        }

        const double a = area(), pa = boundary_polygon_area();
        if (std::abs(a - pa) > 1e-12 * std::max(1.0, std::abs(a)))
            throw InvariantError("triangles overlap: area " + std::to_string(a) +
                                 " differs from boundary polygon area " + std::to_string(pa));
    }

    std::vector<Vec2> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<BoundaryEdge> boundary_;
    std::vector<InterfaceEdge> interface_;
    std::map<EdgeKey, std::vector<int>> edge_triangles_;
};

// ---------------------------------------------------------------------------
// Mesh text format
//
//   # comment
//   nv nt nbe nie
//   x y                      (nv lines)
//   i j k region_id          (nt lines)
//   i j label                (nbe lines, label in {dirichlet, neumann, dynamic})
//   i j                      (nie lines)
//
// Indices are 0-based.

inline Mesh parse_mesh(std::istream& in) {
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        lines.emplace_back(lineno, line);
    }
    std::size_t cursor = 0;
    auto next = [&](const char* what) -> std::pair<std::size_t, std::istringstream> {
        if (cursor >= lines.size())
            throw ParseError(std::string("unexpected end of file while reading ") + what, lineno);
        const auto& [n, text] = lines[cursor++];
        return {n, std::istringstream(text)};
    };
    auto expect_end = [](std::istringstream& s, std::size_t n) {
        std::string rest;
        if (s >> rest) throw ParseError("trailing token '" + rest + "'", n);
    };

    long nv = 0, nt = 0, nbe = 0, nie = 0;
    {
        auto [n, s] = next("header");
        if (!(s >> nv >> nt >> nbe >> nie) || nv < 0 || nt < 0 || nbe < 0 || nie < 0)
            throw ParseError("header must be 'nv nt nbe nie' with nonnegative counts", n);
        expect_end(s, n);
    }
    std::vector<Vec2> vertices;
    vertices.reserve(static_cast<std::size_t>(nv));
    for (long i = 0; i < nv; ++i) {
        auto [n, s] = next("vertex");
        double x, y;
        if (!(s >> x >> y)) throw ParseError("expected vertex 'x y'", n);
        expect_end(s, n);
        vertices.emplace_back(x, y);
    }
    auto check = [nv](long i, std::size_t n) {
        if (i < 0 || i >= nv)
            throw ParseError("vertex index out of range: " + std::to_string(i) + " (of " + std::to_string(nv) + ")",
                             n);
        return static_cast<int>(i);
    };
    std::vector<Triangle> triangles;
    for (long i = 0; i < nt; ++i) {
        auto [n, s] = next("triangle");
        long a, b, c, r;
        if (!(s >> a >> b >> c >> r)) throw ParseError("expected triangle 'i j k region_id'", n);
        expect_end(s, n);
        triangles.push_back({{check(a, n), check(b, n), check(c, n)}, static_cast<int>(r)});
    }
    std::vector<BoundaryEdge> boundary;
    for (long i = 0; i < nbe; ++i) {
        auto [n, s] = next("boundary edge");
        long a, b;
        std::string label;
        if (!(s >> a >> b >> label)) throw ParseError("expected boundary edge 'i j label'", n);
        expect_end(s, n);
        auto l = parse_edge_label(label);
        if (!l) throw ParseError("unknown boundary label '" + label + "'", n);
        boundary.push_back({check(a, n), check(b, n), *l});
    }
    std::vector<InterfaceEdge> interface;
    for (long i = 0; i < nie; ++i) {
        auto [n, s] = next("interface edge");
        long a, b;
        if (!(s >> a >> b)) throw ParseError("expected interface edge 'i j'", n);
        expect_end(s, n);
        interface.push_back({check(a, n), check(b, n)});
    }
    if (cursor < lines.size()) throw ParseError("unexpected content after last record", lines[cursor].first);
    return Mesh::create(std::move(vertices), std::move(triangles), std::move(boundary), std::move(interface));
}

inline Mesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("mesh: file not found: " + path);
    return parse_mesh(in);
}

inline void write_mesh(std::ostream& out, const Mesh& mesh) {
    out << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' ' << mesh.boundary_edges().size() << ' '
        << mesh.interface_edges().size() << '\n';
    out << std::setprecision(17);
    for (const auto& p : mesh.vertices()) out << p.x() << ' ' << p.y() << '\n';
    for (const auto& t : mesh.triangles()) out << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << ' ' << t.region << '\n';
    for (const auto& e : mesh.boundary_edges()) out << e.a << ' ' << e.b << ' ' << to_string(e.label) << '\n';
    for (const auto& e : mesh.interface_edges()) out << e.a << ' ' << e.b << '\n';
}

/// Red refinement: every triangle is split into four through its edge
/// midpoints. Labels, regions and edge orientations are inherited.
inline Mesh refine_uniform(const Mesh& mesh) {
    std::vector<Vec2> vertices = mesh.vertices();
    std::map<EdgeKey, int> midpoint;
    auto mid = [&](int a, int b) {
        auto [it, inserted] = midpoint.try_emplace(edge_key(a, b), static_cast<int>(vertices.size()));
        if (inserted) vertices.push_back(0.5 * (mesh.vertex(a) + mesh.vertex(b)));
        return it->second;
    };
    std::vector<Triangle> triangles;
    triangles.reserve(4 * mesh.num_triangles());
    for (const auto& t : mesh.triangles()) {
        const auto [v0, v1, v2] = t.v;
        const int m01 = mid(v0, v1), m12 = mid(v1, v2), m20 = mid(v2, v0);
        triangles.push_back({{v0, m01, m20}, t.region});
        triangles.push_back({{m01, v1, m12}, t.region});
        triangles.push_back({{m20, m12, v2}, t.region});
        triangles.push_back({{m01, m12, m20}, t.region});
    }
    std::vector<BoundaryEdge> boundary;
    for (const auto& e : mesh.boundary_edges()) {
        const int m = mid(e.a, e.b);
        boundary.push_back({e.a, m, e.label});
        boundary.push_back({m, e.b, e.label});
    }
    std::vector<InterfaceEdge> interface;
    for (const auto& e : mesh.interface_edges()) {
        const int m = mid(e.a, e.b);
        interface.push_back({e.a, m});
        interface.push_back({m, e.b});
    }
    return Mesh::create(std::move(vertices), std::move(triangles), std::move(boundary), std::move(interface));
}

// ---------------------------------------------------------------------------
// Distances

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 d = b - a;
    const double len2 = d.squaredNorm();
    if (len2 == 0.0) return (p - a).norm();
    const double s = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
    return (p - (a + s * d)).norm();
}

inline bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) { return signed_area(p, q, r); };
    const double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
    return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

inline double segment_segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    if (segments_intersect(a, b, c, d)) return 0.0;
    return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                     point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

/// Compact lower-dimensional set S: a finite point set (codimension 2) or a
/// polyline (codimension 1).
struct Submanifold {
    enum class Kind { points, polyline };

    Kind kind = Kind::points;
    std::vector<Vec2> vertices;

    static Submanifold point(const Vec2& p) { return {Kind::points, {p}}; }
    static Submanifold points(std::vector<Vec2> ps) { return {Kind::points, std::move(ps)}; }
    static Submanifold polyline(std::vector<Vec2> ps) { return {Kind::polyline, std::move(ps)}; }

    int codimension() const { return kind == Kind::points ? 2 : 1; }

    void check() const {
        if (vertices.empty()) throw InvariantError("submanifold is empty");
        if (kind == Kind::polyline && vertices.size() < 2)
            throw InvariantError("polyline needs at least two vertices");
    }

    /// Axis-parallel bounding box (lower-left, upper-right).
    std::pair<Vec2, Vec2> bounds() const {
        Vec2 lo = vertices.front(), hi = vertices.front();
        for (const auto& p : vertices) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        return {lo, hi};
    }
};

/// Euclidean distance from x to S.
inline double distance_to_submanifold(const Submanifold& s, const Vec2& x) {
    s.check();
    double d = std::numeric_limits<double>::infinity();
    if (s.kind == Submanifold::Kind::points) {
        for (const auto& p : s.vertices) d = std::min(d, (x - p).norm());
    } else {
        for (std::size_t i = 0; i + 1 < s.vertices.size(); ++i)
            d = std::min(d, point_segment_distance(x, s.vertices[i], s.vertices[i + 1]));
    }
    return d;
}

/// Distance between S and the segment [a, b].
inline double distance_to_segment(const Submanifold& s, const Vec2& a, const Vec2& b) {
    s.check();
    double d = std::numeric_limits<double>::infinity();
    if (s.kind == Submanifold::Kind::points) {
        for (const auto& p : s.vertices) d = std::min(d, point_segment_distance(p, a, b));
    } else {
        for (std::size_t i = 0; i + 1 < s.vertices.size(); ++i)
            d = std::min(d, segment_segment_distance(s.vertices[i], s.vertices[i + 1], a, b));
    }
    return d;
}

// ---------------------------------------------------------------------------
// Lipschitz graph charts

/// Continuous piecewise-linear function on [breaks.front(), breaks.back()].
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;
    PiecewiseLinear(std::vector<double> breaks, std::vector<double> values)
        : breaks_(std::move(breaks)), values_(std::move(values)) {
        if (breaks_.size() < 2 || breaks_.size() != values_.size())
            throw InvariantError("piecewise-linear function needs matching breakpoints and values (>= 2)");
        for (std::size_t i = 0; i + 1 < breaks_.size(); ++i)
            if (!(breaks_[i + 1] > breaks_[i]))
                throw InvariantError("piecewise-linear breakpoints must be strictly increasing");
    }

    const std::vector<double>& breaks() const { return breaks_; }
    const std::vector<double>& values() const { return values_; }
    double lower() const { return breaks_.front(); }
    double upper() const { return breaks_.back(); }

    std::size_t piece(double y) const {
        if (y < lower() || y > upper()) throw GeometryError("parameter outside the chart domain");
        auto it = std::upper_bound(breaks_.begin(), breaks_.end(), y);
        std::size_t i = static_cast<std::size_t>(it - breaks_.begin());
        return std::clamp<std::size_t>(i, 1, breaks_.size() - 1) - 1;
    }

    double operator()(double y) const {
        const std::size_t i = piece(y);
        const double s = (y - breaks_[i]) / (breaks_[i + 1] - breaks_[i]);
        return (1 - s) * values_[i] + s * values_[i + 1];
    }

    double piece_slope(std::size_t i) const {
        return (values_[i + 1] - values_[i]) / (breaks_[i + 1] - breaks_[i]);
    }

    bool is_breakpoint(double y) const {
        const double scale = std::max(1.0, std::abs(upper() - lower()));
        for (double b : breaks_)
            if (std::abs(y - b) <= 1e-14 * scale) return true;
        return false;
    }

    /// Derivative at a regular point. Breakpoints and the domain ends are irregular.
    double slope(double y) const {
        if (!(y > lower() && y < upper()) || is_breakpoint(y))
            throw GeometryError("irregular point: y = " + std::to_string(y) + " is a breakpoint or not interior");
        return piece_slope(piece(y));
    }

    double lipschitz() const {
        double l = 0.0;
        for (std::size_t i = 0; i + 1 < breaks_.size(); ++i) l = std::max(l, std::abs(piece_slope(i)));
        return l;
    }

private:
    std::vector<double> breaks_, values_;
};

/// Graph coordinates g(y) = Q (y, h(y))^T + x* with orthogonal Q.
class SurfaceChart {
public:
    SurfaceChart(const Mat2& q, const Vec2& shift, PiecewiseLinear h) : q_(q), shift_(shift), h_(std::move(h)) {
        if (!(q_.transpose() * q_ - Mat2::Identity()).isZero(1e-12))
            throw InvariantError("chart matrix Q is not orthogonal");
    }

    /// Chart whose image is the polyline through `pts`; fails unless the
    /// points form a graph over the first axis of Q.
    static SurfaceChart from_points(std::span<const Vec2> pts, const Mat2& q, const Vec2& shift) {
        std::vector<double> ys, hs;
        for (const auto& p : pts) {
            const Vec2 local = q.transpose() * (p - shift);
            ys.push_back(local.x());
            hs.push_back(local.y());
        }
        for (std::size_t i = 0; i + 1 < ys.size(); ++i)
            if (!(ys[i + 1] > ys[i])) throw InvariantError("points are not a graph in the requested chart");
        return SurfaceChart(q, shift, PiecewiseLinear(std::move(ys), std::move(hs)));
    }

    /// Rotation taking the first axis to `direction` (which must be nonzero).
    static Mat2 rotation_to(const Vec2& direction) {
        const Vec2 d = direction.normalized();
        Mat2 q;
        q << d.x(), -d.y(), d.y(), d.x();
        return q;
    }

    const Mat2& q() const { return q_; }
    const Vec2& shift() const { return shift_; }
    const PiecewiseLinear& h() const { return h_; }
    double lower() const { return h_.lower(); }
    double upper() const { return h_.upper(); }
    double lipschitz() const { return h_.lipschitz(); }

    Vec2 map(double y) const { return q_ * Vec2(y, h_(y)) + shift_; }

    /// Inverse of `map` for points on the graph.
    double param(const Vec2& x) const { return (q_.transpose() * (x - shift_)).x(); }

    /// g'(y) = Q (1, h'(y)).
    Vec2 derivative(double y) const { return q_ * Vec2(1.0, h_.slope(y)); }

    bool covers(double y) const { return y >= lower() && y <= upper(); }

private:
    Mat2 q_;
    Vec2 shift_;
    PiecewiseLinear h_;
};

struct ChartMetric {
    double G, Ginv, sqrtG;
};

/// Metric tensor G = g'^T g' = 1 + h'^2 at a regular parameter value.
inline ChartMetric chart_metric(const SurfaceChart& chart, double y) {
    const double s = chart.h().slope(y);
    const double g = 1.0 + s * s;
    return {g, 1.0 / g, std::sqrt(g)};
}

/// Derivative of the transition map g_b^{-1} o g_a at y_a.
inline double transition_derivative(const SurfaceChart& a, const SurfaceChart& b, double ya) {
    return (b.q().transpose() * a.derivative(ya)).x();
}

/// Surface gradient g'(y) G^{-1}(y) (u o g)'(y) of a function whose pullback
/// is piecewise linear with values `pulled` at the chart breakpoints.
inline Vec2 chart_surface_gradient(const SurfaceChart& chart, std::span<const double> pulled, double y) {
    if (pulled.size() != chart.h().breaks().size())
        throw InvariantError("chart data must have one value per breakpoint");
    const PiecewiseLinear pullback(chart.h().breaks(), std::vector<double>(pulled.begin(), pulled.end()));
    const ChartMetric m = chart_metric(chart, y);
    return chart.derivative(y) * (m.Ginv * pullback.slope(y));
}

// ---------------------------------------------------------------------------
// Surface meshes

enum class SurfaceKind { dynamic, interface };

inline std::string to_string(SurfaceKind k) { return k == SurfaceKind::dynamic ? "gd" : "sigma"; }

/// A labelled surface (dynamic boundary part or interface) as chains of mesh
/// edges, with arc coordinates and a covering set of graph charts.
struct SurfaceMesh {
    struct ChartPatch {
        SurfaceChart chart;
        std::vector<int> nodes; ///< local node index of each chart breakpoint
    };

    SurfaceKind kind = SurfaceKind::interface;
    std::vector<int> nodes;                  ///< bulk vertex index per local node (ascending)
    std::vector<Vec2> points;                ///< coordinates per local node
    std::vector<std::array<int, 2>> edges;   ///< local node pairs, stored orientation
    std::vector<std::vector<int>> chains;    ///< ordered local nodes; closed chains repeat the first node
    std::vector<double> arc;                 ///< arc coordinate along the owning chain
    std::vector<ChartPatch> charts;

    std::size_t size() const { return nodes.size(); }
    bool empty() const { return nodes.empty(); }

    double edge_length(std::size_t e) const { return (points[edges[e][1]] - points[edges[e][0]]).norm(); }

    double length() const {
        double s = 0.0;
        for (std::size_t e = 0; e < edges.size(); ++e) s += edge_length(e);
        return s;
    }

    int local_index(int vertex) const {
        auto it = std::lower_bound(nodes.begin(), nodes.end(), vertex);
        return (it != nodes.end() && *it == vertex) ? static_cast<int>(it - nodes.begin()) : -1;
    }
};

namespace detail {

inline void build_charts(SurfaceMesh& sm) {
    for (const auto& chain : sm.chains) {
        const std::size_t m = chain.size();
        std::size_t start = 0;
        while (start + 1 < m) {
            const Vec2 origin = sm.points[chain[start]];
            const Vec2 dir = sm.points[chain[start + 1]] - origin;
            if (dir.norm() == 0.0) throw GeometryError("zero-length surface edge");
            const Mat2 q = SurfaceChart::rotation_to(dir);
            const Vec2 axis = q.col(0);
            std::size_t end = start + 1;
            while (end + 1 < m) {
                const Vec2 step = sm.points[chain[end + 1]] - sm.points[chain[end]];
                if (!(step.dot(axis) > 1e-12 * step.norm())) break;
                // A closed chain must not wrap onto itself inside one chart.
                if (chain[end + 1] == chain[start]) break;
                ++end;
            }
            std::vector<Vec2> pts;
            std::vector<int> local;
            for (std::size_t i = start; i <= end; ++i) {
                pts.push_back(sm.points[chain[i]]);
                local.push_back(chain[i]);
            }
            sm.charts.push_back({SurfaceChart::from_points(pts, q, origin), std::move(local)});
            if (end + 1 >= m) break;
            start = std::max(end - 1, start + 1);
        }
    }
}

} // namespace detail

inline SurfaceMesh build_surface_mesh(const Mesh& mesh, SurfaceKind kind) {
    SurfaceMesh sm;
    sm.kind = kind;
    std::vector<std::pair<int, int>> raw;
    if (kind == SurfaceKind::dynamic) {
        for (const auto& e : mesh.boundary_edges())
            if (e.label == EdgeLabel::dynamic) raw.emplace_back(e.a, e.b);
    } else {
        for (const auto& e : mesh.interface_edges()) raw.emplace_back(e.a, e.b);
    }
    std::set<int> verts;
    for (auto [a, b] : raw) {
        verts.insert(a);
        verts.insert(b);
    }
    sm.nodes.assign(verts.begin(), verts.end());
    for (int v : sm.nodes) sm.points.push_back(mesh.vertex(v));
    for (auto [a, b] : raw) sm.edges.push_back({sm.local_index(a), sm.local_index(b)});

    const std::size_t n = sm.nodes.size();
    std::vector<std::vector<std::pair<int, int>>> adj(n); // (neighbour, edge)
    for (std::size_t e = 0; e < sm.edges.size(); ++e) {
        const auto [a, b] = sm.edges[e];
        adj[a].emplace_back(b, static_cast<int>(e));
        adj[b].emplace_back(a, static_cast<int>(e));
    }
    std::vector<char> used(sm.edges.size(), 0);
    sm.arc.assign(n, 0.0);
    auto walk = [&](int start) {
        std::vector<int> chain{start};
        double s = 0.0;
        sm.arc[start] = 0.0;
        int cur = start;
        for (;;) {
            int next = -1;
            for (auto [nb, e] : adj[cur])
                if (!used[e]) {
                    used[e] = 1;
                    next = nb;
                    break;
                }
            if (next < 0) break;
            s += (sm.points[next] - sm.points[cur]).norm();
            if (next != start) sm.arc[next] = s;
            chain.push_back(next);
            cur = next;
            if (next == start) break;
        }
        sm.chains.push_back(std::move(chain));
    };
    for (std::size_t v = 0; v < n; ++v)
        if (adj[v].size() == 1 && std::any_of(adj[v].begin(), adj[v].end(), [&](auto p) { return !used[p.second]; }))
            walk(static_cast<int>(v));
    for (std::size_t v = 0; v < n; ++v)
        if (std::any_of(adj[v].begin(), adj[v].end(), [&](auto p) { return !used[p.second]; }))
            walk(static_cast<int>(v));

    detail::build_charts(sm);
    return sm;
}

/// Constant surface gradient of the P1 interpolant on one edge: the difference
/// quotient times the unit tangent. Lies in the tangent line of the edge.
inline Vec2 surface_gradient_p1(const SurfaceMesh& smesh, std::span<const double> nodal_values, std::size_t edge) {
    if (edge >= smesh.edges.size()) throw InvariantError("edge index out of range");
    if (nodal_values.size() != smesh.size()) throw InvariantError("nodal values must cover every surface node");
    const auto [a, b] = smesh.edges[edge];
    const Vec2 d = smesh.points[b] - smesh.points[a];
    const double len = d.norm();
    if (len == 0.0) throw GeometryError("degenerate geometry: zero-length edge");
    const Vec2 tau = d / len;
    return ((nodal_values[b] - nodal_values[a]) / len) * tau;
}

} // namespace formheat
