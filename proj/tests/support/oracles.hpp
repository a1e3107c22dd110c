#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include "formheat/assembly.hpp"
#include "formheat/geometry.hpp"
#include "formheat/weights.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

namespace formheat::testing {

/// Integral of f over [a, b] with a graded Gauss composite rule toward the
/// closest points of `singular` (weights with point singularities).
inline double graded_segment_integral(const Vec2& a, const Vec2& b, const std::function<double(const Vec2&)>& f,
                                      const std::vector<Vec2>& singular = {}) {
    const double len = (b - a).norm();
    std::vector<double> cuts{0.0, 1.0};
    for (const Vec2& p : singular) {
        const double s = std::clamp((p - a).dot(b - a) / (len * len), 0.0, 1.0);
        cuts.push_back(s);
    }
    std::sort(cuts.begin(), cuts.end());
    const GaussRule1D& g = gauss_legendre(12);
    auto gauss = [&](double s0, double s1) {
        double v = 0.0;
        for (std::size_t i = 0; i < g.nodes.size(); ++i) v += g.weights[i] * f(a + (s0 + g.nodes[i] * (s1 - s0)) * (b - a));
        return v * (s1 - s0) * len;
    };
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double s0 = cuts[k], s1 = cuts[k + 1];
        if (s1 - s0 <= 0.0) continue;
        if (singular.empty()) {
            total += gauss(s0, s1);
            continue;
        }
        // Geometric grading toward both ends of the piece.
        const double mid = 0.5 * (s0 + s1);
        for (int side = 0; side < 2; ++side) {
            double lo = side == 0 ? s0 : mid, hi = side == 0 ? mid : s1;
            for (int level = 0; level < 60; ++level) {
                if (side == 0) {
                    const double m = lo + 0.5 * (hi - lo);
                    total += gauss(m, hi);
                    hi = m;
                } else {
                    const double m = hi - 0.5 * (hi - lo);
                    total += gauss(lo, m);
                    lo = m;
                }
            }
            total += gauss(lo, hi);
        }
    }
    return total;
}

/// Element-loop evaluation of the form t(u_h, v_h) for nodal vectors over all
/// mesh vertices. Gradients come from solving the 2x2 interpolation system of
/// each triangle; the bulk weight integral uses the library's weighted cell
/// integral; surface terms use surface_gradient_p1 and an edge integral of the
/// tangential coefficient.
inline double form_oracle(const Mesh& mesh, const CoefficientSet& coeff, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& v) {
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles()[t];
        const Vec2 p0 = mesh.vertex(tri.v[0]), p1 = mesh.vertex(tri.v[1]), p2 = mesh.vertex(tri.v[2]);
        Mat2 e;
        e.row(0) = (p1 - p0).transpose();
        e.row(1) = (p2 - p0).transpose();
        const Vec2 gu = e.partialPivLu().solve(Vec2(u[tri.v[1]] - u[tri.v[0]], u[tri.v[2]] - u[tri.v[0]]));
        const Vec2 gv = e.partialPivLu().solve(Vec2(v[tri.v[1]] - v[tri.v[0]], v[tri.v[2]] - v[tri.v[0]]));
        const TriangleCell cell{p0, p1, p2};
        Mat2 moment = Mat2::Zero();
        const auto& env = coeff.bulk_envelope;
        if (env.kind() == ScalarEnvelope::Kind::weight) {
            moment = env.scale() * weighted_cell_integral(env.weight_spec(), cell) * coeff.bulk(cell.centroid(), tri.region);
        } else {
            // Symmetric 7-point rule, exact for quintic polynomials.
            const double r = std::sqrt(15.0);
            const double a1 = (6.0 - r) / 21.0, b1 = (9.0 + 2.0 * r) / 21.0, w1 = (155.0 - r) / 1200.0;
            const double a2 = (6.0 + r) / 21.0, b2 = (9.0 - 2.0 * r) / 21.0, w2 = (155.0 + r) / 1200.0;
            std::vector<std::pair<Eigen::Vector3d, double>> pts{{{1.0 / 3, 1.0 / 3, 1.0 / 3}, 9.0 / 40.0}};
            for (const auto& [a, b, w] : {std::tuple{a1, b1, w1}, std::tuple{a2, b2, w2}}) {
                pts.push_back({{a, a, b}, w});
                pts.push_back({{a, b, a}, w});
                pts.push_back({{b, a, a}, w});
            }
            for (const auto& [l, w] : pts) {
                const Vec2 x = l[0] * p0 + l[1] * p1 + l[2] * p2;
                moment += w * cell.area() * coeff.bulk(x, tri.region) * env(x);
            }
        }
        total += gv.dot(moment * gu);
    }
    auto surface = [&](SurfaceKind kind, const SurfaceShape& shape, const ScalarEnvelope& env) {
        const SurfaceMesh s = build_surface_mesh(mesh, kind);
        std::vector<double> us(s.size()), vs(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            us[i] = u[s.nodes[i]];
            vs[i] = v[s.nodes[i]];
        }
        std::vector<Vec2> singular;
        if (env.kind() == ScalarEnvelope::Kind::weight) singular = env.weight_spec().set().vertices;
        for (std::size_t k = 0; k < s.edges.size(); ++k) {
            const Vec2 a = s.points[s.edges[k][0]], b = s.points[s.edges[k][1]];
            const Vec2 tau = (b - a).normalized();
            const double mu = graded_segment_integral(
                a, b, [&](const Vec2& x) { return tau.dot(shape(x) * tau) * env(x); }, singular);
            total += mu * surface_gradient_p1(s, us, k).dot(surface_gradient_p1(s, vs, k));
        }
    };
    surface(SurfaceKind::dynamic, coeff.gd, coeff.gd_envelope);
    surface(SurfaceKind::interface, coeff.sigma, coeff.sigma_envelope);
    return total;
}

} // namespace formheat::testing
