#pragma once

// P1 discretization of the bulk-surface form: coefficients, degrees of
// freedom, block fields, stiffness and mass matrices, the trace map and the
// assembled operator pencil.

#include "formheat/errors.hpp"
#include "formheat/geometry.hpp"
#include "formheat/linalg.hpp"
#include "formheat/quadrature.hpp"
#include "formheat/weights.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace formheat {

/// Nonnegative scalar envelope mu*: a constant, scale * dist(., S)^gamma, or a
/// user function.
class ScalarEnvelope {
public:
    enum class Kind { constant, weight, function };

    static ScalarEnvelope constant(double c) {
        ScalarEnvelope e;
        e.kind_ = Kind::constant;
        e.scale_ = c;
        return e;
    }
    static ScalarEnvelope weight(WeightSpec w, double scale = 1.0) {
        ScalarEnvelope e;
        e.kind_ = w.degenerate() ? Kind::weight : Kind::constant;
        e.weight_ = std::move(w);
        e.scale_ = scale;
        return e;
    }
    static ScalarEnvelope function(std::function<double(const Vec2&)> f) {
        ScalarEnvelope e;
        e.kind_ = Kind::function;
        e.f_ = std::move(f);
        return e;
    }

    Kind kind() const { return kind_; }
    double scale() const { return scale_; }
    const WeightSpec& weight_spec() const { return weight_; }

    double operator()(const Vec2& x) const {
        switch (kind_) {
        case Kind::constant: return scale_;
        case Kind::weight: return scale_ * weight_eval(weight_, x);
        case Kind::function: return f_(x);
        }
        return 0.0;
    }

private:
    Kind kind_ = Kind::constant;
    double scale_ = 1.0;
    WeightSpec weight_;
    std::function<double(const Vec2&)> f_;
};

using BulkShape = std::function<Mat2(const Vec2&, int region)>;
using SurfaceShape = std::function<Mat2(const Vec2&)>;

/// Coefficients of the form. The bulk coefficient is
/// mu_Omega(x) = bulk(x, region) * bulk_envelope(x), the surface coefficients
/// act through their tangential part (mu_S tau, tau) * envelope.
struct CoefficientSet {
    BulkShape bulk = [](const Vec2&, int) { return Mat2::Identity().eval(); };
    bool bulk_regionwise_constant = true; ///< `bulk` is constant on each region
    ScalarEnvelope bulk_envelope = ScalarEnvelope::constant(1.0);

    SurfaceShape gd = [](const Vec2&) { return Mat2::Identity().eval(); };
    SurfaceShape sigma = [](const Vec2&) { return Mat2::Identity().eval(); };
    ScalarEnvelope gd_envelope = ScalarEnvelope::constant(1.0);
    ScalarEnvelope sigma_envelope = ScalarEnvelope::constant(1.0);

    /// Declared envelope constants; c1 = 0 and c2 = inf disable the checks.
    double c1 = 0.0;
    double c2 = std::numeric_limits<double>::infinity();

    std::function<double(const Vec2&, int region)> zeta_bulk = [](const Vec2&, int) { return 1.0; };
    std::function<double(const Vec2&)> zeta_gd = [](const Vec2&) { return 1.0; };
    std::function<double(const Vec2&)> zeta_sigma = [](const Vec2&) { return 1.0; };
    double zeta_lower = 0.0; ///< declared lower bound of zeta (must be positive when set)

    /// Weight of the bulk envelope, if it is one.
    std::optional<WeightSpec> bulk_weight() const {
        if (bulk_envelope.kind() == ScalarEnvelope::Kind::weight) return bulk_envelope.weight_spec();
        return std::nullopt;
    }
};

inline Mat2 constant_shape(double c) { return c * Mat2::Identity(); }

/// Extrema of the coefficient samples relative to their envelopes.
struct EnvelopeReport {
    double c1_observed = std::numeric_limits<double>::infinity();
    double c2_observed = 0.0;
    double zeta_min = std::numeric_limits<double>::infinity();
    double zeta_max = 0.0;

    void sample(double lower, double upper) {
        c1_observed = std::min(c1_observed, lower);
        c2_observed = std::max(c2_observed, upper);
    }
    void sample_zeta(double z) {
        zeta_min = std::min(zeta_min, z);
        zeta_max = std::max(zeta_max, z);
    }
};

enum class EndpointCondition { dirichlet, neumann };

/// Per-vertex override of the condition at surface endpoints. Endpoints not
/// listed are Dirichlet when they lie on the closed Dirichlet part and
/// (generalized) Neumann otherwise.
using EndpointPolicy = std::map<int, EndpointCondition>;

struct DofMap {
    std::vector<int> bulk;       ///< vertex index per free bulk dof
    std::vector<int> vertex_dof; ///< free bulk dof per vertex, -1 if constrained
    std::vector<int> gd;         ///< vertex index per free dynamic-boundary dof
    std::vector<int> sigma;      ///< vertex index per free interface dof
    std::vector<int> constrained;           ///< every constrained vertex, ascending
    std::vector<int> constrained_endpoints; ///< constrained surface endpoints off the Dirichlet part

    int n_bulk() const { return static_cast<int>(bulk.size()); }
    int n_gd() const { return static_cast<int>(gd.size()); }
    int n_sigma() const { return static_cast<int>(sigma.size()); }
    int n_block() const { return n_bulk() + n_gd() + n_sigma(); }
    int gd_offset() const { return n_bulk(); }
    int sigma_offset() const { return n_bulk() + n_gd(); }
};

/// Vertices of degree one in the surface graph.
inline std::vector<int> surface_endpoints(const SurfaceMesh& s) {
    std::vector<int> degree(s.size(), 0);
    for (const auto& [a, b] : s.edges) {
        ++degree[a];
        ++degree[b];
    }
    std::vector<int> out;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (degree[i] == 1) out.push_back(s.nodes[i]);
    return out;
}

inline DofMap make_dofmap(const Mesh& mesh, const SurfaceMesh& gd, const SurfaceMesh& sigma,
                          const EndpointPolicy& policy = {}) {
    const std::set<int> dirichlet = mesh.label_vertices(EdgeLabel::dirichlet);
    std::set<int> endpoints;
    for (const auto* s : {&gd, &sigma})
        for (int v : surface_endpoints(*s)) endpoints.insert(v);

    DofMap map;
    std::set<int> constrained = dirichlet;
    for (const auto& [v, cond] : policy) {
        if (!endpoints.count(v))
            throw InvariantError("endpoint policy names vertex " + std::to_string(v) + ", which is not a surface endpoint");
        if (cond == EndpointCondition::neumann && dirichlet.count(v))
            throw InvariantError("endpoint " + std::to_string(v) + " lies on the closed Dirichlet part and cannot be Neumann");
        if (cond == EndpointCondition::dirichlet && !dirichlet.count(v)) {
            constrained.insert(v);
            map.constrained_endpoints.push_back(v);
        }
    }
    map.constrained.assign(constrained.begin(), constrained.end());
    map.vertex_dof.assign(mesh.num_vertices(), -1);
    for (int v = 0; v < static_cast<int>(mesh.num_vertices()); ++v)
        if (!constrained.count(v)) {
            map.vertex_dof[v] = static_cast<int>(map.bulk.size());
            map.bulk.push_back(v);
        }
    for (int v : gd.nodes)
        if (!constrained.count(v)) map.gd.push_back(v);
    for (int v : sigma.nodes)
        if (!constrained.count(v)) map.sigma.push_back(v);
    return map;
}

/// Element of the block space: values on free bulk nodes, free dynamic
/// boundary nodes and free interface nodes.
struct BlockField {
    Eigen::VectorXd bulk, gd, sigma;

    static BlockField zeros(const DofMap& d) {
        return {Eigen::VectorXd::Zero(d.n_bulk()), Eigen::VectorXd::Zero(d.n_gd()), Eigen::VectorXd::Zero(d.n_sigma())};
    }

    static BlockField split(const DofMap& d, const Eigen::VectorXd& stacked) {
        if (stacked.size() != d.n_block()) throw InvariantError("block vector length does not match the dof map");
        return {stacked.head(d.n_bulk()), stacked.segment(d.gd_offset(), d.n_gd()),
                stacked.tail(d.n_sigma())};
    }

    void check(const DofMap& d) const {
        if (bulk.size() != d.n_bulk() || gd.size() != d.n_gd() || sigma.size() != d.n_sigma())
            throw InvariantError("block field component lengths do not match the dof map");
        if (!bulk.allFinite() || !gd.allFinite() || !sigma.allFinite())
            throw InvariantError("block field has non-finite entries");
    }

    Eigen::VectorXd stacked() const {
        Eigen::VectorXd v(bulk.size() + gd.size() + sigma.size());
        v << bulk, gd, sigma;
        return v;
    }
};

/// Nodal interpolation of three independent component functions.
inline BlockField interpolate(const Mesh& mesh, const DofMap& d, const std::function<double(const Vec2&)>& f_bulk,
                              const std::function<double(const Vec2&)>& f_gd,
                              const std::function<double(const Vec2&)>& f_sigma) {
    BlockField b = BlockField::zeros(d);
    for (int i = 0; i < d.n_bulk(); ++i) b.bulk[i] = f_bulk(mesh.vertex(d.bulk[i]));
    for (int i = 0; i < d.n_gd(); ++i) b.gd[i] = f_gd(mesh.vertex(d.gd[i]));
    for (int i = 0; i < d.n_sigma(); ++i) b.sigma[i] = f_sigma(mesh.vertex(d.sigma[i]));
    return b;
}

inline BlockField interpolate(const Mesh& mesh, const DofMap& d, const std::function<double(const Vec2&)>& f) {
    return interpolate(mesh, d, f, f, f);
}

// ---------------------------------------------------------------------------
// Element matrices

/// Constant gradients of the three P1 hat functions of triangle t (columns).
inline Eigen::Matrix<double, 2, 3> p1_gradients(const Mesh& mesh, std::size_t t) {
    const auto& v = mesh.triangles()[t].v;
    const Vec2 p[3] = {mesh.vertex(v[0]), mesh.vertex(v[1]), mesh.vertex(v[2])};
    const double twice_area = 2.0 * signed_area(p[0], p[1], p[2]);
    Eigen::Matrix<double, 2, 3> g;
    for (int k = 0; k < 3; ++k) {
        const Vec2& a = p[(k + 1) % 3];
        const Vec2& b = p[(k + 2) % 3];
        g.col(k) = Vec2(a.y() - b.y(), b.x() - a.x()) / twice_area;
    }
    return g;
}

/// Integral of mu_Omega over triangle t.
inline Mat2 bulk_coefficient_moment(const Mesh& mesh, std::size_t t, const CoefficientSet& coeff, int quad_order,
                                    const AdaptiveOptions& wq = default_weight_quadrature()) {
    const TriangleCell cell = mesh.cell(t);
    const int region = mesh.triangles()[t].region;
    const ScalarEnvelope& env = coeff.bulk_envelope;
    const int n = std::max(quad_order, 1);
    switch (env.kind()) {
    case ScalarEnvelope::Kind::constant:
        if (coeff.bulk_regionwise_constant) return env.scale() * cell.area() * coeff.bulk(cell.centroid(), region);
        return env.scale() * apply_rule(cell, [&](const Vec2& x) { return Mat2(coeff.bulk(x, region)); }, n);
    case ScalarEnvelope::Kind::weight: {
        const WeightSpec& w = env.weight_spec();
        if (coeff.bulk_regionwise_constant)
            return env.scale() * weighted_cell_integral(w, cell, wq.order, wq) * coeff.bulk(cell.centroid(), region);
        auto f = [&](const Vec2& x) { return Mat2(coeff.bulk(x, region) * weight_eval(w, x)); };
        auto split = [&w](const TriangleCell& c) { return weight_ratio_exceeds(w, c); };
        return env.scale() * integrate_adaptive(cell, f, split, wq).value;
    }
    case ScalarEnvelope::Kind::function:
        return apply_rule(cell, [&](const Vec2& x) { return Mat2(coeff.bulk(x, region) * env(x)); }, n);
    }
    return Mat2::Zero();
}

/// Element stiffness K_ij = grad(phi_i)^T (integral of mu) grad(phi_j), which is
/// t(phi_j, phi_i); hence v^T K u = t(u, v).
inline Eigen::Matrix3d bulk_element_matrix(const Mesh& mesh, std::size_t t, const CoefficientSet& coeff,
                                           int quad_order = 2,
                                           const AdaptiveOptions& wq = default_weight_quadrature()) {
    const Mat2 m = bulk_coefficient_moment(mesh, t, coeff, quad_order, wq);
    const auto g = p1_gradients(mesh, t);
    return g.transpose() * m * g;
}

/// Consistent element mass of zeta over triangle t.
inline Eigen::Matrix3d bulk_element_mass(const Mesh& mesh, std::size_t t,
                                         const std::function<double(const Vec2&, int)>& zeta) {
    const TriangleCell cell = mesh.cell(t);
    const int region = mesh.triangles()[t].region;
    const Vec2 a = cell.a, e1 = cell.b - cell.a, e2 = cell.c - cell.a;
    Mat2 basis;
    basis << e1, e2;
    const Mat2 inv = basis.inverse();
    auto f = [&](const Vec2& x) {
        const Vec2 l = inv * (x - a);
        const Eigen::Vector3d phi(1 - l.x() - l.y(), l.x(), l.y());
        return Eigen::Matrix3d(zeta(x, region) * phi * phi.transpose());
    };
    return apply_rule(cell, f, 3);
}

// ---------------------------------------------------------------------------
// Global matrices

inline SparseMatrix from_triplets(int rows, int cols, const std::vector<Eigen::Triplet<double>>& t) {
    SparseMatrix m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

/// Bulk stiffness over all mesh vertices.
inline SparseMatrix assemble_bulk_stiffness_full(const Mesh& mesh, const CoefficientSet& coeff, int quad_order = 2,
                                                 const AdaptiveOptions& wq = default_weight_quadrature()) {
    std::vector<Eigen::Matrix3d> elements(mesh.num_triangles());
    parallel_for(mesh.num_triangles(),
                 [&](std::size_t t) { elements[t] = bulk_element_matrix(mesh, t, coeff, quad_order, wq); });
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& v = mesh.triangles()[t].v;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) trip.emplace_back(v[i], v[j], elements[t](i, j));
    }
    const int n = static_cast<int>(mesh.num_vertices());
    return from_triplets(n, n, trip);
}

/// Rows and columns of `a` selected by `index` (new position -> old index).
inline SparseMatrix select(const SparseMatrix& a, const std::vector<int>& rows, const std::vector<int>& cols) {
    std::vector<int> row_pos(a.rows(), -1), col_pos(a.cols(), -1);
    for (std::size_t i = 0; i < rows.size(); ++i) row_pos[rows[i]] = static_cast<int>(i);
    for (std::size_t j = 0; j < cols.size(); ++j) col_pos[cols[j]] = static_cast<int>(j);
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < a.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(a, k); it; ++it)
            if (row_pos[it.row()] >= 0 && col_pos[it.col()] >= 0)
                trip.emplace_back(row_pos[it.row()], col_pos[it.col()], it.value());
    return from_triplets(static_cast<int>(rows.size()), static_cast<int>(cols.size()), trip);
}

/// Bulk stiffness on the free dofs (Dirichlet rows and columns eliminated).
inline SparseMatrix assemble_bulk_stiffness(const Mesh& mesh, const CoefficientSet& coeff, const DofMap& dofs,
                                            int quad_order = 2,
                                            const AdaptiveOptions& wq = default_weight_quadrature()) {
    return select(assemble_bulk_stiffness_full(mesh, coeff, quad_order, wq), dofs.bulk, dofs.bulk);
}

/// Edge average of the tangential coefficient (mu tau, tau) * envelope.
/// Throws EnvelopeError on a negative sample.
inline double surface_edge_coefficient(const SurfaceMesh& s, std::size_t e, const SurfaceShape& shape,
                                       const ScalarEnvelope& env) {
    const auto [ia, ib] = s.edges[e];
    const Vec2 a = s.points[ia], b = s.points[ib];
    const double len = (b - a).norm();
    if (len == 0.0) throw GeometryError("degenerate geometry: zero-length edge");
    const Vec2 tau = (b - a) / len;
    auto mu_t = [&](const Vec2& x) { return tau.dot(shape(x) * tau); };
    auto integrand = [&](const Vec2& x) { return mu_t(x) * env(x); };
    const GaussRule1D& g = gauss_legendre(4);
    for (double y : g.nodes) {
        const Vec2 x = a + y * (b - a);
        if (mu_t(x) < 0.0) throw EnvelopeError("surface coefficient violates nonnegativity");
        if (env(x) < 0.0) throw EnvelopeError("surface envelope violates nonnegativity");
    }
    if (env.kind() == ScalarEnvelope::Kind::weight) {
        const WeightSpec& w = env.weight_spec();
        auto split = [&w](const SegmentCell& c) { return weight_ratio_exceeds(w, c); };
        AdaptiveOptions opt = default_weight_quadrature();
        opt.order = 8;
        opt.grading_depth = 30;
        opt.rel_tol = 1e-12;
        return integrate_adaptive(SegmentCell{a, b}, integrand, split, opt).value / len;
    }
    return integrate_segment(a, b, integrand, 4) / len;
}

/// P1 surface stiffness over all nodes of `s` (local numbering): per edge
/// (mu_bar / L) [[1, -1], [-1, 1]].
inline SparseMatrix assemble_surface_stiffness(const SurfaceMesh& s, const SurfaceShape& shape,
                                               const ScalarEnvelope& env) {
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t e = 0; e < s.edges.size(); ++e) {
        const double k = surface_edge_coefficient(s, e, shape, env) / s.edge_length(e);
        const auto [a, b] = s.edges[e];
        trip.emplace_back(a, a, k);
        trip.emplace_back(b, b, k);
        trip.emplace_back(a, b, -k);
        trip.emplace_back(b, a, -k);
    }
    const int n = static_cast<int>(s.size());
    return from_triplets(n, n, trip);
}

inline SparseMatrix lump(const SparseMatrix& m) {
    const Eigen::VectorXd rows = m * Eigen::VectorXd::Ones(m.cols());
    SparseMatrix d(m.rows(), m.cols());
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < rows.size(); ++i) trip.emplace_back(i, i, rows[i]);
    d.setFromTriplets(trip.begin(), trip.end());
    return d;
}

/// zeta-weighted P1 bulk mass over all vertices.
inline SparseMatrix assemble_bulk_mass_full(const Mesh& mesh, const std::function<double(const Vec2&, int)>& zeta,
                                            bool lumped) {
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const Eigen::Matrix3d m = bulk_element_mass(mesh, t, zeta);
        const auto& v = mesh.triangles()[t].v;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) trip.emplace_back(v[i], v[j], m(i, j));
    }
    const int n = static_cast<int>(mesh.num_vertices());
    SparseMatrix m = from_triplets(n, n, trip);
    return lumped ? lump(m) : m;
}

/// zeta-weighted P1 edge mass over all nodes of a surface (local numbering).
inline SparseMatrix assemble_surface_mass(const SurfaceMesh& s, const std::function<double(const Vec2&)>& zeta,
                                          bool lumped) {
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t e = 0; e < s.edges.size(); ++e) {
        const auto [ia, ib] = s.edges[e];
        const Vec2 a = s.points[ia], b = s.points[ib];
        const GaussRule1D& g = gauss_legendre(3);
        const double len = (b - a).norm();
        double maa = 0, mab = 0, mbb = 0;
        for (std::size_t q = 0; q < g.nodes.size(); ++q) {
            const double y = g.nodes[q], z = zeta(a + y * (b - a)) * g.weights[q] * len;
            maa += z * (1 - y) * (1 - y);
            mab += z * (1 - y) * y;
            mbb += z * y * y;
        }
        trip.emplace_back(ia, ia, maa);
        trip.emplace_back(ib, ib, mbb);
        trip.emplace_back(ia, ib, mab);
        trip.emplace_back(ib, ia, mab);
    }
    const int n = static_cast<int>(s.size());
    SparseMatrix m = from_triplets(n, n, trip);
    return lumped ? lump(m) : m;
}

/// Local surface indices of the free surface dofs.
inline std::vector<int> free_local_nodes(const SurfaceMesh& s, const std::vector<int>& free_vertices) {
    std::vector<int> out;
    for (int v : free_vertices) out.push_back(s.local_index(v));
    return out;
}

/// Block-diagonal zeta-weighted mass on (bulk, dynamic boundary, interface).
inline SparseMatrix assemble_block_mass(const Mesh& mesh, const SurfaceMesh& gd, const SurfaceMesh& sigma,
                                        const CoefficientSet& coeff, const DofMap& dofs, bool lumped) {
    const SparseMatrix mb = select(assemble_bulk_mass_full(mesh, coeff.zeta_bulk, lumped), dofs.bulk, dofs.bulk);
    const auto gl = free_local_nodes(gd, dofs.gd), sl = free_local_nodes(sigma, dofs.sigma);
    const SparseMatrix mg = select(assemble_surface_mass(gd, coeff.zeta_gd, lumped), gl, gl);
    const SparseMatrix ms = select(assemble_surface_mass(sigma, coeff.zeta_sigma, lumped), sl, sl);
    std::vector<Eigen::Triplet<double>> trip;
    auto add = [&trip](const SparseMatrix& m, int offset) {
        for (int k = 0; k < m.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(m, k); it; ++it)
                trip.emplace_back(it.row() + offset, it.col() + offset, it.value());
    };
    add(mb, 0);
    add(mg, dofs.gd_offset());
    add(ms, dofs.sigma_offset());
    return from_triplets(dofs.n_block(), dofs.n_block(), trip);
}

/// 0/1 selection u -> (u, u on dynamic boundary dofs, u on interface dofs).
inline SparseMatrix assemble_trace_map(const DofMap& dofs) {
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < dofs.n_bulk(); ++i) trip.emplace_back(i, i, 1.0);
    auto add = [&](const std::vector<int>& nodes, int offset, const char* name) {
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const int v = nodes[k];
            const int col = (v >= 0 && v < static_cast<int>(dofs.vertex_dof.size())) ? dofs.vertex_dof[v] : -1;
            if (col < 0)
                throw InvariantError(std::string(name) + " node " + std::to_string(v) + " has no free bulk counterpart");
            trip.emplace_back(offset + static_cast<int>(k), col, 1.0);
        }
    };
    add(dofs.gd, dofs.gd_offset(), "dynamic boundary");
    add(dofs.sigma, dofs.sigma_offset(), "interface");
    return from_triplets(dofs.n_block(), dofs.n_bulk(), trip);
}

/// Surface matrix (local numbering) pulled back to free bulk dofs.
inline SparseMatrix surface_to_bulk(const SparseMatrix& local, const SurfaceMesh& s, const DofMap& dofs) {
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < local.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(local, k); it; ++it) {
            const int r = dofs.vertex_dof[s.nodes[it.row()]], c = dofs.vertex_dof[s.nodes[it.col()]];
            if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
        }
    return from_triplets(dofs.n_bulk(), dofs.n_bulk(), trip);
}

// ---------------------------------------------------------------------------
// Envelope checks

inline EnvelopeReport check_envelopes(const Mesh& mesh, const SurfaceMesh& gd, const SurfaceMesh& sigma,
                                      const CoefficientSet& coeff, int quad_order = 2) {
    EnvelopeReport r;
    const GaussRule1D& g = gauss_legendre(std::max(quad_order, 1));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const TriangleCell cell = mesh.cell(t);
        const int region = mesh.triangles()[t].region;
        std::vector<Vec2> samples{cell.centroid()};
        for (double a : g.nodes)
            for (double b : g.nodes) samples.push_back(cell.a + a * (1 - b) * (cell.b - cell.a) + b * (cell.c - cell.a));
        for (const Vec2& x : samples) {
            const Mat2 m = coeff.bulk(x, region);
            const Mat2 sym = 0.5 * (m + m.transpose());
            const double lo = Eigen::SelfAdjointEigenSolver<Mat2>(sym, Eigen::EigenvaluesOnly).eigenvalues()(0);
            const double hi = Eigen::JacobiSVD<Mat2>(m).singularValues()(0);
            if (coeff.bulk_envelope(x) < 0.0) throw EnvelopeError("bulk envelope violates nonnegativity");
            r.sample(lo, hi);
            const double z = coeff.zeta_bulk(x, region);
            r.sample_zeta(z);
        }
    }
    auto surface = [&](const SurfaceMesh& s, const SurfaceShape& shape, const ScalarEnvelope& env,
                       const std::function<double(const Vec2&)>& zeta) {
        for (std::size_t e = 0; e < s.edges.size(); ++e) {
            const auto [ia, ib] = s.edges[e];
            const Vec2 a = s.points[ia], b = s.points[ib];
            const Vec2 tau = (b - a).normalized();
            for (double y : g.nodes) {
                const Vec2 x = a + y * (b - a);
                const Mat2 m = shape(x);
                const double mu_t = tau.dot(m * tau);
                if (mu_t < 0.0) throw EnvelopeError("surface coefficient violates nonnegativity");
                if (env(x) < 0.0) throw EnvelopeError("surface envelope violates nonnegativity");
                r.sample(mu_t, std::abs(mu_t));
                r.sample_zeta(zeta(x));
            }
        }
    };
    surface(gd, coeff.gd, coeff.gd_envelope, coeff.zeta_gd);
    surface(sigma, coeff.sigma, coeff.sigma_envelope, coeff.zeta_sigma);

    if (!(r.c1_observed > 0.0) && mesh.num_triangles() > 0)
        throw EnvelopeError("coefficient is not elliptic relative to its envelope (observed c1 = " +
                            std::to_string(r.c1_observed) + ")");
    if (r.c1_observed < coeff.c1)
        throw EnvelopeError("coefficient below the declared envelope: observed c1 = " + std::to_string(r.c1_observed) +
                            " < " + std::to_string(coeff.c1));
    if (r.c2_observed > coeff.c2)
        throw EnvelopeError("coefficient above the declared envelope: observed c2 = " + std::to_string(r.c2_observed) +
                            " > " + std::to_string(coeff.c2));
    if (!(r.zeta_min > 0.0) || r.zeta_min < coeff.zeta_lower)
        throw EnvelopeError("relaxation coefficient zeta below its lower bound (observed " +
                            std::to_string(r.zeta_min) + ")");
    return r;
}

// ---------------------------------------------------------------------------
// Operator pencil

struct AssemblyOptions {
    bool lumped = false;
    int quad_order = 2;
    EndpointPolicy endpoints;
    AdaptiveOptions weight_quadrature = default_weight_quadrature();
    bool allow_outside_theory = false; ///< accept case B weights with gamma >= 1
};

/// The assembled pencil: stiffness T on free bulk dofs, block mass M_blk, trace
/// map J, M_tilde = J^T M_blk J and the Gram matrix M_form of the form domain.
struct DiscreteOperator {
    DofMap dofs;
    SurfaceMesh gd, sigma;
    std::vector<Vec2> coords; ///< all mesh vertices

    SparseMatrix T, T_bulk, M_blk, J, M_tilde, M_form;
    SparseMatrix K_bulk_full;       ///< bulk term over all vertices
    SparseMatrix M_bulk_plain_full; ///< unweighted consistent bulk mass over all vertices
    SparseMatrix M_sigma_plain;     ///< unweighted consistent interface mass, local numbering

    bool symmetric = true;
    bool lumped = false;
    double h = 0.0; ///< largest triangle diameter
    EnvelopeReport envelope;

    int size() const { return dofs.n_bulk(); }
};

inline DiscreteOperator build_pencil(const Mesh& mesh, const CoefficientSet& coeff, const AssemblyOptions& opt = {}) {
    DiscreteOperator op;
    op.gd = build_surface_mesh(mesh, SurfaceKind::dynamic);
    op.sigma = build_surface_mesh(mesh, SurfaceKind::interface);
    op.dofs = make_dofmap(mesh, op.gd, op.sigma, opt.endpoints);
    op.coords = mesh.vertices();
    op.lumped = opt.lumped;
    op.h = mesh.max_diameter();
    op.envelope = check_envelopes(mesh, op.gd, op.sigma, coeff, opt.quad_order);
    if (const auto w = coeff.bulk_weight(); w && !opt.allow_outside_theory && classify_case(*w, mesh).outside_theory)
        throw OutsideTheoryError("outside theory hypothesis: case B requires γ < 1");

    const DofMap& d = op.dofs;
    op.K_bulk_full = assemble_bulk_stiffness_full(mesh, coeff, opt.quad_order, opt.weight_quadrature);
    op.T_bulk = select(op.K_bulk_full, d.bulk, d.bulk);
    const SparseMatrix k_gd = assemble_surface_stiffness(op.gd, coeff.gd, coeff.gd_envelope);
    const SparseMatrix k_sigma = assemble_surface_stiffness(op.sigma, coeff.sigma, coeff.sigma_envelope);
    op.T = op.T_bulk + surface_to_bulk(k_gd, op.gd, d) + surface_to_bulk(k_sigma, op.sigma, d);
    op.T.prune(0.0);

    op.M_blk = assemble_block_mass(mesh, op.gd, op.sigma, coeff, d, opt.lumped);
    op.J = assemble_trace_map(d);
    op.M_tilde = SparseMatrix(op.J.transpose() * op.M_blk * op.J);

    auto one = [](const Vec2&, int) { return 1.0; };
    op.M_bulk_plain_full = assemble_bulk_mass_full(mesh, one, false);
    op.M_sigma_plain = assemble_surface_mass(op.sigma, [](const Vec2&) { return 1.0; }, false);

    // Gram matrix of the form domain: W^{1,2}(Omega, mu*) plus the envelope-
    // weighted surface gradient terms.
    CoefficientSet star = coeff;
    star.bulk = [](const Vec2&, int) { return Mat2::Identity().eval(); };
    star.bulk_regionwise_constant = true;
    const SparseMatrix k_star = select(assemble_bulk_stiffness_full(mesh, star, opt.quad_order, opt.weight_quadrature),
                                       d.bulk, d.bulk);
    auto identity = [](const Vec2&) { return Mat2::Identity().eval(); };
    op.M_form = select(op.M_bulk_plain_full, d.bulk, d.bulk) + k_star +
                surface_to_bulk(assemble_surface_stiffness(op.gd, identity, coeff.gd_envelope), op.gd, d) +
                surface_to_bulk(assemble_surface_stiffness(op.sigma, identity, coeff.sigma_envelope), op.sigma, d);

    op.symmetric = is_symmetric(op.T);
    return op;
}

/// Values of J u split into the three blocks.
inline BlockField trace(const DiscreteOperator& op, const Eigen::VectorXd& u) {
    return BlockField::split(op.dofs, op.J * u);
}

/// Full nodal vector (zero on constrained vertices) from free bulk dofs.
inline Eigen::VectorXd expand(const DiscreteOperator& op, const Eigen::VectorXd& u) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(op.coords.size()));
    for (int i = 0; i < op.dofs.n_bulk(); ++i) full[op.dofs.bulk[i]] = u[i];
    return full;
}

/// M_blk-orthogonal projection of independent block data onto the range of J:
/// solves (J^T M_blk J) u = J^T M_blk raw.
inline Eigen::VectorXd project_initial_data(const BlockField& raw, const DiscreteOperator& op) {
    raw.check(op.dofs);
    Eigen::SimplicialLDLT<SparseMatrix> solver(op.M_tilde);
    if (solver.info() != Eigen::Success) throw Error("assembly: singular normal matrix in initial-data projection");
    Eigen::VectorXd u = solver.solve(op.J.transpose() * (op.M_blk * raw.stacked()));
    if (solver.info() != Eigen::Success || !u.allFinite())
        throw Error("assembly: singular normal matrix in initial-data projection");
    return u;
}

/// Largest c with sym(T) + J^T M_blk J >= c M_form, i.e. the smallest
/// generalized eigenvalue of that pencil.
inline double j_ellipticity_constant(const DiscreteOperator& op) {
    const SparseMatrix a = SparseMatrix(symmetric_part(op.T) + op.M_tilde);
    return smallest_generalized_eigenvalue(a, op.M_form);
}

} // namespace formheat
