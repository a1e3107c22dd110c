#pragma once

// Spectrum of the pencil T u = lambda M_tilde u, numerical range checks,
// fractional powers of I + M_tilde^{-1} T and the embedding probe.

#include "formheat/assembly.hpp"
#include "formheat/errors.hpp"
#include "formheat/exponents.hpp"
#include "formheat/linalg.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <vector>

namespace formheat {

/// Ascending eigenvalues with M_tilde-orthonormal eigenvectors (columns).
struct Eigenpairs {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    double max_residual = 0.0; ///< max over pairs of ||T v - lambda M v|| / ||v||
};

inline void require_symmetric(const DiscreteOperator& op, const char* what) {
    if (!op.symmetric)
        throw InvariantError(std::string(what) + " requires symmetric coefficients; use numerical_range_check");
}

inline double eigen_residual(const DiscreteOperator& op, double lambda, const Eigen::VectorXd& v) {
    return (op.T * v - lambda * (op.M_tilde * v)).norm() / v.norm();
}

/// Full dense decomposition of the pencil.
inline Eigenpairs dense_eigs(const DiscreteOperator& op) {
    require_symmetric(op, "eigendecomposition");
    if (op.size() > kDenseEigenLimit)
        throw InvariantError("dof count " + std::to_string(op.size()) + " exceeds the dense limit of " +
                             std::to_string(kDenseEigenLimit));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(op.T), Eigen::MatrixXd(op.M_tilde));
    if (es.info() != Eigen::Success) throw SolverError("dense generalized eigensolver failed", NAN);
    return {es.eigenvalues(), es.eigenvectors(), 0.0};
}

/// Shift-invert subspace iteration with Rayleigh-Ritz for the `count`
/// smallest eigenpairs.
inline Eigenpairs subspace_eigs(const DiscreteOperator& op, int count, double tol = 1e-9, int max_iter = 500) {
    const int n = op.size();
    const int block = std::min(n, std::max(2 * count, count + 8));
    // Shift below the spectrum so that T + shift M_tilde is positive definite.
    const double shift = 1.0;
    Eigen::SimplicialLDLT<SparseMatrix> solver(SparseMatrix(op.T + shift * op.M_tilde));
    if (solver.info() != Eigen::Success) throw SolverError("shift-invert factorization failed", NAN);
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd x(n, block);
    for (int j = 0; j < block; ++j)
        for (int i = 0; i < n; ++i) x(i, j) = nd(rng);
    Eigenpairs out;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::MatrixXd y(n, block);
        for (int j = 0; j < block; ++j) y.col(j) = solver.solve(op.M_tilde * x.col(j));
        const Eigen::MatrixXd a = y.transpose() * (op.T * y);
        const Eigen::MatrixXd b = y.transpose() * (op.M_tilde * y);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()), 0.5 * (b + b.transpose()));
        if (es.info() != Eigen::Success) throw SolverError("Rayleigh-Ritz step failed", NAN);
        x = y * es.eigenvectors();
        double worst = 0.0;
        for (int j = 0; j < count; ++j)
            worst = std::max(worst, eigen_residual(op, es.eigenvalues()(j), x.col(j)) /
                                        std::max(1.0, std::abs(es.eigenvalues()(j))));
        out.values = es.eigenvalues().head(count);
        out.vectors = x.leftCols(count);
        out.max_residual = worst;
        if (worst <= tol) return out;
    }
    throw SolverError("subspace iteration did not converge", out.max_residual);
}

/// The `count` smallest eigenpairs of T u = lambda M_tilde u.
inline Eigenpairs generalized_eigs(const DiscreteOperator& op, int count) {
    require_symmetric(op, "generalized_eigs");
    if (count <= 0 || count > op.size()) throw InvariantError("eigenpair count must lie in [1, dof count]");
    Eigenpairs e;
    if (op.size() <= kDenseEigenLimit) {
        const Eigenpairs full = dense_eigs(op);
        e.values = full.values.head(count);
        e.vectors = full.vectors.leftCols(count);
    } else {
        e = subspace_eigs(op, count);
    }
    e.max_residual = 0.0;
    for (int j = 0; j < count; ++j) e.max_residual = std::max(e.max_residual, eigen_residual(op, e.values(j), e.vectors.col(j)));
    if (!(e.max_residual <= 1e-8 * std::max(1.0, std::abs(e.values(count - 1)))))
        throw SolverError("eigenpair residual above tolerance", e.max_residual);
    return e;
}

struct NumericalRange {
    double min_real = std::numeric_limits<double>::infinity(); ///< min Re <T z, z> / <M z, z>
    double max_ratio = 0.0;                                     ///< max |Im| / Re
};

/// Samples Rayleigh quotients of T over random complex vectors z = x + i y.
inline NumericalRange numerical_range_check(const DiscreteOperator& op, int samples, unsigned seed = 1) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    NumericalRange r;
    const int n = op.size();
    Eigen::VectorXd x(n), y(n);
    for (int s = 0; s < samples; ++s) {
        for (int i = 0; i < n; ++i) x[i] = nd(rng), y[i] = nd(rng);
        const Eigen::VectorXd tx = op.T * x, ty = op.T * y;
        const double re = x.dot(tx) + y.dot(ty);
        const double im = x.dot(ty) - y.dot(tx);
        const double mass = x.dot(op.M_tilde * x) + y.dot(op.M_tilde * y);
        r.min_real = std::min(r.min_real, re / mass);
        const double scale = std::abs(re) + std::abs(im);
        if (std::abs(im) <= 1e-14 * scale) continue;
        r.max_ratio = std::max(r.max_ratio, re > 0.0 ? std::abs(im) / re : std::numeric_limits<double>::infinity());
    }
    return r;
}

/// (I + M_tilde^{-1} T)^theta u from a full decomposition: V diag((1+lambda)^theta) V^T M_tilde u.
inline Eigen::VectorXd fractional_power_apply(const DiscreteOperator& op, const Eigenpairs& full, double theta,
                                              const Eigen::VectorXd& u) {
    if (!(theta > 0.0 && theta <= 1.0)) throw InvariantError("fractional power exponent must lie in (0, 1]");
    if (full.vectors.cols() != op.size()) throw InvariantError("fractional power needs the full decomposition");
    const Eigen::VectorXd coeffs = full.vectors.transpose() * (op.M_tilde * u);
    const Eigen::VectorXd scaled = coeffs.cwiseProduct((1.0 + full.values.array().max(0.0)).pow(theta).matrix());
    return full.vectors * scaled;
}

inline Eigen::VectorXd fractional_power_apply(const DiscreteOperator& op, double theta, const Eigen::VectorXd& u) {
    return fractional_power_apply(op, dense_eigs(op), theta, u);
}

struct ProbeLevel {
    int level = 0;
    double h = 0.0;
    double ratio = 0.0;
};

struct ProbeResult {
    std::vector<ProbeLevel> levels;
    double growth = 0.0; ///< ratio of the last level to the previous one
    bool bounded = true;
};

/// Per-refinement growth above which the probe reports unbounded ratios.
inline constexpr double kProbeGrowthLimit = 1.1;

/// Lumped-mass weighted l^p norm.
inline double weighted_lp_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& weights, double p) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += weights[i] * std::pow(std::abs(v[i]), p);
    return std::pow(s, 1.0 / p);
}

/// Worst observed ||u||_inf / ||(I + M_tilde^{-1} T)^theta u||_{l^p, M} per
/// level over random vectors and, for each of the nodes with the largest
/// discrete Green's function diagonal, the maximizer of the p = 2 quotient.
/// A qualitative trend, not a certified embedding constant.
inline ProbeResult fractional_embedding_probe(const std::vector<const DiscreteOperator*>& pencils, double theta, double p,
                                              int samples = 20, unsigned seed = 1) {
    if (!(theta > 0.0 && theta <= 1.0)) throw InvariantError("probe exponent must lie in (0, 1]");
    if (!(p >= 1.0)) throw InvariantError("probe p must be at least 1");
    ProbeResult result;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    for (std::size_t level = 0; level < pencils.size(); ++level) {
        const DiscreteOperator& op = *pencils[level];
        const Eigenpairs full = dense_eigs(op);
        const Eigen::VectorXd weights = op.M_tilde * Eigen::VectorXd::Ones(op.size());
        double worst = 0.0;
        auto consider = [&](const Eigen::VectorXd& u) {
            const double denom = weighted_lp_norm(fractional_power_apply(op, full, theta, u), weights, p);
            if (denom > 0.0) worst = std::max(worst, u.cwiseAbs().maxCoeff() / denom);
        };
        for (int s = 0; s < samples; ++s) {
            Eigen::VectorXd u(op.size());
            for (auto& x : u) x = nd(rng);
            consider(u);
        }
        const Eigen::ArrayXd damp = (1.0 + full.values.array().max(0.0)).pow(-2.0 * theta);
        const Eigen::VectorXd diag = (full.vectors.array().square().rowwise() * damp.transpose()).rowwise().sum();
        std::vector<int> order(op.size());
        std::iota(order.begin(), order.end(), 0);
        const int top = std::min<int>(5, op.size());
        std::partial_sort(order.begin(), order.begin() + top, order.end(),
                          [&](int a, int b) { return diag[a] > diag[b]; });
        for (int k = 0; k < top; ++k) {
            const Eigen::VectorXd c = full.vectors.row(order[k]).transpose().array() * damp;
            consider(full.vectors * c);
        }
        result.levels.push_back({static_cast<int>(level), op.h, worst});
    }
    if (result.levels.size() >= 2) {
        const auto& l = result.levels;
        result.growth = l.back().ratio / l[l.size() - 2].ratio;
        result.bounded = result.growth <= kProbeGrowthLimit;
    }
    return result;
}

inline void write_probe_csv(std::ostream& out, const ProbeResult& r) {
    out << "level,h,ratio\n";
    out.precision(17);
    for (const auto& l : r.levels) out << l.level << ',' << l.h << ',' << l.ratio << '\n';
}

} // namespace formheat
