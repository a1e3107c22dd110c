#pragma once

// Sparse-matrix helpers shared by the assembly and spectral modules.

#include "formheat/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

namespace formheat {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Dimension up to which eigenproblems are solved densely.
inline constexpr int kDenseEigenLimit = 2000;

inline double max_abs(const SparseMatrix& a) {
    double m = 0.0;
    for (int k = 0; k < a.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
}

inline SparseMatrix symmetric_part(const SparseMatrix& a) {
    return SparseMatrix(0.5 * (a + SparseMatrix(a.transpose())));
}

inline bool is_symmetric(const SparseMatrix& a, double rel_tol = 1e-12) {
    const SparseMatrix d = a - SparseMatrix(a.transpose());
    return max_abs(d) <= rel_tol * std::max(max_abs(a), 1e-300);
}

/// Smallest eigenvalue of a x = lambda b x for symmetric a and symmetric
/// positive definite b. Dense below kDenseEigenLimit, otherwise inverse
/// iteration with a sparse factorization of a + shift b.
inline double smallest_generalized_eigenvalue(const SparseMatrix& a, const SparseMatrix& b) {
    const int n = static_cast<int>(a.rows());
    if (n == 0) throw Error("empty eigenproblem");
    if (n <= kDenseEigenLimit) {
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(a), Eigen::MatrixXd(b),
                                                                     Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw SolverError("dense generalized eigensolver failed", NAN);
        return es.eigenvalues()(0);
    }
    Eigen::SimplicialLDLT<SparseMatrix> solver(a);
    if (solver.info() != Eigen::Success) throw SolverError("factorization failed in inverse iteration", NAN);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    double lambda = 0.0;
    for (int it = 0; it < 2000; ++it) {
        Eigen::VectorXd y = solver.solve(b * x);
        y /= std::sqrt(y.dot(b * y));
        const double next = y.dot(a * y);
        x = y;
        if (std::abs(next - lambda) <= 1e-12 * std::abs(next)) return next;
        lambda = next;
    }
    const double residual = (a * x - lambda * (b * x)).norm();
    throw SolverError("inverse iteration did not converge", residual);
}

} // namespace formheat
