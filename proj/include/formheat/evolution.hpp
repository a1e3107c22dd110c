#pragma once

// Theta-scheme time integration of zeta u' + A u = f on the block space,
// invariant monitors, interface flux recovery and CSV output.

#include "formheat/assembly.hpp"
#include "formheat/errors.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace formheat {

struct TimeSteppingConfig {
    double theta = 1.0;
    double dt = 1e-2;
    double t_end = 1.0;
    double solver_tol = 1e-12; ///< relative residual of the iterative solver
    int max_iterations = 20000;
    bool monitor_mass = true;
    bool monitor_energy = true;
    bool monitor_supnorm = true;
    bool monitor_positivity = true;
    std::vector<double> snapshot_times;

    int n_steps() const { return static_cast<int>(std::llround(t_end / dt)); }

    void validate() const {
        if (!(theta >= 0.5 && theta <= 1.0)) throw ConfigError("time: theta must lie in [1/2, 1]");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time: dt must be positive");
        if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("time: t_end must be nonnegative");
        if (std::abs(n_steps() * dt - t_end) > 1e-9 * std::max(t_end, dt))
            throw ConfigError("time: t_end is not an integer multiple of dt");
        if (!(solver_tol > 0.0)) throw ConfigError("time: solver tolerance must be positive");
        if (max_iterations <= 0) throw ConfigError("time: max_iterations must be positive");
    }
};

/// Forcing as a function of time; returns the block data (f_Omega, f_gd, f_sigma).
using Forcing = std::function<BlockField(double t)>;

inline Forcing zero_forcing(const DofMap& dofs) {
    return [dofs](double) { return BlockField::zeros(dofs); };
}

/// Forcing from space-time component functions, interpolated at the nodes.
inline Forcing nodal_forcing(const Mesh& mesh, const DofMap& dofs,
                             std::function<double(const Vec2&, double)> f_bulk,
                             std::function<double(const Vec2&, double)> f_gd,
                             std::function<double(const Vec2&, double)> f_sigma) {
    return [mesh, dofs, f_bulk, f_gd, f_sigma](double t) {
        return interpolate(
            mesh, dofs, [&](const Vec2& x) { return f_bulk(x, t); }, [&](const Vec2& x) { return f_gd(x, t); },
            [&](const Vec2& x) { return f_sigma(x, t); });
    };
}

struct StepInfo {
    int iterations = 0;
    double residual = 0.0;
};

/// Reusable solver for (M_tilde + theta dt T) delta = -dt T u + dt J^T M_blk f,
/// the increment form of the theta scheme. Conjugate gradients with an
/// incomplete Cholesky preconditioner for symmetric T, sparse LU otherwise.
class ThetaStepper {
public:
    ThetaStepper(const DiscreteOperator& op, const TimeSteppingConfig& cfg) : op_(op), cfg_(cfg) {
        cfg.validate();
        system_ = SparseMatrix(op.M_tilde + (cfg.theta * cfg.dt) * op.T);
        if (op.symmetric) {
            cg_.setTolerance(cfg.solver_tol);
            cg_.setMaxIterations(cfg.max_iterations);
            cg_.compute(system_);
            if (cg_.info() != Eigen::Success) throw SolverError("preconditioner setup failed", NAN);
        } else {
            lu_.compute(system_);
            if (lu_.info() != Eigen::Success) throw SolverError("sparse LU factorization failed", NAN);
        }
    }

    Eigen::VectorXd step(const Eigen::VectorXd& u, const BlockField& f_bar, StepInfo* info = nullptr) {
        f_bar.check(op_.dofs);
        const double dt = cfg_.dt;
        const Eigen::VectorXd rhs = -dt * (op_.T * u) + dt * (op_.J.transpose() * (op_.M_blk * f_bar.stacked()));
        Eigen::VectorXd delta;
        StepInfo local;
        if (op_.symmetric) {
            delta = cg_.solve(rhs);
            local.iterations = static_cast<int>(cg_.iterations());
            local.residual = cg_.error();
            if (cg_.info() != Eigen::Success || !delta.allFinite())
                throw SolverError("conjugate gradients did not converge", local.residual);
        } else {
            delta = lu_.solve(rhs);
            const double scale = std::max(rhs.norm(), 1e-300);
            local.residual = (rhs - system_ * delta).norm() / scale;
            if (lu_.info() != Eigen::Success || !delta.allFinite() || !(local.residual <= 1e-8))
                throw SolverError("sparse LU solve failed", local.residual);
        }
        if (info) *info = local;
        return u + delta;
    }

private:
    const DiscreteOperator& op_;
    TimeSteppingConfig cfg_;
    SparseMatrix system_;
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg_;
    Eigen::SparseLU<SparseMatrix> lu_;
};

/// One theta step from u with forcing f_bar sampled at t^{n+theta}.
inline Eigen::VectorXd theta_step(const DiscreteOperator& op, const Eigen::VectorXd& u, const BlockField& f_bar,
                                  const TimeSteppingConfig& cfg, StepInfo* info = nullptr) {
    ThetaStepper stepper(op, cfg);
    return stepper.step(u, f_bar, info);
}

// ---------------------------------------------------------------------------
// Monitors

/// Total zeta-mass <M_blk J u, 1>.
inline double total_mass(const DiscreteOperator& op, const Eigen::VectorXd& u) {
    return (op.M_blk * (op.J * u)).sum();
}

/// Block L2 energy ||J u||^2 in M_blk.
inline double block_energy(const DiscreteOperator& op, const Eigen::VectorXd& u) { return u.dot(op.M_tilde * u); }

/// Extremes over all nodal values, constrained vertices included.
inline std::pair<double, double> nodal_range(const DiscreteOperator& op, const Eigen::VectorXd& u) {
    const Eigen::VectorXd full = expand(op, u);
    return {full.minCoeff(), full.maxCoeff()};
}

struct Snapshot {
    double time = 0.0;
    Eigen::VectorXd u; ///< free bulk dofs
};

struct EvolutionReport {
    std::vector<double> time, mass, energy, supnorm, minval;
    std::vector<int> cg_iters;
    Eigen::VectorXd u;  ///< final free bulk dofs
    BlockField final;   ///< J u at the final time
    std::vector<Snapshot> snapshots;

    std::size_t size() const { return time.size(); }
};

inline void record_monitors(EvolutionReport& r, const DiscreteOperator& op, const TimeSteppingConfig& cfg, double t,
                            const Eigen::VectorXd& u, int iterations) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    r.time.push_back(t);
    r.mass.push_back(cfg.monitor_mass ? total_mass(op, u) : nan);
    r.energy.push_back(cfg.monitor_energy ? block_energy(op, u) : nan);
    const bool range = cfg.monitor_supnorm || cfg.monitor_positivity;
    const auto [lo, hi] = range ? nodal_range(op, u) : std::pair{nan, nan};
    r.supnorm.push_back(cfg.monitor_supnorm ? std::max(std::abs(lo), std::abs(hi)) : nan);
    r.minval.push_back(cfg.monitor_positivity ? lo : nan);
    r.cg_iters.push_back(iterations);
}

/// Projects the raw initial data onto the range of J and runs the theta scheme
/// to t_end, recording monitors after every step.
inline EvolutionReport evolve(const DiscreteOperator& op, const BlockField& u0_raw, const Forcing& forcing,
                              const TimeSteppingConfig& cfg) {
    cfg.validate();
    ThetaStepper stepper(op, cfg);
    EvolutionReport r;
    Eigen::VectorXd u = project_initial_data(u0_raw, op);
    const int n = cfg.n_steps();
    std::vector<double> pending = cfg.snapshot_times;
    std::sort(pending.begin(), pending.end());
    std::size_t next_snapshot = 0;
    auto take_snapshots = [&](double t) {
        while (next_snapshot < pending.size() && pending[next_snapshot] <= t + 0.5 * cfg.dt) {
            r.snapshots.push_back({t, u});
            ++next_snapshot;
        }
    };
    record_monitors(r, op, cfg, 0.0, u, 0);
    take_snapshots(0.0);
    for (int k = 0; k < n; ++k) {
        const double t = k * cfg.dt;
        StepInfo info;
        try {
            u = stepper.step(u, forcing(t + cfg.theta * cfg.dt), &info);
        } catch (const SolverError& e) {
            throw SolverError("step " + std::to_string(k + 1) + ": " + e.what(), e.residual());
        }
        record_monitors(r, op, cfg, (k + 1) * cfg.dt, u, info.iterations);
        take_snapshots((k + 1) * cfg.dt);
    }
    r.u = u;
    r.final = trace(op, u);
    return r;
}

/// Stationary problem T u = J^T M_blk f.
inline Eigen::VectorXd solve_stationary(const DiscreteOperator& op, const BlockField& f) {
    f.check(op.dofs);
    const Eigen::VectorXd rhs = op.J.transpose() * (op.M_blk * f.stacked());
    Eigen::SparseLU<SparseMatrix> lu(op.T);
    if (lu.info() != Eigen::Success) throw SolverError("stationary operator is singular", NAN);
    const Eigen::VectorXd u = lu.solve(rhs);
    const double residual = (rhs - op.T * u).norm() / std::max(rhs.norm(), 1e-300);
    if (lu.info() != Eigen::Success || !u.allFinite() || !(residual <= 1e-8))
        throw SolverError("stationary solve failed", residual);
    return u;
}

/// Interface flux jump recovered variationally: for each Sigma node i,
/// r_i = t_bulk(u, phi_i) - (f_Omega, phi_i), then M_Sigma j = r with the
/// unweighted consistent interface mass. Returned in the order of op.sigma.nodes.
inline Eigen::VectorXd recover_interface_flux(const DiscreteOperator& op, const Eigen::VectorXd& u,
                                              const BlockField& f) {
    if (op.sigma.empty()) return {};
    f.check(op.dofs);
    const Eigen::VectorXd full_u = expand(op, u);
    const Eigen::VectorXd full_f = expand(op, f.bulk);
    const Eigen::VectorXd residual = op.K_bulk_full * full_u - op.M_bulk_plain_full * full_f;
    Eigen::VectorXd r(static_cast<Eigen::Index>(op.sigma.size()));
    for (std::size_t i = 0; i < op.sigma.size(); ++i) r[i] = residual[op.sigma.nodes[i]];
    Eigen::SimplicialLDLT<SparseMatrix> solver(op.M_sigma_plain);
    if (solver.info() != Eigen::Success) throw SolverError("interface mass factorization failed", NAN);
    return solver.solve(r);
}

// ---------------------------------------------------------------------------
// CSV output

inline void write_monitor_csv(std::ostream& out, const EvolutionReport& r) {
    out << "step,time,mass,energy,supnorm,minval,cg_iters\n";
    out.precision(17);
    for (std::size_t k = 0; k < r.size(); ++k)
        out << k << ',' << r.time[k] << ',' << r.mass[k] << ',' << r.energy[k] << ',' << r.supnorm[k] << ','
            << r.minval[k] << ',' << r.cg_iters[k] << '\n';
}

/// One row per bulk vertex (constrained ones included), dynamic boundary node
/// and interface node.
inline void write_snapshot_csv(std::ostream& out, const DiscreteOperator& op, const Eigen::VectorXd& u) {
    out << "node_kind,node_index,x,y,value\n";
    out.precision(17);
    const Eigen::VectorXd full = expand(op, u);
    auto row = [&](const char* kind, int v) {
        const Vec2& x = op.coords[v];
        out << kind << ',' << v << ',' << x.x() << ',' << x.y() << ',' << full[v] << '\n';
    };
    for (int v = 0; v < static_cast<int>(op.coords.size()); ++v) row("bulk", v);
    for (int v : op.gd.nodes) row("gd", v);
    for (int v : op.sigma.nodes) row("sigma", v);
}

} // namespace formheat
