// microsim.hpp -- microscopic oracle for the master equations: explicit
// decoherence-cycle simulation with branch wave functions.
//
// The symmetric cycle decoheres every state at the start of each interval
// and evolves the resulting branch mixture unitarily. The antisymmetric
// cycle imposes decoherence on matter states at interval start and
// recoherence on antimatter states at interval end; the two-point boundary
// conditions are solved exactly by linear algebra, not just to second order,
// so the simulation stays an independent oracle for the generator path.

#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "pme/propagator.hpp"
#include "pme/solver.hpp"

namespace pme {

// Branch wave functions over one decoherence interval; column k of
// `branches` is psi^(k) labeled by its source slot. Random decoherence
// phases are represented extensionally: branches are kept separate and
// never summed coherently.
struct BranchMixture {
    Eigen::MatrixXcd branches;   // 2n x 2n at the interval start t_beta + 0
    double t_begin = 0.0;
    double t_end = 0.0;

    int dim() const { return static_cast<int>(branches.rows()); }
    // Probability vector of the mixture: p_j = sum_k |<j|psi^(k)>|^2.
    Eigen::VectorXd probabilities() const;
    double total_probability() const { return branches.squaredNorm(); }
};

struct CycleConfig {
    double tau_d = 1.0;             // decoherence interval
    int n_cycles = 1;
    PropagatorMode propagator = PropagatorMode::Exact;  // Perturbative uses order 2
    std::vector<std::string> warnings;
};

// Validates the interval against the time-scale ordering tau_0 << tau_d <<
// tau_1; violations are reported as warnings on the returned config.
CycleConfig make_cycle_config(const SystemSpec& sys, double tau_d, int n_cycles,
                              PropagatorMode mode = PropagatorMode::Exact);

// Projection onto the energy basis: branch k = sqrt(p_k) e_k. Preserves the
// diagonal of the implied density matrix exactly.
BranchMixture decohere(const Eigen::VectorXd& p, double t_begin, double t_end);

// Per-interval diagnostics of the antisymmetric construction.
struct IntervalDiagnostics {
    int interval = 0;
    double bc_residual = 0.0;   // worst boundary-condition residual
    double weight_min = 0.0;    // smallest antimatter branch weight
    double cond_Uaa = 0.0;      // condition number of the antimatter block
};

struct MicroResult {
    Trajectory trajectory;                       // sampled at cycle boundaries
    std::vector<IntervalDiagnostics> diagnostics;  // antisymmetric runs only
};

// Decohere / evolve / read off, repeated n_cycles times. Samples include the
// initial state, so the trajectory has n_cycles + 1 samples.
MicroResult symmetric_cycle(const SystemSpec& sys, const Eigen::VectorXd& p0,
                            const CycleConfig& cfg);

// Branch construction satisfying the antisymmetric boundary conditions for
// one interval with propagator U and entry probabilities p:
//   matter branch k: sqrt(p_k) e_k plus the antimatter amplitude
//     a = -Uaa^{-1} Uam sqrt(p_k) e_k that cancels its antimatter components
//     at the interval end;
//   antimatter branch k: sqrt(x_k) Uaa^{-1} e_k, weights x >= 0 solving
//     the antimatter probability continuity at the interval start (matter
//     branch contributions subtracted so continuity is exact).
// Throws std::runtime_error on an ill-conditioned antimatter block; a
// negative weight solution signals the end of time (reported through
// antisymmetric_cycle, or as std::domain_error when called directly).
BranchMixture branch_boundary_solve(const EvolutionOperator& op, const Eigen::VectorXd& p,
                                    double t_begin, IntervalDiagnostics* diag = nullptr);

// Matter decoheres at interval starts, antimatter recoheres at interval
// ends. Terminates early with an EndOfTime event when the weight solve
// leaves the nonnegative cone.
MicroResult antisymmetric_cycle(const SystemSpec& sys, const Eigen::VectorXd& p0,
                                const CycleConfig& cfg);

struct ComparisonReport {
    double max_abs_err = 0.0;
    double err_at_end = 0.0;
    int samples_compared = 0;
};

// Entrywise comparison of two trajectories on matching time grids (grid
// mismatch throws std::invalid_argument). Compares the overlapping prefix
// when one run terminated early.
ComparisonReport compare_to_master(const Trajectory& micro, const Trajectory& ode,
                                   double grid_tol = 1e-9);

// Least-squares slope of log(err) against log(lambda), for discrepancy
// scaling sweeps.
double fit_log_slope(const std::vector<double>& lambdas, const std::vector<double>& errs);

} // namespace pme
