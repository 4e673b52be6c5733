// propagator.hpp -- finite-interval evolution operators: exact matrix
// exponential via Hermitian eigendecomposition, and the truncated
// perturbative expansion built from the q1/q2 kernels.

#pragma once

#include <Eigen/Dense>

#include "pme/system.hpp"

namespace pme {

enum class PropagatorMode { Exact, Perturbative };

struct EvolutionOperator {
    Eigen::MatrixXcd U;    // 2n x 2n
    double dt = 0.0;
    PropagatorMode mode = PropagatorMode::Exact;
    int order = 0;         // meaningful for Perturbative: 0, 1 or 2

    int dim() const { return static_cast<int>(U.rows()); }
};

// U = exp(-i (H0 + lambda V) dt). dt may be negative (backward evolution);
// U(-dt) = U(dt)^dagger. Throws std::runtime_error if the eigensolver fails.
EvolutionOperator exact_propagator(const SystemSpec& sys, double dt);

// Truncated expansion:
//   order 0: diag(exp(-i eps_j dt))
//   order 1: adds off-diagonal -i lambda V_jk q1_jk exp(-i (eps_j+eps_k) dt / 2)
//   order 2: multiplies the diagonal by (1 - lambda^2 sum_{k!=j} |V_jk|^2 q2_jk)
// Off-diagonal second-order terms are not represented.
EvolutionOperator perturbative_propagator(const SystemSpec& sys, double dt, int order);

// max-norm of U^dagger U - I.
double unitarity_defect(const EvolutionOperator& op);

} // namespace pme
