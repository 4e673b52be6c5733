#include "pme/propagator.hpp"

#include <complex>
#include <stdexcept>

#include "pme/kernels.hpp"

namespace pme {

EvolutionOperator exact_propagator(const SystemSpec& sys, double dt) {
    const int d = sys.dim();
    Eigen::MatrixXcd H = sys.lambda * sys.V;
    H.diagonal() += sys.energies.cast<std::complex<double>>();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(H);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("exact_propagator: eigendecomposition failed (dim " +
                                 std::to_string(d) + ", |H|_max " +
                                 std::to_string(H.cwiseAbs().maxCoeff()) + ")");
    }

    const std::complex<double> mi(0.0, -1.0);
    Eigen::VectorXcd phase(d);
    for (int i = 0; i < d; ++i) phase(i) = std::exp(mi * solver.eigenvalues()(i) * dt);

    EvolutionOperator op;
    op.U = solver.eigenvectors() * phase.asDiagonal() * solver.eigenvectors().adjoint();
    op.dt = dt;
    op.mode = PropagatorMode::Exact;
    return op;
}

EvolutionOperator perturbative_propagator(const SystemSpec& sys, double dt, int order) {
    if (order < 0 || order > 2) {
        throw std::invalid_argument("perturbative order must be 0, 1 or 2");
    }
    const int d = sys.dim();
    const std::complex<double> mi(0.0, -1.0);

    Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(d, d);
    for (int j = 0; j < d; ++j) U(j, j) = std::exp(mi * sys.energies(j) * dt);

    if (order >= 1) {
        for (int j = 0; j < d; ++j) {
            for (int k = 0; k < d; ++k) {
                if (j == k) continue;
                const std::complex<double> q1 = q1_kernel(sys.energies(j), sys.energies(k), dt);
                U(j, k) = mi * sys.lambda * sys.V(j, k) * q1 *
                          std::exp(mi * 0.5 * (sys.energies(j) + sys.energies(k)) * dt);
            }
        }
    }
    if (order == 2) {
        for (int j = 0; j < d; ++j) {
            std::complex<double> corr(0.0, 0.0);
            for (int k = 0; k < d; ++k) {
                if (j == k) continue;
                corr += std::norm(sys.V(j, k)) * q2_kernel(sys.energies(j), sys.energies(k), dt);
            }
            U(j, j) *= 1.0 - sys.lambda * sys.lambda * corr;
        }
    }

    EvolutionOperator op;
    op.U = std::move(U);
    op.dt = dt;
    op.mode = PropagatorMode::Perturbative;
    op.order = order;
    return op;
}

double unitarity_defect(const EvolutionOperator& op) {
    const int d = op.dim();
    const Eigen::MatrixXcd defect =
        op.U.adjoint() * op.U - Eigen::MatrixXcd::Identity(d, d);
    return defect.cwiseAbs().maxCoeff();
}

} // namespace pme
