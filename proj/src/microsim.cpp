#include "pme/microsim.hpp"

#include <cmath>
#include <stdexcept>

namespace pme {

Eigen::VectorXd BranchMixture::probabilities() const {
    return branches.cwiseAbs2().rowwise().sum();
}

CycleConfig make_cycle_config(const SystemSpec& sys, double tau_d, int n_cycles,
                              PropagatorMode mode) {
    if (!(tau_d > 0.0)) throw std::invalid_argument("tau_d must be positive");
    if (n_cycles < 1) throw std::invalid_argument("n_cycles must be >= 1");
    CycleConfig cfg;
    cfg.tau_d = tau_d;
    cfg.n_cycles = n_cycles;
    cfg.propagator = mode;

    const double eps_max = sys.max_abs_energy();
    if (eps_max > 0.0 && tau_d * eps_max < 10.0) {
        cfg.warnings.push_back("tau_d * max|eps| = " + std::to_string(tau_d * eps_max) +
                               " < 10: decoherence interval approaches the fast scale tau_0");
    }
    const double v_max = sys.V.cwiseAbs().maxCoeff();
    if (tau_d * sys.lambda * v_max > 0.1) {
        cfg.warnings.push_back("tau_d * lambda * max|V| = " +
                               std::to_string(tau_d * sys.lambda * v_max) +
                               " > 0.1: decoherence interval approaches the interaction scale tau_1");
    }
    return cfg;
}

BranchMixture decohere(const Eigen::VectorXd& p, double t_begin, double t_end) {
    const double total = p.sum();
    if (std::abs(total - 1.0) > 1e-9 || p.minCoeff() < -1e-12) {
        throw std::invalid_argument("decohere: probabilities must form a distribution (sum = " +
                                    std::to_string(total) + ")");
    }
    const int d = static_cast<int>(p.size());
    BranchMixture mix;
    mix.branches = Eigen::MatrixXcd::Zero(d, d);
    for (int k = 0; k < d; ++k) mix.branches(k, k) = std::sqrt(std::max(p(k), 0.0));
    mix.t_begin = t_begin;
    mix.t_end = t_end;
    return mix;
}

namespace {

EvolutionOperator make_propagator(const SystemSpec& sys, double dt, PropagatorMode mode) {
    return mode == PropagatorMode::Exact ? exact_propagator(sys, dt)
                                         : perturbative_propagator(sys, dt, 2);
}

void record_micro_sample(Trajectory& traj, double t, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& energies, const Eigen::VectorXd& cprime) {
    traj.samples.push_back({t, p, entropy(p, cprime), energy(p, energies)});
    traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(p.sum() - 1.0));
}

// Interval-independent pieces of the antisymmetric boundary-value problem.
// The propagator is fixed across cycles, so the antimatter-block inverse and
// the weight-system factorization are shared.
struct AntisymmetricSolver {
    int n = 0;
    double dt = 0.0;
    double cond_Uaa = 0.0;
    Eigen::MatrixXcd Uaa_inv;
    Eigen::MatrixXcd matter_amp;   // -Uaa^{-1} Uam, column per matter branch
    Eigen::PartialPivLU<Eigen::MatrixXd> weight_lu;

    explicit AntisymmetricSolver(const EvolutionOperator& op) {
        const int d = op.dim();
        n = d / 2;
        dt = op.dt;
        const Eigen::MatrixXcd Uaa = op.U.topLeftCorner(n, n);
        const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Uaa);
        cond_Uaa = svd.singularValues()(0) / svd.singularValues()(n - 1);
        if (!std::isfinite(cond_Uaa) || cond_Uaa > 1e8) {
            throw std::runtime_error(
                "antisymmetric boundary solve: antimatter block is ill-conditioned (cond = " +
                std::to_string(cond_Uaa) + ")");
        }
        Uaa_inv = Uaa.inverse();
        matter_amp = -Uaa_inv * op.U.topRightCorner(n, n);
        weight_lu.compute(Uaa_inv.cwiseAbs2());
    }

    struct Outcome {
        BranchMixture mix;
        Eigen::VectorXd weights;
        bool feasible = true;
        int failed_slot = 0;
    };

    Outcome solve(const Eigen::VectorXd& p, double t_begin, IntervalDiagnostics* diag) const {
        const int d = 2 * n;
        Outcome out;
        out.mix.branches = Eigen::MatrixXcd::Zero(d, d);
        out.mix.t_begin = t_begin;
        out.mix.t_end = t_begin + dt;

        // Matter branches: sqrt(p_k) e_k plus the antimatter amplitude that
        // cancels their antimatter components at the interval end.
        for (int k = 0; k < n; ++k) {
            const int slot = n + k;
            const double amp = std::sqrt(std::max(p(slot), 0.0));
            out.mix.branches(slot, slot) = amp;
            out.mix.branches.col(slot).head(n) = matter_amp.col(k) * amp;
        }

        // Antimatter branch weights from probability continuity at the
        // interval start; matter-branch contributions are subtracted so the
        // mixture reproduces p exactly.
        Eigen::VectorXd rhs(n);
        for (int j = 0; j < n; ++j) {
            rhs(j) = p(j) - out.mix.branches.row(j).tail(n).cwiseAbs2().sum();
        }
        out.weights = weight_lu.solve(rhs);

        if (diag) {
            diag->cond_Uaa = cond_Uaa;
            diag->weight_min = out.weights.minCoeff();
        }
        int min_slot = 0;
        if (out.weights.minCoeff(&min_slot) < -1e-12) {
            out.feasible = false;
            out.failed_slot = min_slot;
            return out;
        }

        for (int k = 0; k < n; ++k) {
            out.mix.branches.col(k).head(n) =
                Uaa_inv.col(k) * std::sqrt(std::max(out.weights(k), 0.0));
        }
        return out;
    }
};

} // namespace

MicroResult symmetric_cycle(const SystemSpec& sys, const Eigen::VectorXd& p0,
                            const CycleConfig& cfg) {
    const int d = sys.dim();
    if (p0.size() != d) throw std::invalid_argument("p0 length does not match system dimension");
    const EvolutionOperator op = make_propagator(sys, cfg.tau_d, cfg.propagator);
    const Eigen::VectorXd cprime = cprime_vector(PmeVariant::SPME, sys.n);

    MicroResult res;
    res.trajectory.variant = PmeVariant::SPME;
    Eigen::VectorXd p = p0;
    record_micro_sample(res.trajectory, 0.0, p, sys.energies, cprime);
    decohere(p0, 0.0, cfg.tau_d);   // validate the entry distribution once

    // Per cycle the mixture is diag(sqrt(p)) evolved by U; the projection is
    // not re-validated mid-run since the perturbative mode drifts the norm
    // at fourth order.
    Eigen::MatrixXcd branches(d, d);
    for (int cycle = 0; cycle < cfg.n_cycles; ++cycle) {
        branches.setZero();
        for (int k = 0; k < d; ++k) branches(k, k) = std::sqrt(std::max(p(k), 0.0));
        branches = op.U * branches;
        p = branches.cwiseAbs2().rowwise().sum();
        record_micro_sample(res.trajectory, (cycle + 1) * cfg.tau_d, p, sys.energies, cprime);
    }
    return res;
}

BranchMixture branch_boundary_solve(const EvolutionOperator& op, const Eigen::VectorXd& p,
                                    double t_begin, IntervalDiagnostics* diag) {
    if (p.size() != op.dim()) {
        throw std::invalid_argument("p length does not match propagator dimension");
    }
    const AntisymmetricSolver solver(op);
    auto out = solver.solve(p, t_begin, diag);
    if (!out.feasible) {
        throw std::domain_error("branch_boundary_solve: antimatter branch weights left the "
                                "nonnegative cone (min = " + std::to_string(out.weights.minCoeff()) +
                                "); the antisymmetric dynamics reached their end of time");
    }
    if (diag) {
        // Residuals of the boundary conditions at both interval ends.
        const int n = solver.n;
        const Eigen::MatrixXcd evolved = op.U * out.mix.branches;
        double r = evolved.topRightCorner(n, n).cwiseAbs().maxCoeff();   // matter branches, end
        r = std::max(r, out.mix.branches.bottomLeftCorner(n, n).cwiseAbs().maxCoeff());
        Eigen::MatrixXcd anti_end = evolved.topLeftCorner(n, n);
        for (int k = 0; k < n; ++k) anti_end(k, k) -= std::sqrt(std::max(out.weights(k), 0.0));
        r = std::max(r, anti_end.cwiseAbs().maxCoeff());
        diag->bc_residual = r;
    }
    return out.mix;
}

MicroResult antisymmetric_cycle(const SystemSpec& sys, const Eigen::VectorXd& p0,
                                const CycleConfig& cfg) {
    const int d = sys.dim();
    if (p0.size() != d) throw std::invalid_argument("p0 length does not match system dimension");
    const EvolutionOperator op = make_propagator(sys, cfg.tau_d, cfg.propagator);
    const AntisymmetricSolver solver(op);
    const Eigen::VectorXd cprime = cprime_vector(PmeVariant::APME, sys.n);

    MicroResult res;
    res.trajectory.variant = PmeVariant::APME;
    Eigen::VectorXd p = p0;
    record_micro_sample(res.trajectory, 0.0, p, sys.energies, cprime);

    for (int cycle = 0; cycle < cfg.n_cycles; ++cycle) {
        const double t = cycle * cfg.tau_d;
        IntervalDiagnostics diag;
        diag.interval = cycle;
        auto out = solver.solve(p, t, &diag);
        if (!out.feasible) {
            // The weight solve left the cone: the antisymmetric process
            // cannot continue past this decoherence event.
            res.trajectory.events.push_back(
                {EventKind::EndOfTime, t, to_signed(out.failed_slot, sys.n)});
            res.diagnostics.push_back(diag);
            return res;
        }
        const Eigen::MatrixXcd evolved = op.U * out.mix.branches;
        {
            const int n = sys.n;
            double r = evolved.topRightCorner(n, n).cwiseAbs().maxCoeff();
            r = std::max(r, out.mix.branches.bottomLeftCorner(n, n).cwiseAbs().maxCoeff());
            Eigen::MatrixXcd anti_end = evolved.topLeftCorner(n, n);
            for (int k = 0; k < n; ++k) anti_end(k, k) -= std::sqrt(std::max(out.weights(k), 0.0));
            diag.bc_residual = std::max(r, anti_end.cwiseAbs().maxCoeff());
        }
        res.diagnostics.push_back(diag);
        p = evolved.cwiseAbs2().rowwise().sum();
        record_micro_sample(res.trajectory, (cycle + 1) * cfg.tau_d, p, sys.energies, cprime);
    }
    return res;
}

ComparisonReport compare_to_master(const Trajectory& micro, const Trajectory& ode,
                                   double grid_tol) {
    const std::size_t count = std::min(micro.samples.size(), ode.samples.size());
    if (count == 0) throw std::invalid_argument("compare_to_master: empty trajectory");
    ComparisonReport rep;
    rep.samples_compared = static_cast<int>(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto& a = micro.samples[i];
        const auto& b = ode.samples[i];
        if (std::abs(a.t - b.t) > grid_tol) {
            throw std::invalid_argument("compare_to_master: time grids differ at sample " +
                                        std::to_string(i) + " (" + std::to_string(a.t) + " vs " +
                                        std::to_string(b.t) + ")");
        }
        const double err = (a.p - b.p).cwiseAbs().maxCoeff();
        rep.max_abs_err = std::max(rep.max_abs_err, err);
        if (i == count - 1) rep.err_at_end = err;
    }
    return rep;
}

double fit_log_slope(const std::vector<double>& lambdas, const std::vector<double>& errs) {
    if (lambdas.size() != errs.size() || lambdas.size() < 2) {
        throw std::invalid_argument("fit_log_slope needs matching lists of at least two points");
    }
    const int m = static_cast<int>(lambdas.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        const double x = std::log(lambdas[i]);
        const double y = std::log(errs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

} // namespace pme
