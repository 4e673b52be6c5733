#include "pme/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pme {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

} // namespace

double entropy(const Eigen::VectorXd& p, const Eigen::VectorXd& cprime) {
    double s = 0.0;
    for (int i = 0; i < p.size(); ++i) s -= cprime(i) * xlogx(p(i));
    return s;
}

double entropy(const Eigen::VectorXd& p, PmeVariant variant) {
    return entropy(p, cprime_vector(variant, static_cast<int>(p.size()) / 2));
}

std::pair<double, double> entropy_split(const Eigen::VectorXd& p) {
    const int n = static_cast<int>(p.size()) / 2;
    double s_a = 0.0, s_m = 0.0;
    for (int i = 0; i < n; ++i) s_a -= xlogx(p(i));
    for (int i = n; i < 2 * n; ++i) s_m -= xlogx(p(i));
    return {s_m, s_a};
}

double energy(const Eigen::VectorXd& p, const Eigen::VectorXd& energies) {
    return energies.dot(p);
}

double antimatter_total(const Eigen::VectorXd& p) {
    return p.head(p.size() / 2).sum();
}

Eigen::MatrixXd entropy_production_terms(const Eigen::VectorXd& p, const Eigen::MatrixXd& w,
                                         const Eigen::VectorXd& cprime) {
    const int d = static_cast<int>(p.size());
    Eigen::MatrixXd terms = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
            if (j == k) continue;
            if (!(p(j) > 0.0) || !(p(k) > 0.0)) continue;
            terms(j, k) = 0.5 * w(j, k) *
                          (cprime(j) * std::log(p(k)) - cprime(k) * std::log(p(j))) *
                          (cprime(k) * p(k) - cprime(j) * p(j));
        }
    }
    return terms;
}

double entropy_production(const Eigen::VectorXd& p, const Eigen::MatrixXd& w,
                          const Eigen::VectorXd& cprime) {
    return entropy_production_terms(p, w, cprime).sum();
}

namespace {

// One classical RK4 step; GenF returns the generator matrix (by const
// reference on the constant-matrix fast path).
template <typename GenF>
Eigen::VectorXd rk4_step(GenF&& gen_fn, const Eigen::VectorXd& p, double t, double h) {
    const Eigen::VectorXd k1 = gen_fn(t) * p;
    const Eigen::VectorXd k2 = gen_fn(t + 0.5 * h) * (p + 0.5 * h * k1);
    const Eigen::VectorXd k3 = gen_fn(t + 0.5 * h) * (p + 0.5 * h * k2);
    const Eigen::VectorXd k4 = gen_fn(t + h) * (p + h * k3);
    return p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct EventLocation {
    double theta = 0.0;   // sub-step size at which the crossing sits
    Eigen::VectorXd p;
    int slot = 0;
};

// Bisection for the earliest zero crossing inside a step of size h taken
// from (t, p): shrink theta until the smallest component lies in
// [0, probability_tol].
template <typename GenF>
EventLocation locate_crossing(GenF&& gen_fn, const Eigen::VectorXd& p, double t, double h,
                              double probability_tol) {
    double lo = 0.0, hi = h;
    Eigen::VectorXd p_lo = p;
    for (int iter = 0; iter < 200; ++iter) {
        int slot = 0;
        const double lo_min = p_lo.minCoeff(&slot);
        if (lo_min >= 0.0 && lo_min <= probability_tol) {
            return {lo, p_lo, slot};
        }
        const double mid = 0.5 * (lo + hi);
        const Eigen::VectorXd p_mid = rk4_step(gen_fn, p, t, mid);
        if (p_mid.minCoeff() < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            p_lo = p_mid;
        }
    }
    throw std::runtime_error("event location failed to converge: crossing bracket [" +
                             std::to_string(lo) + ", " + std::to_string(hi) + "] at t = " +
                             std::to_string(t));
}

template <typename GenF>
Trajectory integrate_impl(GenF&& gen_fn, PmeVariant variant, const Eigen::VectorXd& energies,
                          const Eigen::VectorXd& p0, double t0, double t1, double step_h,
                          const IntegrateOptions& opts) {
    if (!(step_h > 0.0)) throw std::invalid_argument("step_h must be positive");
    const double norm_err = std::abs(p0.sum() - 1.0);
    if (norm_err > opts.simplex_tol || p0.minCoeff() < -opts.simplex_tol) {
        throw std::invalid_argument("p0 outside the probability simplex (|sum-1| = " +
                                    std::to_string(norm_err) + ", min = " +
                                    std::to_string(p0.minCoeff()) + ")");
    }

    const bool forward = t1 >= t0;
    const double h = forward ? step_h : -step_h;
    const int n = static_cast<int>(p0.size()) / 2;
    const Eigen::VectorXd cprime = cprime_vector(variant, n);

    Trajectory traj;
    traj.variant = variant;
    auto record = [&](double t, const Eigen::VectorXd& p) {
        traj.samples.push_back({t, p, entropy(p, cprime), energy(p, energies)});
        traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(p.sum() - 1.0));
    };

    double t = t0;
    Eigen::VectorXd p = p0.cwiseMax(0.0);   // sanitize within-tolerance negatives
    record(t, p);

    // Immediate boundary: a zero component pulled negative right at t0.
    {
        int slot = 0;
        const double pmin = p.minCoeff(&slot);
        if (pmin <= opts.event_probability_tol &&
            (gen_fn(t0) * p)(slot) * (forward ? 1.0 : -1.0) < 0.0) {
            traj.events.push_back({forward ? EventKind::EndOfTime : EventKind::BeginningOfTime, t0,
                                   to_signed(slot, n)});
            return traj;
        }
    }

    const double span = std::abs(t1 - t0);
    const long long total_steps = static_cast<long long>(std::ceil(span / step_h - 1e-12));
    int since_sample = 0;
    for (long long step = 0; step < total_steps; ++step) {
        // Track time multiplicatively so long runs stay on-grid to round-off.
        double t_next = t0 + static_cast<double>(step + 1) * h;
        if (forward ? (t_next > t1) : (t_next < t1)) t_next = t1;
        if (step == total_steps - 1) t_next = t1;
        const double h_step = t_next - t;
        if (h_step == 0.0) break;

        Eigen::VectorXd p_next = rk4_step(gen_fn, p, t, h_step);
        if (p_next.minCoeff() < 0.0) {
            const EventLocation ev =
                locate_crossing(gen_fn, p, t, h_step, opts.event_probability_tol);
            record(t + ev.theta, ev.p);
            traj.events.push_back({forward ? EventKind::EndOfTime : EventKind::BeginningOfTime,
                                   t + ev.theta, to_signed(ev.slot, n)});
            return traj;
        }
        p = std::move(p_next);
        t = t_next;
        if (++since_sample == opts.sample_stride || step == total_steps - 1) {
            record(t, p);
            since_sample = 0;
        }
    }
    return traj;
}

} // namespace

Trajectory integrate(const GeneratorFn& gen_fn, PmeVariant variant,
                     const Eigen::VectorXd& energies, const Eigen::VectorXd& p0, double t0,
                     double t1, double step_h, const IntegrateOptions& opts) {
    return integrate_impl(gen_fn, variant, energies, p0, t0, t1, step_h, opts);
}

Trajectory integrate(const GeneratorMatrix& gen, const Eigen::VectorXd& energies,
                     const Eigen::VectorXd& p0, double t0, double t1, double step_h,
                     const IntegrateOptions& opts) {
    if (gen.dim() != p0.size()) {
        throw std::invalid_argument("generator dimension " + std::to_string(gen.dim()) +
                                    " does not match p0 length " + std::to_string(p0.size()));
    }
    const Eigen::MatrixXd& A = gen.A;
    auto fixed = [&A](double) -> const Eigen::MatrixXd& { return A; };
    return integrate_impl(fixed, gen.variant, energies, p0, t0, t1, step_h, opts);
}

Eigen::Vector2d two_state_solution(const Eigen::Vector2d& p0, const OmegaFn& omega,
                                   PmeVariant variant, double t) {
    const double om = omega(t);
    const double p_anti0 = p0(0), p_matter0 = p0(1);
    Eigen::Vector2d p;
    if (variant == PmeVariant::SPME) {
        const double delta = (p_matter0 - p_anti0) * std::exp(-2.0 * om);
        p(1) = 0.5 * (1.0 + delta);
        p(0) = 0.5 * (1.0 - delta);
    } else {
        if (om > p_anti0 + 1e-12) {
            throw std::domain_error(
                "two-state APME solution is past its end of time: Omega = " + std::to_string(om) +
                " exceeds the initial antimatter probability " + std::to_string(p_anti0));
        }
        p(1) = p_matter0 + om;
        p(0) = p_anti0 - om;
    }
    return p;
}

Eigen::Vector2d two_state_solution(const Eigen::Vector2d& p0, double w, PmeVariant variant,
                                   double t, double t0) {
    return two_state_solution(p0, [w, t0](double tt) { return w * (tt - t0); }, variant, t);
}

double default_step(const GeneratorMatrix& gen) {
    const double a_max = gen.A.cwiseAbs().maxCoeff();
    if (a_max <= 0.0) return 1.0;
    return 1e-3 / a_max;
}

EquilibriumResult equilibrium(const GeneratorMatrix& gen, const Eigen::VectorXd& energies,
                              const Eigen::VectorXd& p0, double antimatter_tol) {
    const int d = gen.dim();
    EquilibriumResult res;

    if (gen.variant == PmeVariant::SPME) {
        // Kernel projection: uniform over each connected interaction class,
        // weighted by the class's initial probability mass.
        const std::vector<int> cls = connected_classes(gen.A);
        const int n_classes = *std::max_element(cls.begin(), cls.end()) + 1;
        std::vector<double> mass(n_classes, 0.0);
        std::vector<int> size(n_classes, 0);
        for (int i = 0; i < d; ++i) {
            mass[cls[i]] += p0(i);
            size[cls[i]] += 1;
        }
        Eigen::VectorXd p_eq(d);
        for (int i = 0; i < d; ++i) p_eq(i) = mass[cls[i]] / size[cls[i]];
        res.interior = true;
        res.state = {p_eq, 0.0};
        res.summary = "microcanonical equilibrium: uniform over " + std::to_string(n_classes) +
                      " connected class(es)";
        return res;
    }

    // APME: with matter-antimatter coupling there is no interior fixed point;
    // run the dynamics until antimatter exhaustion or a boundary event.
    const double a_max = gen.A.cwiseAbs().maxCoeff();
    if (a_max <= 0.0) {
        res.interior = true;
        res.state = {p0, 0.0};
        res.summary = "no interactions: probabilities frozen";
        return res;
    }
    const double h = default_step(gen);
    const double chunk = 10.0 / a_max;
    double t = 0.0;
    Eigen::VectorXd p = p0;
    double prev_antimatter = antimatter_total(p);
    for (int round = 0; round < 100000; ++round) {
        Trajectory traj = integrate(gen, energies, p, t, t + chunk, h, {.sample_stride = 1 << 20});
        p = traj.back().p;
        t = traj.back().t;
        if (!traj.events.empty()) {
            res.interior = false;
            res.state = {p, t};
            res.event = traj.events.front();
            res.summary = "no interior fixed point: boundary event at t = " +
                          std::to_string(traj.events.front().t_event) + " (state " +
                          std::to_string(traj.events.front().state) + "), antimatter total " +
                          std::to_string(antimatter_total(p));
            return res;
        }
        const double anti = antimatter_total(p);
        if (anti < antimatter_tol) {
            res.interior = false;
            res.state = {p, t};
            res.summary = "no interior fixed point: antimatter total driven to " +
                          std::to_string(anti) + " by t = " + std::to_string(t);
            return res;
        }
        if (std::abs(prev_antimatter - anti) < 1e-15 * prev_antimatter) {
            res.interior = false;
            res.state = {p, t};
            res.summary = "antimatter decay stalled at total " + std::to_string(anti) +
                          " (decoupled antimatter states remain)";
            return res;
        }
        prev_antimatter = anti;
    }
    throw std::runtime_error("equilibrium: APME run did not terminate within the step budget");
}

} // namespace pme
