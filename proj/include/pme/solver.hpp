// solver.hpp -- master-equation integration with boundary-of-time event
// detection, entropy/energy tracking, two-state analytic solutions and
// equilibrium characterization.

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pme/kinetics.hpp"

namespace pme {

struct ProbabilityState {
    Eigen::VectorXd p;   // length 2n, storage order
    double t = 0.0;
};

enum class EventKind { BeginningOfTime, EndOfTime };

// Records the trajectory boundary where a probability reached zero and the
// equations stop being extendable.
struct TimeBoundaryEvent {
    EventKind kind = EventKind::EndOfTime;
    double t_event = 0.0;
    int state = 0;       // signed label of the vanishing state
};

struct TrajectorySample {
    double t = 0.0;
    Eigen::VectorXd p;
    double S = 0.0;      // variant entropy
    double E = 0.0;      // sum eps_j p_j
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    std::vector<TimeBoundaryEvent> events;
    PmeVariant variant = PmeVariant::SPME;
    double max_norm_drift = 0.0;   // max |sum p - 1| observed along the run

    const TrajectorySample& front() const { return samples.front(); }
    const TrajectorySample& back() const { return samples.back(); }
};

// Variant entropy S = -sum_k C'_k p_k ln p_k with 0 ln 0 := 0.
// SPME counts all states positively; APME flips the antimatter signs.
double entropy(const Eigen::VectorXd& p, PmeVariant variant);
double entropy(const Eigen::VectorXd& p, const Eigen::VectorXd& cprime);

// Sector entropies (S_m, S_a), each -sum p ln p over its half. The variant
// entropies recombine as SPME = S_m + S_a, APME = S_m - S_a.
std::pair<double, double> entropy_split(const Eigen::VectorXd& p);

double energy(const Eigen::VectorXd& p, const Eigen::VectorXd& energies);

// Closed-form entropy production
//   1/2 sum_{j,k} w_jk (C'_j ln p_k - C'_k ln p_j)(C'_k p_k - C'_j p_j),
// each (j,k) term individually nonnegative for p > 0. Equals dS/dt exactly
// when sum_k C'_k p_k is conserved (always for SPME; for APME only without
// matter-antimatter coupling). In general
//   dS/dt = entropy_production - d/dt sum_k C'_k p_k.
double entropy_production(const Eigen::VectorXd& p, const Eigen::MatrixXd& w,
                          const Eigen::VectorXd& cprime);

// Matrix of the individual (j,k) production terms (zero diagonal).
Eigen::MatrixXd entropy_production_terms(const Eigen::VectorXd& p, const Eigen::MatrixXd& w,
                                         const Eigen::VectorXd& cprime);

struct IntegrateOptions {
    int sample_stride = 1;          // record every k-th accepted step
    double event_probability_tol = 1e-9;
    double simplex_tol = 1e-9;      // accepted deviation of p0 from the simplex
};

// Classical fixed-step RK4 on dp/dt = A p from t0 to t1 (t1 < t0 integrates
// backward). No renormalization is applied; the drift of sum p is monitored
// and reported on the trajectory. When a component crosses zero within a
// step the crossing is located by bisection to within event_probability_tol,
// the trajectory is truncated there and an event is recorded (EndOfTime
// forward, BeginningOfTime backward). step_h must be positive.
Trajectory integrate(const GeneratorMatrix& gen, const Eigen::VectorXd& energies,
                     const Eigen::VectorXd& p0, double t0, double t1, double step_h,
                     const IntegrateOptions& opts = {});

// Same integrator with a time-dependent generator evaluated at the RK4 stage
// times. The callback must return a matrix of fixed dimension.
using GeneratorFn = std::function<Eigen::MatrixXd(double t)>;
Trajectory integrate(const GeneratorFn& gen_fn, PmeVariant variant,
                     const Eigen::VectorXd& energies, const Eigen::VectorXd& p0,
                     double t0, double t1, double step_h, const IntegrateOptions& opts = {});

// Accumulated rate Omega(t) = int_{t0}^t w dt'.
using OmegaFn = std::function<double(double t)>;

// Closed-form two-state solutions, storage order (p_{-1}, p_{+1}):
//   SPME: p_{+-1} = (1 +- (p+0 - p-0) exp(-2 Omega)) / 2
//   APME: p_{+1} = p+0 + Omega, p_{-1} = p-0 - Omega, valid while p_{-1} >= 0.
// Throws std::domain_error past the end of time (Omega > p-0) for APME.
Eigen::Vector2d two_state_solution(const Eigen::Vector2d& p0, const OmegaFn& omega,
                                   PmeVariant variant, double t);
Eigen::Vector2d two_state_solution(const Eigen::Vector2d& p0, double w, PmeVariant variant,
                                   double t, double t0 = 0.0);

struct EquilibriumResult {
    bool interior = false;          // true: a fixed point inside the simplex
    ProbabilityState state;         // the fixed point, or the terminal state reached
    std::optional<TimeBoundaryEvent> event;
    std::string summary;
};

// SPME: the kernel projection -- uniform over each connected interaction
// class, weighted by the class's share of p0 (no integration involved).
// APME with matter-antimatter coupling has no interior fixed point; the
// dynamics are run until the antimatter total falls below antimatter_tol or
// a boundary event fires, and the terminal state is reported.
EquilibriumResult equilibrium(const GeneratorMatrix& gen, const Eigen::VectorXd& energies,
                              const Eigen::VectorXd& p0, double antimatter_tol = 1e-6);

// Default integration step 1e-3 / max|A| used when a caller passes none.
double default_step(const GeneratorMatrix& gen);

double antimatter_total(const Eigen::VectorXd& p);

} // namespace pme
