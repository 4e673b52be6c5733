// kernels.hpp -- finite-interval transition kernels of second-order
// perturbation theory. All three have removable singularities at equal
// energies; below |de*dt| = 1e-6 they switch to series forms to avoid
// catastrophic cancellation (degenerate shells make de = 0 the common case).

#pragma once

#include <cmath>
#include <complex>

namespace pme {

inline constexpr double kKernelSeriesCut = 1e-6;

// First-order kernel: exp(-i*de*dt/2) * int_0^dt exp(i*t'*de) dt'
//                   = sin(de*dt/2) / (de/2). Real-valued; limit dt at de = 0.
inline std::complex<double> q1_kernel(double eps_j, double eps_k, double dt) {
    const double de = eps_j - eps_k;
    const double x = de * dt;
    if (std::abs(x) < kKernelSeriesCut) {
        // dt * (1 - (x/2)^2/6 + ...)
        return {dt * (1.0 - x * x / 24.0), 0.0};
    }
    return {2.0 * std::sin(0.5 * x) / de, 0.0};
}

// Second-order diagonal kernel: (1 + i*de*dt - exp(i*de*dt)) / de^2,
// limit dt^2/2 at de = 0. Satisfies 2 Re(q2) = |q1|^2 identically.
// The real part is evaluated as 2 sin^2(x/2) rather than 1 - cos(x) and the
// x - sin(x) difference switches to its series below |x| = 1e-2; both forms
// cancel catastrophically near the degenerate point otherwise.
inline std::complex<double> q2_kernel(double eps_j, double eps_k, double dt) {
    const double de = eps_j - eps_k;
    const double x = de * dt;
    double re, im;
    if (std::abs(x) < kKernelSeriesCut) {
        re = dt * dt * (0.5 - x * x / 24.0);
    } else {
        const double s = std::sin(0.5 * x);
        re = 2.0 * s * s / (de * de);
    }
    if (std::abs(x) < 1e-2) {
        const double x2 = x * x;
        im = dt * dt * x * (1.0 / 6.0 - x2 / 120.0 + x2 * x2 / 5040.0);
    } else {
        im = (x - std::sin(x)) / (de * de);
    }
    return {re, im};
}

// Spectral window D(de, dt) = |q1|^2/dt = 2 Re(q2)/dt
//                           = 2 sin^2(de*dt/2) / (de^2 * dt / 2).
// Nonnegative, even in de, limit dt at de = 0; tends to 2*pi*delta(de) as
// dt -> infinity.
inline double d_kernel(double de, double dt) {
    const double x = de * dt;
    if (std::abs(x) < kKernelSeriesCut) {
        return dt * (1.0 - x * x / 12.0);
    }
    const double s = std::sin(0.5 * x);
    return 4.0 * s * s / (de * de * dt);
}

} // namespace pme
