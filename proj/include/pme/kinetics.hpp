// kinetics.hpp -- kinetic coefficients w_j^k and the signed generators of the
// symmetric / antisymmetric master equations.

#pragma once

#include <Eigen/Dense>

#include <string>
#include <variant>
#include <vector>

#include "pme/system.hpp"

namespace pme {

enum class PmeVariant { SPME, APME };

std::string to_string(PmeVariant v);

// Rate construction modes. FiniteWindow keeps the sinc^2 spectral window at
// a physical decoherence interval dt. OnShell takes the long-window limit:
// rates 2*pi*lambda^2 |V_jk|^2 / eta_norm between states of the same energy
// shell, where shells are |de| <= eta groups closed under transitivity and
// eta_norm is a level-density surrogate (the limit window concentrates on
// exact shells, which a small discrete spectrum cannot normalize on its own).
struct FiniteWindow {
    double dt = 1.0;
};
struct OnShell {
    double eta = 1e-9;
    double eta_norm = 1.0;
};
using RateMode = std::variant<FiniteWindow, OnShell>;

// Symmetric nonnegative rates with zero column sums on the diagonal.
struct KineticMatrix {
    Eigen::MatrixXd w;   // 2n x 2n; w_jk = w_kj >= 0 off-diagonal
    RateMode mode;
    double lambda = 0.0;
    std::vector<std::string> warnings;

    int dim() const { return static_cast<int>(w.rows()); }
    int pair_count() const { return dim() / 2; }
};

// dp/dt = A p. SPME: A = w. APME: A_jk = C_j w_jk off-diagonal with the
// column-sum-zero diagonal; not symmetric, but |A_jk| = |A_kj|.
struct GeneratorMatrix {
    Eigen::MatrixXd A;           // 2n x 2n, zero column sums
    PmeVariant variant = PmeVariant::SPME;
    Eigen::VectorXd cprime;      // per-slot sign: SPME all +1, APME -1 on antimatter

    int dim() const { return static_cast<int>(A.rows()); }
    int pair_count() const { return dim() / 2; }
};

struct BalanceReport {
    bool pass = false;
    double max_asymmetry = 0.0;
    double min_off_diagonal = 0.0;
    int worst_j = 0;   // signed labels
    int worst_k = 0;
    std::string detail;
};

struct PmeInvarianceReport {
    bool pass = false;
    double max_energy_violation = 0.0;
    double max_rate_violation = 0.0;
    std::string detail;
};

Eigen::VectorXd cprime_vector(PmeVariant variant, int n);

// Builds the rate matrix for the requested mode. Warns (non-fatal) when a
// FiniteWindow dt is inside the Zeno regime dt < 10 / max|eps|.
KineticMatrix kinetic_coefficients(const SystemSpec& sys, const RateMode& mode);

GeneratorMatrix generator(const KineticMatrix& w, PmeVariant variant);

// Detailed balance: symmetry and off-diagonal nonnegativity of a rate matrix.
BalanceReport detailed_balance_check(const Eigen::MatrixXd& w);
inline BalanceReport detailed_balance_check(const KineticMatrix& km) {
    return detailed_balance_check(km.w);
}

// The computable content of the master-equation invariance statement:
// eps_j = eps_{-j} and w_jk = w_{-j,-k} entrywise within 1e-12. Requires the
// system to claim CP, CPT or both.
PmeInvarianceReport pme_invariance_check(const SystemSpec& sys, const KineticMatrix& km);

// Transitive on-shell grouping: slots whose energies chain within eta belong
// to one shell. Returns a shell id per slot.
std::vector<int> shell_assignment(const Eigen::VectorXd& energies, double eta);

// Connected interaction classes of a generator: components of the graph with
// edges where A_jk != 0 off-diagonal.
std::vector<int> connected_classes(const Eigen::MatrixXd& A);

} // namespace pme
