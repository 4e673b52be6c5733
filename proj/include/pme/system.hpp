// system.hpp -- quantum system description: spectrum, interaction matrix,
// matter/antimatter labeling, and CP/CPT symmetry construction and checks.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "pme/indexing.hpp"

namespace pme {

enum class SymmetryClass { None, CP, CPT, Both };

std::string to_string(SymmetryClass c);
SymmetryClass symmetry_from_string(const std::string& name);

// A finite system of 2n energy eigenstates split evenly into antimatter
// (slots [0,n)) and matter (slots [n,2n)). The Hamiltonian is
// diag(energies) + lambda * V with V Hermitian, zero-diagonal and
// dimensionless; lambda is kept separate so perturbative order bookkeeping
// stays explicit. Units: hbar = 1, energies are angular frequencies.
struct SystemSpec {
    int n = 0;                    // pair count; 2n states
    Eigen::VectorXd energies;     // length 2n, storage order -n..-1,+1..+n
    Eigen::MatrixXcd V;           // 2n x 2n interaction shape
    double lambda = 0.0;          // small coupling scale
    Eigen::VectorXcd phases;      // unit-modulus alpha_j per state
    SymmetryClass symmetry = SymmetryClass::None;
    std::vector<std::string> warnings;  // non-fatal validator notes

    int dim() const { return 2 * n; }
    double max_abs_energy() const { return energies.cwiseAbs().maxCoeff(); }
};

struct InvarianceReport {
    bool pass = false;
    double max_violation = 0.0;
    int worst_j = 0;     // signed labels of the worst entry
    int worst_k = 0;
    std::string detail;
};

// Entrywise validation tolerance shared by build_system and the invariance
// checks.
inline constexpr double kValidationTol = 1e-12;

// Validates and assembles a SystemSpec. Throws std::invalid_argument naming
// the worst offending entry when V is non-Hermitian, has a nonzero diagonal,
// a phase is off the unit circle, or a claimed symmetry is violated.
// Warns (non-fatal) when lambda > 0.1.
SystemSpec build_system(int n,
                        Eigen::VectorXd energies,
                        Eigen::MatrixXcd V,
                        double lambda,
                        Eigen::VectorXcd phases = {},
                        SymmetryClass symmetry = SymmetryClass::None);

// Deterministic random system for a given 64-bit seed. Energies take
// shell_count distinct shared values so that exact on-shell pairs exist and
// rates do not vanish; V starts from iid complex Gaussian entries, is
// Hermitized, diagonal-zeroed, then projected onto the requested symmetry
// class. Phases default to 1.
SystemSpec random_system(int n,
                         SymmetryClass symmetry,
                         double lambda,
                         int shell_count,
                         std::uint64_t seed);

// Checks the CP or CPT constraint chain (energy pairing plus the phased
// entrywise relation on V) without throwing; cls must be CP or CPT.
InvarianceReport check_invariance(const SystemSpec& sys, SymmetryClass cls);

// Index-negated, phase-adjusted image of the system:
// energies'_j = energies_{-j}, V'_jk = conj(alpha_j) alpha_k V_{-j,-k}.
// With unit phases this is an involution.
SystemSpec cp_transform(const SystemSpec& sys);

} // namespace pme
