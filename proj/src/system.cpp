#include "pme/system.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pme {

std::string to_string(SymmetryClass c) {
    switch (c) {
        case SymmetryClass::None: return "none";
        case SymmetryClass::CP: return "cp";
        case SymmetryClass::CPT: return "cpt";
        case SymmetryClass::Both: return "both";
    }
    return "none";
}

SymmetryClass symmetry_from_string(const std::string& name) {
    std::string s;
    s.reserve(name.size());
    for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s == "none") return SymmetryClass::None;
    if (s == "cp") return SymmetryClass::CP;
    if (s == "cpt") return SymmetryClass::CPT;
    if (s == "both") return SymmetryClass::Both;
    throw std::invalid_argument("unknown symmetry class '" + name + "' (expected none|cp|cpt|both)");
}

namespace {

bool includes_cp(SymmetryClass c) { return c == SymmetryClass::CP || c == SymmetryClass::Both; }
bool includes_cpt(SymmetryClass c) { return c == SymmetryClass::CPT || c == SymmetryClass::Both; }

std::string entry_name(int s_row, int s_col, int n) {
    return "(" + slot_label(s_row, n) + "," + slot_label(s_col, n) + ")";
}

// Worst-entry scan of |M| returning (value, row, col).
struct WorstEntry {
    double value = 0.0;
    int row = 0;
    int col = 0;
};

WorstEntry max_abs_entry(const Eigen::MatrixXcd& M) {
    WorstEntry w;
    for (int r = 0; r < M.rows(); ++r) {
        for (int c = 0; c < M.cols(); ++c) {
            const double v = std::abs(M(r, c));
            if (v > w.value) w = {v, r, c};
        }
    }
    return w;
}

InvarianceReport check_invariance_impl(const SystemSpec& sys, SymmetryClass cls) {
    const int n = sys.n;
    const int d = sys.dim();
    InvarianceReport rep;
    rep.pass = true;

    double worst = 0.0;
    int wj = 1, wk = 1;
    std::string what;

    // Energy pairing eps_j = eps_{-j} is shared by both constraints.
    for (int s = 0; s < n; ++s) {
        const double v = std::abs(sys.energies(s) - sys.energies(negate_slot(s, n)));
        if (v > worst) {
            worst = v;
            wj = to_signed(s, n);
            wk = wj;
            what = "energy pairing eps_j != eps_-j at j=" + slot_label(s, n);
        }
    }

    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            const std::complex<double> lhs = sys.V(r, c);
            std::complex<double> rhs;
            if (cls == SymmetryClass::CP) {
                rhs = std::conj(sys.phases(r)) * sys.phases(c) *
                      sys.V(negate_slot(r, n), negate_slot(c, n));
            } else {
                rhs = std::conj(sys.phases(c)) * sys.phases(r) *
                      sys.V(negate_slot(c, n), negate_slot(r, n));
            }
            const double v = std::abs(lhs - rhs);
            if (v > worst) {
                worst = v;
                wj = to_signed(r, n);
                wk = to_signed(c, n);
                what = "V constraint at " + entry_name(r, c, n);
            }
        }
    }

    rep.max_violation = worst;
    rep.worst_j = wj;
    rep.worst_k = wk;
    rep.pass = worst <= kValidationTol;
    if (!rep.pass) rep.detail = what + ", violation " + std::to_string(worst);
    return rep;
}

} // namespace

SystemSpec build_system(int n, Eigen::VectorXd energies, Eigen::MatrixXcd V, double lambda,
                        Eigen::VectorXcd phases, SymmetryClass symmetry) {
    if (n < 1) throw std::invalid_argument("pair count n must be >= 1");
    const int d = 2 * n;
    if (energies.size() != d) {
        throw std::invalid_argument("energies must have length 2n = " + std::to_string(d) +
                                    ", got " + std::to_string(energies.size()));
    }
    if (V.rows() != d || V.cols() != d) {
        throw std::invalid_argument("V must be 2n x 2n = " + std::to_string(d) + "x" +
                                    std::to_string(d) + ", got " + std::to_string(V.rows()) + "x" +
                                    std::to_string(V.cols()));
    }
    if (phases.size() == 0) {
        phases = Eigen::VectorXcd::Ones(d);
    } else if (phases.size() != d) {
        throw std::invalid_argument("phases must have length 2n, got " +
                                    std::to_string(phases.size()));
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("lambda must be positive and finite");
    }
    for (int i = 0; i < d; ++i) {
        if (!std::isfinite(energies(i))) throw std::invalid_argument("non-finite energy at slot " +
                                                                     std::to_string(i));
    }

    SystemSpec sys;
    sys.n = n;
    sys.energies = std::move(energies);
    sys.V = std::move(V);
    sys.lambda = lambda;
    sys.phases = std::move(phases);
    sys.symmetry = symmetry;

    const WorstEntry herm = max_abs_entry(sys.V - sys.V.adjoint());
    if (herm.value > kValidationTol) {
        throw std::invalid_argument("V is not Hermitian: worst entry " +
                                    entry_name(herm.row, herm.col, n) + ", |V_jk - conj(V_kj)| = " +
                                    std::to_string(herm.value));
    }
    for (int i = 0; i < d; ++i) {
        const double v = std::abs(sys.V(i, i));
        if (v > kValidationTol) {
            throw std::invalid_argument("V has nonzero diagonal at " + slot_label(i, n) +
                                        ": |V_jj| = " + std::to_string(v));
        }
        const double ph = std::abs(std::abs(sys.phases(i)) - 1.0);
        if (ph > kValidationTol) {
            throw std::invalid_argument("phase at " + slot_label(i, n) +
                                        " is off the unit circle by " + std::to_string(ph));
        }
    }

    if (includes_cp(symmetry)) {
        const InvarianceReport rep = check_invariance_impl(sys, SymmetryClass::CP);
        if (!rep.pass) throw std::invalid_argument("claimed CP symmetry violated: " + rep.detail);
    }
    if (includes_cpt(symmetry)) {
        const InvarianceReport rep = check_invariance_impl(sys, SymmetryClass::CPT);
        if (!rep.pass) throw std::invalid_argument("claimed CPT symmetry violated: " + rep.detail);
    }

    if (lambda > 0.1) {
        sys.warnings.push_back("lambda = " + std::to_string(lambda) +
                               " is large; second-order rates assume lambda << 1");
    }
    return sys;
}

SystemSpec random_system(int n, SymmetryClass symmetry, double lambda, int shell_count,
                         std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("pair count n must be >= 1");
    if (shell_count < 1) throw std::invalid_argument("shell_count must be >= 1");
    const int d = 2 * n;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(2.0));

    // Distinct shell values, spaced well apart relative to the jitter.
    std::vector<double> shell_values(shell_count);
    for (int s = 0; s < shell_count; ++s) shell_values[s] = 20.0 + 5.0 * s + jitter(rng);

    Eigen::VectorXd energies(d);
    if (symmetry == SymmetryClass::None) {
        // Round-robin assignment over all 2n slots, shuffled; pigeonhole
        // keeps at least one degenerate pair whenever shell_count < 2n.
        std::vector<int> assign(d);
        for (int i = 0; i < d; ++i) assign[i] = i % shell_count;
        std::shuffle(assign.begin(), assign.end(), rng);
        for (int i = 0; i < d; ++i) energies(i) = shell_values[assign[i]];
    } else {
        // Pair-based shells enforce eps_j = eps_{-j}.
        for (int pair = 0; pair < n; ++pair) {
            const double e = shell_values[pair % shell_count];
            energies(n - 1 - pair) = e;        // slot of -(pair+1)
            energies(n + pair) = e;            // slot of +(pair+1)
        }
    }

    Eigen::MatrixXcd V(d, d);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            V(r, c) = {re, im};
        }
    }
    V = ((V + V.adjoint()) / 2.0).eval();
    V.diagonal().setZero();

    const Eigen::VectorXcd phases = Eigen::VectorXcd::Ones(d);
    auto reversed = [&](const Eigen::MatrixXcd& M) {
        Eigen::MatrixXcd R(d, d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) R(r, c) = M(negate_slot(r, n), negate_slot(c, n));
        return R;
    };
    if (includes_cp(symmetry)) {
        V = ((V + reversed(V)) / 2.0).eval();
    }
    if (includes_cpt(symmetry)) {
        V = ((V + reversed(V).conjugate()) / 2.0).eval();
    }

    return build_system(n, std::move(energies), std::move(V), lambda, phases, symmetry);
}

InvarianceReport check_invariance(const SystemSpec& sys, SymmetryClass cls) {
    if (cls != SymmetryClass::CP && cls != SymmetryClass::CPT) {
        throw std::invalid_argument("check_invariance expects CP or CPT");
    }
    return check_invariance_impl(sys, cls);
}

SystemSpec cp_transform(const SystemSpec& sys) {
    const int n = sys.n;
    const int d = sys.dim();
    SystemSpec out = sys;
    for (int s = 0; s < d; ++s) out.energies(s) = sys.energies(negate_slot(s, n));
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            out.V(r, c) = std::conj(sys.phases(r)) * sys.phases(c) *
                          sys.V(negate_slot(r, n), negate_slot(c, n));
        }
    }
    return out;
}

} // namespace pme
