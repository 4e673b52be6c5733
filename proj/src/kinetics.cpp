#include "pme/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "pme/kernels.hpp"

namespace pme {

std::string to_string(PmeVariant v) { return v == PmeVariant::SPME ? "spme" : "apme"; }

Eigen::VectorXd cprime_vector(PmeVariant variant, int n) {
    Eigen::VectorXd c = Eigen::VectorXd::Ones(2 * n);
    if (variant == PmeVariant::APME) c.head(n).setConstant(-1.0);
    return c;
}

namespace {

// Union-find over slots; shells are transitive closures of |de| <= eta.
struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int size) : parent(size) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

std::vector<int> compress_roots(UnionFind& uf, int size) {
    std::vector<int> id(size, -1);
    int next = 0;
    for (int i = 0; i < size; ++i) {
        const int root = uf.find(i);
        if (id[root] < 0) id[root] = next++;
    }
    std::vector<int> out(size);
    for (int i = 0; i < size; ++i) out[i] = id[uf.find(i)];
    return out;
}

} // namespace

std::vector<int> shell_assignment(const Eigen::VectorXd& energies, double eta) {
    const int d = static_cast<int>(energies.size());
    UnionFind uf(d);
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            if (std::abs(energies(a) - energies(b)) <= eta) uf.unite(a, b);
        }
    }
    return compress_roots(uf, d);
}

std::vector<int> connected_classes(const Eigen::MatrixXd& A) {
    const int d = static_cast<int>(A.rows());
    UnionFind uf(d);
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            if (A(a, b) != 0.0 || A(b, a) != 0.0) uf.unite(a, b);
        }
    }
    return compress_roots(uf, d);
}

KineticMatrix kinetic_coefficients(const SystemSpec& sys, const RateMode& mode) {
    const int d = sys.dim();
    KineticMatrix km;
    km.mode = mode;
    km.lambda = sys.lambda;
    km.w = Eigen::MatrixXd::Zero(d, d);
    const double lam2 = sys.lambda * sys.lambda;

    if (const auto* fw = std::get_if<FiniteWindow>(&mode)) {
        if (!(fw->dt > 0.0)) throw std::invalid_argument("FiniteWindow dt must be positive");
        const double eps_max = sys.max_abs_energy();
        if (eps_max > 0.0 && fw->dt < 10.0 / eps_max) {
            km.warnings.push_back("decoherence window dt = " + std::to_string(fw->dt) +
                                  " is inside the Zeno regime (dt * max|eps| < 10); "
                                  "second-order rates are unreliable there");
        }
        for (int j = 0; j < d; ++j) {
            for (int k = j + 1; k < d; ++k) {
                const double w = lam2 * std::norm(sys.V(j, k)) *
                                 d_kernel(sys.energies(j) - sys.energies(k), fw->dt);
                km.w(j, k) = w;
                km.w(k, j) = w;
            }
        }
    } else {
        const auto& os = std::get<OnShell>(mode);
        if (os.eta < 0.0) throw std::invalid_argument("OnShell eta must be >= 0");
        if (!(os.eta_norm > 0.0)) throw std::invalid_argument("OnShell eta_norm must be positive");
        const std::vector<int> shell = shell_assignment(sys.energies, os.eta);
        const double scale = 2.0 * std::numbers::pi * lam2 / os.eta_norm;
        for (int j = 0; j < d; ++j) {
            for (int k = j + 1; k < d; ++k) {
                if (shell[j] != shell[k]) continue;
                const double w = scale * std::norm(sys.V(j, k));
                km.w(j, k) = w;
                km.w(k, j) = w;
            }
        }
    }

    for (int k = 0; k < d; ++k) km.w(k, k) = -km.w.col(k).sum();
    return km;
}

GeneratorMatrix generator(const KineticMatrix& km, PmeVariant variant) {
    const int d = km.dim();
    const int n = km.pair_count();
    GeneratorMatrix gen;
    gen.variant = variant;
    gen.cprime = cprime_vector(variant, n);
    gen.A = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
            if (j == k) continue;
            gen.A(j, k) = gen.cprime(j) * km.w(j, k);
        }
    }
    for (int k = 0; k < d; ++k) gen.A(k, k) = -gen.A.col(k).sum();
    return gen;
}

BalanceReport detailed_balance_check(const Eigen::MatrixXd& w) {
    const int d = static_cast<int>(w.rows());
    BalanceReport rep;
    rep.min_off_diagonal = std::numeric_limits<double>::infinity();
    const int n = d / 2;
    for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
            if (j == k) continue;
            const double asym = std::abs(w(j, k) - w(k, j));
            if (asym > rep.max_asymmetry) {
                rep.max_asymmetry = asym;
                rep.worst_j = to_signed(j, n);
                rep.worst_k = to_signed(k, n);
            }
            rep.min_off_diagonal = std::min(rep.min_off_diagonal, w(j, k));
        }
    }
    rep.pass = rep.max_asymmetry <= kValidationTol && rep.min_off_diagonal >= -kValidationTol;
    if (!rep.pass) {
        rep.detail = "max asymmetry " + std::to_string(rep.max_asymmetry) + " at (" +
                     std::to_string(rep.worst_j) + "," + std::to_string(rep.worst_k) +
                     "), min off-diagonal " + std::to_string(rep.min_off_diagonal);
    }
    return rep;
}

PmeInvarianceReport pme_invariance_check(const SystemSpec& sys, const KineticMatrix& km) {
    if (sys.symmetry == SymmetryClass::None) {
        throw std::invalid_argument("pme_invariance_check requires a CP or CPT claimed system");
    }
    const int n = sys.n;
    const int d = sys.dim();
    PmeInvarianceReport rep;
    for (int s = 0; s < n; ++s) {
        rep.max_energy_violation =
            std::max(rep.max_energy_violation,
                     std::abs(sys.energies(s) - sys.energies(negate_slot(s, n))));
    }
    // Both CP and CPT collapse to the single chain w_jk = w_kj = w_{-j,-k}.
    for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
            if (j == k) continue;
            const double sym = std::abs(km.w(j, k) - km.w(k, j));
            const double neg = std::abs(km.w(j, k) - km.w(negate_slot(j, n), negate_slot(k, n)));
            rep.max_rate_violation = std::max({rep.max_rate_violation, sym, neg});
        }
    }
    rep.pass = rep.max_energy_violation <= kValidationTol && rep.max_rate_violation <= kValidationTol;
    if (!rep.pass) {
        rep.detail = "energy pairing violation " + std::to_string(rep.max_energy_violation) +
                     ", rate chain violation " + std::to_string(rep.max_rate_violation);
    }
    return rep;
}

} // namespace pme
