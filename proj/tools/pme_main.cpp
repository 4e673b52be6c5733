// pme -- batch-oriented command line for the symmetric/antisymmetric Pauli
// master equations: system generation, kinetic coefficients, trajectory
// integration, microscopic cycle simulation and the property check battery.
//
// Exit codes: 0 success, 1 check failure, 2 usage/config error, 3 numerical
// failure.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "pme/io.hpp"
#include "pme/kinetics.hpp"
#include "pme/microsim.hpp"
#include "pme/solver.hpp"
#include "pme/system.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::filesystem::path resolve_output_dir(const std::filesystem::path& from_flags) {
    if (const char* env = std::getenv("PME_OUTPUT_DIR")) return std::filesystem::path(env);
    return from_flags;
}

pme::SystemSpec load_or_generate(const pme::ScenarioConfig& cfg) {
    if (cfg.system_file) return pme::load_system(*cfg.system_file);
    const auto& src = *cfg.random_source;
    return pme::random_system(src.n, src.symmetry, src.lambda, src.shells, src.seed);
}

Eigen::VectorXd parse_p0_list(const std::string& csv) {
    std::vector<double> vals;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    Eigen::VectorXd p0(static_cast<int>(vals.size()));
    for (int i = 0; i < p0.size(); ++i) p0(i) = vals[i];
    return p0;
}

// ------------------------------- generate ----------------------------------

struct GenerateArgs {
    int n = 1;
    std::string symmetry = "none";
    double lambda = 0.01;
    int shells = 1;
    std::uint64_t seed = 0;
    std::string output = "system.json";
};

int cmd_generate(const GenerateArgs& args) {
    const pme::SystemSpec sys = pme::random_system(args.n, pme::symmetry_from_string(args.symmetry),
                                                   args.lambda, args.shells, args.seed);
    print_warnings(sys.warnings);
    pme::save_system(sys, resolve_output_dir(".") / args.output);
    std::cout << "wrote " << (resolve_output_dir(".") / args.output).string() << " (" << sys.dim()
              << " states, symmetry " << pme::to_string(sys.symmetry) << ")\n";
    return kExitOk;
}

// --------------------------------- rates -----------------------------------

struct RatesArgs {
    std::string system_file;
    std::string mode = "finite_window";
    double dt = 1.0;
    double eta = 1e-9;
    double eta_norm = 1.0;
    std::string output_dir = ".";
};

pme::RateMode rate_mode_from_args(const std::string& mode, double dt, double eta, double eta_norm) {
    if (mode == "finite_window") return pme::FiniteWindow{dt};
    if (mode == "on_shell") return pme::OnShell{eta, eta_norm};
    throw CLI::ValidationError("--mode", "expected finite_window or on_shell");
}

int cmd_rates(const RatesArgs& args) {
    const pme::SystemSpec sys = pme::load_system(args.system_file);
    const pme::RateMode mode = rate_mode_from_args(args.mode, args.dt, args.eta, args.eta_norm);
    const pme::KineticMatrix km = pme::kinetic_coefficients(sys, mode);
    print_warnings(km.warnings);

    const auto out_dir = resolve_output_dir(args.output_dir);
    std::filesystem::create_directories(out_dir);
    pme::save_matrix_csv(km.w, out_dir / "rates.csv");
    pme::save_matrix_csv(pme::generator(km, pme::PmeVariant::SPME).A, out_dir / "generator_spme.csv");
    pme::save_matrix_csv(pme::generator(km, pme::PmeVariant::APME).A, out_dir / "generator_apme.csv");

    bool ok = true;
    const pme::BalanceReport balance = pme::detailed_balance_check(km);
    std::cout << "detailed balance: " << (balance.pass ? "pass" : "FAIL")
              << " (max asymmetry " << balance.max_asymmetry << ", min off-diagonal "
              << balance.min_off_diagonal << ")\n";
    ok = ok && balance.pass;

    if (sys.symmetry != pme::SymmetryClass::None) {
        const pme::PmeInvarianceReport inv = pme::pme_invariance_check(sys, km);
        std::cout << "invariance (" << pme::to_string(sys.symmetry) << "): "
                  << (inv.pass ? "pass" : "FAIL") << " (energy " << inv.max_energy_violation
                  << ", rates " << inv.max_rate_violation << ")\n";
        ok = ok && inv.pass;
    }
    return ok ? kExitOk : kExitCheckFailure;
}

struct MicroRun {
    pme::MicroResult micro;
    pme::Trajectory ode;
    pme::ComparisonReport report;
};

MicroRun run_micro_vs_master(const pme::SystemSpec& sys, const Eigen::VectorXd& p0,
                             const pme::CycleConfig& cfg, bool antisymmetric) {
    MicroRun run;
    run.micro = antisymmetric ? pme::antisymmetric_cycle(sys, p0, cfg)
                              : pme::symmetric_cycle(sys, p0, cfg);

    const pme::KineticMatrix km = pme::kinetic_coefficients(sys, pme::FiniteWindow{cfg.tau_d});
    const pme::GeneratorMatrix gen =
        pme::generator(km, antisymmetric ? pme::PmeVariant::APME : pme::PmeVariant::SPME);
    constexpr int kSubsteps = 20;
    run.ode = pme::integrate(gen, sys.energies, p0, 0.0, cfg.n_cycles * cfg.tau_d,
                             cfg.tau_d / kSubsteps, {.sample_stride = kSubsteps});
    // A master run that hits its own end of time records the bisected state
    // off the cycle grid; compare the on-grid prefix.
    if (!run.ode.events.empty()) run.ode.samples.pop_back();
    run.report = pme::compare_to_master(run.micro.trajectory, run.ode);
    return run;
}

// --------------------------------- evolve ----------------------------------

struct EvolveArgs {
    std::string config_file;
    std::string system_file;
    std::string variant = "spme";
    std::string mode = "finite_window";
    double dt = 1.0;
    double eta = 1e-9;
    double eta_norm = 1.0;
    double t0 = 0.0;
    double t1 = 1.0;
    double step = 0.0;            // 0: default 1e-3 / max|A|
    int stride = 1;
    bool backward = false;
    bool twostate_analytic = false;
    std::string p0_list;
    double matter_fraction = -1.0;
    std::string output_dir = ".";
};

int cmd_evolve(const EvolveArgs& args, const CLI::App* sub) {
    pme::ScenarioConfig cfg;
    if (!args.config_file.empty()) cfg = pme::load_scenario(args.config_file);

    // Flags override the scenario file.
    auto given = [sub](const std::string& name) { return sub->count(name) > 0; };
    if (given("--system")) {
        cfg.system_file = args.system_file;
        cfg.random_source.reset();
    }
    if (given("--variant")) {
        cfg.run_spme = args.variant == "spme" || args.variant == "both";
        cfg.run_apme = args.variant == "apme" || args.variant == "both";
    }
    if (given("--mode") || given("--dt") || given("--eta") || given("--eta-norm")) {
        cfg.rate_mode = rate_mode_from_args(args.mode, args.dt, args.eta, args.eta_norm);
    }
    if (given("--t0")) cfg.t0 = args.t0;
    if (given("--t1")) cfg.t1 = args.t1;
    if (given("--step")) cfg.step = args.step;
    if (given("--stride")) cfg.sample_stride = args.stride;
    if (given("--p0")) cfg.p0 = parse_p0_list(args.p0_list);
    if (given("--matter-fraction")) cfg.matter_fraction = args.matter_fraction;
    if (given("--output-dir")) cfg.output_dir = args.output_dir;
    if (!cfg.system_file && !cfg.random_source) {
        throw CLI::ValidationError("--system", "a system file or scenario system is required");
    }

    const pme::SystemSpec sys = load_or_generate(cfg);
    print_warnings(sys.warnings);
    const pme::KineticMatrix km = pme::kinetic_coefficients(sys, cfg.rate_mode);
    print_warnings(km.warnings);
    const Eigen::VectorXd p0 = pme::scenario_initial_state(cfg, sys);

    const double t_end = args.backward ? cfg.t0 - (cfg.t1 - cfg.t0) : cfg.t1;
    const auto out_dir = resolve_output_dir(cfg.output_dir.string());
    std::filesystem::create_directories(out_dir);

    std::vector<pme::PmeVariant> variants;
    if (cfg.run_spme) variants.push_back(pme::PmeVariant::SPME);
    if (cfg.run_apme) variants.push_back(pme::PmeVariant::APME);

    for (const pme::PmeVariant variant : variants) {
        const pme::GeneratorMatrix gen = pme::generator(km, variant);
        const double h =
            cfg.step && *cfg.step > 0.0 ? *cfg.step : pme::default_step(gen);
        const pme::Trajectory traj =
            pme::integrate(gen, sys.energies, p0, cfg.t0, t_end, h,
                           {.sample_stride = cfg.sample_stride});
        const auto file = out_dir / ("trajectory_" + pme::to_string(variant) + ".csv");
        pme::save_trajectory_csv(traj, file);
        std::cout << pme::to_string(variant) << ": " << traj.samples.size() << " samples";
        for (const auto& ev : traj.events) {
            std::cout << ", event "
                      << (ev.kind == pme::EventKind::EndOfTime ? "EndOfTime" : "BeginningOfTime")
                      << " at t = " << ev.t_event << " (state " << ev.state << ")";
        }
        std::cout << ", wrote " << file.string() << "\n";

        if (args.twostate_analytic) {
            if (sys.n != 1) {
                throw CLI::ValidationError("--twostate-analytic", "requires a two-state system");
            }
            const double w = km.w(0, 1);
            const double p_anti0 = p0(0);
            double max_dev = 0.0;
            for (const auto& s : traj.samples) {
                const double om = std::min(w * (s.t - cfg.t0), p_anti0);
                const Eigen::Vector2d ref = pme::two_state_solution(
                    Eigen::Vector2d(p0), [om](double) { return om; }, variant, s.t);
                max_dev = std::max(max_dev, (s.p - ref).cwiseAbs().maxCoeff());
            }
            std::cout << "  two-state analytic max deviation (" << pme::to_string(variant)
                      << "): " << max_dev << "\n";
        }

        if (cfg.microsim.enabled) {
            const pme::CycleConfig mcfg = pme::make_cycle_config(
                sys, cfg.microsim.tau_d, cfg.microsim.cycles, cfg.microsim.propagator);
            print_warnings(mcfg.warnings);
            const bool anti = variant == pme::PmeVariant::APME;
            const MicroRun run = run_micro_vs_master(sys, p0, mcfg, anti);
            const auto micro_file =
                out_dir / ("micro_trajectory_" + pme::to_string(variant) + ".csv");
            pme::save_trajectory_csv(run.micro.trajectory, micro_file);
            std::cout << "  microsim vs " << pme::to_string(variant)
                      << ": max_abs_err = " << run.report.max_abs_err << ", wrote "
                      << micro_file.string() << "\n";
        }
    }
    return kExitOk;
}

// -------------------------------- simulate ---------------------------------

struct SimulateArgs {
    std::string system_file;
    std::string cycle_type = "symmetric";
    double tau_d = 1.0;
    int cycles = 100;
    std::string propagator = "exact";
    std::string p0_list;
    double matter_fraction = -1.0;
    std::string lambda_sweep;
    std::string output_dir = ".";
};

int cmd_simulate(const SimulateArgs& args) {
    pme::SystemSpec sys = pme::load_system(args.system_file);
    print_warnings(sys.warnings);
    const bool antisymmetric = args.cycle_type == "antisymmetric";
    if (!antisymmetric && args.cycle_type != "symmetric") {
        throw CLI::ValidationError("--cycle-type", "expected symmetric or antisymmetric");
    }
    const pme::PropagatorMode pmode = args.propagator == "perturbative"
                                          ? pme::PropagatorMode::Perturbative
                                          : pme::PropagatorMode::Exact;

    pme::ScenarioConfig p0cfg;
    if (!args.p0_list.empty()) p0cfg.p0 = parse_p0_list(args.p0_list);
    if (args.matter_fraction >= 0.0) p0cfg.matter_fraction = args.matter_fraction;
    const Eigen::VectorXd p0 = pme::scenario_initial_state(p0cfg, sys);

    const auto out_dir = resolve_output_dir(args.output_dir);
    std::filesystem::create_directories(out_dir);

    const pme::CycleConfig cfg = pme::make_cycle_config(sys, args.tau_d, args.cycles, pmode);
    print_warnings(cfg.warnings);
    const MicroRun run = run_micro_vs_master(sys, p0, cfg, antisymmetric);

    pme::save_trajectory_csv(run.micro.trajectory, out_dir / "micro_trajectory.csv");
    pme::save_trajectory_csv(run.ode, out_dir / "master_trajectory.csv");
    if (antisymmetric) {
        pme::write_file_atomic(out_dir / "micro_diagnostics.csv",
                               pme::diagnostics_to_csv(run.micro.diagnostics));
    }
    std::cout << args.cycle_type << " cycle vs master equation: max_abs_err = "
              << run.report.max_abs_err << ", err_at_end = " << run.report.err_at_end << " over "
              << run.report.samples_compared << " samples\n";

    if (!args.lambda_sweep.empty()) {
        std::vector<double> lambdas;
        std::stringstream ss(args.lambda_sweep);
        std::string tok;
        while (std::getline(ss, tok, ',')) lambdas.push_back(std::stod(tok));
        std::vector<double> errs;
        for (const double lam : lambdas) {
            pme::SystemSpec swept = pme::build_system(sys.n, sys.energies, sys.V, lam, sys.phases,
                                                      sys.symmetry);
            const pme::CycleConfig scfg = pme::make_cycle_config(swept, args.tau_d, args.cycles, pmode);
            errs.push_back(run_micro_vs_master(swept, p0, scfg, antisymmetric).report.max_abs_err);
            std::cout << "  lambda = " << lam << ": max_abs_err = " << errs.back() << "\n";
        }
        std::cout << "  discrepancy scaling slope = " << pme::fit_log_slope(lambdas, errs) << "\n";
    }
    return kExitOk;
}

// --------------------------------- check -----------------------------------

struct CheckArgs {
    int count = 100;
    std::uint64_t seed_base = 1000;
    int threads = 0;   // 0: hardware concurrency
    std::string inject;
};

struct SeedOutcome {
    // margin >= 0 means pass with that slack; negative means failed by that much.
    struct Entry {
        bool pass = true;
        double margin = 0.0;
    };
    Entry conservation, h_theorem_spme, h_theorem_apme, balance, invariance, equilibrium_spme,
        conversion_apme;
    std::string error;
};

double min_entropy_increment(const pme::Trajectory& traj) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
        worst = std::min(worst, traj.samples[i].S - traj.samples[i - 1].S);
    }
    return worst;
}

SeedOutcome run_seed_battery(std::uint64_t seed) {
    SeedOutcome out;
    try {
        const int n = 2 + static_cast<int>(seed % 2);   // alternate n = 2, 3
        const auto symmetry = (seed % 2 == 0) ? pme::SymmetryClass::CP : pme::SymmetryClass::CPT;
        const pme::SystemSpec sys = pme::random_system(n, symmetry, 0.01, 1, seed);
        const pme::KineticMatrix km = pme::kinetic_coefficients(sys, pme::FiniteWindow{0.5});

        const pme::BalanceReport balance = pme::detailed_balance_check(km);
        out.balance = {balance.pass,
                       std::min(pme::kValidationTol - balance.max_asymmetry,
                                balance.min_off_diagonal + pme::kValidationTol)};

        const pme::PmeInvarianceReport inv = pme::pme_invariance_check(sys, km);
        out.invariance = {inv.pass, pme::kValidationTol - std::max(inv.max_energy_violation,
                                                                   inv.max_rate_violation)};

        // Deterministic per-seed initial states.
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
        std::uniform_real_distribution<double> uni(0.05, 1.0);
        Eigen::VectorXd p0(sys.dim());
        for (int i = 0; i < sys.dim(); ++i) p0(i) = uni(rng);
        p0 /= p0.sum();

        const pme::GeneratorMatrix gen_s = pme::generator(km, pme::PmeVariant::SPME);
        const pme::GeneratorMatrix gen_a = pme::generator(km, pme::PmeVariant::APME);
        const double a_max = gen_s.A.cwiseAbs().maxCoeff();
        const double h = 0.01 / a_max;

        // SPME: conservation, H-theorem, equilibration.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gen_s.A);
        double gap = 0.0;
        for (int i = 0; i < es.eigenvalues().size(); ++i) {
            const double ev = -es.eigenvalues()(i);
            if (ev > 1e-12 * a_max && (gap == 0.0 || ev < gap)) gap = ev;
        }
        const double t_end = gap > 0.0 ? 18.0 / gap : 10.0 / a_max;
        const pme::Trajectory traj_s =
            pme::integrate(gen_s, sys.energies, p0, 0.0, t_end, h, {.sample_stride = 25});
        out.conservation = {traj_s.max_norm_drift <= 1e-12, 1e-12 - traj_s.max_norm_drift};
        const double min_ds_s = min_entropy_increment(traj_s);
        out.h_theorem_spme = {min_ds_s >= -1e-10, min_ds_s + 1e-10};

        const pme::EquilibriumResult eq = pme::equilibrium(gen_s, sys.energies, p0);
        const double eq_err = (traj_s.back().p - eq.state.p).cwiseAbs().maxCoeff();
        out.equilibrium_spme = {eq_err <= 1e-6, 1e-6 - eq_err};

        // APME: H-theorem on an antimatter-light start, then conversion.
        Eigen::VectorXd p0_light = p0;
        const double anti = pme::antimatter_total(p0_light);
        p0_light.head(sys.n) *= 0.1 / anti;
        p0_light.tail(sys.n) *= 0.9 / (1.0 - anti);
        const pme::Trajectory traj_a =
            pme::integrate(gen_a, sys.energies, p0_light, 0.0, t_end, h, {.sample_stride = 25});
        const double min_ds_a = min_entropy_increment(traj_a);
        out.h_theorem_apme = {min_ds_a >= -1e-10, min_ds_a + 1e-10};
        out.conservation.pass = out.conservation.pass && traj_a.max_norm_drift <= 1e-12;
        out.conservation.margin = std::min(out.conservation.margin, 1e-12 - traj_a.max_norm_drift);

        const pme::EquilibriumResult conv = pme::equilibrium(gen_a, sys.energies, p0_light);
        const bool converted = conv.event.has_value() ||
                               pme::antimatter_total(conv.state.p) < 1e-6;
        out.conversion_apme = {converted,
                               conv.event ? 1.0 : 1e-6 - pme::antimatter_total(conv.state.p)};
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

int cmd_check(const CheckArgs& args) {
    const int count = args.count;
    std::vector<SeedOutcome> outcomes(count);
    const int threads = args.threads > 0
                            ? args.threads
                            : std::max(1u, std::thread::hardware_concurrency());

    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < std::min(threads, count); ++t) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                outcomes[i] = run_seed_battery(args.seed_base + static_cast<std::uint64_t>(i));
            }
        });
    }
    for (auto& th : pool) th.join();

    bool all_ok = true;
    for (int i = 0; i < count; ++i) {
        if (!outcomes[i].error.empty()) {
            std::cerr << "seed " << args.seed_base + i << " failed: " << outcomes[i].error << "\n";
            return kExitNumerical;
        }
    }

    auto report = [&](const std::string& name, auto member) {
        int passed = 0;
        double worst = std::numeric_limits<double>::infinity();
        std::uint64_t worst_seed = args.seed_base;
        for (int i = 0; i < count; ++i) {
            const auto& e = outcomes[i].*member;
            passed += e.pass ? 1 : 0;
            if (e.margin < worst) {
                worst = e.margin;
                worst_seed = args.seed_base + i;
            }
        }
        std::cout << name << ", " << passed << "/" << count << ", worst_margin = " << worst
                  << " (seed " << worst_seed << ")\n";
        all_ok = all_ok && passed == count;
    };
    report("conservation", &SeedOutcome::conservation);
    report("h_theorem_spme", &SeedOutcome::h_theorem_spme);
    report("h_theorem_apme", &SeedOutcome::h_theorem_apme);
    report("detailed_balance", &SeedOutcome::balance);
    report("invariance", &SeedOutcome::invariance);
    report("equilibrium_spme", &SeedOutcome::equilibrium_spme);
    report("conversion_apme", &SeedOutcome::conversion_apme);

    if (args.inject == "asymmetric-rates") {
        // Self-test fixture: a deliberately broken rate matrix must be caught.
        Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
        bad(0, 1) = 1.0;
        bad(1, 0) = 2.0;
        const pme::BalanceReport rep = pme::detailed_balance_check(bad);
        std::cout << "injected_asymmetric_rates, " << (rep.pass ? 1 : 0) << "/1"
                  << ", worst_margin = " << -rep.max_asymmetry << " (injected)\n";
        all_ok = all_ok && rep.pass;
    }
    return all_ok ? kExitOk : kExitCheckFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"symmetric and antisymmetric Pauli master equations for matter-antimatter "
                 "state kinetics"};
    app.require_subcommand(1);

    GenerateArgs gen_args;
    CLI::App* gen = app.add_subcommand("generate", "generate a random system file");
    gen->add_option("--n", gen_args.n, "pair count (2n states)")->check(CLI::PositiveNumber);
    gen->add_option("--symmetry", gen_args.symmetry, "none|cp|cpt|both");
    gen->add_option("--lambda", gen_args.lambda, "coupling scale");
    gen->add_option("--shells", gen_args.shells, "number of distinct energy shells");
    gen->add_option("--seed", gen_args.seed, "64-bit seed");
    gen->add_option("--output", gen_args.output, "output file name");

    RatesArgs rates_args;
    CLI::App* rates = app.add_subcommand("rates", "kinetic coefficients, generators and checks");
    rates->add_option("--system", rates_args.system_file, "system file")->required();
    rates->add_option("--mode", rates_args.mode, "finite_window|on_shell");
    rates->add_option("--dt", rates_args.dt, "finite window length");
    rates->add_option("--eta", rates_args.eta, "on-shell energy tolerance");
    rates->add_option("--eta-norm", rates_args.eta_norm, "on-shell level-density surrogate");
    rates->add_option("--output-dir", rates_args.output_dir, "output directory");

    EvolveArgs evolve_args;
    CLI::App* evolve = app.add_subcommand("evolve", "integrate the master equations");
    evolve->add_option("--config", evolve_args.config_file, "scenario JSON (flags override)");
    evolve->add_option("--system", evolve_args.system_file, "system file");
    evolve->add_option("--variant", evolve_args.variant, "spme|apme|both");
    evolve->add_option("--mode", evolve_args.mode, "finite_window|on_shell");
    evolve->add_option("--dt", evolve_args.dt, "finite window length");
    evolve->add_option("--eta", evolve_args.eta, "on-shell energy tolerance");
    evolve->add_option("--eta-norm", evolve_args.eta_norm, "on-shell level-density surrogate");
    evolve->add_option("--t0", evolve_args.t0, "start time");
    evolve->add_option("--t1", evolve_args.t1, "end time");
    evolve->add_option("--step", evolve_args.step, "RK4 step (default 1e-3 / max|A|)");
    evolve->add_option("--stride", evolve_args.stride, "sample stride");
    evolve->add_flag("--backward", evolve_args.backward, "integrate backward over the same span");
    evolve->add_flag("--twostate-analytic", evolve_args.twostate_analytic,
                     "cross-check against the two-state closed form");
    evolve->add_option("--p0", evolve_args.p0_list, "comma-separated initial probabilities");
    evolve->add_option("--matter-fraction", evolve_args.matter_fraction,
                       "initial matter share, uniform within sectors");
    evolve->add_option("--output-dir", evolve_args.output_dir, "output directory");

    SimulateArgs sim_args;
    CLI::App* sim = app.add_subcommand("simulate", "microscopic cycle simulation vs master run");
    sim->add_option("--system", sim_args.system_file, "system file")->required();
    sim->add_option("--cycle-type", sim_args.cycle_type, "symmetric|antisymmetric");
    sim->add_option("--tau-d", sim_args.tau_d, "decoherence interval");
    sim->add_option("--cycles", sim_args.cycles, "number of intervals");
    sim->add_option("--propagator", sim_args.propagator, "exact|perturbative");
    sim->add_option("--p0", sim_args.p0_list, "comma-separated initial probabilities");
    sim->add_option("--matter-fraction", sim_args.matter_fraction, "initial matter share");
    sim->add_option("--lambda-sweep", sim_args.lambda_sweep,
                    "comma-separated lambdas for the scaling fit");
    sim->add_option("--output-dir", sim_args.output_dir, "output directory");

    CheckArgs check_args;
    CLI::App* check = app.add_subcommand("check", "property battery over seeded random systems");
    check->add_option("--count", check_args.count, "number of seeds")->check(CLI::PositiveNumber);
    check->add_option("--seed-base", check_args.seed_base, "first seed");
    check->add_option("--threads", check_args.threads, "worker threads (0 = hardware)");
    check->add_option("--inject", check_args.inject,
                      "self-test fixture: asymmetric-rates forces a detailed-balance failure");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_generate(gen_args);
        if (rates->parsed()) return cmd_rates(rates_args);
        if (evolve->parsed()) return cmd_evolve(evolve_args, evolve);
        if (sim->parsed()) return cmd_simulate(sim_args);
        if (check->parsed()) return cmd_check(check_args);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
