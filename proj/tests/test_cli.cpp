#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pme/io.hpp"

#ifndef PME_CLI_PATH
#error "PME_CLI_PATH must point at the command line binary"
#endif

namespace {

namespace fs = std::filesystem;

struct CliResult {
    int exit_code = -1;
    std::string output;   // stdout + stderr
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path log = dir / "cli_output.log";
    const std::string cmd =
        std::string(PME_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::ostringstream ss;
    ss << in.rdbuf();
    res.output = ss.str();
    return res;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "pme_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// A two-state degenerate system file with known v and lambda.
fs::path write_two_state(const fs::path& dir, double v = 1.0, double lambda = 0.01) {
    const fs::path path = dir / "two_state.json";
    std::ostringstream ss;
    ss << R"({"n": 1, "energies": [20, 20], "V_real": [[0, )" << v << "], [" << v
       << R"(, 0]], "V_imag": [[0, 0], [0, 0]], "lambda": )" << lambda << "}";
    pme::write_file_atomic(path, ss.str());
    return path;
}

} // namespace

TEST_CASE("generate produces loadable, reproducible system files") {
    const auto dir = fresh_dir("generate");
    const std::string out1 = (dir / "a.json").string();
    const std::string out2 = (dir / "b.json").string();

    CliResult r1 = run_cli("generate --n 4 --symmetry cpt --seed 7 --output " + out1, dir);
    CHECK(r1.exit_code == 0);
    const pme::SystemSpec sys = pme::load_system(out1);
    CHECK(sys.n == 4);
    CHECK(pme::check_invariance(sys, pme::SymmetryClass::CPT).pass);

    CliResult r2 = run_cli("generate --n 4 --symmetry cpt --seed 7 --output " + out2, dir);
    CHECK(r2.exit_code == 0);
    std::ifstream f1(out1), f2(out2);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());

    // Minimal two-state generation.
    CliResult r3 = run_cli("generate --n 1 --output " + (dir / "min.json").string(), dir);
    CHECK(r3.exit_code == 0);
    CHECK(pme::load_system(dir / "min.json").dim() == 2);
}

TEST_CASE("rates emits the kinetic matrix and passes its checks") {
    const auto dir = fresh_dir("rates");
    const auto sys_path = write_two_state(dir, 1.0, 0.01);

    CliResult r = run_cli("rates --system " + sys_path.string() + " --dt 0.5 --output-dir " +
                              dir.string(),
                          dir);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("detailed balance: pass") != std::string::npos);

    // w12 = lambda^2 v^2 dt = 5e-5 appears in the CSV.
    std::ifstream csv(dir / "rates.csv");
    std::stringstream ss;
    ss << csv.rdbuf();
    CHECK(ss.str().find("5.0000000000000002e-05") != std::string::npos);
    CHECK(fs::exists(dir / "generator_spme.csv"));
    CHECK(fs::exists(dir / "generator_apme.csv"));
}

TEST_CASE("corrupted system files exit with a usage error and no outputs") {
    const auto dir = fresh_dir("corrupt");
    const fs::path bad = dir / "bad.json";
    pme::write_file_atomic(
        bad, R"({"n": 1, "energies": [1, 1], "V_real": [[0, 1], [2, 0]],
                 "V_imag": [[0, 0], [0, 0]], "lambda": 0.01})");
    CliResult r = run_cli("rates --system " + bad.string() + " --output-dir " + dir.string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("Hermitian") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "rates.csv"));
}

TEST_CASE("evolve writes trajectories and the analytic cross-check") {
    const auto dir = fresh_dir("evolve");
    const auto sys_path = write_two_state(dir);

    CliResult r = run_cli("evolve --system " + sys_path.string() +
                              " --variant both --dt 0.5 --t1 20000 --p0 0.3,0.7 "
                              "--twostate-analytic --stride 100 --output-dir " +
                              dir.string(),
                          dir);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir / "trajectory_spme.csv"));
    CHECK(fs::exists(dir / "trajectory_apme.csv"));
    CHECK(r.output.find("two-state analytic max deviation") != std::string::npos);

    // Both variants share the header contract.
    std::string header_s, header_a;
    {
        std::ifstream in(dir / "trajectory_spme.csv");
        std::getline(in, header_s);
    }
    {
        std::ifstream in(dir / "trajectory_apme.csv");
        std::getline(in, header_a);
    }
    CHECK(header_s == header_a);
    CHECK(header_s == "t, p_-1, p_+1, S, E");

    // The antisymmetric run exhausts its antimatter within the horizon and
    // records the event in the CSV.
    std::ifstream csv(dir / "trajectory_apme.csv");
    std::stringstream ss;
    ss << csv.rdbuf();
    CHECK(ss.str().find("# event, EndOfTime, ") != std::string::npos);
}

TEST_CASE("evolve runs are byte-deterministic and honor scenario files") {
    const auto dir = fresh_dir("evolve_det");
    const fs::path scenario = dir / "scenario.json";
    pme::write_file_atomic(scenario, R"({
        "system": {"random": {"n": 2, "symmetry": "cp", "lambda": 0.05, "shells": 1, "seed": 12}},
        "rates": {"mode": "finite_window", "dt": 0.6},
        "variant": "spme",
        "matter_fraction": 0.8,
        "time": {"t1": 200.0, "step": 0.5},
        "sample_stride": 10,
        "microsim": {"enabled": true, "tau_d": 0.6, "cycles": 40},
        "output_dir": ")" + dir.string() + R"("
    })");
    CliResult r1 = run_cli("evolve --config " + scenario.string(), dir);
    CHECK(r1.exit_code == 0);
    REQUIRE(fs::exists(dir / "trajectory_spme.csv"));
    REQUIRE(fs::exists(dir / "micro_trajectory_spme.csv"));
    std::stringstream first;
    {
        std::ifstream in(dir / "trajectory_spme.csv");
        first << in.rdbuf();
    }
    CliResult r2 = run_cli("evolve --config " + scenario.string(), dir);
    CHECK(r2.exit_code == 0);
    std::stringstream second;
    {
        std::ifstream in(dir / "trajectory_spme.csv");
        second << in.rdbuf();
    }
    CHECK(first.str() == second.str());
}

TEST_CASE("simulate reports agreement and is exact for V = 0") {
    const auto dir = fresh_dir("simulate");
    const fs::path zero = dir / "zero.json";
    pme::write_file_atomic(zero,
                           R"({"n": 1, "energies": [20, 20],
                               "V_real": [[0, 0], [0, 0]], "V_imag": [[0, 0], [0, 0]],
                               "lambda": 0.01})");
    CliResult r = run_cli("simulate --system " + zero.string() +
                              " --cycle-type symmetric --tau-d 0.5 --cycles 50 --p0 0.3,0.7 "
                              "--output-dir " +
                              dir.string(),
                          dir);
    CHECK(r.exit_code == 0);
    // Zero coupling leaves only the square-root round-off of the branch
    // amplitudes.
    const auto pos = r.output.find("max_abs_err = ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(r.output.substr(pos + 14)) <= 1e-15);
    CHECK(fs::exists(dir / "micro_trajectory.csv"));
    CHECK(fs::exists(dir / "master_trajectory.csv"));
}

TEST_CASE("check battery passes and the injected fixture fails") {
    const auto dir = fresh_dir("check");
    CliResult ok = run_cli("check --count 4 --seed-base 9000 --threads 2", dir);
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.find("conservation, 4/4") != std::string::npos);
    CHECK(ok.output.find("h_theorem_spme, 4/4") != std::string::npos);
    CHECK(ok.output.find("conversion_apme, 4/4") != std::string::npos);

    CliResult bad = run_cli("check --count 2 --seed-base 9000 --inject asymmetric-rates", dir);
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("injected_asymmetric_rates, 0/1") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
    const auto dir = fresh_dir("usage");
    CHECK(run_cli("rates", dir).exit_code == 2);               // missing --system
    CHECK(run_cli("no-such-command", dir).exit_code == 2);
}
