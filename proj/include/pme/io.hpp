// io.hpp -- file formats: system files (JSON), rate/generator and trajectory
// CSV, and the scenario configuration used by the command-line tool.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "pme/kinetics.hpp"
#include "pme/microsim.hpp"
#include "pme/solver.hpp"
#include "pme/system.hpp"

namespace pme {

// System file: JSON document with keys
//   n          : pair count
//   energies   : length-2n array, order -n..-1,+1..+n
//   V_real     : 2n x 2n row-major nested array
//   V_imag     : 2n x 2n row-major nested array
//   lambda     : coupling scale
//   phases_re  : optional length-2n array (default 1)
//   phases_im  : optional length-2n array (default 0)
//   symmetry   : "none" | "cp" | "cpt" | "both"
// Unknown keys are hard errors; parse errors name the offending key.
SystemSpec load_system(const std::filesystem::path& path);
SystemSpec parse_system_json(const std::string& text, const std::string& origin = "<string>");
std::string system_to_json(const SystemSpec& sys);
void save_system(const SystemSpec& sys, const std::filesystem::path& path);

// Square real matrix as CSV with signed state labels on both axes.
std::string matrix_to_csv(const Eigen::MatrixXd& m);
void save_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path);

// Trajectory CSV: header "t, p_-n, ..., p_-1, p_+1, ..., p_+n, S, E", one
// sample per row with 17-significant-digit formatting, boundary events
// appended as comment lines "# event, kind, t, state".
std::string trajectory_to_csv(const Trajectory& traj);
void save_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

// Antisymmetric-cycle diagnostics: "interval, bc_residual, weight_min, cond_Uaa".
std::string diagnostics_to_csv(const std::vector<IntervalDiagnostics>& diags);

// Writes content to path atomically: data lands in "<path>.partial" first and
// is renamed once complete, so interrupted runs never leave half-written
// final files.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Scenario for batch runs: a system source, rate mode, variants, initial
// condition, time grid and optional microsim settings. Parsed strictly --
// unknown keys are errors.
struct ScenarioConfig {
    // System source: exactly one of file / random.
    std::optional<std::filesystem::path> system_file;
    struct RandomSource {
        int n = 1;
        SymmetryClass symmetry = SymmetryClass::None;
        double lambda = 0.01;
        int shells = 1;
        std::uint64_t seed = 0;
    };
    std::optional<RandomSource> random_source;

    RateMode rate_mode = FiniteWindow{1.0};
    bool run_spme = true;
    bool run_apme = false;

    // Initial condition: explicit vector, or uniform, or sector split.
    std::optional<Eigen::VectorXd> p0;
    std::optional<double> matter_fraction;   // uniform within each sector

    double t0 = 0.0;
    double t1 = 1.0;
    std::optional<double> step;              // default: 1e-3 / max|A|
    int sample_stride = 1;

    struct MicrosimSettings {
        bool enabled = false;
        double tau_d = 1.0;
        int cycles = 100;
        PropagatorMode propagator = PropagatorMode::Exact;
    };
    MicrosimSettings microsim;

    std::filesystem::path output_dir = ".";
};

ScenarioConfig parse_scenario_json(const std::string& text, const std::string& origin = "<string>");
ScenarioConfig load_scenario(const std::filesystem::path& path);

// Resolves the initial probability vector of a scenario for a given system.
Eigen::VectorXd scenario_initial_state(const ScenarioConfig& cfg, const SystemSpec& sys);

std::string format_double(double x);   // fixed 17-significant-digit form

} // namespace pme
