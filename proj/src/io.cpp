#include "pme/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pme {

using nlohmann::json;

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", x);
    return buf;
}

namespace {

[[noreturn]] void key_error(const std::string& origin, const std::string& key,
                            const std::string& what) {
    throw std::invalid_argument(origin + ": key '" + key + "': " + what);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& origin, const std::string& scope) {
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) {
            throw std::invalid_argument(origin + ": unknown key '" + key + "' in " + scope);
        }
    }
}

const json& require_key(const json& obj, const std::string& key, const std::string& origin) {
    if (!obj.contains(key)) key_error(origin, key, "missing");
    return obj.at(key);
}

double number_at(const json& v, const std::string& key, const std::string& origin) {
    if (!v.is_number()) key_error(origin, key, "expected a number");
    return v.get<double>();
}

std::string string_at(const json& v, const std::string& key, const std::string& origin) {
    if (!v.is_string()) key_error(origin, key, "expected a string");
    return v.get<std::string>();
}

bool bool_at(const json& v, const std::string& key, const std::string& origin) {
    if (!v.is_boolean()) key_error(origin, key, "expected a boolean");
    return v.get<bool>();
}

Eigen::VectorXd vector_at(const json& v, int expected, const std::string& key,
                          const std::string& origin) {
    if (!v.is_array() || static_cast<int>(v.size()) != expected) {
        key_error(origin, key, "expected an array of length " + std::to_string(expected));
    }
    Eigen::VectorXd out(expected);
    for (int i = 0; i < expected; ++i) out(i) = number_at(v.at(i), key, origin);
    return out;
}

Eigen::MatrixXd matrix_at(const json& v, int dim, const std::string& key,
                          const std::string& origin) {
    if (!v.is_array() || static_cast<int>(v.size()) != dim) {
        key_error(origin, key, "expected " + std::to_string(dim) + " rows");
    }
    Eigen::MatrixXd out(dim, dim);
    for (int r = 0; r < dim; ++r) {
        const json& row = v.at(r);
        if (!row.is_array() || static_cast<int>(row.size()) != dim) {
            key_error(origin, key, "row " + std::to_string(r) + " must have " +
                                       std::to_string(dim) + " entries");
        }
        for (int c = 0; c < dim; ++c) out(r, c) = number_at(row.at(c), key, origin);
    }
    return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

SystemSpec parse_system_json(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(origin + ": not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument(origin + ": top level must be an object");

    reject_unknown_keys(doc,
                        {"n", "energies", "V_real", "V_imag", "lambda", "phases_re", "phases_im",
                         "symmetry"},
                        origin, "system file");

    const json& jn = require_key(doc, "n", origin);
    if (!jn.is_number_integer() || jn.get<int>() < 1) key_error(origin, "n", "expected an integer >= 1");
    const int n = jn.get<int>();
    const int d = 2 * n;

    const Eigen::VectorXd energies = vector_at(require_key(doc, "energies", origin), d, "energies", origin);
    const Eigen::MatrixXd v_re = matrix_at(require_key(doc, "V_real", origin), d, "V_real", origin);
    const Eigen::MatrixXd v_im = matrix_at(require_key(doc, "V_imag", origin), d, "V_imag", origin);
    const double lambda = number_at(require_key(doc, "lambda", origin), "lambda", origin);

    Eigen::VectorXcd phases = Eigen::VectorXcd::Ones(d);
    if (doc.contains("phases_re") || doc.contains("phases_im")) {
        if (!doc.contains("phases_re")) key_error(origin, "phases_re", "missing (phases_im present)");
        if (!doc.contains("phases_im")) key_error(origin, "phases_im", "missing (phases_re present)");
        const Eigen::VectorXd re = vector_at(doc.at("phases_re"), d, "phases_re", origin);
        const Eigen::VectorXd im = vector_at(doc.at("phases_im"), d, "phases_im", origin);
        for (int i = 0; i < d; ++i) phases(i) = {re(i), im(i)};
    }

    SymmetryClass symmetry = SymmetryClass::None;
    if (doc.contains("symmetry")) {
        const json& js = doc.at("symmetry");
        try {
            symmetry = symmetry_from_string(string_at(js, "symmetry", origin));
        } catch (const std::invalid_argument& e) {
            key_error(origin, "symmetry", e.what());
        }
    }

    Eigen::MatrixXcd V = v_re.cast<std::complex<double>>();
    V.imag() = v_im;
    try {
        return build_system(n, energies, std::move(V), lambda, phases, symmetry);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(origin + ": " + e.what());
    }
}

SystemSpec load_system(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open system file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_system_json(ss.str(), path.string());
}

std::string system_to_json(const SystemSpec& sys) {
    json doc;
    doc["n"] = sys.n;
    json energies = json::array();
    for (int i = 0; i < sys.dim(); ++i) energies.push_back(sys.energies(i));
    doc["energies"] = std::move(energies);
    doc["V_real"] = matrix_to_json(sys.V.real());
    doc["V_imag"] = matrix_to_json(sys.V.imag());
    doc["lambda"] = sys.lambda;
    const bool unit_phases = (sys.phases.array() == std::complex<double>(1.0, 0.0)).all();
    if (!unit_phases) {
        json re = json::array(), im = json::array();
        for (int i = 0; i < sys.dim(); ++i) {
            re.push_back(sys.phases(i).real());
            im.push_back(sys.phases(i).imag());
        }
        doc["phases_re"] = std::move(re);
        doc["phases_im"] = std::move(im);
    }
    doc["symmetry"] = to_string(sys.symmetry);
    return doc.dump(2) + "\n";
}

void save_system(const SystemSpec& sys, const std::filesystem::path& path) {
    write_file_atomic(path, system_to_json(sys));
}

std::string matrix_to_csv(const Eigen::MatrixXd& m) {
    const int d = static_cast<int>(m.rows());
    const int n = d / 2;
    std::ostringstream out;
    out << "state";
    for (int c = 0; c < d; ++c) out << ", " << slot_label(c, n);
    out << "\n";
    for (int r = 0; r < d; ++r) {
        out << slot_label(r, n);
        for (int c = 0; c < d; ++c) out << ", " << format_double(m(r, c));
        out << "\n";
    }
    return out.str();
}

void save_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
    write_file_atomic(path, matrix_to_csv(m));
}

std::string trajectory_to_csv(const Trajectory& traj) {
    std::ostringstream out;
    if (traj.samples.empty()) return "";
    const int d = static_cast<int>(traj.samples.front().p.size());
    const int n = d / 2;
    out << "t";
    for (int i = 0; i < d; ++i) out << ", p_" << slot_label(i, n);
    out << ", S, E\n";
    for (const auto& s : traj.samples) {
        out << format_double(s.t);
        for (int i = 0; i < d; ++i) out << ", " << format_double(s.p(i));
        out << ", " << format_double(s.S) << ", " << format_double(s.E) << "\n";
    }
    for (const auto& ev : traj.events) {
        out << "# event, " << (ev.kind == EventKind::EndOfTime ? "EndOfTime" : "BeginningOfTime")
            << ", " << format_double(ev.t_event) << ", " << ev.state << "\n";
    }
    return out.str();
}

void save_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
    write_file_atomic(path, trajectory_to_csv(traj));
}

std::string diagnostics_to_csv(const std::vector<IntervalDiagnostics>& diags) {
    std::ostringstream out;
    out << "interval, bc_residual, weight_min, cond_Uaa\n";
    for (const auto& dg : diags) {
        out << dg.interval << ", " << format_double(dg.bc_residual) << ", "
            << format_double(dg.weight_min) << ", " << format_double(dg.cond_Uaa) << "\n";
    }
    return out.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path partial = path.string() + ".partial";
    {
        std::ofstream out(partial, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + partial.string() + " for writing");
        out << content;
        if (!out) throw std::runtime_error("write failed for " + partial.string());
    }
    std::filesystem::rename(partial, path);
}

namespace {

RateMode parse_rate_mode(const json& obj, const std::string& origin) {
    reject_unknown_keys(obj, {"mode", "dt", "eta", "eta_norm"}, origin, "rates");
    const json& jm = require_key(obj, "mode", origin);
    if (!jm.is_string()) key_error(origin, "mode", "expected a string");
    const std::string mode = string_at(jm, "mode", origin);
    if (mode == "finite_window") {
        FiniteWindow fw;
        if (obj.contains("dt")) fw.dt = number_at(obj.at("dt"), "dt", origin);
        if (obj.contains("eta") || obj.contains("eta_norm")) {
            key_error(origin, "eta", "only valid for mode 'on_shell'");
        }
        return fw;
    }
    if (mode == "on_shell") {
        OnShell os;
        if (obj.contains("eta")) os.eta = number_at(obj.at("eta"), "eta", origin);
        if (obj.contains("eta_norm")) os.eta_norm = number_at(obj.at("eta_norm"), "eta_norm", origin);
        if (obj.contains("dt")) key_error(origin, "dt", "only valid for mode 'finite_window'");
        return os;
    }
    key_error(origin, "mode", "expected 'finite_window' or 'on_shell'");
}

} // namespace

ScenarioConfig parse_scenario_json(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(origin + ": not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument(origin + ": top level must be an object");
    reject_unknown_keys(doc,
                        {"system", "rates", "variant", "p0", "matter_fraction", "time",
                         "microsim", "output_dir", "sample_stride"},
                        origin, "scenario");

    ScenarioConfig cfg;

    const json& jsys = require_key(doc, "system", origin);
    if (!jsys.is_object()) key_error(origin, "system", "expected an object");
    reject_unknown_keys(jsys, {"file", "random"}, origin, "system");
    if (jsys.contains("file") == jsys.contains("random")) {
        key_error(origin, "system", "exactly one of 'file' or 'random' is required");
    }
    if (jsys.contains("file")) {
        cfg.system_file = std::filesystem::path(string_at(jsys.at("file"), "file", origin));
    } else {
        const json& jr = jsys.at("random");
        if (!jr.is_object()) key_error(origin, "random", "expected an object");
        reject_unknown_keys(jr, {"n", "symmetry", "lambda", "shells", "seed"}, origin, "random");
        ScenarioConfig::RandomSource src;
        src.n = static_cast<int>(number_at(require_key(jr, "n", origin), "n", origin));
        if (jr.contains("symmetry")) {
            src.symmetry = symmetry_from_string(string_at(jr.at("symmetry"), "symmetry", origin));
        }
        if (jr.contains("lambda")) src.lambda = number_at(jr.at("lambda"), "lambda", origin);
        if (jr.contains("shells")) src.shells = static_cast<int>(number_at(jr.at("shells"), "shells", origin));
        if (jr.contains("seed")) {
            if (!jr.at("seed").is_number()) key_error(origin, "seed", "expected a number");
            src.seed = jr.at("seed").get<std::uint64_t>();
        }
        cfg.random_source = src;
    }

    if (doc.contains("rates")) cfg.rate_mode = parse_rate_mode(doc.at("rates"), origin);

    if (doc.contains("variant")) {
        const std::string v = string_at(doc.at("variant"), "variant", origin);
        if (v == "spme") {
            cfg.run_spme = true;
            cfg.run_apme = false;
        } else if (v == "apme") {
            cfg.run_spme = false;
            cfg.run_apme = true;
        } else if (v == "both") {
            cfg.run_spme = true;
            cfg.run_apme = true;
        } else {
            key_error(origin, "variant", "expected 'spme', 'apme' or 'both'");
        }
    }

    if (doc.contains("p0") && doc.contains("matter_fraction")) {
        key_error(origin, "p0", "mutually exclusive with 'matter_fraction'");
    }
    if (doc.contains("p0")) {
        const json& jp = doc.at("p0");
        if (!jp.is_array()) key_error(origin, "p0", "expected an array");
        Eigen::VectorXd p0(jp.size());
        for (int i = 0; i < static_cast<int>(jp.size()); ++i) p0(i) = number_at(jp.at(i), "p0", origin);
        cfg.p0 = std::move(p0);
    }
    if (doc.contains("matter_fraction")) {
        cfg.matter_fraction = number_at(doc.at("matter_fraction"), "matter_fraction", origin);
    }

    if (doc.contains("time")) {
        const json& jt = doc.at("time");
        if (!jt.is_object()) key_error(origin, "time", "expected an object");
        reject_unknown_keys(jt, {"t0", "t1", "step"}, origin, "time");
        if (jt.contains("t0")) cfg.t0 = number_at(jt.at("t0"), "t0", origin);
        cfg.t1 = number_at(require_key(jt, "t1", origin), "t1", origin);
        if (jt.contains("step")) cfg.step = number_at(jt.at("step"), "step", origin);
    }
    if (doc.contains("sample_stride")) {
        cfg.sample_stride = static_cast<int>(number_at(doc.at("sample_stride"), "sample_stride", origin));
        if (cfg.sample_stride < 1) key_error(origin, "sample_stride", "must be >= 1");
    }

    if (doc.contains("microsim")) {
        const json& jm = doc.at("microsim");
        if (!jm.is_object()) key_error(origin, "microsim", "expected an object");
        reject_unknown_keys(jm, {"enabled", "tau_d", "cycles", "propagator"}, origin, "microsim");
        if (jm.contains("enabled")) cfg.microsim.enabled = bool_at(jm.at("enabled"), "enabled", origin);
        if (jm.contains("tau_d")) cfg.microsim.tau_d = number_at(jm.at("tau_d"), "tau_d", origin);
        if (jm.contains("cycles")) cfg.microsim.cycles = static_cast<int>(number_at(jm.at("cycles"), "cycles", origin));
        if (jm.contains("propagator")) {
            const std::string p = string_at(jm.at("propagator"), "propagator", origin);
            if (p == "exact") {
                cfg.microsim.propagator = PropagatorMode::Exact;
            } else if (p == "perturbative") {
                cfg.microsim.propagator = PropagatorMode::Perturbative;
            } else {
                key_error(origin, "propagator", "expected 'exact' or 'perturbative'");
            }
        }
    }

    if (doc.contains("output_dir")) {
        cfg.output_dir = std::filesystem::path(string_at(doc.at("output_dir"), "output_dir", origin));
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario_json(ss.str(), path.string());
}

Eigen::VectorXd scenario_initial_state(const ScenarioConfig& cfg, const SystemSpec& sys) {
    const int d = sys.dim();
    if (cfg.p0) {
        if (cfg.p0->size() != d) {
            throw std::invalid_argument("scenario p0 length " + std::to_string(cfg.p0->size()) +
                                        " does not match system dimension " + std::to_string(d));
        }
        return *cfg.p0;
    }
    if (cfg.matter_fraction) {
        const double f = *cfg.matter_fraction;
        if (f < 0.0 || f > 1.0) throw std::invalid_argument("matter_fraction must lie in [0, 1]");
        Eigen::VectorXd p0(d);
        p0.head(sys.n).setConstant((1.0 - f) / sys.n);
        p0.tail(sys.n).setConstant(f / sys.n);
        return p0;
    }
    return Eigen::VectorXd::Constant(d, 1.0 / d);
}

} // namespace pme
