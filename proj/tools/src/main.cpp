// flathiggs: config-driven runner for the suites.
//
//   flathiggs <command> [--config file.json] [--seed N] [--out dir] [--tol x]
//
// Exit status: 0 success, 1 suite failure, 2 configuration error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "flathiggs/suites.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using fh::suites::ConfigError;
using fh::suites::SuiteConfig;
using fh::suites::SuiteResult;

namespace {

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : obj.items()) {
        bool known = false;
        for (const char* key : keys) known = known || k == key;
        if (!known) throw ConfigError("unknown key " + where + "." + k);
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for " + where + "." + key);
    }
}

struct Outputs {
    std::string dir = "flathiggs_out";
    bool history = true;
};

SuiteConfig parse_config(const json& root, Outputs& out) {
    SuiteConfig cfg;
    reject_unknown(root, "config", {"command", "seed", "geometry", "bundle", "solver", "output"});
    read(root, "command", cfg.command, "config");
    read(root, "seed", cfg.seed, "config");
    if (root.contains("geometry")) {
        const json& g = root["geometry"];
        reject_unknown(g, "geometry", {"n", "grid", "tau", "metric", "volume"});
        read(g, "n", cfg.geometry.n, "geometry");
        read(g, "grid", cfg.geometry.grid, "geometry");
        read(g, "metric", cfg.geometry.metric, "geometry");
        read(g, "volume", cfg.geometry.volume, "geometry");
        if (g.contains("tau")) {
            // [[re, im], ...] row-major
            std::vector<std::vector<double>> raw;
            read(g, "tau", raw, "geometry");
            for (const auto& e : raw) {
                if (e.size() != 2) throw ConfigError("geometry.tau entries are [re, im] pairs");
                cfg.geometry.tau.emplace_back(e[0], e[1]);
            }
        }
    }
    if (root.contains("bundle")) {
        const json& b = root["bundle"];
        reject_unknown(b, "bundle", {"kind", "mode", "side", "rank", "degree", "amplitude", "connection_file",
                                     "higgs_b_file", "higgs_theta_file", "metric_file"});
        read(b, "kind", cfg.bundle.kind, "bundle");
        read(b, "mode", cfg.bundle.mode, "bundle");
        read(b, "side", cfg.bundle.side, "bundle");
        read(b, "rank", cfg.bundle.rank, "bundle");
        read(b, "degree", cfg.bundle.degree, "bundle");
        read(b, "amplitude", cfg.bundle.amplitude, "bundle");
        read(b, "connection_file", cfg.bundle.connection_file, "bundle");
        read(b, "higgs_b_file", cfg.bundle.higgs_b_file, "bundle");
        read(b, "higgs_theta_file", cfg.bundle.higgs_theta_file, "bundle");
        read(b, "metric_file", cfg.bundle.metric_file, "bundle");
    }
    if (root.contains("solver")) {
        const json& s = root["solver"];
        reject_unknown(s, "solver", {"max_iters", "tol", "strategy", "blowup", "newton", "precondition"});
        read(s, "max_iters", cfg.schedule.max_iters, "solver");
        read(s, "tol", cfg.schedule.tol, "solver");
        read(s, "blowup", cfg.schedule.blowup, "solver");
        read(s, "newton", cfg.schedule.newton, "solver");
        read(s, "precondition", cfg.schedule.precondition, "solver");
        std::string strategy = "flow";
        read(s, "strategy", strategy, "solver");
        if (strategy == "flow")
            cfg.schedule.strategy = fh::SolverStrategy::Flow;
        else if (strategy == "continuity")
            cfg.schedule.strategy = fh::SolverStrategy::Continuity;
        else
            throw ConfigError("solver.strategy must be flow or continuity");
    }
    if (root.contains("output")) {
        const json& o = root["output"];
        reject_unknown(o, "output", {"dir", "history"});
        read(o, "dir", out.dir, "output");
        read(o, "history", out.history, "output");
    }
    return cfg;
}

json echo_config(const SuiteConfig& cfg) {
    json tau = json::array();
    for (const auto& t : cfg.geometry.tau) tau.push_back({t.real(), t.imag()});
    return {
        {"command", cfg.command},
        {"seed", cfg.seed},
        {"geometry",
         {{"n", cfg.geometry.n},
          {"grid", cfg.geometry.grid},
          {"tau", tau},
          {"metric", cfg.geometry.metric},
          {"volume", cfg.geometry.volume}}},
        {"bundle",
         {{"kind", cfg.bundle.kind},
          {"mode", cfg.bundle.mode},
          {"side", cfg.bundle.side},
          {"rank", cfg.bundle.rank},
          {"degree", cfg.bundle.degree},
          {"amplitude", cfg.bundle.amplitude},
          {"connection_file", cfg.bundle.connection_file},
          {"higgs_b_file", cfg.bundle.higgs_b_file},
          {"higgs_theta_file", cfg.bundle.higgs_theta_file},
          {"metric_file", cfg.bundle.metric_file}}},
        {"solver",
         {{"max_iters", cfg.schedule.max_iters},
          {"tol", cfg.schedule.tol},
          {"strategy", cfg.schedule.strategy == fh::SolverStrategy::Flow ? "flow" : "continuity"},
          {"blowup", cfg.schedule.blowup},
          {"newton", cfg.schedule.newton},
          {"precondition", cfg.schedule.precondition}}},
    };
}

json suite_json(const SuiteResult& s) {
    json rows = json::array();
    for (const auto& r : s.rows) {
        json values = json::object();
        for (const auto& [k, v] : r.values) values[k] = v;
        json tags = json::object();
        for (const auto& [k, v] : r.tags) tags[k] = v;
        rows.push_back({{"label", r.label}, {"passed", r.passed}, {"values", values}, {"tags", tags}});
    }
    json metrics = json::object();
    for (const auto& [k, v] : s.metrics) metrics[k] = v;
    return {{"name", s.name}, {"passed", s.passed}, {"metrics", metrics}, {"rows", rows}, {"failures", s.failures}};
}

std::string csv_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

void write_outputs(const Outputs& out, const SuiteConfig& cfg, const std::vector<SuiteResult>& results, bool passed) {
    fs::create_directories(out.dir);
    json report = {{"config", echo_config(cfg)}, {"passed", passed}, {"suites", json::array()}};
    for (const auto& s : results) report["suites"].push_back(suite_json(s));
    std::ofstream(fs::path(out.dir) / "report.json") << report.dump(2) << "\n";

    std::ofstream csv(fs::path(out.dir) / "summary.csv");
    csv << "suite,row,key,value\n";
    for (const auto& s : results) {
        csv << s.name << ",,passed," << (s.passed ? 1 : 0) << "\n";
        for (const auto& [k, v] : s.metrics) csv << s.name << ",," << k << "," << csv_number(v) << "\n";
        for (const auto& r : s.rows) {
            csv << s.name << "," << r.label << ",passed," << (r.passed ? 1 : 0) << "\n";
            for (const auto& [k, v] : r.values) csv << s.name << "," << r.label << "," << k << "," << csv_number(v) << "\n";
        }
    }

    if (!out.history) return;
    const fs::path hist = fs::path(out.dir) / "history";
    fs::create_directories(hist);
    for (const auto& s : results)
        for (const auto& h : s.histories) {
            if (h.residuals.empty()) continue;
            std::ofstream f(hist / (h.name + ".csv"));
            f << "iteration,residual\n";
            for (std::size_t i = 0; i < h.residuals.size(); ++i) f << i << "," << csv_number(h.residuals[i]) << "\n";
        }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flat bundles and Higgs operators on complex tori: experiment runner"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<double> tol;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--seed", seed, "RNG seed (overrides the config)");
    app.add_option("--out", out_dir, "output directory (overrides the config)");
    app.add_option("--tol", tol, "solver tolerance (overrides the config)");
    for (const auto& name : fh::suites::commands()) app.add_subcommand(name, "run the " + name + " suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    Outputs out;
    SuiteConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("cannot open config " + config_path);
            json root;
            try {
                root = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ConfigError(std::string("config is not valid JSON: ") + e.what());
            }
            cfg = parse_config(root, out);
        }
        const std::string command = app.get_subcommands().front()->get_name();
        if (!cfg.command.empty() && cfg.command != command)
            throw ConfigError("config command '" + cfg.command + "' does not match '" + command + "'");
        cfg.command = command;
        if (seed) cfg.seed = *seed;
        if (out_dir) out.dir = *out_dir;
        if (tol) cfg.schedule.tol = *tol;
        fh::suites::validate(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    std::vector<SuiteResult> results;
    try {
        results = fh::suites::run(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        SuiteResult failed{cfg.command};
        failed.require(false, e.what());
        results.push_back(failed);
    }

    bool passed = true;
    for (const auto& s : results) passed = passed && s.passed;
    try {
        write_outputs(out, cfg, results, passed);
    } catch (const std::exception& e) {
        std::cerr << "cannot write outputs: " << e.what() << "\n";
        return 2;
    }
    for (const auto& s : results) {
        std::cout << (s.passed ? "PASS " : "FAIL ") << s.name;
        for (const auto& [k, v] : s.metrics) std::cout << "  " << k << "=" << v;
        std::cout << "\n";
        for (const auto& f : s.failures) std::cout << "  failure: " << f << "\n";
    }
    std::cout << "report: " << (fs::path(out.dir) / "report.json").string() << "\n";
    return passed ? 0 : 1;
}
