#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "flathiggs/einstein_solver.hpp"

namespace fh::suites {

struct Row {
    std::string label;
    std::vector<std::pair<std::string, double>> values;
    std::vector<std::pair<std::string, std::string>> tags;
    bool passed = true;

    Row& set(const std::string& key, double v);
    Row& tag(const std::string& key, const std::string& v);
};

// Residual history of one solver run, for plotting.
struct History {
    std::string name;
    std::vector<double> residuals;
};

struct SuiteResult {
    explicit SuiteResult(std::string n = {}) : name(std::move(n)) {}

    std::string name;
    bool passed = true;
    std::vector<std::pair<std::string, double>> metrics;
    std::vector<Row> rows;
    std::vector<History> histories;
    std::vector<std::string> failures;

    Row& add_row(const std::string& label);
    void metric(const std::string& key, double v);
    // Records a failure (and marks `row` failed) when `ok` is false.
    bool require(bool ok, const std::string& what, Row* row = nullptr);
};

struct GeometrySpec {
    int n = 2;
    int grid = 8;
    std::vector<cd> tau;      // row-major n x n; empty selects the default period matrix
    std::string metric = "unit";  // unit | euclidean | smooth
    double volume = 1.0;
};

struct BundleSpec {
    // suite runs the acceptance suite of the command; the other kinds build one object.
    std::string kind = "suite";       // suite | trivial | random | jordan | file
    std::string mode = "constant";    // constant | lattice
    std::string side = "flat";        // flat | higgs
    int rank = 2;
    std::vector<int> degree;          // degree background of a Higgs object, one entry per coordinate curve
    double amplitude = 0.05;          // gauge amplitude of lattice objects
    std::string connection_file;
    std::string higgs_b_file;
    std::string higgs_theta_file;
    std::string metric_file;          // starting bundle metric; random constant when empty
};

struct SuiteConfig {
    std::string command;
    std::uint64_t seed = 1;
    GeometrySpec geometry;
    BundleSpec bundle;
    SolverSchedule schedule;
};

// Subcommand names, in the order of the command enumeration.
const std::vector<std::string>& commands();

// Throws ConfigError when the configuration cannot be run.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
void validate(const SuiteConfig& cfg);

// Runs the named command: the acceptance suites for kind = suite, one object otherwise.
std::vector<SuiteResult> run(const SuiteConfig& cfg);

// Acceptance suites.  Each sets `passed` from its own thresholds.
SuiteResult identity_suite(std::uint64_t seed);          // flat identities, constant and 16-point lattices
SuiteResult bijection_suite(std::uint64_t seed);         // from_higgs o to_higgs and the converse
SuiteResult degree_suite(std::uint64_t seed);            // three degree computations
SuiteResult einstein_constant_suite(std::uint64_t seed); // solver c against the closed forms
SuiteResult vanishing_suite(std::uint64_t seed);         // kernel sections at c = 0 and c < 0
SuiteResult stability_suite(std::uint64_t seed);         // classifier against solver convergence
SuiteResult surface_suite(std::uint64_t seed, bool lattice_sample = true);  // correspondence round trips at 12^4
SuiteResult selfduality_suite(std::uint64_t seed);       // self-duality split and eps-family table at 12^4
SuiteResult line_suite(std::uint64_t seed);              // line correspondence and the abstract model
SuiteResult refinement_suite(std::uint64_t seed);        // residual reduction under grid doubling

}  // namespace fh::suites
