// One PASS/FAIL line per acceptance criterion, with the runtime against its bound.
// Usage: acceptance [seed] [criterion...]

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "flathiggs/suites.hpp"

using fh::suites::SuiteResult;

namespace {

struct Criterion {
    int id;
    std::string title;
    double bound_seconds;  // 0: no runtime bound
    std::function<std::vector<SuiteResult>(std::uint64_t)> run;
};

std::string summary(const std::vector<SuiteResult>& results) {
    std::ostringstream os;
    os << std::setprecision(3);
    bool first = true;
    for (const auto& s : results)
        for (const auto& [k, v] : s.metrics) {
            os << (first ? "" : ", ") << k << "=" << v;
            first = false;
        }
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    std::uint64_t seed = 20240601;
    std::set<int> only;
    if (argc > 1) seed = std::strtoull(argv[1], nullptr, 10);
    for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));

    using namespace fh::suites;
    const std::vector<Criterion> criteria = {
        {1, "flat identity suite", 30.0, [](std::uint64_t s) { return std::vector{identity_suite(s)}; }},
        {2, "bijection exactness", 5.0, [](std::uint64_t s) { return std::vector{bijection_suite(s)}; }},
        {3, "degree consistency", 60.0, [](std::uint64_t s) { return std::vector{degree_suite(s)}; }},
        {4, "Einstein constants", 10.0, [](std::uint64_t s) { return std::vector{einstein_constant_suite(s)}; }},
        {5, "stability vs solver convergence", 300.0, [](std::uint64_t s) { return std::vector{stability_suite(s)}; }},
        {6, "vanishing theorems", 60.0, [](std::uint64_t s) { return std::vector{vanishing_suite(s)}; }},
        {7, "surface correspondence", 600.0,
         [](std::uint64_t s) { return std::vector{surface_suite(s), selfduality_suite(s)}; }},
        {8, "line bundle suite", 10.0, [](std::uint64_t s) { return std::vector{line_suite(s)}; }},
        {9, "grid refinement", 0.0, [](std::uint64_t s) { return std::vector{refinement_suite(s)}; }},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<SuiteResult> results;
        std::string error;
        try {
            results = c.run(seed);
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool ok = error.empty();
        for (const auto& s : results) ok = ok && s.passed;
        const bool in_time = c.bound_seconds <= 0.0 || secs < c.bound_seconds;
        const bool pass = ok && in_time;
        if (!pass) ++failed;
        std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << "  " << c.title << "  ["
                  << std::fixed << std::setprecision(1) << secs << " s";
        if (c.bound_seconds > 0.0) std::cout << " / " << c.bound_seconds << " s";
        std::cout << "]  " << std::defaultfloat << summary(results) << "\n";
        if (!error.empty()) std::cout << "    error: " << error << "\n";
        if (!in_time) std::cout << "    runtime bound exceeded\n";
        for (const auto& s : results)
            for (const auto& f : s.failures) std::cout << "    " << s.name << ": " << f << "\n";
        std::cout.flush();
    }
    return failed == 0 ? 0 : 1;
}
