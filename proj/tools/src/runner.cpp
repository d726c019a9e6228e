#include <algorithm>
#include <cmath>
#include <filesystem>

#include "flathiggs/correspondence.hpp"
#include "flathiggs/fixtures.hpp"
#include "flathiggs/line_moduli.hpp"
#include "flathiggs/stability.hpp"
#include "flathiggs/suites.hpp"

namespace fh::suites {

const std::vector<std::string>& commands() {
    static const std::vector<std::string> names = {"identities", "degree",       "solve-flat",
                                                   "solve-higgs", "stability",   "correspond",
                                                   "epsilon-family", "line-moduli", "full-suite"};
    return names;
}

namespace {

bool one_of(const std::string& v, std::initializer_list<const char*> options) {
    return std::any_of(options.begin(), options.end(), [&](const char* o) { return v == o; });
}

MatC period_matrix_of(const GeometrySpec& geo) {
    MatC tau(geo.n, geo.n);
    if (geo.tau.empty()) {
        if (geo.n == 1)
            tau << cd(0.3, 0.9);
        else
            tau << cd(0.2, 1.0), cd(0.0, 0.0), cd(0.0, 0.0), cd(0.1, 1.2);
        return tau;
    }
    for (int i = 0; i < geo.n; ++i)
        for (int j = 0; j < geo.n; ++j) tau(i, j) = geo.tau[static_cast<std::size_t>(i * geo.n + j)];
    return tau;
}

bool higgs_side(const SuiteConfig& cfg) { return cfg.command == "solve-higgs" || cfg.bundle.side == "higgs"; }

}  // namespace

void validate(const SuiteConfig& cfg) {
    const auto& cmds = commands();
    if (std::find(cmds.begin(), cmds.end(), cfg.command) == cmds.end())
        throw ConfigError("unknown command '" + cfg.command + "'");
    const GeometrySpec& geo = cfg.geometry;
    const BundleSpec& b = cfg.bundle;
    if (geo.n != 1 && geo.n != 2) throw ConfigError("geometry.n must be 1 or 2");
    const int max_grid = geo.n == 1 ? 256 : 32;
    if (geo.grid < 4 || geo.grid > max_grid || geo.grid % 2 != 0)
        throw ConfigError("geometry.grid must be even and lie in [4, " + std::to_string(max_grid) + "]");
    if (!geo.tau.empty() && geo.tau.size() != static_cast<std::size_t>(geo.n * geo.n))
        throw ConfigError("geometry.tau needs n * n entries");
    if (!one_of(geo.metric, {"unit", "euclidean", "smooth"}))
        throw ConfigError("geometry.metric must be unit, euclidean or smooth");
    if (!(geo.volume > 0.0)) throw ConfigError("geometry.volume must be positive");
    if (geo.metric == "smooth" && geo.n == 2) throw ConfigError("smooth metrics are supported on curves only");
    try {
        LatticeTorus::make(geo.n, 4, period_matrix_of(geo));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("geometry.tau: ") + e.what());
    }

    if (!one_of(b.kind, {"suite", "trivial", "random", "jordan", "file"}))
        throw ConfigError("bundle.kind must be suite, trivial, random, jordan or file");
    if (!one_of(b.mode, {"constant", "lattice"})) throw ConfigError("bundle.mode must be constant or lattice");
    if (!one_of(b.side, {"flat", "higgs"})) throw ConfigError("bundle.side must be flat or higgs");
    if (b.rank < 1 || b.rank > 4) throw ConfigError("bundle.rank must lie in [1, 4]");
    if (!(b.amplitude >= 0.0 && b.amplitude <= 1.0)) throw ConfigError("bundle.amplitude must lie in [0, 1]");
    if (!b.degree.empty()) {
        if (b.degree.size() != static_cast<std::size_t>(geo.n))
            throw ConfigError("bundle.degree needs one entry per complex dimension");
        const MatC tau = period_matrix_of(geo);
        if (geo.n == 2 && (std::abs(tau(0, 1)) > 0.0 || std::abs(tau(1, 0)) > 0.0))
            throw ConfigError("degree backgrounds on a surface need a diagonal period matrix");
    }
    for (const auto* path : {&b.connection_file, &b.higgs_b_file, &b.higgs_theta_file, &b.metric_file})
        if (!path->empty() && !std::filesystem::exists(*path)) throw ConfigError("file not found: " + *path);
    if (b.kind == "file") {
        if (higgs_side(cfg) ? (b.higgs_b_file.empty() || b.higgs_theta_file.empty()) : b.connection_file.empty())
            throw ConfigError("bundle.kind = file needs the connection or Higgs field files");
    }

    if (b.kind == "suite") {
        if (cfg.command == "solve-higgs")
            throw ConfigError("solve-higgs runs one object; set bundle.kind (its suite is reached through solve-flat)");
        return;
    }
    if (cfg.command == "full-suite") throw ConfigError("full-suite needs bundle.kind = suite");
    if ((cfg.command == "correspond" || cfg.command == "epsilon-family") && geo.n != 2)
        throw ConfigError(cfg.command + " needs a surface (geometry.n = 2)");
    if (cfg.command == "line-moduli" && b.rank != 1) throw ConfigError("line-moduli needs bundle.rank = 1");
    if (cfg.command == "line-moduli" && higgs_side(cfg)) throw ConfigError("line-moduli takes a flat line");
    if ((cfg.command == "correspond" || cfg.command == "epsilon-family" || cfg.command == "stability") &&
        higgs_side(cfg))
        throw ConfigError(cfg.command + " takes a flat object");
    if (cfg.command == "solve-flat" && b.side == "higgs") throw ConfigError("solve-flat takes a flat object");
    if (!b.degree.empty() && !higgs_side(cfg)) throw ConfigError("bundle.degree applies to Higgs objects");
    if (cfg.schedule.tol <= 0.0 || cfg.schedule.max_iters <= 0) throw ConfigError("solver.tol and solver.max_iters must be positive");
}

namespace {

struct Object {
    TorusPtr base;
    MetricG g;
    Connection flat;
    HiggsOp higgs;
    HermitianMetric h0;
};

LineBackground background_of(const SuiteConfig& cfg) {
    const auto& deg = cfg.bundle.degree;
    if (deg.empty()) return {};
    return cfg.geometry.n == 1 ? LineBackground::curve_degree(deg[0]) : LineBackground::surface_degrees(deg[0], deg[1]);
}

Object build(const SuiteConfig& cfg) {
    Object o;
    const GeometrySpec& geo = cfg.geometry;
    const BundleSpec& b = cfg.bundle;
    Rng rng(cfg.seed);
    FormField file_a, file_b;
    try {
        if (b.kind == "file" && higgs_side(cfg)) {
            file_a = read_field(b.higgs_b_file);
            file_b = read_field(b.higgs_theta_file);
        } else if (b.kind == "file") {
            file_a = read_field(b.connection_file);
        }
    } catch (const std::exception& e) {
        throw ConfigError(std::string("reading bundle files: ") + e.what());
    }
    // file objects carry their own torus
    o.base = b.kind == "file" ? file_a.base() : LatticeTorus::make(geo.n, geo.grid, period_matrix_of(geo));
    if (geo.metric == "unit")
        o.g = MetricG::with_volume(o.base, geo.volume);
    else if (geo.metric == "euclidean")
        o.g = MetricG::euclidean(o.base, geo.volume);
    else
        o.g = smooth_metric(o.base, rng, geo.volume);
    const bool constant = b.mode == "constant";
    const int r = b.rank;
    if (higgs_side(cfg)) {
        if (b.kind == "trivial") {
            o.higgs = HiggsOp::trivial(o.base, r, constant);
        } else if (b.kind == "file") {
            o.higgs = HiggsOp(file_a, file_b);
        } else {
            o.higgs = random_integrable_constant(o.base, rng, r, b.kind == "jordan");
            if (!constant) o.higgs = gauge(o.higgs, smooth_gauge(o.base, rng, r, 1, b.amplitude));
        }
        o.higgs.background = background_of(cfg);
    } else {
        if (b.kind == "trivial") {
            o.flat = Connection::trivial(o.base, r, constant);
        } else if (b.kind == "file") {
            o.flat = Connection(file_a);
        } else {
            o.flat = random_flat_constant(o.base, rng, r, b.kind == "jordan");
            if (!constant) o.flat = gauge(o.flat, smooth_gauge(o.base, rng, r, 1, b.amplitude));
        }
    }
    const int rank = higgs_side(cfg) ? o.higgs.rank() : o.flat.rank();
    if (!b.metric_file.empty()) {
        try {
            o.h0 = HermitianMetric(read_field(b.metric_file));
            require_same_base(*o.h0.base(), *o.base);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("reading bundle.metric_file: ") + e.what());
        }
    }
    else if (b.kind == "trivial")
        o.h0 = HermitianMetric::identity(o.base, rank);
    else
        o.h0 = random_metric_constant(o.base, rng, rank);
    return o;
}

void require_same_rank(const Object& o, int rank) {
    if (o.h0.rank() != rank) throw ConfigError("metric file rank does not match the bundle");
}

SuiteResult single_identities(const SuiteConfig& cfg, const Object& o) {
    SuiteResult s{"identities"};
    const bool lattice = !(o.flat.is_constant() && o.h0.is_constant());
    const double tol = lattice ? 1e-6 : 1e-9;
    Row& row = s.add_row("object");
    if (higgs_side(cfg)) {
        const auto res = higgs_identities(o.higgs, o.h0);
        const double bij = std::max(max_difference(to_higgs(from_higgs(o.higgs, o.h0), o.h0).B, o.higgs.B),
                                    max_difference(to_higgs(from_higgs(o.higgs, o.h0), o.h0).theta, o.higgs.theta));
        row.set("integrability", integrability_residual(o.higgs))
            .set("del_h_squared", res.del_h_squared)
            .set("del_h_theta_star", res.del_h_theta_star)
            .set("theta_star_squared", res.theta_star_squared)
            .set("bijection_error", bij);
        s.require(res.max() < tol, "Higgs identity residual " + std::to_string(res.max()), &row);
        s.require(bij < 1e-10 * (1.0 + o.higgs.total().max_abs()), "bijection round trip", &row);
        return s;
    }
    const auto res = flat_identities(o.flat, o.h0);
    const double bij = max_difference(from_higgs(to_higgs(o.flat, o.h0), o.h0).A, o.flat.A);
    row.set("flatness", flatness_residual(o.flat))
        .set("delta_squared", res.delta_squared)
        .set("dh_theta", res.dh_theta)
        .set("del_theta", res.del_theta)
        .set("delbar_theta_star", res.delbar_theta_star)
        .set("mixed", res.mixed)
        .set("dh_squared_plus", res.dh_squared_plus)
        .set("bijection_error", bij);
    s.require(res.max() < tol, "identity residual " + std::to_string(res.max()), &row);
    s.require(bij < 1e-10 * (1.0 + o.flat.A.max_abs()), "bijection round trip", &row);
    return s;
}

SuiteResult single_degree(const SuiteConfig& cfg, const Object& o) {
    SuiteResult s{"degree"};
    Row& row = s.add_row("object");
    double a, b, c;
    if (higgs_side(cfg)) {
        a = degree_higgs(o.higgs, o.g, o.h0);
        b = degree_via_curvature(o.higgs, o.g, o.h0);
        c = degree_higgs(o.higgs, o.g, HermitianMetric::identity(o.base, o.higgs.rank()));
        row.set("holomorphic", a).set("higgs_curvature", b).set("holomorphic_identity_metric", c);
    } else {
        a = degree_flat(o.flat, o.g, o.h0);
        b = degree_via_pseudocurvature(o.flat, o.g, o.h0);
        c = degree_flat(o.flat, o.g, HermitianMetric::identity(o.base, o.flat.rank()));
        row.set("holomorphic", a).set("pseudocurvature", b).set("holomorphic_identity_metric", c);
    }
    const double spread = std::max({std::abs(a - b), std::abs(b - c), std::abs(a - c)});
    row.set("spread", spread);
    s.require(spread < 1e-7, "degree computations disagree by " + std::to_string(spread), &row);
    return s;
}

SuiteResult single_solve(const SuiteConfig& cfg, const Object& o) {
    SuiteResult s{higgs_side(cfg) ? "solve_higgs" : "solve_flat"};
    const EinsteinSolution sol = higgs_side(cfg) ? solve_higgs_einstein(o.higgs, o.g, o.h0, cfg.schedule)
                                                 : solve_flat_einstein(o.flat, o.g, o.h0, cfg.schedule);
    Row& row = s.add_row("object");
    const double mu = higgs_side(cfg) ? slope_higgs(o.higgs, o.g, o.h0) : slope_flat(o.flat, o.g, o.h0);
    const double expected = higgs_side(cfg) ? einstein_constant_higgs(mu, o.base->n(), o.g.volume())
                                            : einstein_constant_flat(mu, o.base->n(), o.g.volume());
    row.set("slope", mu).set("expected_c", expected);
    row.set("c", sol.report.c)
        .set("residual", sol.report.residual_norm)
        .set("iterations", sol.report.iterations)
        .set("converged", sol.report.converged ? 1.0 : 0.0)
        .set("log_f_norm", sol.report.log_f_norm)
        .tag("status", sol.report.status);
    s.histories.push_back(History{s.name + "_object", sol.report.history});
    if (sol.report.converged) {
        s.require(sol.report.residual_norm <= std::max(cfg.schedule.tol, 1e-7) * 10.0, "residual above tolerance", &row);
        return s;
    }
    // divergence is an outcome; it must come with a destabilizing witness
    if (s.require(sol.witness.has_value(), "diverged without a witness", &row)) {
        const Witness& w = *sol.witness;
        row.set("witness_rank", static_cast<double>(w.basis.cols()))
            .set("witness_slope", w.slope)
            .set("witness_total_slope", w.total_slope)
            .set("witness_distance", w.distance)
            .set("witness_violates_stability", w.violates_stability ? 1.0 : 0.0);
        for (int j = 0; j < w.basis.cols(); ++j)
            for (int i = 0; i < w.basis.rows(); ++i) {
                const std::string key = "witness_basis_" + std::to_string(i) + "_" + std::to_string(j);
                row.set(key + "_re", w.basis(i, j).real()).set(key + "_im", w.basis(i, j).imag());
            }
        s.require(w.violates_stability, "witness does not violate stability", &row);
    }
    return s;
}

SuiteResult single_stability(const SuiteConfig& cfg, const Object& o) {
    SuiteResult s{"stability"};
    const auto cls = classify_flat(o.flat, o.g, o.h0);
    const auto sol = solve_flat_einstein(o.flat, o.g, o.h0, cfg.schedule);
    const bool polystable =
        cls.classification == Classification::Stable || cls.classification == Classification::Polystable;
    Row& row = s.add_row("object");
    row.tag("classification", to_string(cls.classification))
        .set("invariant_subspaces", static_cast<double>(cls.subspaces.size()))
        .set("converged", sol.report.converged ? 1.0 : 0.0)
        .tag("status", sol.report.status);
    s.histories.push_back(History{"stability_object", sol.report.history});
    s.require(polystable == sol.report.converged, "classifier and solver disagree", &row);
    if (!sol.report.converged)
        s.require(sol.witness && sol.witness->violates_stability, "no destabilizing witness", &row);
    return s;
}

SuiteResult single_correspond(const SuiteConfig& cfg, const Object& o) {
    SuiteResult s{"correspondence"};
    CorrespondenceOptions opts;
    opts.schedule = cfg.schedule;
    const auto rep = moduli_roundtrip_suite({o.flat}, o.g, cfg.seed, opts);
    const auto& smp = rep.samples.front();
    Row& row = s.add_row("object");
    if (!smp.error.empty()) {
        row.tag("error", smp.error);
        s.require(false, smp.error, &row);
        return s;
    }
    row.set("pseudocurvature_norm", smp.forward.pseudocurvature_norm)
        .set("integrability", smp.forward.integrability)
        .set("degree", smp.forward.degree)
        .set("higgs_einstein_residual", smp.forward.higgs_einstein_residual)
        .set("flat_round_trip", smp.flat_round_trip ? 1.0 : 0.0)
        .set("higgs_round_trip", smp.higgs_round_trip ? 1.0 : 0.0)
        .set("worst_certificate", smp.worst_certificate);
    s.histories.push_back(History{"correspondence_object", smp.forward.report.history});
    s.require(rep.passed == 1, "round trip failed", &row);
    return s;
}

SuiteResult single_epsilon(const SuiteConfig& cfg, const Object& o) {
    SuiteResult s{"selfduality"};
    const auto sol = solve_flat_einstein(o.flat, o.g, o.h0, cfg.schedule);
    Row& row = s.add_row("object");
    s.histories.push_back(History{"selfduality_object", sol.report.history});
    if (!s.require(sol.report.converged, "solver did not converge", &row)) return s;
    const auto split = selfduality_split(pseudocurvature(o.flat, sol.h), o.g, sol.h);
    const auto table = epsilon_family_check(o.flat, sol.h, o.g);
    row.set("star_G11", split.star_G11)
        .set("star_G2", split.star_G2)
        .set("adjoint_G11", split.adjoint_G11)
        .set("adjoint_G2", split.adjoint_G2)
        .set("combined", split.combined)
        .set("eps_max_entry", table.max_entry());
    for (const auto& e : table.rows) {
        Row& er = s.add_row("eps_" + std::to_string(e.eps));
        er.set("eps", e.eps)
            .set("trace_F_squared_re", e.trace_F_squared.real())
            .set("trace_F_squared_im", e.trace_F_squared.imag())
            .set("trace_nabla_fourth_re", e.trace_nabla_fourth.real())
            .set("trace_nabla_fourth_im", e.trace_nabla_fourth.imag())
            .set("scaling_residual", e.scaling_residual);
    }
    const double lattice_tol = o.flat.is_constant() && o.h0.is_constant() ? 1e-9 : 1e-6;
    s.require(split.max() < lattice_tol, "self-duality residual " + std::to_string(split.max()));
    s.require(table.max_entry() < lattice_tol, "eps-family entry " + std::to_string(table.max_entry()));
    return s;
}

SuiteResult single_line(const Object& o) {
    SuiteResult s{"line_moduli"};
    const FlatLineClass cls = FlatLineClass::of(o.flat);
    const HiggsLineClass via_class = flat_to_higgs_line(cls, o.g);
    const HiggsLineClass via_metric = flat_to_higgs_line(o.flat, o.g, o.h0);
    const double round_trip = higgs_to_flat_line(via_class, *o.base).distance(cls);
    Row& row = s.add_row("object");
    for (int k = 0; k < cls.holonomy.size(); ++k)
        row.set("holonomy_" + std::to_string(k) + "_re", cls.holonomy(k).real())
            .set("holonomy_" + std::to_string(k) + "_im", cls.holonomy(k).imag());
    for (int j = 0; j < via_class.theta.size(); ++j)
        row.set("theta_" + std::to_string(j) + "_re", via_class.theta(j).real())
            .set("theta_" + std::to_string(j) + "_im", via_class.theta(j).imag());
    row.set("round_trip", round_trip).set("einstein_route_distance", via_metric.distance(via_class));
    s.require(round_trip < 1e-9, "line round trip " + std::to_string(round_trip), &row);
    s.require(via_metric.distance(via_class) < 1e-6, "Einstein route differs from the class map", &row);
    return s;
}

}  // namespace

std::vector<SuiteResult> run(const SuiteConfig& cfg) {
    validate(cfg);
    const std::uint64_t seed = cfg.seed;
    const std::string& c = cfg.command;
    if (cfg.bundle.kind == "suite") {
        if (c == "identities") return {identity_suite(seed), bijection_suite(seed)};
        if (c == "degree") return {degree_suite(seed)};
        if (c == "solve-flat") return {einstein_constant_suite(seed), vanishing_suite(seed)};
        if (c == "stability") return {stability_suite(seed)};
        if (c == "correspond") return {surface_suite(seed)};
        if (c == "epsilon-family") return {selfduality_suite(seed)};
        if (c == "line-moduli") return {line_suite(seed)};
        return {identity_suite(seed),   bijection_suite(seed),  degree_suite(seed),   einstein_constant_suite(seed),
                vanishing_suite(seed),  stability_suite(seed),  surface_suite(seed),  selfduality_suite(seed),
                line_suite(seed),       refinement_suite(seed)};
    }
    const Object o = build(cfg);
    require_same_rank(o, higgs_side(cfg) ? o.higgs.rank() : o.flat.rank());
    if (c == "identities") return {single_identities(cfg, o)};
    if (c == "degree") return {single_degree(cfg, o)};
    if (c == "solve-flat" || c == "solve-higgs") return {single_solve(cfg, o)};
    if (c == "stability") return {single_stability(cfg, o)};
    if (c == "correspond") return {single_correspond(cfg, o)};
    if (c == "epsilon-family") return {single_epsilon(cfg, o)};
    return {single_line(o)};
}

}  // namespace fh::suites
