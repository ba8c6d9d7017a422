#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fluxlaw/budgets.hpp"
#include "fluxlaw/cascade.hpp"
#include "fluxlaw/config.hpp"
#include "fluxlaw/correlations.hpp"
#include "fluxlaw/io.hpp"
#include "fluxlaw/khm.hpp"
#include "fluxlaw/parallel.hpp"
#include "fluxlaw/sim2d.hpp"
#include "fluxlaw/sphere.hpp"

using namespace fluxlaw;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kGateFailed = 1;
constexpr int kUsage = 2;

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// "-" or empty writes to stdout.
void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << text;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
}

// ----------------------------------------------------------------------------
// coeffs

struct CoeffsArgs {
    int d = 2;
    int kmax = 6;
    std::string out;
};

int run_coeffs(const CoeffsArgs& a) {
    Csv csv({"quantity", "value", "decimal"});
    auto add = [&](const std::string& name, const Rational& r) { csv.row({name, r.str(), format_number(to_double(r))}); };
    for (int k = 0; k <= a.kmax; ++k) add("beta_d(" + std::to_string(k) + ")", beta(a.d, k));
    for (int k = 1; k <= a.kmax; ++k) add("pairing_count(" + std::to_string(k) + ")", Rational(pairing_count(k)));
    const auto inv = flux_constants(a.d, CascadeDirection::inverse);
    add("gamma_d", inv[0].coefficient);
    add("kappa_d", inv[1].coefficient);
    for (const auto& c : flux_constants(a.d, CascadeDirection::direct)) add("direct " + c.name + " per " + c.flux, c.coefficient);
    emit(a.out, csv.str());
    return kOk;
}

// ----------------------------------------------------------------------------
// kernels

struct KernelArgs {
    int d = 2;
    std::vector<int> p{0, 1, 2};
    double x_max = 50.0;
    int points = 500;
    bool check = false;
    double tolerance = 1e-8;
    std::string family;
    std::string out;
};

int run_kernels(const KernelArgs& a) {
    if (a.points < 2 || !(a.x_max > 0.0)) throw ConfigError("kernels: need points >= 2 and x_max > 0");
    std::vector<double> x(a.points);
    for (int i = 0; i < a.points; ++i) x[i] = a.x_max * i / (a.points - 1);

    if (!a.family.empty()) {
        const FamilyId id = family_from_string(a.family);
        const bool inverse = id == FamilyId::inv_S0 || id == FamilyId::inv_Spar;
        const auto c = coefficient_family(id, inverse ? a.d : 0);
        Csv csv({"x", "c", "limit", "gap_closed"});
        for (double v : x) csv.row({v, c(v), to_double(c.limit), v > 0.0 ? c.gap_closed(v) : to_double(c.limit)});
        emit(a.out, csv.str());
        return kOk;
    }

    const SphereRule rule = auto_sphere_rule(a.d, a.x_max);
    std::vector<std::string> header{"x", "p", "tangential", "longitudinal"};
    if (a.check)
        for (const char* h : {"tangential_quadrature", "longitudinal_quadrature", "max_abs_diff"}) header.push_back(h);
    Csv csv(header);
    double worst = 0.0;
    for (int p : a.p) {
        if (p < 0) throw ConfigError("kernels: p must be nonnegative");
        std::vector<std::vector<double>> rows(x.size());
        parallel_for(x.size(), [&](std::size_t i) {
            const double t = tangential_kernel(a.d, p, x[i]), l = longitudinal_kernel(a.d, p, x[i]);
            rows[i] = {x[i], static_cast<double>(p), t, l};
            if (a.check) {
                const double tq = rule.average([&](const Vec3& n) { return std::pow(n[0], 2 * p) * std::cos(x[i] * n[0]); });
                // t = e_2 is orthogonal to e = e_1
                const double lq = rule.average(
                    [&](const Vec3& n) { return n[1] * n[1] * std::pow(n[0], 2 * p) * std::cos(x[i] * n[0]); });
                rows[i].insert(rows[i].end(), {tq, lq, std::max(std::abs(t - tq), std::abs(l - lq))});
            }
        });
        for (const auto& r : rows) {
            csv.row(r);
            if (a.check) worst = std::max(worst, r.back());
        }
    }
    emit(a.out, csv.str());
    if (a.check) {
        std::cerr << "kernels: max |series - quadrature| = " << worst << " (tolerance " << a.tolerance << ")\n";
        return worst <= a.tolerance ? kOk : kGateFailed;
    }
    return kOk;
}

// ----------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string config;
    std::string out;
};

int run_simulate(const SimulateArgs& a) {
    const json resolved = resolve_run_config(load_config(a.config));
    const SimConfig cfg = sim_config_from(resolved);
    std::optional<SpectralField> initial;
    const json& init = resolved.at("sim").at("initial");
    if (!init.is_null()) {
        try {
            initial = read_snapshot(init.get<std::string>());
        } catch (const std::runtime_error& e) {
            throw InputError(e.what());
        }
        if (initial->grid != cfg.grid || initial->kind != FieldKind::scalar)
            throw ConfigError("sim.initial must be a vorticity snapshot on the configured grid");
    }
    const TrajectoryStats st = run_stationary(cfg, initial ? &*initial : nullptr);
    ensure_dir(a.out);
    write_run(a.out, report_envelope("simulate", resolved), st);
    std::cerr << "simulate: " << st.snapshots.size() << " snapshots, drift " << st.drift
              << (st.stationary ? "" : " (above the stationarity tolerance)") << "\n";
    return st.stationary ? kOk : kGateFailed;
}

// ----------------------------------------------------------------------------
// Run-directory commands

std::vector<double> ell_grid_for(const json& resolved, const WaveGrid& g) {
    const json& dg = resolved.at("diagnostics");
    const int points = dg.at("ell_points").get<int>();
    if (dg.at("ell_lo").is_null() && dg.at("ell_hi").is_null()) return default_ell_grid(g, points);
    // same defaults as default_ell_grid
    const double lo = dg.at("ell_lo").is_null() ? 3.0 / (g.k0() * g.n()) : dg.at("ell_lo").get<double>();
    const double hi = dg.at("ell_hi").is_null() ? 0.45 * g.lambda() : dg.at("ell_hi").get<double>();
    return log_grid(lo, hi, points);
}

json curve_json(const std::string& kind, const StructureCurve& c) {
    return {{"kind", kind}, {"samples", c.samples}, {"estimator", c.estimator}, {"points", c.ell.size()}};
}

struct DirArgs {
    std::string dir;
    std::string out;  // defaults to dir
    std::vector<std::string> kinds;
    std::optional<double> tolerance, band_lo, band_hi;
    std::vector<double> gammas;
};

std::string out_dir(const DirArgs& a) {
    const std::string o = a.out.empty() ? a.dir : a.out;
    ensure_dir(o);
    return o;
}

json command_config(const RunData& run, const json& options) {
    json c = run.envelope.at("config");
    return {{"seed", c.at("seed")}, {"run", c}, {"options", options}};
}

int run_structure(const DirArgs& a) {
    RunData run = read_run(a.dir);
    const json& cfg = run.envelope.at("config");
    auto kinds = a.kinds.empty() ? cfg.at("diagnostics").at("kinds").get<std::vector<std::string>>() : a.kinds;
    if (run.stats.snapshots.empty()) throw InputError(a.dir + ": run has no snapshots");
    const auto ell = ell_grid_for(cfg, run.stats.snapshots.front().grid);
    StructureAccumulator acc(run.stats.snapshots.front().grid, ell);
    for (const auto& s : run.stats.snapshots) acc.add(s);
    const std::string o = out_dir(a);
    json curves = json::array();
    for (const auto& k : kinds) {
        const auto curve = acc.curve(structure_kind_from_string(k));
        Csv csv({"ell", "value", "std_error"});
        for (std::size_t i = 0; i < curve.ell.size(); ++i) csv.row({curve.ell[i], curve.value[i], curve.std_error[i]});
        csv.write(path_in(o, "structure_" + k + ".csv"));
        curves.push_back(curve_json(k, curve));
    }
    json rep = report_envelope("structure", command_config(run, {{"kinds", kinds}}));
    rep["curves"] = curves;
    write_json(path_in(o, "structure.json"), rep);
    return kOk;
}

int run_khm_check(const DirArgs& a) {
    RunData run = read_run(a.dir);
    const json& cfg = run.envelope.at("config");
    if (run.stats.snapshots.empty()) throw InputError(a.dir + ": run has no snapshots");
    const WaveGrid g = run.stats.snapshots.front().grid;
    const ForcingSpec forcing = forcing_from_config(cfg);
    const auto ell = ell_grid_for(cfg, g);
    const double tol = a.tolerance.value_or(cfg.at("tolerances").at("khm").get<double>());
    const json& dg = cfg.at("diagnostics");
    const double lo = a.band_lo.value_or(dg.at("band_lo").is_null() ? 8.0 * g.spacing() : dg.at("band_lo").get<double>());
    const double hi = a.band_hi.value_or(dg.at("band_hi").is_null() ? g.lambda() / 4.0 : dg.at("band_hi").get<double>());
    KhmResidualOptions opt;
    opt.energy = radial(run.stats.energy_spectrum);
    opt.enstrophy = radial(run.stats.enstrophy_spectrum);
    const auto budgets = khm_residuals(run.stats.snapshots, run.stats.nu, forcing, ell, opt);
    const std::string o = out_dir(a);
    json rels = json::array();
    bool pass = true;
    for (const auto& b : budgets) {
        Csv csv({"ell", "lhs", "lhs_stderr", "viscous", "forcing", "nested", "rhs", "residual"});
        for (std::size_t i = 0; i < b.ell.size(); ++i)
            csv.row({b.ell[i], b.lhs[i], b.lhs_stderr[i], b.viscous[i], b.forcing[i], b.nested[i], b.rhs[i], b.residual[i]});
        csv.write(path_in(o, "khm_" + to_string(b.relation) + ".csv"));
        const double r = b.band_relative_residual(lo, hi);
        const bool ok = r < tol;
        pass = pass && ok;
        rels.push_back({{"relation", to_string(b.relation)},
                        {"band_relative_residual", r},
                        {"samples", b.samples},
                        {"estimator", b.estimator},
                        {"pass", ok}});
    }
    json rep = report_envelope("khm-check", command_config(run, {{"tolerance", tol}, {"band", {lo, hi}}}));
    rep["relations"] = rels;
    rep["pass"] = pass;
    write_json(path_in(o, "khm.json"), rep);
    return pass ? kOk : kGateFailed;
}

int run_budget(const DirArgs& a) {
    RunData run = read_run(a.dir);
    const json& cfg = run.envelope.at("config");
    const ForcingSpec forcing = forcing_from_config(cfg);
    auto gammas = a.gammas.empty() ? cfg.at("diagnostics").at("gammas").get<std::vector<double>>() : a.gammas;
    const BalanceReport b = balance_report(run.stats, forcing, gammas);
    const double tol_e = cfg.at("tolerances").at("energy").get<double>();
    const double tol_z = cfg.at("tolerances").at("enstrophy").get<double>();
    const bool energy_ok = b.energy_closure_error < tol_e;
    const bool enstrophy_ok = !b.enstrophy_closure_error || *b.enstrophy_closure_error < tol_z;
    const std::string o = out_dir(a);
    json rep = report_envelope("budget", command_config(run, {{"gammas", gammas}}));
    rep["normalization"] = b.normalization;
    rep["nu"] = b.nu;
    rep["epsilon"] = b.epsilon;
    rep["eta"] = b.eta ? json(*b.eta) : json(nullptr);
    rep["energy_dissipation"] = b.energy_dissipation;
    rep["enstrophy_dissipation"] = b.enstrophy_dissipation ? json(*b.enstrophy_dissipation) : json(nullptr);
    rep["D"] = b.D;
    rep["energy_closure_error"] = b.energy_closure_error;
    rep["enstrophy_closure_error"] = b.enstrophy_closure_error ? json(*b.enstrophy_closure_error) : json(nullptr);
    rep["window"] = b.window;
    rep["drift"] = b.drift;
    rep["tolerances"] = {{"energy", tol_e}, {"enstrophy", tol_z}};
    rep["pass"] = energy_ok && enstrophy_ok;
    Csv csv({"gamma", "D_gamma", "std_error"});
    if (b.d_gamma) {
        const auto& c = *b.d_gamma;
        for (std::size_t i = 0; i < c.gamma.size(); ++i) csv.row({c.gamma[i], c.value[i], c.std_error[i]});
        rep["d_gamma_fit"] = {{"method", c.method},           {"extrapolated", c.extrapolated},
                              {"coefficient", c.coefficient}, {"rate", c.rate},
                              {"rms", c.fit_rms}};
    }
    csv.write(path_in(o, "dgamma.csv"));
    write_json(path_in(o, "balance.json"), rep);
    return energy_ok && enstrophy_ok ? kOk : kGateFailed;
}

// ----------------------------------------------------------------------------
// cascade-detect

const json& manifest_defaults() {
    static const json d = {
        {"direction", "direct"},
        {"d", 3},
        {"ell", {{"lo", nullptr}, {"hi", nullptr}, {"points", 60}}},
        {"synthetic", nullptr},
        {"runs", nullptr},
        {"options",
         {{"rule", "theta_split"},
          {"theta", 0.5},
          {"exponent", 0.25},
          {"shells", 2.0},
          {"ell_inertial", 0.1},
          {"band_factor", 0.1},
          {"ell_lo", nullptr},
          {"ell_hi", nullptr},
          {"tolerance", 0.02}}},
    };
    return d;
}

const json& synthetic_defaults() {
    static const json d = {{"nus", json::array()}, {"delta", 0.5},        {"injection", 1.0},
                           {"k_forcing", 1.0},     {"k_rest", nullptr},   {"escape_power", 1.0},
                           {"growing_domain", true}};
    return d;
}

json plateau_json(const PlateauFit& p) {
    return {{"name", p.name},         {"kind", to_string(p.kind)},
            {"ell_power", p.ell_power}, {"fitted", p.fitted},
            {"predicted", p.predicted}, {"relative_deviation", p.relative_deviation},
            {"max_log_slope", p.max_log_slope}, {"band", {p.ell_lo, p.ell_hi}},
            {"points", p.points},     {"flat", p.flat},
            {"pass", p.pass}};
}

json report_json(const CascadeReport& r) {
    json pl = json::array();
    for (const auto& p : r.plateaus) pl.push_back(plateau_json(p));
    json mono = json::array();
    for (bool b : r.monotone) mono.push_back(b);
    return {{"direction", to_string(r.direction)},
            {"rule", r.rule},
            {"d", r.d},
            {"flux", r.flux},
            {"nu", r.nu},
            {"cutoff", r.cutoff},
            {"captured", r.captured},
            {"total", r.total},
            {"monotone", mono},
            {"liminf_estimate", r.liminf_estimate},
            {"trend_monotone", r.trend_monotone},
            {"plateaus", pl},
            {"tolerance", r.tolerance},
            {"pass", r.pass},
            {"diagnostics", r.diagnostics}};
}

SweepMember member_from_run(const std::string& dir, const std::vector<double>* ell_in) {
    RunData run = read_run(dir);
    if (run.stats.snapshots.empty()) throw InputError(dir + ": run has no snapshots");
    const WaveGrid g = run.stats.snapshots.front().grid;
    SweepMember m;
    m.nu = run.stats.nu;
    m.lambda = g.lambda();
    m.energy = radial(run.stats.energy_spectrum);
    m.enstrophy = radial(run.stats.enstrophy_spectrum);
    m.epsilon = run.stats.epsilon;
    m.eta = run.stats.eta;
    const auto ell = ell_in ? *ell_in : ell_grid_for(run.envelope.at("config"), g);
    StructureAccumulator acc(g, ell);
    for (const auto& s : run.stats.snapshots) acc.add(s);
    for (auto k : {StructureKind::vel, StructureKind::vel_par, StructureKind::vor}) m.curves[k] = acc.curve(k);
    return m;
}

int run_cascade_detect(const std::string& manifest_path, const std::string& out) {
    json m = resolve_with(manifest_defaults(), read_json(manifest_path), {"d", "ell.points"});
    const auto direction = cascade_direction_from_string(m.at("direction").get<std::string>());
    if (direction != CascadeDirection::direct && direction != CascadeDirection::inverse)
        throw ConfigError("manifest direction must be direct or inverse");
    const int d = m.at("d").get<int>();
    if (d != 2 && d != 3) throw ConfigError("manifest d must be 2 or 3");
    if (m.at("synthetic").is_null() == m.at("runs").is_null())
        throw ConfigError("manifest needs exactly one of synthetic or runs");

    std::optional<std::vector<double>> ell;
    const json& ej = m.at("ell");
    if (!ej.at("lo").is_null() && !ej.at("hi").is_null())
        ell = log_grid(ej.at("lo").get<double>(), ej.at("hi").get<double>(), ej.at("points").get<int>());

    ViscositySweep sweep;
    sweep.d = d;
    if (!m.at("synthetic").is_null()) {
        json s = resolve_with(synthetic_defaults(), m.at("synthetic"));
        m["synthetic"] = s;
        if (!ell) throw ConfigError("synthetic manifests need ell.lo and ell.hi");
        const double power = s.at("escape_power").get<double>();
        for (double nu : s.at("nus").get<std::vector<double>>()) {
            SyntheticSpec spec;
            spec.d = d;
            spec.nu = nu;
            spec.delta = s.at("delta").get<double>();
            spec.injection = s.at("injection").get<double>();
            spec.k_forcing = s.at("k_forcing").get<double>();
            if (direction == CascadeDirection::direct) {
                spec.k_escape = std::pow(nu, -power);
                spec.k_rest = s.at("k_rest").is_null() ? 0.5 : s.at("k_rest").get<double>();
            } else {
                spec.lambda = s.at("growing_domain").get<bool>() ? 2.0 * kPi / nu : 2.0 * kPi;
                spec.k_escape = std::pow(nu, power);
                spec.k_rest = s.at("k_rest").is_null() ? 3.0 : s.at("k_rest").get<double>();
            }
            try {
                sweep.members.push_back(synthetic_member(spec, direction, *ell));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
    } else {
        std::vector<SweepMember> members;
        for (const auto& dir : m.at("runs")) members.push_back(member_from_run(dir.get<std::string>(), ell ? &*ell : nullptr));
        std::stable_sort(members.begin(), members.end(), [](const auto& x, const auto& y) { return x.nu > y.nu; });
        sweep.members = std::move(members);
    }
    try {
        sweep.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const json& oj = m.at("options");
    CascadeOptions o;
    CutoffOptions cut{selection_rule_from_string(oj.at("rule").get<std::string>()), oj.at("theta").get<double>(),
                      oj.at("exponent").get<double>(), oj.at("shells").get<double>()};
    if (direction == CascadeDirection::direct) o.cutoff = cut;
    else if (cut.rule != SelectionRule::theta_split) o.inverse_cutoff = cut;
    o.ell_inertial = oj.at("ell_inertial").get<double>();
    o.band_factor = oj.at("band_factor").get<double>();
    if (!oj.at("ell_lo").is_null()) o.ell_lo = oj.at("ell_lo").get<double>();
    if (!oj.at("ell_hi").is_null()) o.ell_hi = oj.at("ell_hi").get<double>();
    o.tolerance = oj.at("tolerance").get<double>();

    CascadeReport r;
    try {
        r = direction == CascadeDirection::direct ? detect_direct(sweep, o) : detect_inverse(sweep, o);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    ensure_dir(out);
    json cfg = {{"seed", nullptr}, {"manifest", m}};
    json rep = report_envelope("cascade-detect", cfg);
    rep["report"] = report_json(r);
    write_json(path_in(out, "cascade.json"), rep);
    const SweepMember& last = sweep.members.back();
    for (std::size_t i = 0; i < r.plateaus.size(); ++i) {
        const auto& p = r.plateaus[i];
        const auto& c = last.curves.at(p.kind);
        Csv csv({"ell", "ratio", "predicted", "in_band"});
        for (std::size_t j = 0; j < c.ell.size(); ++j) {
            const double ratio = c.value[j] / std::pow(c.ell[j], p.ell_power);
            const bool in = c.ell[j] >= p.ell_lo && c.ell[j] <= p.ell_hi;
            csv.row({c.ell[j], ratio, p.predicted, in ? 1.0 : 0.0});
        }
        csv.write(path_in(out, "plateau_" + std::to_string(i) + "_" + to_string(p.kind) + ".csv"));
    }
    std::cerr << "cascade-detect: " << to_string(r.direction) << ", capture " << r.liminf_estimate
              << (r.pass ? "" : " (gate failed)") << "\n";
    return r.pass ? kOk : kGateFailed;
}

// ----------------------------------------------------------------------------
// filtration-test

int run_filtration_test(const std::string& out, double tolerance) {
    json cases = json::array();
    bool pass = true;
    for (const auto& fc : filtration_suite(tolerance)) {
        pass = pass && fc.pass;
        cases.push_back({{"family", fc.family},
                         {"scale", fc.scale},
                         {"delta", fc.delta},
                         {"limit", fc.limit},
                         {"target", fc.target},
                         {"cutoff", fc.result.cutoff},
                         {"ell", fc.result.ell},
                         {"value", fc.result.value},
                         {"bounded", fc.result.bounded},
                         {"final_error", fc.final_error},
                         {"trend", fc.trend},
                         {"pass", fc.pass}});
    }
    json cors = json::array();
    for (const auto& c : corollary_suite()) {
        pass = pass && c.pass;
        cors.push_back({{"name", c.name},
                        {"expectation", c.expectation},
                        {"nu", c.nu},
                        {"direct_capture", c.direct_capture},
                        {"inverse_capture", c.inverse_capture},
                        {"direct_found", c.direct_found},
                        {"inverse_found", c.inverse_found},
                        {"pass", c.pass}});
    }
    json rep = report_envelope("filtration-test", {{"seed", nullptr}, {"tolerance", tolerance}});
    rep["filtration"] = cases;
    rep["corollaries"] = cors;
    rep["pass"] = pass;
    if (out.empty() || out == "-") {
        std::cout << rep.dump(2) << "\n";
    } else {
        ensure_dir(out);
        write_json(path_in(out, "filtration.json"), rep);
    }
    return pass ? kOk : kGateFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fluxlaw: stochastic 2D Navier-Stokes simulator and flux-law diagnostics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));
    int threads = 1;
    app.add_option("--threads", threads, "worker threads (results are identical for any count)")
        ->envname("FLUXLAW_THREADS")
        ->check(CLI::Range(1, 1024));

    CoeffsArgs ca;
    auto* coeffs = app.add_subcommand("coeffs", "beta table, pairing counts and flux constants as CSV");
    coeffs->add_option("--d", ca.d, "dimension")->required()->check(CLI::IsMember({2, 3}));
    coeffs->add_option("--kmax", ca.kmax, "largest k in the beta table")->check(CLI::Range(0, kExactCap));
    coeffs->add_option("--out", ca.out, "output file (default stdout)");

    KernelArgs ka;
    auto* kernels = app.add_subcommand("kernels", "tangential/longitudinal kernels or a coefficient family c(x)");
    kernels->add_option("--d", ka.d, "dimension")->required()->check(CLI::IsMember({2, 3}));
    kernels->add_option("--p", ka.p, "tangential orders")->delimiter(',');
    kernels->add_option("--x-max", ka.x_max, "largest x");
    kernels->add_option("--points", ka.points, "grid points on [0, x_max]");
    kernels->add_flag("--check", ka.check, "compare against sphere quadrature");
    kernels->add_option("--tolerance", ka.tolerance, "gate for --check");
    kernels->add_option("--family", ka.family, "print c(x) for a coefficient family instead");
    kernels->add_option("--out", ka.out, "output file (default stdout)");

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "run the stochastic 2D vorticity equation");
    simulate->add_option("--config", sa.config, "TOML or JSON run config")->required();
    simulate->add_option("--out", sa.out, "run directory")->required();

    DirArgs st, kc, bu;
    auto* structure = app.add_subcommand("structure", "structure functions of a run's snapshots");
    structure->add_option("--dir", st.dir, "run directory")->required();
    structure->add_option("--kinds", st.kinds, "vel, vel_par, vor")->delimiter(',');
    structure->add_option("--out", st.out, "output directory (default: the run directory)");

    auto* khm = app.add_subcommand("khm-check", "KHM relation residuals of a run");
    khm->add_option("--dir", kc.dir, "run directory")->required();
    khm->add_option("--tolerance", kc.tolerance, "band-relative residual gate");
    khm->add_option("--band-lo", kc.band_lo, "lower end of the l band");
    khm->add_option("--band-hi", kc.band_hi, "upper end of the l band");
    khm->add_option("--out", kc.out, "output directory (default: the run directory)");

    auto* budget = app.add_subcommand("budget", "energy/enstrophy balances and the D_gamma ladder");
    budget->add_option("--dir", bu.dir, "run directory")->required();
    budget->add_option("--gammas", bu.gammas, "mollifier scales, decreasing")->delimiter(',');
    budget->add_option("--out", bu.out, "output directory (default: the run directory)");

    std::string manifest, cascade_out;
    auto* cascade = app.add_subcommand("cascade-detect", "cutoffs, captured flux and plateau fits over a sweep");
    cascade->add_option("--manifest", manifest, "sweep manifest (JSON)")->required();
    cascade->add_option("--out", cascade_out, "output directory")->required();

    std::string filt_out;
    double filt_tol = 0.02;
    auto* filtration = app.add_subcommand("filtration-test", "filtration lemmas and cascade corollaries");
    filtration->add_option("--out", filt_out, "output directory (default: JSON to stdout)");
    filtration->add_option("--tolerance", filt_tol, "relative tolerance on the captured limits");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        set_thread_count(threads);
        if (*coeffs) return run_coeffs(ca);
        if (*kernels) return run_kernels(ka);
        if (*simulate) return run_simulate(sa);
        if (*structure) return run_structure(st);
        if (*khm) return run_khm_check(kc);
        if (*budget) return run_budget(bu);
        if (*cascade) return run_cascade_detect(manifest, cascade_out);
        if (*filtration) return run_filtration_test(filt_out, filt_tol);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kGateFailed;
    }
    return kUsage;
}
