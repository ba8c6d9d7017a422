#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fluxlaw/io.hpp"

using namespace fluxlaw;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("fluxlaw_test_io_" + name);
    fs::remove_all(p);
    return p;
}

json small_run_config() {
    return resolve_run_config(parse_toml(
        "seed = 4\n[grid]\nn = 16\n[sim]\nnu = 0.02\ndt = 0.05\nt_burn = 1.0\nt_window = 2.0\n"
        "snapshot_interval = 0.5\nstationarity_tolerance = 1.0\n[forcing]\nshell_lo = 2\nshell_hi = 3\nepsilon = 0.01"));
}

}  // namespace

TEST_CASE("number formatting is shortest round-trip") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e-300) == "1e-300");
    CHECK(format_number(2.0) == "2");
    CHECK(format_number(-0.0) == "-0");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(-INFINITY) == "-inf");
    for (double v : {1.0 / 3.0, 6.283185307179586, 1e-17 + 1.0, 123456.789e10})
        CHECK(std::stod(format_number(v)) == v);
}

TEST_CASE("csv rows must match the header") {
    Csv c({"a", "b"});
    c.row({1.0, 0.5}).row(std::vector<std::string>{"x", "y"});
    CHECK(c.str() == "a,b\n1,0.5\nx,y\n");
    CHECK_THROWS_AS(c.row(std::vector<double>{1.0}), std::logic_error);
}

TEST_CASE("envelope carries version, seed and hash") {
    const auto cfg = small_run_config();
    const auto e = report_envelope("simulate", cfg);
    CHECK(e["tool"] == "fluxlaw");
    CHECK(e["version"] == kVersion);
    CHECK(e["format_version"] == kFormatVersion);
    CHECK(e["seed"] == 4);
    CHECK(e["config_hash"] == config_hash(cfg));
    CHECK(e["config"] == cfg);
}

TEST_CASE("run directories round-trip") {
    const auto cfg = small_run_config();
    const auto st = run_stationary(sim_config_from(cfg));
    REQUIRE(st.snapshots.size() >= 3);
    const auto dir = scratch("run");
    write_run(dir.string(), report_envelope("simulate", cfg), st);
    const auto back = read_run(dir.string());
    CHECK(back.envelope["config_hash"] == config_hash(cfg));
    CHECK(back.stats.nu == st.nu);
    CHECK(back.stats.epsilon == st.epsilon);
    CHECK(back.stats.mean_grad_u_sq == st.mean_grad_u_sq);
    CHECK(back.stats.block_means == st.block_means);
    CHECK(back.stats.snapshot_times == st.snapshot_times);
    REQUIRE(back.stats.snapshots.size() == st.snapshots.size());
    for (std::size_t i = 0; i < st.snapshots.size(); ++i) CHECK(back.stats.snapshots[i].coeff == st.snapshots[i].coeff);
    CHECK(back.stats.final_state.coeff == st.final_state.coeff);
    CHECK(back.stats.enstrophy_spectrum.density == st.enstrophy_spectrum.density);
    for (std::size_t i = 0; i < st.energy_spectrum.density.size(); ++i)
        CHECK(back.stats.energy_spectrum.density[i] == doctest::Approx(st.energy_spectrum.density[i]).epsilon(1e-14));

    // same config and seed, same bytes
    const auto again = scratch("run2");
    write_run(again.string(), report_envelope("simulate", cfg), run_stationary(sim_config_from(cfg)));
    for (const char* f : {"run.json", "stats.json", "spectrum_shells.csv", "final.bin", "snapshots/snap_0001.bin"})
        CHECK(slurp(dir / f) == slurp(again / f));
    fs::remove_all(dir);
    fs::remove_all(again);
}

TEST_CASE("missing inputs raise InputError") {
    CHECK_THROWS_AS(read_run("/nonexistent/fluxlaw"), InputError);
    const auto dir = scratch("broken");
    fs::create_directories(dir);
    std::ofstream(dir / "run.json") << "{";
    CHECK_THROWS_AS(read_run(dir.string()), InputError);
    fs::remove_all(dir);
}
