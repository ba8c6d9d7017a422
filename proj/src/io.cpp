#include "fluxlaw/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fluxlaw {

static_assert(std::endian::native == std::endian::little, "snapshot files are little-endian f64");

namespace fs = std::filesystem;

json report_envelope(const std::string& command, const json& resolved_config) {
    json e;
    e["tool"] = "fluxlaw";
    e["version"] = kVersion;
    e["format_version"] = kFormatVersion;
    e["command"] = command;
    e["seed"] = resolved_config.value("seed", json(nullptr));
    e["config_hash"] = config_hash(resolved_config);
    e["config"] = resolved_config;
    return e;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_json(const std::string& path, const json& j) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("missing file " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
}

Csv& Csv::row(const std::vector<std::string>& cells) {
    if (cells.size() != header_.size()) throw std::logic_error("csv row width differs from the header");
    rows_.push_back(cells);
    return *this;
}

Csv& Csv::row(const std::vector<double>& cells) {
    std::vector<std::string> s;
    s.reserve(cells.size());
    for (double v : cells) s.push_back(format_number(v));
    return row(s);
}

std::string Csv::str() const {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << "\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return os.str();
}

void Csv::write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << str();
}

namespace {

SpectralField density_as_field(const ShellSpectrum& s) {
    SpectralField f(s.grid, FieldKind::scalar);
    for (std::size_t i = 0; i < s.density.size(); ++i) f.coeff[i] = cplx(s.density[i], 0.0);
    return f;
}

std::string snapshot_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "snap_%04zu", i);
    return buf;
}

}  // namespace

void write_run(const std::string& dir, const json& envelope, const TrajectoryStats& st) {
    fs::create_directories(fs::path(dir) / "snapshots");
    const auto seed = envelope.at("seed").get<std::uint64_t>();
    json run = envelope;
    write_json((fs::path(dir) / "run.json").string(), run);

    json s;
    s["nu"] = st.nu;
    s["epsilon"] = st.epsilon;
    s["eta"] = st.eta;
    s["window"] = st.window;
    s["samples"] = st.samples;
    s["mean_grad_u_sq"] = st.mean_grad_u_sq;
    s["mean_grad_omega_sq"] = st.mean_grad_omega_sq;
    s["mean_omega_sq"] = st.mean_omega_sq;
    s["mean_u_sq"] = st.mean_u_sq;
    s["block_means"] = st.block_means;
    s["drift"] = st.drift;
    s["stationary"] = st.stationary;
    s["snapshot_times"] = st.snapshot_times;
    json names = json::array();
    for (std::size_t i = 0; i < st.snapshots.size(); ++i) {
        const std::string name = snapshot_name(i);
        write_snapshot((fs::path(dir) / "snapshots" / name).string(), st.snapshots[i], st.snapshot_times[i], seed);
        names.push_back("snapshots/" + name);
    }
    s["snapshots"] = names;
    const double t_end = st.snapshot_times.empty() ? st.window : st.snapshot_times.back();
    write_snapshot((fs::path(dir) / "final").string(), st.final_state, t_end, seed);
    write_snapshot((fs::path(dir) / "spectrum").string(), density_as_field(st.enstrophy_spectrum), st.window, seed);
    json out = envelope;
    out["stats"] = s;
    write_json((fs::path(dir) / "stats.json").string(), out);

    const auto ens = st.enstrophy_spectrum.shell_sums();
    const auto en = st.energy_spectrum.shell_sums();
    Csv csv({"shell", "k", "energy", "enstrophy"});
    const double k0 = st.enstrophy_spectrum.grid.k0();
    for (std::size_t m = 0; m < ens.size(); ++m)
        csv.row({static_cast<double>(m), k0 * static_cast<double>(m), m < en.size() ? en[m] : 0.0, ens[m]});
    csv.write((fs::path(dir) / "spectrum_shells.csv").string());
}

RunData read_run(const std::string& dir, bool load_snapshots) {
    if (!fs::is_directory(dir)) throw InputError("not a run directory: " + dir);
    RunData r;
    r.envelope = read_json((fs::path(dir) / "run.json").string());
    const json full = read_json((fs::path(dir) / "stats.json").string());
    try {
        const json& s = full.at("stats");
        TrajectoryStats& st = r.stats;
        st.nu = s.at("nu").get<double>();
        st.epsilon = s.at("epsilon").get<double>();
        st.eta = s.at("eta").get<double>();
        st.window = s.at("window").get<double>();
        st.samples = s.at("samples").get<std::uint64_t>();
        st.mean_grad_u_sq = s.at("mean_grad_u_sq").get<double>();
        st.mean_grad_omega_sq = s.at("mean_grad_omega_sq").get<double>();
        st.mean_omega_sq = s.at("mean_omega_sq").get<double>();
        st.mean_u_sq = s.at("mean_u_sq").get<double>();
        st.block_means = s.at("block_means").get<std::vector<double>>();
        st.drift = s.at("drift").get<double>();
        st.stationary = s.at("stationary").get<bool>();
        st.snapshot_times = s.at("snapshot_times").get<std::vector<double>>();
        auto load = [&](const std::string& base) {
            try {
                return read_snapshot((fs::path(dir) / base).string());
            } catch (const std::runtime_error& e) {
                throw InputError(e.what());
            }
        };
        SpectralField dens = load("spectrum");
        st.enstrophy_spectrum = ShellSpectrum(dens.grid);
        st.energy_spectrum = ShellSpectrum(dens.grid);
        for (std::size_t i = 0; i < dens.coeff.size(); ++i) {
            st.enstrophy_spectrum.density[i] = dens.coeff[i].real();
            const double k2 = dens.grid.k_norm2(i);
            st.energy_spectrum.density[i] = k2 > 0.0 ? dens.coeff[i].real() / k2 : 0.0;
        }
        if (load_snapshots) {
            for (const auto& name : s.at("snapshots")) st.snapshots.push_back(load(name.get<std::string>()));
            st.final_state = load("final");
        }
    } catch (const json::exception& e) {
        throw InputError(dir + "/stats.json: " + e.what());
    }
    return r;
}

}  // namespace fluxlaw
