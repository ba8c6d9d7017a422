#pragma once

#include <string>
#include <vector>

#include "fluxlaw/config.hpp"
#include "fluxlaw/sim2d.hpp"

namespace fluxlaw {

inline constexpr const char* kVersion = "1.0.0";

/// Missing or malformed input files; exit code 2 like ConfigError.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// {tool, version, format_version, command, seed, config_hash, config}. Every
/// report starts from this; nothing time- or host-dependent goes in.
json report_envelope(const std::string& command, const json& resolved_config);

/// Shortest round-trip decimal form (std::to_chars), "nan"/"inf" spelled out.
std::string format_number(double v);

/// Two-space indented dump with a trailing newline.
void write_json(const std::string& path, const json& j);
json read_json(const std::string& path);

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}
    Csv& row(const std::vector<std::string>& cells);
    Csv& row(const std::vector<double>& cells);
    std::string str() const;
    void write(const std::string& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// ----------------------------------------------------------------------------
// Run directories written by `simulate`:
//   run.json                envelope with the resolved config
//   stats.json              scalar statistics and snapshot list
//   spectrum.{bin,json}     time-averaged E|omega^(k)|^2 per lattice point (real parts)
//   spectrum_shells.csv     shell sums of energy and enstrophy
//   snapshots/snap_NNNN.*   vorticity snapshots (grid snapshot format)
//   final.*                 end state, usable as sim.initial

void write_run(const std::string& dir, const json& envelope, const TrajectoryStats& stats);

struct RunData {
    json envelope;
    TrajectoryStats stats;  // spectra, scalars and snapshots restored
};

/// Throws InputError when the directory or one of its files is missing.
RunData read_run(const std::string& dir, bool load_snapshots = true);

}  // namespace fluxlaw
