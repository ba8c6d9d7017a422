#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fluxlaw/forcing.hpp"
#include "fluxlaw/sim2d.hpp"

namespace fluxlaw {

using json = nlohmann::json;

/// Bad or unreadable configuration; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// TOML subset: [section] and [a.b] headers, key = value, '#' comments.
/// Values are numbers, booleans, basic "strings", literal 'strings' and
/// arrays, which may span lines. Inline tables, dates and dotted keys are
/// rejected with the offending line number.
json parse_toml(const std::string& text, const std::string& origin = "<string>");

/// .json files are parsed as JSON, everything else as the TOML subset.
json load_config(const std::string& path);

inline constexpr int kFormatVersion = 1;

/// Every accepted key with its default. A null default marks an optional
/// entry with no default.
const json& run_config_defaults();

/// Overlays `raw` on `defaults` with the checks below; `integer_keys` are
/// dotted paths that must hold integral numbers.
json resolve_with(const json& defaults, const json& raw, const std::vector<std::string>& integer_keys = {});

/// Overlays `raw` on the defaults. Unknown keys, type mismatches and
/// non-integral values for integer keys throw ConfigError.
json resolve_run_config(const json& raw);

/// Grid, forcing and stepper from a resolved config. forcing.components, when
/// present, lists per component the modes {k: [z1, z2], amp: [re1, im1, re2, im2]};
/// otherwise the shell generator is used.
ForcingSpec forcing_from_config(const json& resolved);
SimConfig sim_config_from(const json& resolved);

/// Hex SHA-256 of the canonical dump (sorted keys, no whitespace).
std::string config_hash(const json& resolved);

}  // namespace fluxlaw
