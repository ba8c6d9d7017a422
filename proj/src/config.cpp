#include "fluxlaw/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fluxlaw {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
}

// Drops a '#' comment that is not inside a string.
std::string strip_comment(const std::string& s) {
    char quote = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (quote) {
            if (c == '\\' && quote == '"') ++i;
            else if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#') {
            return s.substr(0, i);
        }
    }
    return s;
}

int bracket_depth(const std::string& s) {
    int depth = 0;
    char quote = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (quote) {
            if (c == '\\' && quote == '"') ++i;
            else if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '[') {
            ++depth;
        } else if (c == ']') {
            --depth;
        }
    }
    return depth;
}

// Literal strings become basic strings and a trailing comma inside arrays is
// dropped, after which the value is valid JSON.
std::string to_json_text(const std::string& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        char c = v[i];
        if (c == '"') {
            std::size_t j = i + 1;
            while (j < v.size() && v[j] != '"') j += v[j] == '\\' ? 2 : 1;
            out += v.substr(i, j - i + 1);
            i = j;
        } else if (c == '\'') {
            std::size_t j = v.find('\'', i + 1);
            if (j == std::string::npos) return v;
            out += json(v.substr(i + 1, j - i - 1)).dump();
            i = j;
        } else if (c == ']') {
            auto k = out.find_last_not_of(" \t\r\n");
            if (k != std::string::npos && out[k] == ',') out.erase(k, 1);
            out += c;
        } else {
            out += c;
        }
    }
    return out;
}

bool bare_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
}

}  // namespace

json parse_toml(const std::string& text, const std::string& origin) {
    json root = json::object();
    json* table = &root;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = trim(strip_comment(raw));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.size() < 3 || s.back() != ']' || s[1] == '[') fail(origin, line, "unsupported table header: " + s);
            std::string name = trim(s.substr(1, s.size() - 2));
            table = &root;
            std::istringstream parts(name);
            std::string part;
            while (std::getline(parts, part, '.')) {
                part = trim(part);
                if (!bare_key(part)) fail(origin, line, "bad table name: " + name);
                json& next = (*table)[part];
                if (next.is_null()) next = json::object();
                if (!next.is_object()) fail(origin, line, "table redefines a value: " + name);
                table = &next;
            }
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail(origin, line, "expected key = value");
        std::string key = trim(s.substr(0, eq));
        if (!key.empty() && key.front() == '"' && key.back() == '"' && key.size() >= 2) key = key.substr(1, key.size() - 2);
        else if (!bare_key(key)) fail(origin, line, "unsupported key: " + key);
        std::string value = trim(s.substr(eq + 1));
        const int start = line;
        while (bracket_depth(value) > 0 && std::getline(in, raw)) {
            ++line;
            value += " " + trim(strip_comment(raw));
        }
        if (bracket_depth(value) != 0) fail(origin, start, "unbalanced brackets");
        if (value.empty()) fail(origin, start, "missing value for " + key);
        if (value.front() == '{') fail(origin, start, "inline tables are not supported");
        if (table->contains(key)) fail(origin, start, "duplicate key: " + key);
        try {
            (*table)[key] = json::parse(to_json_text(value));
        } catch (const json::parse_error&) {
            fail(origin, start, "cannot parse value for " + key + ": " + value);
        }
    }
    return root;
}

json load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string text = ss.str();
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
        try {
            return json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError(path + ": " + e.what());
        }
    }
    return parse_toml(text, path);
}

const json& run_config_defaults() {
    static const json d = {
        {"format_version", kFormatVersion},
        {"seed", 1},
        {"grid", {{"d", 2}, {"lambda", 2.0 * kPi}, {"n", 64}}},
        {"sim",
         {{"nu", 1e-3},
          {"dt", 5e-3},
          {"t_burn", 0.0},
          {"t_window", 1.0},
          {"snapshot_interval", 0.0},
          {"decorrelation_time", 0.0},
          {"scheme", "rk3"},
          {"nonlinear", true},
          {"dealias", true},
          {"stationarity_tolerance", 0.10},
          {"initial", nullptr}}},
        {"forcing", {{"shell_lo", 3.0}, {"shell_hi", 5.0}, {"epsilon", 1e-3}, {"components", nullptr}}},
        {"diagnostics",
         {{"ell_points", 48},
          {"ell_lo", nullptr},
          {"ell_hi", nullptr},
          {"band_lo", nullptr},
          {"band_hi", nullptr},
          {"gammas", json::array()},
          {"kinds", json::array({"vel", "vel_par", "vor"})}}},
        {"tolerances", {{"energy", 0.05}, {"enstrophy", 0.05}, {"khm", 0.10}, {"plateau", 0.02}}},
    };
    return d;
}

namespace {

const char* type_name(const json& v) {
    if (v.is_number()) return "number";
    return v.type_name();
}

void overlay(json& base, const json& raw, const std::string& prefix, const std::vector<std::string>& ints) {
    auto integer_key = [&](const std::string& path) { return std::find(ints.begin(), ints.end(), path) != ints.end(); };
    if (!raw.is_object()) throw ConfigError("config section " + (prefix.empty() ? "<root>" : prefix) + " must be a table");
    for (const auto& [key, value] : raw.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!base.contains(key)) throw ConfigError("unknown config key: " + path);
        json& slot = base[key];
        if (slot.is_object()) {
            overlay(slot, value, path, ints);
            continue;
        }
        if (!slot.is_null() && std::string(type_name(slot)) != type_name(value))
            throw ConfigError("config key " + path + " must be a " + type_name(slot) + ", got " + type_name(value));
        if (integer_key(path)) {
            if (!value.is_number() || std::floor(value.get<double>()) != value.get<double>())
                throw ConfigError("config key " + path + " must be an integer");
            slot = value.get<std::int64_t>();
            continue;
        }
        // 1 and 1.0 must hash alike
        slot = value.is_number() ? json(value.get<double>()) : value;
    }
}

}  // namespace

json resolve_with(const json& defaults, const json& raw, const std::vector<std::string>& integer_keys) {
    json r = defaults;
    overlay(r, raw, "", integer_keys);
    return r;
}

json resolve_run_config(const json& raw) {
    json r = resolve_with(run_config_defaults(), raw,
                          {"format_version", "seed", "grid.d", "grid.n", "diagnostics.ell_points"});
    if (r["format_version"] != kFormatVersion)
        throw ConfigError("unsupported format_version " + r["format_version"].dump());
    if (r["seed"].get<std::int64_t>() < 0) throw ConfigError("seed must be nonnegative");
    return r;
}

ForcingSpec forcing_from_config(const json& r) {
    const auto& gj = r.at("grid");
    WaveGrid g(gj.at("d").get<int>(), gj.at("lambda").get<double>(), gj.at("n").get<int>());
    const auto& fj = r.at("forcing");
    const auto seed = r.at("seed").get<std::uint64_t>();
    if (fj.at("components").is_null())
        return shell_forcing(g, fj.at("shell_lo").get<double>(), fj.at("shell_hi").get<double>(),
                             fj.at("epsilon").get<double>(), seed);
    ForcingSpec spec;
    spec.grid = g;
    spec.seed = seed;
    const auto& comps = fj.at("components");
    if (!comps.is_array()) throw ConfigError("forcing.components must be an array");
    for (const auto& c : comps) {
        std::vector<ForcingMode> modes;
        for (const auto& m : c) {
            if (!m.is_object() || !m.contains("k") || !m.contains("amp"))
                throw ConfigError("forcing mode needs k and amp");
            ForcingMode fm;
            const auto& k = m.at("k");
            const auto& a = m.at("amp");
            if (!k.is_array() || static_cast<int>(k.size()) != g.d() || !a.is_array() ||
                static_cast<int>(a.size()) != 2 * g.d())
                throw ConfigError("forcing mode k needs d entries and amp 2d entries");
            double dot = 0.0, norm = 0.0;
            for (int i = 0; i < g.d(); ++i) {
                fm.z[i] = k[i].get<int>();
                fm.amp[i] = cplx(a[2 * i].get<double>(), a[2 * i + 1].get<double>());
                dot += std::abs(static_cast<double>(fm.z[i]) * fm.amp[i]);
                norm += std::abs(fm.amp[i]);
            }
            cplx div = 0.0;
            for (int i = 0; i < g.d(); ++i) div += static_cast<double>(fm.z[i]) * fm.amp[i];
            if (std::abs(div) > 1e-12 * std::max(1.0, dot)) throw ConfigError("forcing mode is not divergence-free");
            if (fm.z == std::array<int, 3>{0, 0, 0} && norm > 0.0) throw ConfigError("forcing mode at k = 0");
            modes.push_back(fm);
        }
        spec.components.push_back(std::move(modes));
    }
    return spec;
}

SimConfig sim_config_from(const json& r) {
    SimConfig c;
    try {
        c.forcing = forcing_from_config(r);
        c.grid = c.forcing.grid;
        const auto& s = r.at("sim");
        c.nu = s.at("nu").get<double>();
        c.dt = s.at("dt").get<double>();
        c.t_burn = s.at("t_burn").get<double>();
        c.t_window = s.at("t_window").get<double>();
        c.snapshot_interval = s.at("snapshot_interval").get<double>();
        c.decorrelation_time = s.at("decorrelation_time").get<double>();
        c.scheme = scheme_from_string(s.at("scheme").get<std::string>());
        c.nonlinear = s.at("nonlinear").get<bool>();
        c.dealias = s.at("dealias").get<bool>();
        c.stationarity_tolerance = s.at("stationarity_tolerance").get<double>();
        c.seed = r.at("seed").get<std::uint64_t>();
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    }
    return c;
}

std::string config_hash(const json& resolved) {
    const std::string text = resolved.dump();
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

}  // namespace fluxlaw
