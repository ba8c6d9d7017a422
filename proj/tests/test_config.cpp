#include <doctest.h>

#include <cmath>

#include "fluxlaw/config.hpp"

using namespace fluxlaw;

TEST_CASE("TOML subset parses sections, arrays and comments") {
    const auto j = parse_toml(R"(
seed = 3  # trailing comment
[grid]
n = 32
lambda = 6.5
[sim]
scheme = 'rk3'
initial = "runs/a#b/final"
[diagnostics]
gammas = [
  1.5,  # first
  1.2,
]
kinds = ["vel", "vor"]
[a.b]
flag = true
)");
    CHECK(j["seed"] == 3);
    CHECK(j["grid"]["n"] == 32);
    CHECK(j["grid"]["lambda"].get<double>() == 6.5);
    CHECK(j["sim"]["scheme"] == "rk3");
    CHECK(j["sim"]["initial"] == "runs/a#b/final");
    CHECK(j["diagnostics"]["gammas"] == json({1.5, 1.2}));
    CHECK(j["diagnostics"]["kinds"] == json({"vel", "vor"}));
    CHECK(j["a"]["b"]["flag"] == true);
}

TEST_CASE("TOML subset rejects what it does not support") {
    CHECK_THROWS_AS(parse_toml("x = {a = 1}"), ConfigError);
    CHECK_THROWS_AS(parse_toml("[[runs]]\nx = 1"), ConfigError);
    CHECK_THROWS_AS(parse_toml("x = 1\nx = 2"), ConfigError);
    CHECK_THROWS_AS(parse_toml("a.b = 1"), ConfigError);
    CHECK_THROWS_AS(parse_toml("x = [1, 2"), ConfigError);
    CHECK_THROWS_AS(parse_toml("x = 1979-05-27"), ConfigError);
    try {
        parse_toml("a = 1\n\nb = nope", "cfg.toml");
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("cfg.toml:3") != std::string::npos);
    }
}

TEST_CASE("resolution fills defaults and rejects unknown keys and bad types") {
    const auto r = resolve_run_config(parse_toml("[sim]\nnu = 0.002\n[grid]\nn = 32"));
    CHECK(r["sim"]["nu"].get<double>() == 0.002);
    CHECK(r["sim"]["dt"].get<double>() == 5e-3);
    CHECK(r["grid"]["n"] == 32);
    CHECK(r["format_version"] == kFormatVersion);
    CHECK_THROWS_AS(resolve_run_config(parse_toml("[sim]\nviscosity = 1.0")), ConfigError);
    CHECK_THROWS_AS(resolve_run_config(parse_toml("[extra]\nx = 1")), ConfigError);
    CHECK_THROWS_AS(resolve_run_config(parse_toml("[grid]\nn = 32.5")), ConfigError);
    CHECK_THROWS_AS(resolve_run_config(parse_toml("[sim]\nnu = 'small'")), ConfigError);
    CHECK_THROWS_AS(resolve_run_config(parse_toml("format_version = 2")), ConfigError);
    CHECK_THROWS_AS(resolve_run_config(parse_toml("seed = -1")), ConfigError);
    // integers are accepted where floats are expected, and stored as floats
    const auto f = resolve_run_config(parse_toml("[sim]\nt_window = 5"));
    CHECK(f["sim"]["t_window"].is_number_float());
}

TEST_CASE("sim config and forcing from a resolved config") {
    const auto r = resolve_run_config(parse_toml("seed = 9\n[grid]\nn = 32\n[sim]\nscheme = 'heun'\nt_window = 2"));
    const SimConfig c = sim_config_from(r);
    CHECK(c.grid.n() == 32);
    CHECK(c.seed == 9);
    CHECK(c.scheme == Scheme::heun);
    CHECK(c.forcing.count() > 0);
    CHECK(std::abs(injection_rates(c.forcing).epsilon - 1e-3) < 1e-15);

    const auto explicit_modes = resolve_run_config(
        json::parse(R"({"grid": {"n": 16}, "forcing": {"components": [[{"k": [1, 2], "amp": [0.2, 0.0, -0.1, 0.0]}]]}})"));
    const ForcingSpec fs = forcing_from_config(explicit_modes);
    CHECK(fs.count() == 1);
    // not divergence-free: amp not perpendicular to k
    CHECK_THROWS_AS(forcing_from_config(resolve_run_config(json::parse(
                        R"({"grid": {"n": 16}, "forcing": {"components": [[{"k": [1, 0], "amp": [1, 0, 0, 0]}]]}})"))),
                    ConfigError);
    CHECK_THROWS_AS(sim_config_from(resolve_run_config(parse_toml("[sim]\nscheme = 'leapfrog'"))), ConfigError);
    CHECK_THROWS_AS(sim_config_from(resolve_run_config(parse_toml("[sim]\nnu = -1.0"))), ConfigError);
}

TEST_CASE("config hash is canonical") {
    const auto a = resolve_run_config(parse_toml("seed = 1\n[sim]\nnu = 0.001"));
    const auto b = resolve_run_config(json::parse(R"({"sim": {"nu": 1e-3}, "seed": 1})"));
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(resolve_run_config(parse_toml("seed = 2"))));
    // sha256 of the compact sorted dump, computed with Python's hashlib
    CHECK(config_hash(json::parse(R"({"b": [1, 2.5], "a": "x"})")) ==
          "66efddae6a97500318e4c6cdc4bc04149f340a165a7ef2d830393048b67b7a31");
}
