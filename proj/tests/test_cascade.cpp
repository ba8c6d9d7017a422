#include <doctest.h>

#include <cmath>

#include "fluxlaw/cascade.hpp"

using namespace fluxlaw;

namespace {

ViscositySweep synthetic_sweep(int d, CascadeDirection dir, double delta, const std::vector<double>& nus,
                               const std::vector<double>& ell, bool growing_domain = false) {
    ViscositySweep s;
    s.d = d;
    for (double nu : nus) {
        SyntheticSpec spec;
        spec.d = d;
        spec.nu = nu;
        spec.delta = delta;
        if (dir == CascadeDirection::direct) {
            spec.k_escape = 1.0 / nu;
            spec.k_rest = 0.5;
        } else {
            // escaping shell is the lowest shell of a box growing like 1/nu
            spec.lambda = growing_domain ? 2.0 * kPi / nu : 2.0 * kPi;
            spec.k_escape = nu;
            spec.k_rest = 3.0;
        }
        s.members.push_back(synthetic_member(spec, dir, ell));
    }
    return s;
}

}  // namespace

TEST_CASE("flux constants are exact and match their composites") {
    auto inv2 = flux_constants(2, CascadeDirection::inverse);
    CHECK(inv2[0].coefficient == Rational(2));
    CHECK(inv2[1].coefficient == Rational(3, 2));
    auto inv3 = flux_constants(3, CascadeDirection::inverse);
    CHECK(inv3[0].coefficient == Rational(4, 3));
    CHECK(inv3[1].coefficient == Rational(4, 5));
    // 4 beta_2(2) + 8 beta_2(1)/4 = 4/8 + 8/(2*4)
    CHECK(Rational(4) * beta(2, 2) + Rational(8) * beta(2, 1) / Rational(4) == Rational(3, 2));
    auto dir3 = flux_constants(3, CascadeDirection::direct);
    CHECK(dir3[0].coefficient == Rational(-4, 3));
    CHECK(dir3[1].coefficient == Rational(-4, 5));
    auto dir2 = flux_constants(2, CascadeDirection::direct);
    REQUIRE(dir2.size() == 3);
    CHECK(dir2[0].coefficient == Rational(-2));
    CHECK(dir2[1].coefficient == Rational(1, 4));
    CHECK(dir2[2].coefficient == Rational(1, 8));
    CHECK(dir2[1].ell_power == 3);
    CHECK_THROWS(flux_constants(4, CascadeDirection::direct));
    CHECK_THROWS(flux_constants(2, CascadeDirection::split));
}

TEST_CASE("cutoff rules and capture monotonicity") {
    RadialSpectrum d;
    d.add(1.0, 0.3);
    d.add(2.0, 0.1);
    d.add(50.0, 0.6);
    d.sort();
    CutoffOptions o;
    CHECK(select_direct_cutoff(d, 1e-3, 1.0, o) == 50.0);
    CHECK(captured_above(d, 50.0) == doctest::Approx(0.6));
    o.theta = 0.8;
    CHECK(select_direct_cutoff(d, 1e-3, 1.0, o) == 1.0);
    for (double n : {0.5, 1.0, 1.5, 2.0, 10.0, 50.0, 60.0}) CHECK(captured_above(d, 2.0 * n) <= captured_above(d, n));
    for (double m : {0.5, 1.0, 2.0, 50.0}) CHECK(captured_below(d, 0.5 * m) <= captured_below(d, m));
    CutoffOptions remark{SelectionRule::remark_energy, 0.5, 0.25, 2.0};
    CHECK(select_direct_cutoff(d, 1e-4, 1.0, remark) == doctest::Approx(10.0));
    remark.exponent = 0.5;
    CHECK_THROWS(select_direct_cutoff(d, 1e-4, 1.0, remark));
    CutoffOptions shells{SelectionRule::lowest_shells, 0.5, 0.25, 2.0};
    CHECK(select_inverse_cutoff(1e-3, 2.0 * kPi * 100.0, shells) == doctest::Approx(0.02));
    CHECK_THROWS(select_direct_cutoff(d, 1e-3, 1.0, shells));
    CHECK_THROWS(select_inverse_cutoff(1e-3, 1.0, CutoffOptions{}));
}

TEST_CASE("synthetic loop: 3D direct energy plateaus") {
    auto ell = log_grid(5e-4, 0.1, 60);
    auto sweep = synthetic_sweep(3, CascadeDirection::direct, 0.6, {1e-3, 1e-4, 1e-5, 1e-6}, ell);
    CascadeOptions o;
    o.ell_inertial = 0.05;
    auto r = detect_direct(sweep, o);
    CHECK(r.liminf_estimate == doctest::Approx(0.6).epsilon(1e-12));
    REQUIRE(r.plateaus.size() == 2);
    for (const auto& p : r.plateaus) {
        INFO(p.name, " fitted ", p.fitted, " predicted ", p.predicted, " slope ", p.max_log_slope);
        CHECK(p.pass);
        CHECK(p.fitted < 0.0);
    }
    CHECK(r.plateaus[0].predicted == doctest::Approx(-0.8));
    CHECK(r.plateaus[1].predicted == doctest::Approx(-0.48));
    CHECK(r.direction == CascadeDirection::direct);
    CHECK(r.trend_monotone);
}

TEST_CASE("synthetic loop: 2D direct enstrophy plateaus") {
    auto ell = log_grid(5e-4, 0.1, 60);
    auto sweep = synthetic_sweep(2, CascadeDirection::direct, 0.7, {1e-3, 1e-4, 1e-5, 1e-6}, ell);
    CascadeOptions o;
    o.ell_inertial = 0.05;
    auto r = detect_direct(sweep, o);
    CHECK(r.flux == "eta");
    CHECK(r.liminf_estimate == doctest::Approx(0.7).epsilon(1e-12));
    REQUIRE(r.plateaus.size() == 3);
    for (const auto& p : r.plateaus) {
        INFO(p.name, " fitted ", p.fitted, " predicted ", p.predicted, " slope ", p.max_log_slope);
        CHECK(p.pass);
    }
    CHECK(r.plateaus[0].fitted < 0.0);
    CHECK(r.plateaus[1].fitted > 0.0);
    CHECK(r.plateaus[2].fitted > 0.0);
    CHECK(r.direction == CascadeDirection::direct);
}

TEST_CASE("synthetic loop: inverse energy plateaus") {
    for (int d : {2, 3}) {
        INFO("d = ", d);
        auto ell = log_grid(20.0, 1e5, 80);
        auto sweep = synthetic_sweep(d, CascadeDirection::inverse, 0.5, {1e-4, 1e-5, 1e-6}, ell, true);
        CascadeOptions o;
        o.ell_inertial = 50.0;
        auto r = detect_inverse(sweep, o);
        CHECK(r.liminf_estimate == doctest::Approx(0.5).epsilon(1e-12));
        REQUIRE(r.plateaus.size() == 2);
        for (const auto& p : r.plateaus) {
            INFO(p.name, " fitted ", p.fitted, " predicted ", p.predicted, " slope ", p.max_log_slope);
            CHECK(p.pass);
            CHECK(p.fitted > 0.0);
        }
        CHECK(r.direction == CascadeDirection::inverse);
        CHECK(r.diagnostics.find("reformulation") == std::string::npos);
    }
}

TEST_CASE("zero escape gives zero capture and vanishing laws") {
    auto ell = log_grid(5e-4, 0.1, 40);
    auto sweep = synthetic_sweep(3, CascadeDirection::direct, 0.0, {1e-4, 1e-5, 1e-6}, ell);
    CascadeOptions o;
    o.ell_inertial = 0.05;
    o.cutoff = {SelectionRule::power_law, 0.5, 0.5, 2.0};
    auto r = detect_direct(sweep, o);
    CHECK(r.liminf_estimate == 0.0);
    for (const auto& p : r.plateaus) CHECK(p.pass);
    CHECK(r.direction == CascadeDirection::none);

    auto ell_inv = log_grid(20.0, 1e5, 40);
    auto inv = synthetic_sweep(3, CascadeDirection::inverse, 0.0, {1e-4, 1e-5, 1e-6}, ell_inv, true);
    CascadeOptions oi;
    oi.ell_inertial = 50.0;
    auto ri = detect_inverse(inv, oi);
    CHECK(ri.liminf_estimate == 0.0);
    CHECK(ri.direction == CascadeDirection::none);
}

TEST_CASE("sweep validation") {
    ViscositySweep s;
    s.d = 2;
    CHECK_THROWS(s.validate());
    s.members.resize(2);
    s.members[0].nu = 1e-3;
    s.members[1].nu = 1e-3;
    CHECK_THROWS(s.validate());
    s.members[1].nu = 1e-4;
    s.members[1].lambda = 1.0;
    CHECK_THROWS(s.validate());
}

TEST_CASE("filtration lemmas reproduce L delta and L (Delta - delta)") {
    auto cases = filtration_suite();
    REQUIRE(cases.size() == 18);
    for (const auto& fc : cases) {
        INFO(fc.family, " ", fc.scale, " delta ", fc.delta, " final ", fc.result.value.back(), " target ", fc.target);
        CHECK(fc.result.bounded);
        CHECK(fc.final_error < 0.02);
        CHECK(fc.trend);
        CHECK(fc.pass);
    }
    // delta = 0 at small scale: c -> 0 at fixed k, so the capture vanishes.
    CHECK(std::abs(cases[0].result.value.back()) < 0.02 * std::abs(cases[0].limit));
    CHECK_THROWS(filtration_small_scale({RadialSpectrum{}}, {1.0}, coefficient_family(FamilyId::dir3d_S0), 0.1));
}

TEST_CASE("corollaries") {
    auto results = corollary_suite();
    REQUIRE(results.size() == 4);
    for (const auto& r : results) {
        INFO(r.name, " direct ", r.direct_capture.back(), " inverse ", r.inverse_capture.back());
        CHECK(r.pass);
    }
    CHECK(results[0].direct_found);
    CHECK(!results[0].inverse_found);
    CHECK(results[1].direct_found);
    CHECK(results[1].inverse_found);
    CHECK(results[2].direct_found);
    CHECK(results[2].inverse_found);
    CHECK(!results[3].direct_found);
    CHECK(!results[3].inverse_found);
}
