#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fluxlaw/sim2d.hpp"

using namespace fluxlaw;

namespace {

SimConfig small_config(int n, double nu, double dt) {
    SimConfig c;
    c.grid = WaveGrid(2, 2.0 * kPi, n);
    c.nu = nu;
    c.dt = dt;
    c.forcing.grid = c.grid;
    return c;
}

double max_diff(const SpectralField& a, const SpectralField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.coeff.size(); ++i) m = std::max(m, std::abs(a.coeff[i] - b.coeff[i]));
    return m;
}

}  // namespace

TEST_CASE("single mode decays exactly") {
    for (auto scheme : {Scheme::heun, Scheme::rk3, Scheme::euler_maruyama}) {
        auto c = small_config(32, 0.03, 0.01);
        c.scheme = scheme;
        Simulator sim(c);
        SpectralField w(c.grid, FieldKind::scalar);
        w.coeff[c.grid.flat({2, 3, 0})] = cplx(0.4, -0.2);
        w.coeff[c.grid.flat({-2, -3, 0})] = cplx(0.4, 0.2);
        sim.set_vorticity(w);
        for (int s = 0; s < 50; ++s) sim.step();
        double expect = std::exp(-0.03 * 13.0 * 0.5);
        auto out = sim.vorticity();
        CHECK(std::abs(out.coeff[c.grid.flat({2, 3, 0})] - cplx(0.4, -0.2) * expect) < 1e-13);
        CHECK(std::abs(out.coeff[c.grid.flat({-2, -3, 0})] - cplx(0.4, 0.2) * expect) < 1e-13);
        CHECK(max_diff(sim.nonlinear_term(w), SpectralField(c.grid, FieldKind::scalar)) < 1e-15);
    }
}

TEST_CASE("inviscid energy and enstrophy are conserved to high order") {
    auto c = small_config(32, 0.0, 0.02);
    auto w0 = synthetic_field(c.grid, FieldKind::scalar, 5, 2.0, 6);
    double drift[2];
    for (int h = 0; h < 2; ++h) {
        c.dt = 0.02 / (1 << h);
        Simulator sim(c);
        sim.set_vorticity(w0);
        double e0 = sim.energy(), z0 = sim.enstrophy();
        sim.step();
        drift[h] = std::abs(sim.energy() - e0) / e0 + std::abs(sim.enstrophy() - z0) / z0;
    }
    // Heun's local error is O(dt^3): halving dt cuts the one-step drift by ~8.
    CHECK(drift[0] < 1e-5);
    CHECK(drift[0] / drift[1] > 4.0);

    c.scheme = Scheme::rk3;
    for (int h = 0; h < 2; ++h) {
        c.dt = 0.02 / (1 << h);
        Simulator sim(c);
        sim.set_vorticity(w0);
        double e0 = sim.energy(), z0 = sim.enstrophy();
        sim.step();
        drift[h] = std::abs(sim.energy() - e0) / e0 + std::abs(sim.enstrophy() - z0) / z0;
    }
    MESSAGE("rk3 one-step drift " << drift[0] << " " << drift[1]);
    // Fourth-order local error: about 16 per halving.
    CHECK(drift[0] < 1e-5);
    CHECK(drift[0] / drift[1] > 12.0);
}

TEST_CASE("rk3 stays bounded where heun's advective instability grows") {
    // Advection-dominated, weakly damped: |k_max u dt| ~ 1 sits inside RK3's
    // imaginary-axis stability interval but outside Heun's.
    auto c = small_config(64, 1e-5, 0.0);
    auto w0 = synthetic_field(c.grid, FieldKind::scalar, 3, 1.0, 4);
    double z0 = 0.0;
    {
        Simulator s0(small_config(64, 1e-5, 0.01));
        s0.set_vorticity(w0);
        z0 = s0.enstrophy();
    }
    c.dt = 1.2 / (21.0 * std::sqrt(z0) * 2.0);
    auto grow = [&](Scheme scheme) {
        c.scheme = scheme;
        Simulator sim(c);
        sim.set_vorticity(w0);
        try {
            for (int s = 0; s < 2000; ++s) sim.step();
        } catch (const std::runtime_error&) {
            return std::numeric_limits<double>::infinity();
        }
        return sim.enstrophy() / z0;
    };
    double g3 = grow(Scheme::rk3), g2 = grow(Scheme::heun);
    MESSAGE("enstrophy ratio rk3 " << g3 << " heun " << g2);
    CHECK(g3 < 1.05);
}

TEST_CASE("state stays Hermitian, mean-zero and deterministic") {
    auto c = small_config(32, 0.01, 0.01);
    c.forcing = shell_forcing(c.grid, 3.0, 5.0, 0.1, 2);
    Simulator a(c), b(c);
    for (int s = 0; s < 100; ++s) {
        a.step();
        b.step();
    }
    auto wa = a.vorticity(), wb = b.vorticity();
    CHECK(wa.coeff == wb.coeff);
    CHECK(wa.coeff[0] == cplx(0.0));
    CHECK(hermitian_defect(wa) == 0.0);
    CHECK(divergence_defect(biot_savart(wa)) < 1e-14);
    CHECK(norm_sq(wa) > 0.0);

    auto c2 = c;
    c2.seed = 99;
    Simulator d(c2);
    for (int s = 0; s < 100; ++s) d.step();
    CHECK(max_diff(d.vorticity(), wa) > 0.0);
}

TEST_CASE("zero state with forcing accumulates the forced noise") {
    auto c = small_config(16, 0.01, 0.01);
    c.forcing = shell_forcing(c.grid, 3.0, 5.0, 1.0, 4);
    c.nonlinear = false;  // Heun's corrector would add dt/2 N(noise)
    Simulator sim(c);
    sim.step();
    auto w = sim.vorticity();
    auto inc = sample_vorticity_increment([&] {
        auto f = c.forcing;
        f.seed = c.seed;
        return f;
    }(), c.dt, 0);
    // One step from rest: omega = scale_k * increment with scale_k within dt*nu*k^2 of one.
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
        double x = c.nu * c.grid.k_norm2(i) * c.dt;
        if (std::abs(w.coeff[i] - inc.coeff[i]) > x * std::abs(inc.coeff[i]) + 1e-300) {
            auto z = c.grid.lattice(i);
            FAIL_CHECK("mode " << z[0] << "," << z[1] << " w=" << w.coeff[i] << " inc=" << inc.coeff[i]);
        }
    }
}

TEST_CASE("strong convergence under path refinement") {
    auto base = small_config(32, 0.01, 0.04);
    base.forcing = shell_forcing(base.grid, 3.0, 5.0, 0.5, 8);
    auto w0 = synthetic_field(base.grid, FieldKind::scalar, 6, 2.0, 5);

    const int fine_steps = 64;  // at dt/8
    const double T = 0.64;
    // Fine Brownian path: increments at the finest step.
    std::vector<SpectralField> fine;
    auto f = base.forcing;
    f.seed = 77;
    for (int s = 0; s < fine_steps * 8 / 8; ++s) fine.push_back(sample_vorticity_increment(f, T / fine_steps, s));
    auto run = [&](Scheme scheme, int refine) {
        auto c = base;
        c.scheme = scheme;
        c.dt = T / (fine_steps / refine);
        Simulator sim(c);
        sim.set_vorticity(w0);
        for (int s = 0; s < fine_steps / refine; ++s) {
            SpectralField inc(c.grid, FieldKind::scalar);
            for (int q = 0; q < refine; ++q)
                for (std::size_t i = 0; i < inc.coeff.size(); ++i) inc.coeff[i] += fine[s * refine + q].coeff[i];
            sim.step(inc);
        }
        return sim.vorticity();
    };
    for (auto scheme : {Scheme::heun, Scheme::rk3, Scheme::euler_maruyama}) {
        auto ref = run(scheme, 1);
        double e8 = std::sqrt(norm_sq([&] { auto a = run(scheme, 8); for (std::size_t i = 0; i < a.coeff.size(); ++i) a.coeff[i] -= ref.coeff[i]; return a; }()));
        double e4 = std::sqrt(norm_sq([&] { auto a = run(scheme, 4); for (std::size_t i = 0; i < a.coeff.size(); ++i) a.coeff[i] -= ref.coeff[i]; return a; }()));
        double e2 = std::sqrt(norm_sq([&] { auto a = run(scheme, 2); for (std::size_t i = 0; i < a.coeff.size(); ++i) a.coeff[i] -= ref.coeff[i]; return a; }()));
        MESSAGE(to_string(scheme) << " errors " << e8 << " " << e4 << " " << e2);
        CHECK(e8 > e4);
        CHECK(e4 > e2);
        // At least first order: halving dt at least ~halves the error.
        CHECK(e8 / e4 > 1.6);
        CHECK(e4 / e2 > 1.6);
    }
}

TEST_CASE("linearized simulator reproduces the OU variance") {
    auto c = small_config(32, 0.02, 1.0);
    c.nonlinear = false;
    c.forcing = shell_forcing(c.grid, 3.0, 5.0, 0.3, 11);
    c.t_burn = 50.0;
    c.t_window = 40000.0;
    auto st = run_stationary(c);
    CHECK(st.window == doctest::Approx(40000.0).epsilon(1e-12));
    // Exact: E|w^(k)|^2 = sum_j |curl f_j^(k)|^2 / (2 nu |k|^2).
    std::vector<double> src(c.grid.size(), 0.0);
    for (std::size_t j = 0; j < c.forcing.count(); ++j) {
        auto cf = c.forcing.curl(j);
        for (std::size_t i = 0; i < c.grid.size(); ++i) src[i] += std::norm(cf.coeff[i]);
    }
    double worst = 0.0;
    int modes = 0;
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
        if (src[i] == 0.0) {
            CHECK(st.enstrophy_spectrum.density[i] == 0.0);
            continue;
        }
        double exact = src[i] / (2.0 * c.nu * c.grid.k_norm2(i));
        worst = std::max(worst, std::abs(st.enstrophy_spectrum.density[i] / exact - 1.0));
        ++modes;
    }
    MESSAGE("OU worst relative deviation " << worst << " over " << modes << " modes");
    CHECK(modes > 20);
    CHECK(worst < 0.05);
}
