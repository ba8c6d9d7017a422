#include <doctest.h>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <cstring>

#include "fluxlaw/khm.hpp"

using namespace fluxlaw;
using boost::math::cyl_bessel_j;

namespace {

std::vector<CoefficientFamily> every_family() {
    std::vector<CoefficientFamily> out;
    for (auto id : all_families()) {
        if (id == FamilyId::inv_S0 || id == FamilyId::inv_Spar) {
            out.push_back(coefficient_family(id, 2));
            out.push_back(coefficient_family(id, 3));
        } else {
            out.push_back(coefficient_family(id));
        }
    }
    return out;
}

std::string label(const CoefficientFamily& f) { return to_string(f.id) + " d=" + std::to_string(f.d); }

RadialSpectrum single(double k, double w) {
    RadialSpectrum s;
    s.add(k, w);
    return s;
}

}  // namespace

TEST_CASE("coefficient families vanish at zero and reach their limits") {
    for (const auto& f : every_family()) {
        INFO(label(f));
        CHECK(coefficient_c(f, 0.0) == 0.0);
        const double L = to_double(f.limit);
        for (double x : {1e4, 3e4, 1e5}) CHECK(std::abs(coefficient_c(f, x) - L) < 1e-3);
    }
    CHECK(coefficient_family(FamilyId::dir2d_vor).limit == Rational(2));
    CHECK(coefficient_family(FamilyId::dir3d_S0).limit == Rational(4, 3));
    CHECK(coefficient_family(FamilyId::dir3d_Spar).limit == Rational(4, 15));
    CHECK(coefficient_family(FamilyId::dir2d_S0).limit == Rational(-1, 4));
    CHECK(coefficient_family(FamilyId::dir2d_Spar).limit == Rational(1, 24));
    CHECK(coefficient_family(FamilyId::inv_S0, 2).limit == Rational(-2));
    CHECK(coefficient_family(FamilyId::inv_S0, 3).limit == Rational(-4, 3));
    CHECK(coefficient_family(FamilyId::inv_Spar, 2).limit == Rational(-1, 2));
    CHECK(coefficient_family(FamilyId::inv_Spar, 3).limit == Rational(-4, 15));
    CHECK_THROWS(coefficient_family(FamilyId::inv_S0));
    CHECK_THROWS(family_from_string("dir4d"));
    CHECK(family_from_string("dir2d_Spar") == FamilyId::dir2d_Spar);
}

TEST_CASE("series against closed forms and integral representations") {
    for (const auto& f : every_family()) {
        INFO(label(f));
        const double L = to_double(f.limit);
        double worst_closed = 0.0, worst_int = 0.0;
        for (int i = 0; i <= 300; ++i) {
            double x = 0.1 * i;
            double c = f.series(x);
            worst_closed = std::max(worst_closed, std::abs((L - c) - f.gap_closed(x)));
            if (i % 10 == 3) worst_int = std::max(worst_int, std::abs((L - c) - f.gap_integral(x)));
        }
        // The closed forms cancel 1/x^k terms near 0, so they lose digits there;
        // the series is the accurate side.
        CHECK(worst_int < 1e-9);
        double worst_tail = 0.0;
        for (double x = 31.0; x <= 200.0; x += 7.0)
            worst_tail = std::max(worst_tail, std::abs(f.gap_closed(x) - f.gap_integral(x)));
        CHECK(worst_tail < 1e-6);
        double worst_mid = 0.0;
        for (int i = 10; i <= 300; ++i) {
            double x = 0.1 * i;
            worst_mid = std::max(worst_mid, std::abs((L - f.series(x)) - f.gap_closed(x)));
        }
        CHECK(worst_mid < 1e-9);
        (void)worst_closed;
    }
}

TEST_CASE("dir2d_vor at x = 10 against a Bessel oracle") {
    // 2 - 4 J1(10)/10 from an independent Bessel implementation.
    auto f = coefficient_family(FamilyId::dir2d_vor);
    CHECK(std::abs(f(10.0) - 1.9826109015324553) < 1e-10);
    CHECK(std::abs(f(10.0) - (2.0 - 4.0 * cyl_bessel_j(1, 10.0) / 10.0)) < 1e-10);
}

TEST_CASE("decay envelopes") {
    std::vector<double> x;
    for (int i = 1; i <= 4000; ++i) x.push_back(0.05 * i);
    auto e = decay_envelope_check(coefficient_family(FamilyId::dir3d_S0), x);
    CHECK(e.exact);
    CHECK(e.constant == 2.0);
    CHECK(e.max_violation <= 0.0);
    CHECK(e.envelope_decreasing);
    for (const auto& f : every_family()) {
        INFO(label(f));
        auto r = decay_envelope_check(f, x);
        CHECK(r.max_violation < 1e-3 * r.constant);
        CHECK(r.measured_rate > r.rate - 0.05);
        CHECK(std::isfinite(r.constant));
    }
    CHECK_THROWS(decay_envelope_check(coefficient_family(FamilyId::dir2d_vor), {0.0, 1.0}));
    CHECK_THROWS(decay_envelope_check(coefficient_family(FamilyId::dir2d_vor), {1.0, 250.0}));
}

TEST_CASE("forcing moments against direct quadrature of the kernel series") {
    const double k = 3.7;
    // Fixed 40-point Gauss on panels of width 0.25/k, kernels from their series.
    auto quad = [&](int d, bool par, int power, double l) {
        auto f = [&](double r) {
            double x = r * k;
            return std::pow(r, power) * (par ? longitudinal_kernel(d, 0, x) : tangential_kernel(d, 0, x));
        };
        int panels = static_cast<int>(std::ceil(l * k / 0.25));
        double s = 0.0;
        for (int p = 0; p < panels; ++p)
            s += boost::math::quadrature::gauss<double, 40>::integrate(f, l * p / panels, l * (p + 1) / panels);
        return s;
    };
    for (double l : {0.05, 0.8, 2.5, 7.5}) {
        for (int d : {2, 3}) {
            CHECK(forcing_moment(single(k, 1.0), d, false, d - 1, l) ==
                  doctest::Approx(quad(d, false, d - 1, l)).epsilon(1e-10));
            CHECK(forcing_moment(single(k, 1.0), d, true, d + 1, l) ==
                  doctest::Approx(quad(d, true, d + 1, l)).epsilon(1e-10));
            // a power without a closed form takes the quadrature branch
            CHECK(forcing_moment(single(k, 1.0), d, false, 3, l) == doctest::Approx(quad(d, false, 3, l)).epsilon(1e-10));
        }
    }
    // d = 2 closed form: int_0^l r J0(r k) dr = l J1(l k)/k
    CHECK(forcing_moment(single(k, 1.0), 2, false, 1, 2.5) == doctest::Approx(2.5 * cyl_bessel_j(1, 2.5 * k) / k).epsilon(1e-13));
    CHECK(forcing_moment(RadialSpectrum{}, 2, false, 1, 1.0) == 0.0);
}

TEST_CASE("forcing terms at small separation") {
    WaveGrid g2(2, 2.0 * kPi, 64);
    auto f2 = shell_forcing(g2, 3, 5, 0.3, 5);
    auto r2 = injection_rates(f2);
    std::vector<double> tiny{1e-4};
    RadialSpectrum none;
    auto vel = khm_rhs(KhmRelation::vel, none, f2, 0.0, tiny);
    CHECK(vel.forcing[0] / tiny[0] == doctest::Approx(-4.0 * r2.epsilon / 2.0).epsilon(1e-6));
    auto vor = khm_rhs(KhmRelation::vor, none, f2, 0.0, tiny);
    CHECK(vor.forcing[0] / tiny[0] == doctest::Approx(-2.0 * *r2.eta).epsilon(1e-6));
    auto par = khm_rhs(KhmRelation::vel_par, none, f2, 0.0, tiny);
    // -(4/l^{d+1}) int r^{d+1} a_par ~ -4 (eps/d) l/(d+2)
    CHECK(par.forcing[0] / tiny[0] == doctest::Approx(-4.0 * r2.epsilon / 2.0 / 4.0).epsilon(1e-6));

    WaveGrid g3(3, 2.0 * kPi, 16);
    auto f3 = shell_forcing(g3, 1, 2, 0.2, 6);
    auto r3 = injection_rates(f3);
    auto v3 = khm_rhs(KhmRelation::vel, none, f3, 0.0, tiny);
    CHECK(v3.forcing[0] / tiny[0] == doctest::Approx(-4.0 * r3.epsilon / 3.0).epsilon(1e-6));
    CHECK_THROWS(khm_rhs(KhmRelation::vor, none, f3, 0.0, tiny));
}

TEST_CASE("mean-zero forcing integral vanishes at large separation") {
    WaveGrid g(2, 2.0 * kPi, 128);
    auto f = shell_forcing(g, 3, 5, 1.0, 1);
    REQUIRE(f.mean_zero());
    auto fs = forcing_spectrum(f, false);
    double l = 1e3 / (f.k_lo * g.k0());
    double v = 4.0 * forcing_moment(fs, 2, false, 1, l) / (l * l);
    CHECK(std::abs(v) < 1e-3 * injection_rates(f).epsilon);
}

TEST_CASE("rhs terms, zero inputs, and the nested integral") {
    WaveGrid g(2, 2.0 * kPi, 64);
    auto f = shell_forcing(g, 3, 5, 0.3, 5);
    auto u = synthetic_field(g, FieldKind::velocity, 3, 1.5, 10);
    auto spec = radial(energy_density(u));
    auto ell = log_grid(0.02, 3.0, 40);
    for (auto rel : {KhmRelation::vel, KhmRelation::vel_par, KhmRelation::vor}) {
        auto b = khm_rhs(rel, spec, f, 2e-3, ell);
        for (std::size_t i = 0; i < ell.size(); ++i) {
            double again = b.viscous[i] + b.forcing[i] + b.nested[i];
            CHECK(std::memcmp(&again, &b.rhs[i], sizeof(double)) == 0);
        }
        auto z = khm_rhs(rel, 2, RadialSpectrum{}, RadialSpectrum{}, 0.0, ell);
        for (double v : z.rhs) CHECK(v == 0.0);
    }

    // Gamma' is analytic; a centred difference of Gamma agrees.
    auto gam = correlation_spectral(spec, 2, CorrelationKind::gamma_vel, {0.7 - 1e-5, 0.7, 0.7 + 1e-5});
    CHECK(gam.derivative[1] == doctest::Approx((gam.value[2] - gam.value[0]) / 2e-5).epsilon(1e-6));

    StructureCurve cube;
    cube.ell = log_grid(0.01, 2.0, 200);
    for (double r : cube.ell) cube.value.push_back(r * r * r);
    CHECK(nested_structure_term(cube, 2, 1.3) == doctest::Approx(1.3 * 1.3 * 1.3 / 3.0).epsilon(1e-5));
    CHECK(nested_structure_term(cube, 2, 0.005) == doctest::Approx(0.005 * 0.005 * 0.005 / 3.0).epsilon(1e-9));
    CHECK_THROWS_AS(nested_structure_term(cube, 2, 2.5), std::out_of_range);
}

TEST_CASE("single-mode residual is minus the viscous term") {
    WaveGrid g(2, 2.0 * kPi, 32);
    SpectralField w(g, FieldKind::scalar);
    const cplx a(0.3, -0.4);
    w.coeff[g.flat({2, 1, 0})] = a;
    w.coeff[g.flat({-2, -1, 0})] = std::conj(a);
    ForcingSpec none;
    none.grid = g;
    const double nu = 0.01, k = std::sqrt(5.0);
    auto ell = log_grid(0.1, 3.0, 12);
    auto bs = khm_residuals({w}, nu, none, ell);
    REQUIRE(bs.size() == 3);
    for (const auto& b : bs) {
        INFO(to_string(b.relation));
        for (std::size_t i = 0; i < ell.size(); ++i) {
            double x = ell[i] * k;
            CHECK(std::abs(b.lhs[i]) < 1e-15);
            double hand = 0.0;
            if (b.relation == KhmRelation::vel) hand = 8.0 * nu * std::norm(a) * cyl_bessel_j(1, x) / k;
            if (b.relation == KhmRelation::vor) hand = 8.0 * nu * std::norm(a) * k * cyl_bessel_j(1, x);
            if (b.relation == KhmRelation::vel_par) hand = 8.0 * nu * std::norm(a) * cyl_bessel_j(2, x) / (x * k);
            if (b.relation != KhmRelation::vel_par) CHECK(b.residual[i] == doctest::Approx(-hand).epsilon(1e-10));
            else CHECK(b.viscous[i] == doctest::Approx(hand).epsilon(1e-10));
        }
    }
}

TEST_CASE("no viscosity and no forcing leave the LHS as residual") {
    WaveGrid g(2, 2.0 * kPi, 32);
    auto w = synthetic_field(g, FieldKind::scalar, 17, 1.0, 10);
    ForcingSpec none;
    none.grid = g;
    auto ell = log_grid(0.1, 3.0, 10);
    for (const auto& b : khm_residuals({w}, 0.0, none, ell)) {
        for (std::size_t i = 0; i < ell.size(); ++i) {
            CHECK(b.viscous[i] == 0.0);
            CHECK(b.forcing[i] == 0.0);
            if (b.relation != KhmRelation::vel_par) CHECK(b.residual[i] == b.lhs[i]);
        }
    }
    CHECK(khm_relation_from_string("vel_par") == KhmRelation::vel_par);
    CHECK_THROWS(khm_relation_from_string("vel_perp"));
}
