#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <vector>

#include "fluxlaw/grid.hpp"
#include "fluxlaw/rng.hpp"
#include "fluxlaw/sphere.hpp"

using namespace fluxlaw;

TEST_CASE("beta table") {
    CHECK(beta(2, 1) == Rational(1, 2));
    CHECK(beta(3, 1) == Rational(1, 3));
    CHECK(beta(3, 2) == Rational(1, 15));
    CHECK(beta(2, 0) == Rational(1));
    CHECK_NOTHROW(beta(3, 20));
    CHECK_THROWS_AS(beta(2, 21), std::overflow_error);
    CHECK_THROWS_AS(pairing_count(21), std::overflow_error);
}

TEST_CASE("pairing counts") {
    CHECK(pairing_count(0) == 1);
    CHECK(pairing_count(2) == 3);
    CHECK(pairing_count(5) == 945);
    // 39!! does not fit in 64 bits; the exact value is still served.
    CHECK(pairing_count(20) == BigInt("319830986772877770815625"));
}

TEST_CASE("moments of n1 reduce to double factorial ratios") {
    for (int k = 0; k <= kExactCap; ++k) {
        BigInt odd = 1, even = 1;
        for (int j = 2 * k - 1; j > 1; j -= 2) odd *= j;
        for (int j = 2 * k; j > 1; j -= 2) even *= j;
        CHECK(beta(2, k) * Rational(pairing_count(k)) == Rational(odd, even));
        CHECK(beta(3, k) * Rational(pairing_count(k)) == Rational(1, 2 * k + 1));
    }
}

TEST_CASE("isotropic tensor averages") {
    std::vector<int> a{1, 1};
    CHECK(isotropic_tensor_average(2, a) == Rational(1, 2));
    std::vector<int> b{1, 1, 1, 1};
    CHECK(isotropic_tensor_average(3, b) == Rational(1, 5));
    std::vector<int> c{1, 2};
    CHECK(isotropic_tensor_average(2, c) == 0);
    std::vector<int> e{1, 1, 2};
    CHECK(isotropic_tensor_average(3, e) == 0);

    // Fifty random index tuples with k <= 4 against Monte Carlo.
    CounterStream pick(5, 1);
    for (int t = 0; t < 50; ++t) {
        int d = 2 + t % 2;
        int k = 1 + static_cast<int>(pick.uniform() * 4);
        std::vector<int> idx;
        for (int i = 0; i < 2 * k; ++i) idx.push_back(1 + static_cast<int>(pick.uniform() * d));
        double exact = to_double(isotropic_tensor_average(d, idx));
        auto mc = monte_carlo_sphere_average(
            d,
            [&](const Vec3& n) {
                double p = 1.0;
                for (int i : idx) p *= n[i - 1];
                return p;
            },
            20000, 100 + t);
        CHECK(std::abs(mc.mean - exact) <= 4.0 * mc.std_error + 1e-15);
    }
}

TEST_CASE("sphere rules") {
    for (auto rule : {SphereRule::circle(64), SphereRule::product(16, 32), SphereRule::default_for(3)}) {
        double ws = 0.0;
        for (double w : rule.weights) ws += w;
        CHECK(ws == doctest::Approx(1.0).epsilon(1e-14));
        for (auto& n : rule.nodes) CHECK(std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(rule.average([](const Vec3& n) { return n[0] * n[1] * n[1]; })) < 1e-12);
        CHECK(std::abs(rule.average([](const Vec3& n) { return n[0] * n[0] * n[0] + n[1] + n[2] * n[2] * n[2]; })) < 1e-12);
    }
}

TEST_CASE("Monte Carlo sphere averages") {
    auto one = monte_carlo_sphere_average(3, [](const Vec3&) { return 1.0; }, 1000, 1);
    CHECK(one.mean == 1.0);
    auto m = monte_carlo_sphere_average(3, [](const Vec3& n) { return n[0] * n[0]; }, 1000000, 2);
    CHECK(std::abs(m.mean - 1.0 / 3.0) < 3.0 * m.std_error);
    auto q = monte_carlo_sphere_average(2, [](const Vec3& n) { return std::pow(n[0], 4); }, 1000000, 3);
    CHECK(std::abs(q.mean - 3.0 / 8.0) < 3.0 * q.std_error);
    auto again = monte_carlo_sphere_average(2, [](const Vec3& n) { return std::pow(n[0], 4); }, 1000000, 3);
    CHECK(again.mean == q.mean);
}

TEST_CASE("kernels at closed-form points") {
    CHECK(std::abs(tangential_kernel(3, 0, kPi)) < 1e-12);
    for (int d : {2, 3})
        for (int p : {0, 1, 2}) {
            double m0 = to_double(beta(d, p) * Rational(pairing_count(p)));
            CHECK(tangential_kernel(d, p, 0.0) == doctest::Approx(m0).epsilon(1e-15));
        }
    CHECK(tangential_kernel(2, 0, 0.0) == 1.0);
    CHECK(longitudinal_kernel(2, 0, 0.0) == 0.5);
    CHECK(longitudinal_kernel(3, 1, 0.0) == doctest::Approx(1.0 / 15.0).epsilon(1e-15));
    for (double x : {0.5, 3.0, 11.0, 29.5}) {
        CHECK(tangential_kernel(2, 0, x) == doctest::Approx(boost::math::cyl_bessel_j(0, x)).epsilon(1e-11));
        CHECK(tangential_kernel(3, 0, x) == doctest::Approx(std::sin(x) / x).epsilon(1e-11));
        CHECK(longitudinal_kernel(2, 0, x) == doctest::Approx(boost::math::cyl_bessel_j(1, x) / x).epsilon(1e-11));
    }
}

TEST_CASE("kernels against Monte Carlo oracles") {
    // d=2, p=1, x=10: mean (n.e)^2 cos(x n.e) with e = (1,0)
    auto mc = monte_carlo_sphere_average(2, [](const Vec3& n) { return n[0] * n[0] * std::cos(10.0 * n[0]); }, 400000, 7);
    CHECK(std::abs(tangential_kernel(2, 1, 10.0) - mc.mean) < 3.0 * mc.std_error);

    // d=2, p=0, x=5 longitudinal: contract a random divergence-free covariance.
    // With k along e1, a divergence-free u^ lies along e2; rotate the frame.
    double th = 0.7;
    Vec3 e{std::cos(th), std::sin(th), 0.0}, t{-std::sin(th), std::cos(th), 0.0};
    double amp2 = 2.3;  // |u^|^2
    auto mc2 = monte_carlo_sphere_average(
        2,
        [&](const Vec3& n) {
            double ne = n[0] * e[0] + n[1] * e[1], nt = n[0] * t[0] + n[1] * t[1];
            return amp2 * nt * nt * std::cos(5.0 * ne);
        },
        400000, 8);
    CHECK(std::abs(amp2 * longitudinal_kernel(2, 0, 5.0) - mc2.mean) < 3.0 * mc2.std_error);
}

TEST_CASE("kernel derivatives match finite differences") {
    for (int d : {2, 3})
        for (int p : {0, 1})
            for (double x : {0.3, 4.0, 25.0, 60.0}) {
                const double h = 1e-5;
                double fd = (tangential_kernel(d, p, x + h) - tangential_kernel(d, p, x - h)) / (2 * h);
                CHECK(tangential_kernel_dx(d, p, x) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
                double fl = (longitudinal_kernel(d, p, x + h) - longitudinal_kernel(d, p, x - h)) / (2 * h);
                CHECK(longitudinal_kernel_dx(d, p, x) == doctest::Approx(fl).epsilon(1e-6).scale(1.0));
            }
}

TEST_CASE("series and large-x paths join continuously") {
    for (int d : {2, 3})
        for (int p : {0, 1, 2}) {
            double below = tangential_kernel(d, p, kSeriesLimit);
            double above = tangential_kernel(d, p, std::nextafter(kSeriesLimit, 100.0));
            CHECK(below == doctest::Approx(above).epsilon(1e-10).scale(1.0));
        }
    CHECK(tangential_kernel(2, 0, 5000.0) == doctest::Approx(boost::math::cyl_bessel_j(0, 5000.0)).epsilon(1e-9).scale(1.0));
    KernelSeries ks(2, 0, false);
    CHECK(ks.value(3.0) == tangential_kernel(2, 0, 3.0));
    CHECK(ks.value(3.0) == tangential_kernel(2, 0, 3.0));
    CHECK(ks.derivative(3.0) == tangential_kernel_dx(2, 0, 3.0));
}
