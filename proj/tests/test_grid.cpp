#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "fluxlaw/grid.hpp"

using namespace fluxlaw;

namespace {

double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_abs(const std::vector<cplx>& a) {
    double m = 0.0;
    for (auto v : a) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

TEST_CASE("grid validates its shape") {
    CHECK_THROWS(WaveGrid(4, 1.0, 8));
    CHECK_THROWS(WaveGrid(2, -1.0, 8));
    CHECK_THROWS(WaveGrid(2, 1.0, 7));
    WaveGrid g(3, 2.0, 8);
    CHECK(g.size() == 512);
    CHECK(g.k0() == doctest::Approx(kPi));
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(g.flat(g.lattice(i)) == i);
        if (!g.is_nyquist(i)) {
            auto z = g.lattice(i), zn = g.lattice(g.negate(i));
            CHECK(zn[0] == -z[0]);
            CHECK(zn[1] == -z[1]);
            CHECK(zn[2] == -z[2]);
        }
    }
}

TEST_CASE("single mode inverts to 2cos(k0.x)") {
    WaveGrid g(2, 3.0, 16);
    SpectralField f(g, FieldKind::scalar);
    std::array<int, 3> z{2, -1, 0};
    f.coeff[g.flat(z)] = 1.0;
    f.coeff[g.flat({-2, 1, 0})] = 1.0;
    auto p = transform_to_physical(f);
    const double h = g.spacing();
    double worst = 0.0;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            double ph = g.k0() * (2 * i * h - 1 * j * h);
            worst = std::max(worst, std::abs(p.values[i * 16 + j] - 2.0 * std::cos(ph)));
        }
    CHECK(worst < 1e-13);
}

TEST_CASE("zero field maps to zero samples") {
    WaveGrid g(2, 1.0, 8);
    auto p = transform_to_physical(SpectralField(g, FieldKind::velocity));
    for (double v : p.values) CHECK(v == 0.0);
}

TEST_CASE("round trip and Parseval on random Hermitian fields") {
    for (int d : {2, 3}) {
        WaveGrid g(d, 2.0 * kPi, d == 2 ? 32 : 12);
        for (auto kind : {FieldKind::scalar, FieldKind::velocity}) {
            auto f = synthetic_field(g, kind, 7 + d, 0.5, g.n() / 2);
            CHECK(hermitian_defect(f) < 1e-15);
            auto p = transform_to_physical(f);
            auto back = transform_to_spectral(p, kind);
            CHECK(max_abs_diff(back.coeff, f.coeff) < 1e-12 * max_abs(f.coeff));
            CHECK(mean_square(p) == doctest::Approx(norm_sq(f)).epsilon(1e-12));
            if (kind == FieldKind::velocity) CHECK(divergence_defect(f) < 1e-12);
        }
    }
}

TEST_CASE("Biot-Savart at one mode and on random vorticity") {
    WaveGrid g(2, 2.0 * kPi, 16);
    SpectralField w(g, FieldKind::scalar);
    w.coeff[g.flat({1, 0, 0})] = 1.0;
    w.coeff[g.flat({-1, 0, 0})] = 1.0;
    auto u = biot_savart(w);
    // k = (1,0): psi = -1, u = grad^perp psi = (-i k2 psi, i k1 psi) = (0, -i)
    CHECK(std::abs(u.comp(0)[g.flat({1, 0, 0})]) < 1e-15);
    CHECK(std::abs(u.comp(1)[g.flat({1, 0, 0})] - cplx(0.0, -1.0)) < 1e-15);

    auto zero = biot_savart(SpectralField(g, FieldKind::scalar));
    CHECK(norm_sq(zero) == 0.0);

    auto om = synthetic_field(WaveGrid(2, 3.0, 32), FieldKind::scalar, 3, 1.0, 15);
    auto v = biot_savart(om);
    CHECK(divergence_defect(v) < 1e-14);
    auto back = curl2d(v);
    CHECK(max_abs_diff(back.coeff, om.coeff) < 1e-12 * max_abs(om.coeff));
    for (std::size_t i = 1; i < om.grid.size(); ++i) {
        double k2 = om.grid.k_norm2(i);
        double lhs = k2 * k2 * (std::norm(v.comp(0)[i]) + std::norm(v.comp(1)[i]));
        double rhs = k2 * std::norm(om.coeff[i]);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }

    SpectralField bad(g, FieldKind::scalar);
    bad.coeff[0] = 1.0;
    CHECK_THROWS(biot_savart(bad));
}

TEST_CASE("Leray projection") {
    WaveGrid g(3, 2.0, 8);
    auto grad = gradient(synthetic_field(g, FieldKind::scalar, 11, 0.0, 3));
    CHECK(max_abs(leray_project(grad).coeff) < 1e-14 * max_abs(grad.coeff));

    auto v = synthetic_field(g, FieldKind::velocity, 12, 0.0, 3);
    CHECK(max_abs_diff(leray_project(v).coeff, v.coeff) < 1e-14 * max_abs(v.coeff));

    SpectralField raw(g, FieldKind::velocity);
    auto s1 = synthetic_field(g, FieldKind::scalar, 13, 0.0, 3);
    auto s2 = synthetic_field(g, FieldKind::scalar, 14, 0.0, 3);
    auto s3 = synthetic_field(g, FieldKind::scalar, 15, 0.0, 3);
    for (std::size_t i = 0; i < g.size(); ++i) {
        raw.comp(0)[i] = s1.coeff[i];
        raw.comp(1)[i] = s2.coeff[i];
        raw.comp(2)[i] = s3.coeff[i];
    }
    auto p = leray_project(raw);
    CHECK(divergence_defect(p) < 1e-13);
    auto pp = leray_project(p);
    CHECK(max_abs_diff(pp.coeff, p.coeff) < 1e-14 * max_abs(p.coeff));
    // Self-adjoint: <P a, b> = <a, P b> per mode.
    auto other = raw;
    for (auto& c : other.coeff) c = std::conj(c) * cplx(0.3, -1.1);
    auto po = leray_project(other);
    cplx l = 0.0, r = 0.0;
    for (std::size_t i = 0; i < raw.coeff.size(); ++i) {
        l += p.coeff[i] * std::conj(other.coeff[i]);
        r += raw.coeff[i] * std::conj(po.coeff[i]);
    }
    CHECK(std::abs(l - r) < 1e-12 * std::abs(l));
}

TEST_CASE("spectral shift") {
    WaveGrid g(2, 2.5, 8);
    auto f = synthetic_field(g, FieldKind::scalar, 21, 0.0, 3);
    CHECK(max_abs_diff(spectral_shift(f, {0.0, 0.0, 0.0}).coeff, f.coeff) == 0.0);
    CHECK(max_abs_diff(spectral_shift(f, {2.5, 0.0, 0.0}).coeff, f.coeff) < 1e-14);

    auto p = transform_to_physical(f);
    const double h = g.spacing();
    auto shifted = transform_to_physical(spectral_shift(f, {3 * h, -2 * h, 0.0}));
    double worst = 0.0;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            double expect = p.values[((i + 3) % 8) * 8 + ((j - 2 + 8) % 8)];
            worst = std::max(worst, std::abs(shifted.values[i * 8 + j] - expect));
        }
    CHECK(worst < 1e-13);

    auto a = spectral_shift(spectral_shift(f, {0.31, -0.7, 0.0}), {1.1, 0.25, 0.0});
    auto b = spectral_shift(f, {1.41, -0.45, 0.0});
    CHECK(max_abs_diff(a.coeff, b.coeff) < 1e-13);
    CHECK(norm_sq(a) == doctest::Approx(norm_sq(f)).epsilon(1e-14));

    WaveGrid g3(3, 1.0, 8);
    auto f3 = synthetic_field(g3, FieldKind::velocity, 22, 0.0, 3);
    auto p3 = transform_to_physical(f3);
    auto s3 = transform_to_physical(spectral_shift(f3, {g3.spacing(), 0.0, -2 * g3.spacing()}));
    worst = 0.0;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                for (int k = 0; k < 8; ++k) {
                    double expect = p3.comp(c)[((i + 1) % 8) * 64 + j * 8 + (k + 6) % 8];
                    worst = std::max(worst, std::abs(s3.comp(c)[i * 64 + j * 8 + k] - expect));
                }
    CHECK(worst < 1e-13);
}

TEST_CASE("shell sums equal lattice sums") {
    WaveGrid g(2, 2.0 * kPi, 32);
    auto s = energy_density(synthetic_field(g, FieldKind::velocity, 31, 1.0, 15));
    auto bins = s.shell_sums();
    double tb = 0.0;
    for (double b : bins) tb += b;
    CHECK(tb == doctest::Approx(s.total()).epsilon(1e-12));
    CHECK(radial(s).total() == doctest::Approx(s.total()).epsilon(1e-12));
}

TEST_CASE("snapshot files round-trip bit-exactly") {
    WaveGrid g(2, 2.0 * kPi, 16);
    auto f = synthetic_field(g, FieldKind::velocity, 41, 1.0, 7);
    auto dir = std::filesystem::temp_directory_path() / "fluxlaw_snapshot_test";
    std::filesystem::create_directories(dir);
    std::string base = (dir / "snap").string();
    write_snapshot(base, f, 1.25, 99);
    double t = 0.0;
    std::uint64_t seed = 0;
    auto back = read_snapshot(base, &t, &seed);
    CHECK(back.grid == g);
    CHECK(back.kind == f.kind);
    CHECK(t == 1.25);
    CHECK(seed == 99);
    CHECK(std::memcmp(back.coeff.data(), f.coeff.data(), f.coeff.size() * sizeof(cplx)) == 0);
    std::filesystem::remove_all(dir);
}
