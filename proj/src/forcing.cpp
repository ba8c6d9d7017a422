#include "fluxlaw/forcing.hpp"

#include <cmath>
#include <stdexcept>

#include "fluxlaw/rng.hpp"

namespace fluxlaw {

namespace {

constexpr std::uint64_t kPhaseStream = 0xf0c1;
constexpr std::uint64_t kNoiseStream = 0x6e01;

void place(SpectralField& f, const std::array<int, 3>& z, const std::array<cplx, 3>& v, int ncomp) {
    const WaveGrid& g = f.grid;
    std::size_t i = g.flat(z);
    std::size_t m = g.negate(i);
    if (g.is_nyquist(i)) throw std::invalid_argument("forcing mode on the Nyquist row");
    if (i == m) throw std::invalid_argument("forcing mode at k = 0 must be real; not supported");
    for (int c = 0; c < ncomp; ++c) {
        f.comp(c)[i] += v[c];
        f.comp(c)[m] += std::conj(v[c]);
    }
}

cplx curl_of(const WaveGrid& g, const ForcingMode& m) {
    double k1 = g.k0() * m.z[0], k2 = g.k0() * m.z[1];
    return cplx(0.0, 1.0) * (k1 * m.amp[1] - k2 * m.amp[0]);
}

}  // namespace

bool ForcingSpec::mean_zero() const {
    for (const auto& c : components)
        for (const auto& m : c)
            if (m.z == std::array<int, 3>{0, 0, 0}) return false;
    return true;
}

SpectralField ForcingSpec::field(std::size_t j) const {
    SpectralField f(grid, FieldKind::velocity);
    for (const auto& m : components.at(j)) place(f, m.z, m.amp, grid.d());
    return f;
}

SpectralField ForcingSpec::curl(std::size_t j) const {
    if (grid.d() != 2) throw std::invalid_argument("ForcingSpec::curl: d must be 2");
    SpectralField f(grid, FieldKind::scalar);
    f.mean_zero = true;
    for (const auto& m : components.at(j)) place(f, m.z, {curl_of(grid, m), 0.0, 0.0}, 1);
    return f;
}

double ForcingSpec::smoothness_constant() const {
    double s = 0.0;
    for (std::size_t j = 0; j < count(); ++j) {
        auto f = field(j);
        for (int c = 0; c < f.components(); ++c)
            for (std::size_t i = 0; i < grid.size(); ++i) {
                double k2 = grid.k_norm2(i);
                s += k2 * k2 * k2 * std::norm(f.comp(c)[i]);
            }
    }
    return s;
}

InjectionRates injection_rates(const ForcingSpec& spec) {
    InjectionRates r;
    double e = 0.0, h = 0.0;
    // ||f_j||^2 counts the mode and its conjugate.
    for (const auto& c : spec.components)
        for (const auto& m : c) {
            double a2 = 0.0;
            for (int i = 0; i < spec.grid.d(); ++i) a2 += std::norm(m.amp[i]);
            double z2 = double(m.z[0]) * m.z[0] + double(m.z[1]) * m.z[1] + double(m.z[2]) * m.z[2];
            e += a2;
            h += a2 * z2 * spec.grid.k0() * spec.grid.k0();
        }
    r.epsilon = e;
    if (spec.grid.d() == 2) r.eta = h;
    return r;
}

ForcingSpec shell_forcing(const WaveGrid& g, double lo, double hi, double target_epsilon, std::uint64_t seed) {
    if (g.d() != 2 && g.d() != 3) throw std::invalid_argument("shell_forcing: bad d");
    if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("shell_forcing: need 0 < lo <= hi");
    if (!(target_epsilon >= 0.0)) throw std::invalid_argument("shell_forcing: epsilon must be nonnegative");
    ForcingSpec spec;
    spec.grid = g;
    spec.k_lo = lo;
    spec.k_hi = hi;
    spec.seed = seed;
    const int zmax = static_cast<int>(std::floor(hi));
    if (3 * zmax >= g.n()) throw std::invalid_argument("shell_forcing: band exceeds the dealiased range");
    int rep = 0;
    auto add = [&](std::array<int, 3> z) {
        double kn = std::sqrt(double(z[0]) * z[0] + double(z[1]) * z[1] + double(z[2]) * z[2]);
        if (kn < lo || kn > hi) return;
        // One representative per +-k pair: first nonzero coordinate positive.
        int lead = z[0] != 0 ? z[0] : (z[1] != 0 ? z[1] : z[2]);
        if (lead <= 0) return;
        std::array<std::array<double, 3>, 2> dirs;
        int ndirs = 0;
        if (g.d() == 2) {
            dirs[0] = {-z[1] / kn, z[0] / kn, 0.0};
            ndirs = 1;
        } else {
            // Orthonormal pair orthogonal to z.
            std::array<double, 3> e{z[0] / kn, z[1] / kn, z[2] / kn};
            std::array<double, 3> a = std::abs(e[0]) < 0.9 ? std::array<double, 3>{1, 0, 0}
                                                           : std::array<double, 3>{0, 1, 0};
            double dot = a[0] * e[0] + a[1] * e[1] + a[2] * e[2];
            std::array<double, 3> t{a[0] - dot * e[0], a[1] - dot * e[1], a[2] - dot * e[2]};
            double tn = std::sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
            for (double& v : t) v /= tn;
            dirs[0] = t;
            dirs[1] = {e[1] * t[2] - e[2] * t[1], e[2] * t[0] - e[0] * t[2], e[0] * t[1] - e[1] * t[0]};
            ndirs = 2;
        }
        for (int q = 0; q < ndirs; ++q) {
            double phi = 2.0 * kPi * uniform01(seed, kPhaseStream, static_cast<std::uint64_t>(rep * 2 + q));
            for (int s = 0; s < 2; ++s) {
                cplx ph = std::polar(1.0, phi + 0.5 * kPi * s);
                ForcingMode m;
                m.z = z;
                for (int c = 0; c < 3; ++c) m.amp[c] = ph * dirs[q][c];
                spec.components.push_back({m});
            }
        }
        ++rep;
    };
    const int zz = g.d() == 3 ? zmax : 0;
    for (int a = -zmax; a <= zmax; ++a)
        for (int b = -zmax; b <= zmax; ++b)
            for (int c = -zz; c <= zz; ++c) add({a, b, c});
    if (spec.components.empty()) throw std::invalid_argument("shell_forcing: empty band");
    // Unit amplitudes give epsilon = number of components.
    double amp = std::sqrt(target_epsilon / static_cast<double>(spec.components.size()));
    for (auto& c : spec.components)
        for (auto& m : c)
            for (auto& v : m.amp) v *= amp;
    return spec;
}

double forcing_normal(std::uint64_t seed, std::size_t j, std::uint64_t step) {
    return normal_pair(seed, (kNoiseStream << 40) ^ j, step)[0];
}

SpectralField sample_increment(const ForcingSpec& spec, double dt, std::uint64_t step) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_increment: dt must be positive");
    SpectralField f(spec.grid, FieldKind::velocity);
    const double sq = std::sqrt(dt);
    for (std::size_t j = 0; j < spec.count(); ++j) {
        double xi = forcing_normal(spec.seed, j, step) * sq;
        for (const auto& m : spec.components[j]) {
            std::array<cplx, 3> v{m.amp[0] * xi, m.amp[1] * xi, m.amp[2] * xi};
            place(f, m.z, v, spec.grid.d());
        }
    }
    return f;
}

SpectralField sample_vorticity_increment(const ForcingSpec& spec, double dt, std::uint64_t step) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_vorticity_increment: dt must be positive");
    if (spec.grid.d() != 2) throw std::invalid_argument("sample_vorticity_increment: d must be 2");
    SpectralField f(spec.grid, FieldKind::scalar);
    f.mean_zero = true;
    const double sq = std::sqrt(dt);
    for (std::size_t j = 0; j < spec.count(); ++j) {
        double xi = forcing_normal(spec.seed, j, step) * sq;
        for (const auto& m : spec.components[j]) place(f, m.z, {curl_of(spec.grid, m) * xi, 0.0, 0.0}, 1);
    }
    return f;
}

}  // namespace fluxlaw
