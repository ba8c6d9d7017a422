#include "fluxlaw/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "fluxlaw/fft.hpp"
#include "fluxlaw/rng.hpp"

namespace fluxlaw {

static_assert(std::endian::native == std::endian::little,
              "snapshot files are written in native order and must be little-endian");

WaveGrid::WaveGrid(int d, double lambda, int n) : d_(d), lambda_(lambda), n_(n) {
    if (d != 2 && d != 3) throw std::invalid_argument("WaveGrid: d must be 2 or 3");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("WaveGrid: lambda must be positive");
    if (n < 4 || n % 2 != 0) throw std::invalid_argument("WaveGrid: n_axis must be even and >= 4");
    size_ = 1;
    for (int i = 0; i < d; ++i) size_ *= static_cast<std::size_t>(n);
}

std::array<int, 3> WaveGrid::lattice(std::size_t flat) const {
    std::array<int, 3> z{0, 0, 0};
    for (int a = d_ - 1; a >= 0; --a) {
        z[a] = wavenumber(static_cast<int>(flat % n_));
        flat /= n_;
    }
    return z;
}

std::size_t WaveGrid::flat(const std::array<int, 3>& z) const {
    std::size_t f = 0;
    for (int a = 0; a < d_; ++a) {
        int i = ((z[a] % n_) + n_) % n_;
        f = f * n_ + i;
    }
    return f;
}

bool WaveGrid::is_nyquist(std::size_t flat) const {
    for (int a = 0; a < d_; ++a) {
        if (static_cast<int>(flat % n_) == n_ / 2) return true;
        flat /= n_;
    }
    return false;
}

std::array<double, 3> WaveGrid::k(std::size_t flat) const {
    auto z = lattice(flat);
    return {k0() * z[0], k0() * z[1], k0() * z[2]};
}

std::int64_t WaveGrid::z_norm2(std::size_t flat) const {
    auto z = lattice(flat);
    return std::int64_t(z[0]) * z[0] + std::int64_t(z[1]) * z[1] + std::int64_t(z[2]) * z[2];
}

double WaveGrid::k_norm2(std::size_t flat) const { return k0() * k0() * static_cast<double>(z_norm2(flat)); }

std::size_t WaveGrid::negate(std::size_t flat) const {
    std::size_t out = 0, stride = 1;
    for (int a = 0; a < d_; ++a) {
        int i = static_cast<int>(flat % n_);
        flat /= n_;
        out += static_cast<std::size_t>((n_ - i) % n_) * stride;
        stride *= n_;
    }
    return out;
}

std::string to_string(FieldKind kind) { return kind == FieldKind::velocity ? "velocity" : "scalar"; }

FieldKind field_kind_from_string(const std::string& s) {
    if (s == "velocity") return FieldKind::velocity;
    if (s == "scalar" || s == "vorticity") return FieldKind::scalar;
    throw std::invalid_argument("unknown field kind: " + s);
}

SpectralField::SpectralField(const WaveGrid& g, FieldKind k)
    : grid(g), kind(k), coeff(g.size() * (k == FieldKind::velocity ? g.d() : 1), cplx(0.0, 0.0)) {}

// ============================================================================
// Transforms
// ============================================================================

PhysicalField transform_to_physical(const SpectralField& f) {
    const WaveGrid& g = f.grid;
    const RealFft& fft = real_fft(g.d(), g.n());
    const int n = g.n(), hl = fft.half_last();
    const std::size_t rows = g.size() / n;
    PhysicalField p(g, f.components());
    std::vector<cplx> half(fft.half_size());
    for (int c = 0; c < f.components(); ++c) {
        auto src = f.comp(c);
        for (std::size_t r = 0; r < rows; ++r)
            for (int j = 0; j < hl; ++j) half[r * hl + j] = src[r * n + j];
        fft.backward(half.data(), p.comp(c).data());
    }
    return p;
}

SpectralField transform_to_spectral(const PhysicalField& p, FieldKind kind) {
    const WaveGrid& g = p.grid;
    SpectralField f(g, kind);
    if (f.components() != p.ncomp) throw std::invalid_argument("transform_to_spectral: component mismatch");
    const RealFft& fft = real_fft(g.d(), g.n());
    const int n = g.n(), hl = fft.half_last();
    const std::size_t rows = g.size() / n;
    const double inv = 1.0 / static_cast<double>(g.size());
    std::vector<cplx> half(fft.half_size());
    for (int c = 0; c < p.ncomp; ++c) {
        fft.forward(p.comp(c).data(), half.data());
        auto dst = f.comp(c);
        for (std::size_t r = 0; r < rows; ++r)
            for (int j = 0; j < hl; ++j) dst[r * n + j] = half[r * hl + j] * inv;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (static_cast<int>(i % n) > n / 2) dst[i] = std::conj(dst[g.negate(i)]);
        }
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g.is_nyquist(i)) dst[i] = 0.0;
    }
    return f;
}

void enforce_hermitian(SpectralField& f) {
    const WaveGrid& g = f.grid;
    for (int c = 0; c < f.components(); ++c) {
        auto a = f.comp(c);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.is_nyquist(i)) {
                a[i] = 0.0;
                continue;
            }
            std::size_t j = g.negate(i);
            if (j < i) continue;
            cplx v = 0.5 * (a[i] + std::conj(a[j]));
            a[i] = v;
            a[j] = std::conj(v);
        }
    }
    if (f.mean_zero)
        for (int c = 0; c < f.components(); ++c) f.comp(c)[0] = 0.0;
}

double hermitian_defect(const SpectralField& f) {
    const WaveGrid& g = f.grid;
    double worst = 0.0, scale = 0.0;
    for (int c = 0; c < f.components(); ++c) {
        auto a = f.comp(c);
        for (std::size_t i = 0; i < g.size(); ++i) {
            scale = std::max(scale, std::abs(a[i]));
            if (g.is_nyquist(i)) worst = std::max(worst, std::abs(a[i]));
            else worst = std::max(worst, std::abs(a[i] - std::conj(a[g.negate(i)])));
        }
    }
    return scale > 0.0 ? worst / scale : worst;
}

double divergence_defect(const SpectralField& f) {
    if (f.kind != FieldKind::velocity) return 0.0;
    const WaveGrid& g = f.grid;
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto k = g.k(i);
        cplx div = 0.0;
        double kn = 0.0, un = 0.0;
        for (int c = 0; c < g.d(); ++c) {
            div += k[c] * f.comp(c)[i];
            kn += k[c] * k[c];
            un += std::norm(f.comp(c)[i]);
        }
        if (kn > 0.0 && un > 0.0) worst = std::max(worst, std::abs(div) / std::sqrt(kn * un));
    }
    return worst;
}

// ============================================================================
// Differential operators
// ============================================================================

SpectralField biot_savart(const SpectralField& omega) {
    const WaveGrid& g = omega.grid;
    if (g.d() != 2 || omega.kind != FieldKind::scalar) throw std::invalid_argument("biot_savart: needs a 2D scalar field");
    if (std::abs(omega.coeff[0]) != 0.0) throw std::invalid_argument("biot_savart: vorticity must be mean-zero");
    SpectralField u(g, FieldKind::velocity);
    u.mean_zero = true;
    const cplx I(0.0, 1.0);
    for (std::size_t i = 1; i < g.size(); ++i) {
        auto k = g.k(i);
        double k2 = k[0] * k[0] + k[1] * k[1];
        // u = grad^perp psi with Laplacian psi = omega, so curl u = omega.
        cplx psi = -omega.coeff[i] / k2;
        u.comp(0)[i] = -I * k[1] * psi;
        u.comp(1)[i] = I * k[0] * psi;
    }
    return u;
}

SpectralField curl2d(const SpectralField& u) {
    const WaveGrid& g = u.grid;
    if (g.d() != 2 || u.kind != FieldKind::velocity) throw std::invalid_argument("curl2d: needs a 2D velocity field");
    SpectralField w(g, FieldKind::scalar);
    w.mean_zero = true;
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto k = g.k(i);
        w.coeff[i] = I * k[0] * u.comp(1)[i] - I * k[1] * u.comp(0)[i];
    }
    return w;
}

SpectralField leray_project(const SpectralField& v) {
    if (v.kind != FieldKind::velocity) throw std::invalid_argument("leray_project: needs a velocity field");
    const WaveGrid& g = v.grid;
    SpectralField out = v;
    for (std::size_t i = 1; i < g.size(); ++i) {
        auto k = g.k(i);
        double k2 = 0.0;
        cplx dot = 0.0;
        for (int c = 0; c < g.d(); ++c) {
            k2 += k[c] * k[c];
            dot += k[c] * v.comp(c)[i];
        }
        for (int c = 0; c < g.d(); ++c) out.comp(c)[i] = v.comp(c)[i] - k[c] * dot / k2;
    }
    return out;
}

SpectralField spectral_shift(const SpectralField& f, const std::array<double, 3>& y) {
    const WaveGrid& g = f.grid;
    SpectralField out = f;
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto k = g.k(i);
        double phase = 0.0;
        for (int a = 0; a < g.d(); ++a) phase += k[a] * y[a];
        cplx e(std::cos(phase), std::sin(phase));
        for (int c = 0; c < f.components(); ++c) out.comp(c)[i] *= e;
    }
    return out;
}

SpectralField gradient(const SpectralField& s) {
    if (s.kind != FieldKind::scalar) throw std::invalid_argument("gradient: needs a scalar field");
    const WaveGrid& g = s.grid;
    SpectralField out(g, FieldKind::velocity);
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto k = g.k(i);
        for (int c = 0; c < g.d(); ++c) out.comp(c)[i] = I * k[c] * s.coeff[i];
    }
    return out;
}

double norm_sq(const SpectralField& f) {
    double s = 0.0;
    for (const auto& c : f.coeff) s += std::norm(c);
    return s;
}

double grad_norm_sq(const SpectralField& f) {
    const WaveGrid& g = f.grid;
    double s = 0.0;
    for (int c = 0; c < f.components(); ++c) {
        auto a = f.comp(c);
        for (std::size_t i = 0; i < g.size(); ++i) s += g.k_norm2(i) * std::norm(a[i]);
    }
    return s;
}

double mean_square(const PhysicalField& p) {
    double s = 0.0;
    for (double v : p.values) s += v * v;
    return s / static_cast<double>(p.grid.size());
}

// ============================================================================
// Spectra
// ============================================================================

double ShellSpectrum::total() const { return std::accumulate(density.begin(), density.end(), 0.0); }

std::vector<double> ShellSpectrum::shell_sums() const {
    std::vector<double> bins;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto m = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(grid.z_norm2(i)))));
        // floor(sqrt) of an exact integer can be off by one ulp; correct it.
        while (static_cast<std::int64_t>((m + 1) * (m + 1)) <= grid.z_norm2(i)) ++m;
        while (m > 0 && static_cast<std::int64_t>(m * m) > grid.z_norm2(i)) --m;
        if (bins.size() <= m) bins.resize(m + 1, 0.0);
        bins[m] += density[i];
    }
    return bins;
}

ShellSpectrum ShellSpectrum::weighted(int power) const {
    ShellSpectrum out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double k2 = grid.k_norm2(i);
        double f = power == 0 ? 1.0 : (k2 == 0.0 ? 0.0 : std::pow(k2, 0.5 * power));
        out.density[i] = density[i] * f;
    }
    return out;
}

ShellSpectrum energy_density(const SpectralField& f) {
    ShellSpectrum s(f.grid);
    for (int c = 0; c < f.components(); ++c) {
        auto a = f.comp(c);
        for (std::size_t i = 0; i < f.grid.size(); ++i) s.density[i] += std::norm(a[i]);
    }
    return s;
}

void RadialSpectrum::add(double kk, double ww) {
    k.push_back(kk);
    w.push_back(ww);
}

double RadialSpectrum::total() const { return std::accumulate(w.begin(), w.end(), 0.0); }

void RadialSpectrum::sort() {
    std::vector<std::size_t> idx(k.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return k[a] < k[b]; });
    RadialSpectrum out;
    for (auto i : idx) out.add(k[i], w[i]);
    *this = out;
}

RadialSpectrum RadialSpectrum::weighted(int power) const {
    RadialSpectrum out;
    for (std::size_t i = 0; i < k.size(); ++i) out.add(k[i], w[i] * (k[i] == 0.0 ? (power == 0 ? 1.0 : 0.0) : std::pow(k[i], power)));
    return out;
}

RadialSpectrum radial(const ShellSpectrum& s) {
    std::map<std::int64_t, double> groups;
    for (std::size_t i = 0; i < s.grid.size(); ++i) groups[s.grid.z_norm2(i)] += s.density[i];
    RadialSpectrum out;
    for (const auto& [z2, w] : groups) out.add(s.grid.k0() * std::sqrt(static_cast<double>(z2)), w);
    return out;
}

SpectralField synthetic_field(const WaveGrid& g, FieldKind kind, std::uint64_t seed, double slope, int zmax) {
    SpectralField f(g, kind);
    f.mean_zero = true;
    for (std::size_t i = 1; i < g.size(); ++i) {
        if (g.is_nyquist(i)) continue;
        auto z = g.lattice(i);
        int zm = std::max({std::abs(z[0]), std::abs(z[1]), std::abs(z[2])});
        if (zm > zmax) continue;
        double amp = std::pow(static_cast<double>(g.z_norm2(i)), -0.5 * slope);
        for (int c = 0; c < f.components(); ++c) {
            auto r = normal_pair(seed, 0x51f0ull + c, i);
            f.comp(c)[i] = amp * cplx(r[0], r[1]);
        }
    }
    enforce_hermitian(f);
    if (kind == FieldKind::velocity) {
        f = leray_project(f);
        f.mean_zero = true;
    }
    return f;
}

// ============================================================================
// Snapshot files
// ============================================================================

void write_snapshot(const std::string& base, const SpectralField& f, double time, std::uint64_t seed) {
    std::ofstream bin(base + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write " + base + ".bin");
    bin.write(reinterpret_cast<const char*>(f.coeff.data()),
              static_cast<std::streamsize>(f.coeff.size() * sizeof(cplx)));
    nlohmann::ordered_json side;
    side["d"] = f.grid.d();
    side["lambda"] = f.grid.lambda();
    side["n_axis"] = f.grid.n();
    side["kind"] = to_string(f.kind);
    side["time"] = time;
    side["seed"] = seed;
    side["mean_zero"] = f.mean_zero;
    std::ofstream js(base + ".json");
    if (!js) throw std::runtime_error("cannot write " + base + ".json");
    js << side.dump(2) << "\n";
}

SpectralField read_snapshot(const std::string& base, double* time, std::uint64_t* seed) {
    std::ifstream js(base + ".json");
    if (!js) throw std::runtime_error("missing snapshot sidecar " + base + ".json");
    nlohmann::json side = nlohmann::json::parse(js);
    WaveGrid g(side.at("d").get<int>(), side.at("lambda").get<double>(), side.at("n_axis").get<int>());
    SpectralField f(g, field_kind_from_string(side.at("kind").get<std::string>()));
    f.mean_zero = side.value("mean_zero", false);
    std::ifstream bin(base + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("missing snapshot data " + base + ".bin");
    bin.read(reinterpret_cast<char*>(f.coeff.data()), static_cast<std::streamsize>(f.coeff.size() * sizeof(cplx)));
    if (bin.gcount() != static_cast<std::streamsize>(f.coeff.size() * sizeof(cplx)))
        throw std::runtime_error("truncated snapshot " + base + ".bin");
    if (time) *time = side.at("time").get<double>();
    if (seed) *seed = side.at("seed").get<std::uint64_t>();
    return f;
}

}  // namespace fluxlaw
