#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fluxlaw {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Periodic box [0, lambda)^d sampled with n points per axis.
/// Lattice index i on an axis maps to the integer wavenumber z = i for i < n/2,
/// z = i - n for i > n/2; the unmatched row i = n/2 is the Nyquist row and is
/// always held at zero amplitude.
class WaveGrid {
public:
    WaveGrid() = default;
    WaveGrid(int d, double lambda, int n);

    int d() const { return d_; }
    double lambda() const { return lambda_; }
    int n() const { return n_; }
    std::size_t size() const { return size_; }
    double k0() const { return 2.0 * kPi / lambda_; }
    double spacing() const { return lambda_ / n_; }

    int wavenumber(int i) const { return i < n_ / 2 ? i : i - n_; }
    std::array<int, 3> lattice(std::size_t flat) const;
    std::size_t flat(const std::array<int, 3>& z) const;
    bool is_nyquist(std::size_t flat) const;
    std::array<double, 3> k(std::size_t flat) const;
    std::int64_t z_norm2(std::size_t flat) const;
    double k_norm2(std::size_t flat) const;
    std::size_t negate(std::size_t flat) const;

    bool operator==(const WaveGrid& o) const {
        return d_ == o.d_ && lambda_ == o.lambda_ && n_ == o.n_;
    }
    bool operator!=(const WaveGrid& o) const { return !(*this == o); }

private:
    int d_ = 2;
    double lambda_ = 2.0 * kPi;
    int n_ = 4;
    std::size_t size_ = 16;
};

enum class FieldKind { velocity, scalar };

std::string to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string& s);

/// Fourier coefficients of a real field, stored component-major over the full
/// lattice in FFT index order. Convention: f^(k) = mean_x f(x) e^{-ik.x} and
/// f(x) = sum_k f^(k) e^{ik.x}, so the averaged norm is sum_k |f^(k)|^2.
struct SpectralField {
    WaveGrid grid;
    FieldKind kind = FieldKind::scalar;
    bool mean_zero = false;
    std::vector<cplx> coeff;

    SpectralField() = default;
    SpectralField(const WaveGrid& g, FieldKind k);

    int components() const { return kind == FieldKind::velocity ? grid.d() : 1; }
    std::span<cplx> comp(int c) { return {coeff.data() + c * grid.size(), grid.size()}; }
    std::span<const cplx> comp(int c) const { return {coeff.data() + c * grid.size(), grid.size()}; }
};

struct PhysicalField {
    WaveGrid grid;
    int ncomp = 1;
    std::vector<double> values;

    PhysicalField() = default;
    PhysicalField(const WaveGrid& g, int nc) : grid(g), ncomp(nc), values(g.size() * nc, 0.0) {}
    std::span<double> comp(int c) { return {values.data() + c * grid.size(), grid.size()}; }
    std::span<const double> comp(int c) const { return {values.data() + c * grid.size(), grid.size()}; }
};

PhysicalField transform_to_physical(const SpectralField& f);
SpectralField transform_to_spectral(const PhysicalField& p, FieldKind kind);

/// Zeroes the Nyquist row and replaces every coefficient by the Hermitian
/// average (c(k) + conj(c(-k)))/2.
void enforce_hermitian(SpectralField& f);
double hermitian_defect(const SpectralField& f);
double divergence_defect(const SpectralField& f);

SpectralField biot_savart(const SpectralField& omega);
SpectralField curl2d(const SpectralField& u);
SpectralField leray_project(const SpectralField& v);
SpectralField spectral_shift(const SpectralField& f, const std::array<double, 3>& y);
SpectralField gradient(const SpectralField& scalar);

/// Averaged squared norm ||f||_lambda^2 = mean_x |f|^2 = sum_k |f^(k)|^2.
double norm_sq(const SpectralField& f);
/// ||grad f||_lambda^2 = sum_k |k|^2 |f^(k)|^2.
double grad_norm_sq(const SpectralField& f);
double mean_square(const PhysicalField& p);

/// Per-lattice-point nonnegative density (energy or enstrophy).
struct ShellSpectrum {
    WaveGrid grid;
    std::vector<double> density;

    ShellSpectrum() = default;
    explicit ShellSpectrum(const WaveGrid& g) : grid(g), density(g.size(), 0.0) {}
    double total() const;
    /// Bin m collects |k| in [m, m+1) * 2pi/lambda.
    std::vector<double> shell_sums() const;
    ShellSpectrum weighted(int power) const;  // density * |k|^power
};

ShellSpectrum energy_density(const SpectralField& f);

/// Isotropic reduction: weights grouped by exact |k|. Synthetic spectra are
/// built directly in this form with arbitrary |k|.
struct RadialSpectrum {
    std::vector<double> k;
    std::vector<double> w;

    void add(double kk, double ww);
    double total() const;
    void sort();
    RadialSpectrum weighted(int power) const;
};

RadialSpectrum radial(const ShellSpectrum& s);

/// Gaussian random field with |f^(k)| ~ |z|^{-slope} on 0 < max_i |z_i| <= zmax,
/// Hermitian, mean-zero, and divergence-free for the velocity kind.
SpectralField synthetic_field(const WaveGrid& g, FieldKind kind, std::uint64_t seed, double slope, int zmax);

// Snapshot files: <base>.bin holds little-endian f64 (re, im) pairs in storage
// order; <base>.json is the sidecar.
void write_snapshot(const std::string& base, const SpectralField& f, double time, std::uint64_t seed);
SpectralField read_snapshot(const std::string& base, double* time = nullptr, std::uint64_t* seed = nullptr);

}  // namespace fluxlaw
