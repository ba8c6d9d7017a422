#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fluxlaw/forcing.hpp"
#include "fluxlaw/grid.hpp"
#include "fluxlaw/sim2d.hpp"

namespace fluxlaw {

/// phi_gamma(y) = gamma^{-d} phi(y/gamma) with phi the radial bump
/// exp(-1/(1-|y|^2)), sampled on the lattice of shifts and normalized so that
/// h^d sum_y phi_gamma(y) = 1. Its gradient is the spectral derivative of the
/// samples, the same operator the spectral side uses, which makes the discrete
/// Duchon-Robert identity exact up to rounding.
struct Mollifier {
    WaveGrid grid;
    double gamma = 0.0;
    std::vector<double> phi;                  // by flat lattice index of y
    std::array<std::vector<double>, 3> grad;  // d phi / d y_j, same indexing
    std::vector<cplx> multiplier;             // h^d sum_y phi(y) e^{-i k.y}

    /// Rejects gamma below 4 grid spacings or with support reaching lambda/4.
    static Mollifier make(const WaveGrid& g, double gamma);
    double mass() const;  // h^d sum phi
};

/// phi_gamma * f, component-wise.
SpectralField mollify(const SpectralField& f, const Mollifier& m);

/// Lattice sum I_gamma = h^d sum_y grad phi_gamma(y) . mean_x delta_y u |delta_y u|^2
/// with delta_y u(x) = u(x+y) - u(x). D_gamma = I_gamma / 4.
double duchon_robert_integral(const SpectralField& u, const Mollifier& m);

/// A_gamma = mean u_k d_j(u_j u_k)_gamma - mean u_j u_k d_j(u_k)_gamma, spectral.
double a_gamma(const SpectralField& u, const Mollifier& m);

struct DuchonRobertCurve {
    std::vector<double> gamma;    // decreasing
    std::vector<double> value;    // D_gamma, snapshot mean
    std::vector<double> std_error;
    std::size_t samples = 0;
    // Fit D_gamma = D + c gamma^q.
    double extrapolated = 0.0;
    double coefficient = 0.0;
    double rate = 0.0;
    double fit_rms = 0.0;
    std::string method;  // "power_fit", or "smallest_gamma" when the ladder cannot fix a rate
};

/// Snapshots may be 2D vorticity (scalar) or velocity fields.
DuchonRobertCurve duchon_robert_D(const std::vector<SpectralField>& snapshots, const std::vector<double>& gammas);

struct PowerFit {
    double offset = 0.0, coefficient = 0.0, rate = 0.0, rms = 0.0;
};
inline constexpr double kFitRateMin = 0.1, kFitRateMax = 6.0;
/// Least squares for y = a + b x^q over q in [kFitRateMin, kFitRateMax].
PowerFit fit_offset_power(const std::vector<double>& x, const std::vector<double>& y);

/// Normalization: all norms are box averages, ||f||_lambda^2 = mean_x |f|^2,
/// and D(u) = lim D_gamma with D_gamma = (1/4) mean_x sum_y h^d grad phi.delta u|delta u|^2.
/// Then nu <||grad u||^2> + D = eps = (1/2) sum_j ||f_j||^2.
inline constexpr const char* kBalanceNormalization =
    "box-averaged norms; D_gamma = (1/4) mean_x int grad(phi_gamma)(y).delta_y u |delta_y u|^2 dy; "
    "closure: nu<|grad u|^2> + D = eps = (1/2) sum_j |f_j|^2";

struct BalanceReport {
    std::string normalization = kBalanceNormalization;
    double nu = 0.0;
    double epsilon = 0.0;
    std::optional<double> eta;
    double energy_dissipation = 0.0;                  // nu <||grad u||^2>
    std::optional<double> enstrophy_dissipation;      // nu <||grad omega||^2>
    std::optional<DuchonRobertCurve> d_gamma;
    double D = 0.0;  // extrapolated, 0 when no ladder was evaluated
    double energy_closure_error = 0.0;
    std::optional<double> enstrophy_closure_error;
    double window = 0.0;
    double drift = 0.0;
};

BalanceReport balance_report(const TrajectoryStats& stats, const ForcingSpec& forcing,
                             const std::vector<double>& gammas = {});

/// Energy ledger of an unforced run sampled at times t: compares
/// -(E(t2) - E(t1))/2 against the trapezoid integral of nu ||grad u||^2 per
/// window and returns the worst relative mismatch.
double decaying_energy_mismatch(const std::vector<double>& t, const std::vector<double>& energy,
                                const std::vector<double>& grad_sq, double nu, std::size_t window);

}  // namespace fluxlaw
