#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fluxlaw/correlations.hpp"
#include "fluxlaw/khm.hpp"
#include "fluxlaw/sphere.hpp"

namespace fluxlaw {

enum class CascadeDirection { direct, inverse, split, dual, none };
std::string to_string(CascadeDirection d);
CascadeDirection cascade_direction_from_string(const std::string& s);

/// One flux law: curve(l) / l^ell_power -> coefficient * captured flux.
struct FluxConstant {
    std::string name;  // e.g. "S_vel/l"
    StructureKind kind = StructureKind::vel;
    int ell_power = 1;
    Rational coefficient;
    std::string flux;  // "eps" or "eta"
};

/// Direct: d = 3 gives (S_vel/l, S_par/l) -> (-4/3, -4/5) eps*, d = 2 gives
/// (S_vor/l, S_vel/l^3, S_par/l^3) -> (-2, 1/4, 1/8) eta*. Inverse: (gamma_d,
/// kappa_d) eps* with gamma_d = 4 beta_d(1), kappa_d = 4 beta_d(2) + 8 beta_d(1)/(d+2).
/// Throws std::logic_error if a tabulated constant disagrees with its beta composite.
std::vector<FluxConstant> flux_constants(int d, CascadeDirection direction);

// ----------------------------------------------------------------------------
// Sweeps

struct SweepMember {
    double nu = 0.0;
    double lambda = 2.0 * kPi;
    RadialSpectrum energy;                    // E|u^(k)|^2
    std::optional<RadialSpectrum> enstrophy;  // E|omega^(k)|^2, d = 2
    double epsilon = 0.0;                     // injection rates
    std::optional<double> eta;
    std::map<StructureKind, StructureCurve> curves;
};

/// nu strictly decreasing along members, lambda nondecreasing.
struct ViscositySweep {
    int d = 2;
    std::vector<SweepMember> members;
    void validate() const;
};

enum class SelectionRule {
    theta_split,    // N: threshold |k| where the cumulative dissipation first exceeds (1 - theta) of the total
    remark_energy,  // N = (nu E||u||^2)^{-exponent}, exponent < 1/2 so that N^2 nu E||u||^2 -> 0
    power_law,      // N = nu^{-exponent}, or M = nu^{exponent}
    lowest_shells,  // M = shells * 2pi / lambda
};
std::string to_string(SelectionRule r);
SelectionRule selection_rule_from_string(const std::string& s);

struct CutoffOptions {
    SelectionRule rule = SelectionRule::theta_split;
    double theta = 0.5;
    double exponent = 0.25;
    double shells = 2.0;
};

/// nu |k|^2 w_k.
RadialSpectrum dissipation_spectrum(const RadialSpectrum& s, double nu);
double captured_above(const RadialSpectrum& dissipation, double n_cut);  // |k| >= N
double captured_below(const RadialSpectrum& dissipation, double m_cut);  // |k| <= M

/// energy_norm is E||u||^2 (used by remark_energy only).
double select_direct_cutoff(const RadialSpectrum& dissipation, double nu, double energy_norm, const CutoffOptions& o);
double select_inverse_cutoff(double nu, double lambda, const CutoffOptions& o);

struct PlateauFit {
    std::string name;
    StructureKind kind = StructureKind::vel;
    int ell_power = 1;
    double fitted = 0.0;     // weighted mean of curve / l^power over the band
    double predicted = 0.0;  // coefficient * captured
    double relative_deviation = 0.0;
    double max_log_slope = 0.0;  // max |d log|ratio| / d log l| over the band
    double ell_lo = 0.0, ell_hi = 0.0;
    std::size_t points = 0;
    bool flat = false;
    bool pass = false;
};

/// Flatness threshold on |d log(curve)/d log l|.
inline constexpr double kPlateauFlatness = 0.15;

/// Weighted least squares of curve/l^power against a constant on [lo, hi]
/// (weights 1/stderr^2 when every point has one, else uniform in log l).
/// relative_deviation is measured against |predicted|, or against scale when
/// predicted is 0.
PlateauFit fit_plateau(const StructureCurve& curve, int ell_power, double lo, double hi, double predicted,
                       double tolerance, double scale);

struct CascadeOptions {
    CutoffOptions cutoff;                                          // N_nu for detect_direct
    CutoffOptions inverse_cutoff{SelectionRule::lowest_shells};    // M_nu for detect_inverse
    double ell_inertial = 0.1;    // l_I: upper end (direct) or lower end (inverse) of the band
    double band_factor = 0.1;     // inverse: l~_nu = band_factor / M_nu
    std::optional<double> ell_lo, ell_hi;  // explicit band overriding the rule
    double tolerance = 0.02;
};

struct CascadeReport {
    CascadeDirection direction = CascadeDirection::none;
    std::string rule;
    int d = 2;
    std::string flux;               // "eps" or "eta"
    std::vector<double> nu, cutoff, captured, total;
    std::vector<bool> monotone;     // enlarging N (shrinking M) never increased the capture
    double liminf_estimate = 0.0;   // capture at the smallest nu
    bool trend_monotone = false;    // over the last 3 members
    std::vector<PlateauFit> plateaus;  // at the smallest nu
    double tolerance = 0.02;
    bool pass = false;
    std::string diagnostics;
};

/// Direct flux laws: energy in d = 3, enstrophy in d = 2. Members need the dissipation-carrying
/// spectrum (energy for d = 3, enstrophy for d = 2) and the structure curves
/// the flux laws name. Band: [N^{-1/2}, l_I] unless overridden.
CascadeReport detect_direct(const ViscositySweep& sweep, const CascadeOptions& options = {});
/// Inverse energy flux laws. Band: [l_I, band_factor / M] unless overridden.
CascadeReport detect_inverse(const ViscositySweep& sweep, const CascadeOptions& options = {});

/// The 2D reformulation of the inverse capture through the vorticity:
/// nu sum_{|k|<=M} E|omega^|^2 - (1/2) sum_j |f^_j(0)|^2.
double inverse_capture_from_vorticity(const RadialSpectrum& enstrophy, double nu, double m_cut, double forcing_mean_sq);

// ----------------------------------------------------------------------------
// Filtration lemmas

struct FiltrationResult {
    std::vector<double> cutoff;  // N_nu (small scale) or M_nu (large scale)
    std::vector<double> ell;     // l_nu or l~_nu
    std::vector<double> value;   // inf (small) or sup (large) of sum_k c(l|k|) f_k over the band
    std::vector<double> mass;    // sum_k f_k
    double limit = 0.0;          // c's limit L
    double bound = 0.0;          // sup of the masses
    bool bounded = true;
};

/// inf over l in (N^{-1/2}, l_I) of sum c(l|k|) f_k for each member, sampled
/// at grid_points per decade anchored at l_I plus the far endpoint.
FiltrationResult filtration_small_scale(const std::vector<RadialSpectrum>& family, const std::vector<double>& cutoffs,
                                        const CoefficientFamily& c, double ell_inertial, int grid_points = 100,
                                        double mass_bound = 1e12);
/// sup over l in (l_I, band_factor / M) of the same sum.
FiltrationResult filtration_large_scale(const std::vector<RadialSpectrum>& family, const std::vector<double>& cutoffs,
                                        const CoefficientFamily& c, double ell_inertial, double band_factor = 1.0,
                                        int grid_points = 100, double mass_bound = 1e12);

struct FiltrationCase {
    std::string family;
    std::string scale;  // "small" or "large"
    double delta = 0.0;
    double limit = 0.0;   // L
    double target = 0.0;  // L delta (small) or L (Delta - delta) (large)
    FiltrationResult result;
    double final_error = 0.0;  // |value - target| / |L| at the last member
    bool trend = false;
    bool pass = false;
};

/// Constructed families for dir3d_S0, dir2d_vor and dir3d_Spar with
/// delta in {0, 0.4, 1}. Small scale: mass delta at |k| = 1/nu and 1 - delta at
/// |k| = 1, N = nu^{-1/2}, l_I = 0.1. Large scale: delta at |k| = nu below
/// M = nu^{1/2}, 1 - delta at |k| = 1, plus k = 0 mass that must not count,
/// l_I = 100. Pass: within tolerance of the target at the last member and a
/// monotone trend over the last 3.
std::vector<FiltrationCase> filtration_suite(double tolerance = 0.02);

/// |value - target| nonincreasing over the last `count` entries (equality within 1e-12 allowed).
bool trend_toward(const std::vector<double>& values, double target, std::size_t count = 3);

// ----------------------------------------------------------------------------
// Synthetic spectra and the KHM-RHS loop

struct SyntheticSpec {
    int d = 3;
    double nu = 1e-4;
    double lambda = 2.0 * kPi;
    double k_forcing = 1.0;
    double injection = 1.0;  // eps (d = 3, inverse) or eta (d = 2 direct)
    double delta = 0.5;      // fraction of the dissipation carried by the escaping shell
    double k_escape = 1e4;   // wavenumber of the escaping shell
    double k_rest = 0.5;     // wavenumber holding the remaining dissipation
};

/// Stationary spectra (nu sum |k|^2 E|u^|^2 = eps, and in 2D also
/// nu sum |k|^2 E|omega^|^2 = eta) with structure curves taken from khm_rhs on
/// `ell`. Direct d = 2 places the rest at k_forcing sqrt(1 - delta) so that both
/// balances hold; k_rest is ignored there.
SweepMember synthetic_member(const SyntheticSpec& spec, CascadeDirection direction, const std::vector<double>& ell);

struct CorollaryResult {
    std::string name;
    std::string expectation;
    std::vector<double> nu;
    std::vector<double> direct_capture, inverse_capture;
    bool direct_found = false, inverse_found = false;
    bool pass = false;
};

/// Isolated direct (Remark rule on a family with nu E||u||^2 = nu^{1/2}),
/// split, dual, and a counterexample violating the hypotheses.
std::vector<CorollaryResult> corollary_suite();

}  // namespace fluxlaw
