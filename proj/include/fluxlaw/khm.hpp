#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fluxlaw/correlations.hpp"
#include "fluxlaw/forcing.hpp"
#include "fluxlaw/grid.hpp"
#include "fluxlaw/sphere.hpp"

namespace fluxlaw {

enum class KhmRelation { vel, vel_par, vor };

std::string to_string(KhmRelation r);
KhmRelation khm_relation_from_string(const std::string& s);
StructureKind structure_kind_of(KhmRelation r);

/// Both sides of one KHM relation on an l grid. rhs = viscous + forcing + nested,
/// summed in that order, so the stored terms reproduce rhs bit for bit.
struct KhmBudget {
    KhmRelation relation = KhmRelation::vel;
    int d = 2;
    double nu = 0.0;
    double flux_scale = 0.0;  // floor prefactor, max(eps, eta) when both are known
    std::vector<double> ell;
    std::vector<double> lhs, lhs_stderr;  // empty for an rhs-only budget
    std::vector<double> viscous, forcing, nested, rhs, residual;
    std::size_t samples = 0;
    std::string estimator;

    /// The power p in the residual floor flux_scale * l^p.
    int floor_power() const;
    double floor(std::size_t i) const;
    /// max over l in [lo, hi] of |residual| / max(|lhs|, |rhs|, floor).
    double band_relative_residual(double lo, double hi) const;
};

/// Right-hand side from an isotropic flow spectrum (E|u^|^2 for vel and
/// vel_par, E|omega^|^2 for vor) and the matching forcing spectrum. For vel_par
/// the nested term integrates s_vel when given; otherwise the vel right-hand
/// side is evaluated on a dense auxiliary grid and used instead.
KhmBudget khm_rhs(KhmRelation relation, int d, const RadialSpectrum& flow, const RadialSpectrum& forcing, double nu,
                  const std::vector<double>& ell, const StructureCurve* s_vel = nullptr);
KhmBudget khm_rhs(KhmRelation relation, const RadialSpectrum& flow, const ForcingSpec& forcing, double nu,
                  const std::vector<double>& ell, const StructureCurve* s_vel = nullptr);

/// int_0^l r^power a(r) dr with a(r) = sum_k w_k K(r|k|), K the p = 0 tangential
/// or longitudinal kernel. The moments the relations use (tangential power d-1,
/// longitudinal power d+1) are Bessel antiderivatives; other powers fall back to
/// Gauss-Kronrod over oscillation-sized panels.
double forcing_moment(const RadialSpectrum& forcing, int d, bool longitudinal, int power, double ell);

/// (2/l^{d+1}) int_0^l r^d S(r) dr with S a sampled curve. Between samples S is
/// monotone-cubic (PCHIP); below the first sample it follows the local power
/// law whose exponent is clamped to [1, 3].
double nested_structure_term(const StructureCurve& s_vel, int d, double ell);

struct KhmResidualOptions {
    /// Time-averaged spectra (e.g. from TrajectoryStats). When absent the
    /// spectra are averaged over the snapshots themselves.
    std::optional<RadialSpectrum> energy, enstrophy;
    int aux_points = 192;  // dense grid for the nested S_vel integral
};

/// All relations that apply (vel, vel_par, and vor for d = 2) from one pass
/// over the snapshots: LHS by the exact sphere average, RHS by khm_rhs.
std::vector<KhmBudget> khm_residuals(const std::vector<SpectralField>& snapshots, double nu,
                                     const ForcingSpec& forcing, const std::vector<double>& ell,
                                     const KhmResidualOptions& options = {});
KhmBudget khm_residual(const std::vector<SpectralField>& snapshots, KhmRelation relation, double nu,
                       const ForcingSpec& forcing, const std::vector<double>& ell,
                       const KhmResidualOptions& options = {});

// ----------------------------------------------------------------------------
// Coefficient functions c(l, k) of the flux-law proofs, as functions of x = l|k|.

enum class FamilyId { dir3d_S0, dir3d_Spar, dir2d_vor, dir2d_S0, dir2d_Spar, inv_S0, inv_Spar };

std::string to_string(FamilyId id);
FamilyId family_from_string(const std::string& s);
std::vector<FamilyId> all_families();

struct CoefficientFamily {
    FamilyId id = FamilyId::dir3d_S0;
    int d = 3;
    Rational limit;       // c(x) -> limit as x -> infinity
    Rational first;       // coefficient of x^2; the series starts there
    std::function<__float128(int)> ratio;  // a_{m+1}/a_m
    double decay_rate = 1.0;               // |limit - c| <= C x^{-rate}
    std::optional<double> exact_constant;  // C when it is known exactly
    std::string closed_form;               // text of the identity checked

    /// Power series (x <= kSeriesLimit) else the closed form.
    double operator()(double x) const;
    double series(double x) const;
    /// limit - c(x) from Bessel / trigonometric closed forms.
    double gap_closed(double x) const;
    /// limit - c(x) from an integral representation evaluated by quadrature.
    double gap_integral(double x) const;
};

/// d is needed for the inverse families only (2 or 3).
CoefficientFamily coefficient_family(FamilyId id, int d = 0);
double coefficient_c(const CoefficientFamily& family, double x);

struct EnvelopeCheck {
    FamilyId id = FamilyId::dir3d_S0;
    int d = 3;
    double rate = 1.0;
    double constant = 0.0;  // exact, or fitted on the even-indexed points
    bool exact = false;
    double max_violation = 0.0;  // over the whole grid (exact) or the holdout points (fitted)
    double measured_rate = 0.0;  // log-log slope of the running-max envelope over the grid tail
    bool envelope_decreasing = true;
};

/// |limit - c(x)| <= C x^{-rate} on the grid, which must lie in (0, 200].
EnvelopeCheck decay_envelope_check(const CoefficientFamily& family, const std::vector<double>& x);

}  // namespace fluxlaw
