#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fluxlaw/forcing.hpp"
#include "fluxlaw/grid.hpp"
#include "fluxlaw/sphere.hpp"

namespace fluxlaw {

enum class StructureKind { vel, vel_par, vor };
enum class CorrelationKind { gamma_vel, gamma_vel_par, gamma_vor, a_vel, a_vel_par, a_vor };

std::string to_string(StructureKind k);
std::string to_string(CorrelationKind k);
StructureKind structure_kind_from_string(const std::string& s);
CorrelationKind correlation_kind_from_string(const std::string& s);

struct StructureCurve {
    StructureKind kind = StructureKind::vel;
    std::vector<double> ell, value, std_error;
    int sphere_nodes = 0;  // 0: exact sphere average through the kernels
    std::size_t samples = 0;
    std::string estimator;
};

struct CorrelationCurve {
    CorrelationKind kind = CorrelationKind::gamma_vel;
    std::vector<double> ell, value, derivative;
};

/// Velocity and (d = 2) vorticity of a snapshot. A scalar snapshot is read as
/// 2D vorticity; a velocity snapshot is used as is.
struct Flow {
    SpectralField u;
    std::optional<SpectralField> omega;
};
Flow flow_of(const SpectralField& snapshot);

/// x-average of the cubic integrand for one displacement y (n = y/|y|).
double structure_integrand(const Flow& flow, StructureKind kind, const std::array<double, 3>& y);

/// Shift-based estimator: spectral shifts by l*n for every rule node,
/// pointwise increments in physical space, then node and snapshot averages.
StructureCurve structure_function(const std::vector<SpectralField>& snapshots, StructureKind kind,
                                  const std::vector<double>& ell, const SphereRule& rule);

/// Exact sphere average. The x-averages are correlations of quadratic
/// products with the field, and the n-average of e^{i l k.n} against the
/// tensor weights reduces to derivatives of the tangential kernels.
class StructureAccumulator {
public:
    StructureAccumulator(const WaveGrid& grid, std::vector<double> ell);
    void add(const SpectralField& snapshot);
    std::size_t samples() const { return samples_; }
    StructureCurve curve(StructureKind kind) const;
    const std::vector<double>& ell() const { return ell_; }

private:
    WaveGrid grid_;
    std::vector<double> ell_;
    std::vector<std::size_t> shell_of_;  // lattice index -> shell slot
    std::vector<double> shell_k_;
    // Kernel tables [ell][shell]: s1 for vel/vor, (a, b) for vel_par. Filled
    // lazily for shells that carry weight.
    std::vector<std::vector<double>> s1_, ta_, tb_;
    std::vector<unsigned char> have_;
    void fill_shell(std::size_t s);
    std::map<StructureKind, std::vector<std::vector<double>>> per_sample_;
    std::size_t samples_ = 0;
};

StructureCurve structure_function_exact(const std::vector<SpectralField>& snapshots, StructureKind kind,
                                        const std::vector<double>& ell);

/// Sum_k kernel(l|k|) w(k) with the tangential kernel (gamma_vel, gamma_vor,
/// a_vel, a_vor) or the longitudinal one (the _par kinds); derivatives are
/// term-wise analytic.
CorrelationCurve correlation_spectral(const RadialSpectrum& spectrum, int d, CorrelationKind kind,
                                      const std::vector<double>& ell);
/// Forcing correlations a_*: the spectrum is (1/2) sum_j |f_j^|^2 or |curl f_j^|^2.
RadialSpectrum forcing_spectrum(const ForcingSpec& spec, bool curl);
CorrelationCurve correlation_forcing(const ForcingSpec& spec, CorrelationKind kind, const std::vector<double>& ell);

/// Gamma evaluated from one snapshot by the shift path (physical products).
CorrelationCurve correlation_shift(const SpectralField& snapshot, CorrelationKind kind, const std::vector<double>& ell,
                                   const SphereRule& rule);

/// Enough circle/sphere nodes that the rule integrates e^{i x n.e} to
/// rounding for x up to x_max.
SphereRule auto_sphere_rule(int d, double x_max);

/// Max over the l grid of |shift - spectral| / max |spectral|, averaged over snapshots.
double cross_validate(const std::vector<SpectralField>& snapshots, CorrelationKind kind, const std::vector<double>& ell);

/// Default separation grid: 48 log-spaced points in [2 pi/(lambda n/3), 0.9 lambda/2].
std::vector<double> default_ell_grid(const WaveGrid& g, int points = 48);
std::vector<double> log_grid(double lo, double hi, int points);

}  // namespace fluxlaw
