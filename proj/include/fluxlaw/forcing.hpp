#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "fluxlaw/grid.hpp"

namespace fluxlaw {

/// One Fourier mode of a forcing component. The conjugate mode at -z is implied.
struct ForcingMode {
    std::array<int, 3> z{0, 0, 0};
    std::array<cplx, 3> amp{};  // velocity coefficient f^_j(k), divergence-free
};

/// The family {f_j}, each a real divergence-free trigonometric polynomial
/// stored sparsely. Component j is driven by the Brownian motion W^j.
struct ForcingSpec {
    WaveGrid grid;
    std::vector<std::vector<ForcingMode>> components;
    double k_lo = 0.0, k_hi = 0.0;  // band in integer lattice units
    std::uint64_t seed = 0;         // root of the noise streams

    std::size_t count() const { return components.size(); }
    bool mean_zero() const;
    SpectralField field(std::size_t j) const;  // f_j as a velocity field
    SpectralField curl(std::size_t j) const;   // curl f_j, d = 2
    /// sum_j ||grad^3 f_j||^2, the smoothness constant (finite by construction).
    double smoothness_constant() const;
};

struct InjectionRates {
    double epsilon = 0.0;
    std::optional<double> eta;  // d = 2 only
};

InjectionRates injection_rates(const ForcingSpec& spec);

/// Equal-amplitude shell forcing on lo <= |z| <= hi. Each half-lattice
/// representative k carries two components with phases phi and phi + pi/2, so
/// the forced mode sees a circular complex Gaussian. The amplitude is set so
/// that epsilon equals target_epsilon.
ForcingSpec shell_forcing(const WaveGrid& g, double lo, double hi, double target_epsilon, std::uint64_t seed);

/// Standard normal xi_j for step s; the address is (seed, j, s).
double forcing_normal(std::uint64_t seed, std::size_t j, std::uint64_t step);

/// sum_j f_j xi_j sqrt(dt) as a velocity field, with xi_j keyed by spec.seed.
SpectralField sample_increment(const ForcingSpec& spec, double dt, std::uint64_t step);
/// The same increment mapped through curl (d = 2), i.e. sum_j curl f_j xi_j sqrt(dt).
SpectralField sample_vorticity_increment(const ForcingSpec& spec, double dt, std::uint64_t step);

}  // namespace fluxlaw
