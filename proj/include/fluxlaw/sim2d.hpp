#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fluxlaw/fft.hpp"
#include "fluxlaw/forcing.hpp"
#include "fluxlaw/grid.hpp"

namespace fluxlaw {

enum class Scheme { euler_maruyama, heun, rk3 };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct SimConfig {
    WaveGrid grid{2, 2.0 * kPi, 64};
    double nu = 1e-3;
    ForcingSpec forcing;
    double dt = 5e-3;
    double t_burn = 0.0;
    double t_window = 1.0;
    double snapshot_interval = 0.0;  // 0 disables snapshots
    double decorrelation_time = 0.0;  // minimum allowed snapshot_interval
    std::uint64_t seed = 1;           // root of the noise streams
    Scheme scheme = Scheme::heun;
    bool nonlinear = true;
    bool dealias = true;
    double stationarity_tolerance = 0.10;

    void validate() const;
};

/// Integrating-factor stepper for d omega + u.grad omega dt = nu Lap omega dt + sum_j curl f_j dW^j
/// on the 2D torus. State lives in half-spectrum layout; Hermitian symmetry is
/// structural and the mean and Nyquist modes stay exactly zero.
class Simulator {
public:
    explicit Simulator(const SimConfig& cfg);

    const SimConfig& config() const { return cfg_; }
    double time() const { return time_; }
    std::uint64_t step_index() const { return step_; }

    void set_vorticity(const SpectralField& omega);
    SpectralField vorticity() const;

    /// One step with the noise drawn for the current step index.
    void step();
    /// One step with a caller-supplied raw increment sum_j curl f_j dW^j.
    void step(const SpectralField& increment);

    /// -u.grad omega, dealiased, as a full-lattice field.
    SpectralField nonlinear_term(const SpectralField& omega) const;

    double enstrophy() const;       // ||omega||^2 = ||grad u||^2
    double energy() const;          // ||u||^2
    double palinstrophy() const;    // ||grad omega||^2

private:
    using Half = aligned_vector<cplx>;
    void advance(const Half& raw_increment);
    void rhs(const Half& w, Half& out) const;
    Half half_from_full(const SpectralField& f) const;
    void noise_increment(Half& out) const;

    SimConfig cfg_;
    int n_, hl_;
    std::size_t hsize_;
    std::vector<double> kx_, ky_, k2_, decay_, half_decay_, noise_scale_;
    std::vector<unsigned char> active_;
    std::vector<std::pair<std::size_t, cplx>> curl_modes_;  // per forcing component, flattened
    std::vector<std::size_t> curl_offsets_;
    Half w_;
    double time_ = 0.0;
    std::uint64_t step_ = 0;
    mutable aligned_vector<double> scratch_real_[5];
    mutable Half scratch_half_;
    std::array<Half, 6> stage_;  // g, n0, n1, n2, s1, s2
    Half noise_;
};

struct TrajectoryStats {
    double nu = 0.0, epsilon = 0.0, eta = 0.0;
    double window = 0.0;  // T
    std::uint64_t samples = 0;
    ShellSpectrum enstrophy_spectrum;  // time-avg |omega^(k)|^2
    ShellSpectrum energy_spectrum;     // time-avg |u^(k)|^2
    double mean_grad_u_sq = 0.0;
    double mean_grad_omega_sq = 0.0;
    double mean_omega_sq = 0.0;
    double mean_u_sq = 0.0;
    std::vector<double> block_means;   // of ||omega||^2 over 4 blocks
    double drift = 0.0;
    bool stationary = true;
    std::vector<SpectralField> snapshots;  // vorticity
    std::vector<double> snapshot_times;
    SpectralField final_state;
};

/// Burn-in then windowed averaging. The initial state defaults to zero.
TrajectoryStats run_stationary(const SimConfig& cfg, const SpectralField* initial = nullptr);

}  // namespace fluxlaw
