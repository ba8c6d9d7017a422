#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace fluxlaw {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Largest k served by the exact tables; larger k throws std::overflow_error.
inline constexpr int kExactCap = 20;

/// beta_d(k) such that mean_{S^{d-1}} n_{i1}...n_{i2k} = beta_d(k) * (sum over pairings of deltas).
Rational beta(int d, int k);
/// Number of perfect pairings of 2k objects, (2k)!/(2^k k!).
BigInt pairing_count(int k);
/// Exact sphere average of the monomial n_{i1}...n_{im} (indices are 1-based).
Rational isotropic_tensor_average(int d, std::span<const int> indices);

double to_double(const Rational& r);

using Vec3 = std::array<double, 3>;

/// Nodes on S^{d-1} with weights summing to one (normalized surface measure).
struct SphereRule {
    int d = 2;
    std::vector<Vec3> nodes;
    std::vector<double> weights;

    static SphereRule circle(int n);
    /// Gauss-Legendre in cos(theta) times uniform in phi.
    static SphereRule product(int n_theta, int n_phi);
    static SphereRule default_for(int d);

    double average(const std::function<double(const Vec3&)>& f) const;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

McEstimate monte_carlo_sphere_average(int d, const std::function<double(const Vec3&)>& f, std::size_t samples,
                                      std::uint64_t seed);

/// T_p(x) = mean_S (n.e)^{2p} cos(x n.e) for a unit vector e, i.e. the
/// tangential kernel with |k|^{2p} divided out.
double tangential_kernel(int d, int p, double x);
double tangential_kernel_dx(int d, int p, double x);
/// L_p(x) = mean_S (n.t)^2 (n.e)^{2p} cos(x n.e) with t a unit vector
/// orthogonal to e: the coefficient of |u^|^2 for divergence-free u^.
double longitudinal_kernel(int d, int p, double x);
double longitudinal_kernel_dx(int d, int p, double x);

/// Below this x the kernels use their power series; above it, sphere quadrature
/// and (for p = 0 and very large x) closed forms.
inline constexpr double kSeriesLimit = 30.0;
inline constexpr double kQuadratureLimit = 2000.0;

/// Sum_{m >= m0} a_m x^{2m} (or its x-derivative) with a_{m+1} = a_m * ratio(m),
/// accumulated in binary128. Stops once |term| < 1e-16 |sum|; throws if 200
/// terms do not suffice.
double even_series(double x, double a_m0, int m0, const std::function<__float128(int)>& ratio, bool derivative);

/// Same kernels, memoized by x. Safe for concurrent use.
class KernelSeries {
public:
    KernelSeries(int d, int p, bool longitudinal) : d_(d), p_(p), longitudinal_(longitudinal) {}
    double value(double x) const;
    double derivative(double x) const;

private:
    int d_, p_;
    bool longitudinal_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<double, double> value_cache_, deriv_cache_;
};

}  // namespace fluxlaw
