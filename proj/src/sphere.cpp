#include "fluxlaw/sphere.hpp"

#include <gsl/gsl_integration.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>

#include "fluxlaw/grid.hpp"
#include "fluxlaw/rng.hpp"

namespace fluxlaw {

namespace {

BigInt factorial(int n) {
    BigInt r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

void check_exact_range(int k) {
    if (k < 0) throw std::invalid_argument("negative order");
    if (k > kExactCap) throw std::overflow_error("exact beta/pairing tables stop at k = 20");
}

}  // namespace

Rational beta(int d, int k) {
    check_exact_range(k);
    BigInt p2 = BigInt(1) << k;
    if (d == 2) return Rational(BigInt(1), p2 * factorial(k));
    if (d == 3) return Rational(p2 * factorial(k), factorial(2 * k + 1));
    throw std::invalid_argument("beta: d must be 2 or 3");
}

BigInt pairing_count(int k) {
    check_exact_range(k);
    return factorial(2 * k) / ((BigInt(1) << k) * factorial(k));
}

Rational isotropic_tensor_average(int d, std::span<const int> indices) {
    if (d != 2 && d != 3) throw std::invalid_argument("isotropic_tensor_average: d must be 2 or 3");
    std::array<int, 3> count{0, 0, 0};
    for (int i : indices) {
        if (i < 1 || i > d) throw std::invalid_argument("isotropic_tensor_average: index out of range");
        ++count[i - 1];
    }
    if (indices.size() % 2 != 0) return Rational(0);
    // A pairing contributes 1 exactly when it only pairs equal indices, so the
    // pairing sum is the product of (c-1)!! over index multiplicities c.
    BigInt pairings = 1;
    for (int c : count) {
        if (c % 2 != 0) return Rational(0);
        for (int j = c - 1; j > 1; j -= 2) pairings *= j;
    }
    return beta(d, static_cast<int>(indices.size() / 2)) * Rational(pairings);
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

// ============================================================================
// Quadrature rules
// ============================================================================

namespace {

struct GlTable {
    std::vector<double> x, w;  // on [0, 1]
};

const GlTable& gauss_legendre01(int n) {
    static std::mutex m;
    static std::map<int, std::unique_ptr<GlTable>> cache;
    std::lock_guard<std::mutex> lock(m);
    auto& slot = cache[n];
    if (!slot) {
        slot = std::make_unique<GlTable>();
        gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            double xi, wi;
            gsl_integration_glfixed_point(0.0, 1.0, static_cast<std::size_t>(i), &xi, &wi, t);
            slot->x.push_back(xi);
            slot->w.push_back(wi);
        }
        gsl_integration_glfixed_table_free(t);
    }
    return *slot;
}

}  // namespace

SphereRule SphereRule::circle(int n) {
    if (n < 2) throw std::invalid_argument("SphereRule::circle: need at least 2 nodes");
    SphereRule r;
    r.d = 2;
    for (int i = 0; i < n; ++i) {
        double t = 2.0 * kPi * i / n;
        r.nodes.push_back({std::cos(t), std::sin(t), 0.0});
        r.weights.push_back(1.0 / n);
    }
    return r;
}

SphereRule SphereRule::product(int n_theta, int n_phi) {
    if (n_theta < 1 || n_phi < 1) throw std::invalid_argument("SphereRule::product: bad sizes");
    const GlTable& gl = gauss_legendre01(n_theta);
    SphereRule r;
    r.d = 3;
    for (int i = 0; i < n_theta; ++i) {
        double mu = 2.0 * gl.x[i] - 1.0;
        double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        for (int j = 0; j < n_phi; ++j) {
            double ph = 2.0 * kPi * j / n_phi;
            r.nodes.push_back({s * std::cos(ph), s * std::sin(ph), mu});
            r.weights.push_back(gl.w[i] / n_phi);
        }
    }
    return r;
}

SphereRule SphereRule::default_for(int d) { return d == 2 ? circle(64) : product(64, 128); }

double SphereRule::average(const std::function<double(const Vec3&)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
}

McEstimate monte_carlo_sphere_average(int d, const std::function<double(const Vec3&)>& f, std::size_t samples,
                                      std::uint64_t seed) {
    if (d != 2 && d != 3) throw std::invalid_argument("monte_carlo_sphere_average: d must be 2 or 3");
    if (samples < 2) throw std::invalid_argument("monte_carlo_sphere_average: need at least 2 samples");
    CounterStream rng(seed, 0x5eed5e11ull);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        Vec3 v{rng.normal(), rng.normal(), d == 3 ? rng.normal() : 0.0};
        double r = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        for (double& c : v) c /= r;
        double y = f(v);
        double delta = y - mean;
        mean += delta / static_cast<double>(s + 1);
        m2 += delta * (y - mean);
    }
    double var = m2 / static_cast<double>(samples - 1);
    return {mean, std::sqrt(var / static_cast<double>(samples))};
}

// ============================================================================
// Kernel series
// ============================================================================

double even_series(double x, double a_m0, int m0, const std::function<__float128(int)>& ratio, bool derivative) {
    if (!(x >= 0.0)) throw std::invalid_argument("even_series: x must be nonnegative");
    if (x == 0.0) return (!derivative && m0 == 0) ? a_m0 : 0.0;
    const __float128 xq = x;
    const __float128 x2 = xq * xq;
    __float128 a = a_m0;
    __float128 xp = 1;  // x^{2m}
    for (int i = 0; i < m0; ++i) xp *= x2;
    __float128 sum = 0;
    for (int n = 0, m = m0; n < 200; ++n, ++m) {
        __float128 term = derivative ? a * (2 * m) * xp / xq : a * xp;
        sum += term;
        __float128 at = term < 0 ? -term : term;
        __float128 as = sum < 0 ? -sum : sum;
        if (term != 0 && at < static_cast<__float128>(1e-16) * as) return static_cast<double>(sum);
        a *= ratio(m);
        xp *= x2;
    }
    throw std::runtime_error("even_series: truncation did not converge within 200 terms");
}

namespace {

// beta_d(K+1)/beta_d(K)
__float128 beta_ratio(int d, int K) {
    if (d == 2) return __float128(1) / (2 * (K + 1));
    return __float128(1) / (2 * K + 3);
}

double kernel_series(int d, int p, bool longitudinal, double x, bool derivative) {
    const int shift = longitudinal ? 1 : 0;
    // m = 0 coefficient: beta_d(p + shift) (2p)!/(2^p p!)
    double a0 = to_double(beta(d, p + shift) * Rational(pairing_count(p)));
    auto ratio = [d, p, shift](int m) -> __float128 {
        int K = m + p;
        return -beta_ratio(d, K + shift) * (2 * K + 1) / (__float128(2 * m + 2) * (2 * m + 1));
    };
    return even_series(x, a0, 0, ratio, derivative);
}

double kernel_quadrature(int d, int p, bool longitudinal, double x, bool derivative) {
    if (d == 2) {
        const int N = 2 * static_cast<int>(std::ceil(x)) + 64;
        double s = 0.0;
        for (int i = 0; i < N; ++i) {
            double t = 2.0 * kPi * i / N;
            double c = std::cos(t), sn = std::sin(t);
            double w = std::pow(c, 2 * p) * (longitudinal ? sn * sn : 1.0);
            s += derivative ? -w * c * std::sin(x * c) : w * std::cos(x * c);
        }
        return s / N;
    }
    // d = 3: only mu = n.e matters; the transverse factor averages to (1 - mu^2)/2.
    const GlTable& gl = gauss_legendre01(20);
    const int panels = static_cast<int>(std::ceil(x / 3.0)) + 2;
    double s = 0.0;
    for (int q = 0; q < panels; ++q) {
        double a = static_cast<double>(q) / panels, h = 1.0 / panels;
        for (std::size_t i = 0; i < gl.x.size(); ++i) {
            double mu = a + h * gl.x[i];
            double w = std::pow(mu, 2 * p) * (longitudinal ? 0.5 * (1.0 - mu * mu) : 1.0);
            s += h * gl.w[i] * (derivative ? -w * mu * std::sin(x * mu) : w * std::cos(x * mu));
        }
    }
    return s;
}

double kernel_closed_p0(int d, bool longitudinal, double x, bool derivative) {
    using boost::math::cyl_bessel_j;
    if (d == 2) {
        if (!longitudinal) return derivative ? -cyl_bessel_j(1, x) : cyl_bessel_j(0, x);
        return derivative ? -cyl_bessel_j(2, x) / x : cyl_bessel_j(1, x) / x;
    }
    double s = std::sin(x), c = std::cos(x);
    if (!longitudinal) return derivative ? (x * c - s) / (x * x) : s / x;
    return derivative ? (x * x * s - 3.0 * s + 3.0 * x * c) / (x * x * x * x) : (s - x * c) / (x * x * x);
}

double kernel_eval(int d, int p, bool longitudinal, double x, bool derivative) {
    if (d != 2 && d != 3) throw std::invalid_argument("kernel: d must be 2 or 3");
    if (p < 0) throw std::invalid_argument("kernel: p must be nonnegative");
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("kernel: x must be finite and nonnegative");
    if (x <= kSeriesLimit) return kernel_series(d, p, longitudinal, x, derivative);
    if (x <= kQuadratureLimit) return kernel_quadrature(d, p, longitudinal, x, derivative);
    if (p == 0) return kernel_closed_p0(d, longitudinal, x, derivative);
    if (x <= 1e5) return kernel_quadrature(d, p, longitudinal, x, derivative);
    throw std::domain_error("kernel: p > 0 is not supported beyond x = 1e5");
}

}  // namespace

double tangential_kernel(int d, int p, double x) { return kernel_eval(d, p, false, x, false); }
double tangential_kernel_dx(int d, int p, double x) { return kernel_eval(d, p, false, x, true); }
double longitudinal_kernel(int d, int p, double x) { return kernel_eval(d, p, true, x, false); }
double longitudinal_kernel_dx(int d, int p, double x) { return kernel_eval(d, p, true, x, true); }

double KernelSeries::value(double x) const {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = value_cache_.find(x);
        if (it != value_cache_.end()) return it->second;
    }
    double v = kernel_eval(d_, p_, longitudinal_, x, false);
    std::lock_guard<std::mutex> lock(mutex_);
    value_cache_[x] = v;
    return v;
}

double KernelSeries::derivative(double x) const {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = deriv_cache_.find(x);
        if (it != deriv_cache_.end()) return it->second;
    }
    double v = kernel_eval(d_, p_, longitudinal_, x, true);
    std::lock_guard<std::mutex> lock(mutex_);
    deriv_cache_[x] = v;
    return v;
}

}  // namespace fluxlaw
