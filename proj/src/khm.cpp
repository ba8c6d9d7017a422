#include "fluxlaw/khm.hpp"

#include <algorithm>
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "fluxlaw/parallel.hpp"

namespace fluxlaw {

std::string to_string(KhmRelation r) {
    switch (r) {
        case KhmRelation::vel: return "vel";
        case KhmRelation::vel_par: return "vel_par";
        case KhmRelation::vor: return "vor";
    }
    return "?";
}

KhmRelation khm_relation_from_string(const std::string& s) {
    if (s == "vel") return KhmRelation::vel;
    if (s == "vel_par") return KhmRelation::vel_par;
    if (s == "vor") return KhmRelation::vor;
    throw std::invalid_argument("unknown KHM relation '" + s + "'");
}

StructureKind structure_kind_of(KhmRelation r) {
    switch (r) {
        case KhmRelation::vel: return StructureKind::vel;
        case KhmRelation::vel_par: return StructureKind::vel_par;
        case KhmRelation::vor: return StructureKind::vor;
    }
    return StructureKind::vel;
}

int KhmBudget::floor_power() const {
    if (d == 2 && relation != KhmRelation::vor) return 3;
    return 1;
}

double KhmBudget::floor(std::size_t i) const { return flux_scale * std::pow(ell[i], floor_power()); }

double KhmBudget::band_relative_residual(double lo, double hi) const {
    if (residual.size() != ell.size()) throw std::logic_error("band_relative_residual: budget has no LHS");
    double worst = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < ell.size(); ++i) {
        if (ell[i] < lo || ell[i] > hi) continue;
        any = true;
        double den = std::max({std::abs(lhs[i]), std::abs(rhs[i]), floor(i)});
        worst = std::max(worst, den > 0.0 ? std::abs(residual[i]) / den : 0.0);
    }
    if (!any) throw std::invalid_argument("band_relative_residual: no grid point inside the band");
    return worst;
}

// ============================================================================
// Right-hand sides
// ============================================================================

namespace {

// p = 0 kernels: series near 0, Bessel / trigonometric closed forms beyond.
double kernel0(int d, bool longitudinal, double x) {
    if (x <= kSeriesLimit) return longitudinal ? longitudinal_kernel(d, 0, x) : tangential_kernel(d, 0, x);
    using boost::math::cyl_bessel_j;
    if (d == 2) return longitudinal ? cyl_bessel_j(1, x) / x : cyl_bessel_j(0, x);
    if (!longitudinal) return std::sin(x) / x;
    return (std::sin(x) - x * std::cos(x)) / (x * x * x);
}

}  // namespace

namespace {

// int_0^x t^power K(t) dt in closed form for the moments the KHM relations
// use; nullopt otherwise.
std::optional<double> kernel_antiderivative(int d, bool longitudinal, int power, double x) {
    using boost::math::cyl_bessel_j;
    using boost::math::sph_bessel;
    if (d == 2 && !longitudinal && power == 1) return x * cyl_bessel_j(1, x);
    if (d == 2 && longitudinal && power == 3) return x * x * cyl_bessel_j(2, x);
    if (d == 3 && !longitudinal && power == 2) return x * x * sph_bessel(1, x);
    if (d == 3 && longitudinal && power == 4) return x * x * x * sph_bessel(2, x);
    return std::nullopt;
}

}  // namespace

double forcing_moment(const RadialSpectrum& forcing, int d, bool longitudinal, int power, double ell) {
    if (!(ell >= 0.0)) throw std::invalid_argument("forcing_moment: negative separation");
    if (ell == 0.0 || forcing.total() == 0.0) return 0.0;
    if (kernel_antiderivative(d, longitudinal, power, 1.0)) {
        double total = 0.0;
        for (std::size_t s = 0; s < forcing.k.size(); ++s) {
            if (forcing.w[s] == 0.0) continue;
            const double k = forcing.k[s];
            total += forcing.w[s] * *kernel_antiderivative(d, longitudinal, power, ell * k) / std::pow(k, power + 1);
        }
        return total;
    }
    double kmax = 0.0;
    for (std::size_t s = 0; s < forcing.k.size(); ++s)
        if (forcing.w[s] != 0.0) kmax = std::max(kmax, forcing.k[s]);
    auto a = [&](double r) {
        double v = 0.0;
        for (std::size_t s = 0; s < forcing.k.size(); ++s) {
            if (forcing.w[s] == 0.0) continue;
            v += forcing.w[s] * kernel0(d, longitudinal, r * forcing.k[s]);
        }
        return v * std::pow(r, power);
    };
    // One panel per half oscillation of the fastest mode.
    const int panels = std::max(1, static_cast<int>(std::ceil(ell * kmax / kPi)));
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        double lo = ell * p / panels, hi = ell * (p + 1) / panels;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(a, lo, hi, 5, 1e-12);
    }
    return total;
}

namespace {

class NestedIntegral {
public:
    NestedIntegral(const StructureCurve& c, int d) : d_(d) {
        const auto& r = c.ell;
        if (r.size() < 4) throw std::invalid_argument("nested integral: need at least 4 curve samples");
        for (std::size_t i = 1; i < r.size(); ++i)
            if (!(r[i] > r[i - 1])) throw std::invalid_argument("nested integral: curve l must increase");
        if (!(r.front() > 0.0)) throw std::invalid_argument("nested integral: curve must start above 0");
        r0_ = r.front();
        r_hi_ = r.back();
        s0_ = c.value.front();
        p_ = d == 2 ? 3.0 : 1.0;
        double s1 = c.value[1];
        if (s0_ != 0.0 && s1 != 0.0 && (s0_ > 0) == (s1 > 0))
            p_ = std::clamp(std::log(s1 / s0_) / std::log(r[1] / r0_), 1.0, 3.0);
        knots_ = r;
        spline_ = std::make_unique<Spline>(std::vector<double>(r), std::vector<double>(c.value));
        cum_.assign(r.size(), 0.0);
        cum_[0] = s0_ * std::pow(r0_, d + 1) / (d + 1 + p_);
        for (std::size_t i = 1; i < r.size(); ++i) cum_[i] = cum_[i - 1] + piece(r[i - 1], r[i]);
    }

    // int_0^l r^d S(r) dr
    double operator()(double l) const {
        if (!(l > 0.0)) throw std::invalid_argument("nested integral: l must be positive");
        if (l > r_hi_ * (1.0 + 1e-12)) throw std::out_of_range("nested integral: l beyond the S_vel curve");
        if (l <= r0_) return s0_ * std::pow(l, d_ + 1 + p_) / std::pow(r0_, p_) / (d_ + 1 + p_);
        auto it = std::upper_bound(knots_.begin(), knots_.end(), l);
        std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
        if (i >= knots_.size() - 1) return cum_.back();
        return cum_[i] + piece(knots_[i], l);
    }

private:
    using Spline = boost::math::interpolators::pchip<std::vector<double>>;
    double piece(double a, double b) const {
        // A cubic times r^d is a polynomial of degree <= 6: 8 points are exact.
        auto f = [this](double r) { return std::pow(r, d_) * (*spline_)(r); };
        return boost::math::quadrature::gauss<double, 8>::integrate(f, a, b);
    }
    int d_;
    double r0_ = 0.0, r_hi_ = 0.0, s0_ = 0.0, p_ = 3.0;
    std::vector<double> knots_, cum_;
    std::unique_ptr<Spline> spline_;
};

CorrelationKind gamma_kind(KhmRelation r) {
    switch (r) {
        case KhmRelation::vel: return CorrelationKind::gamma_vel;
        case KhmRelation::vel_par: return CorrelationKind::gamma_vel_par;
        case KhmRelation::vor: return CorrelationKind::gamma_vor;
    }
    return CorrelationKind::gamma_vel;
}

}  // namespace

double nested_structure_term(const StructureCurve& s_vel, int d, double ell) {
    NestedIntegral I(s_vel, d);
    return 2.0 * I(ell) / std::pow(ell, d + 1);
}

KhmBudget khm_rhs(KhmRelation relation, int d, const RadialSpectrum& flow, const RadialSpectrum& forcing, double nu,
                  const std::vector<double>& ell, const StructureCurve* s_vel) {
    if (d != 2 && d != 3) throw std::invalid_argument("khm_rhs: d must be 2 or 3");
    if (relation == KhmRelation::vor && d != 2) throw std::invalid_argument("khm_rhs: the vorticity relation is 2D");
    for (double l : ell)
        if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("khm_rhs: l must be positive and finite");
    KhmBudget b;
    b.relation = relation;
    b.d = d;
    b.nu = nu;
    b.flux_scale = forcing.total();
    b.ell = ell;
    const std::size_t n = ell.size();
    const bool par = relation == KhmRelation::vel_par;

    auto gam = correlation_spectral(flow, d, gamma_kind(relation), ell);
    b.viscous.resize(n);
    for (std::size_t i = 0; i < n; ++i) b.viscous[i] = -4.0 * nu * gam.derivative[i];

    const int q = par ? d + 1 : (relation == KhmRelation::vor ? 1 : d - 1);
    b.forcing.assign(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        b.forcing[i] = -4.0 * forcing_moment(forcing, d, par, q, ell[i]) / std::pow(ell[i], q);
    });

    b.nested.assign(n, 0.0);
    if (par && n > 0) {
        StructureCurve aux;
        if (!s_vel) {
            double hi = *std::max_element(ell.begin(), ell.end());
            double lo = *std::min_element(ell.begin(), ell.end());
            auto grid = log_grid(lo * 1e-3, hi, 320);
            auto v = khm_rhs(KhmRelation::vel, d, flow, forcing, nu, grid);
            aux.kind = StructureKind::vel;
            aux.ell = grid;
            aux.value = v.rhs;
            s_vel = &aux;
        }
        NestedIntegral I(*s_vel, d);
        for (std::size_t i = 0; i < n; ++i) b.nested[i] = 2.0 * I(ell[i]) / std::pow(ell[i], d + 1);
    }

    b.rhs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        b.rhs[i] = b.viscous[i] + b.forcing[i] + b.nested[i];
        if (!std::isfinite(b.rhs[i])) throw std::runtime_error("khm_rhs: non-finite term");
    }
    b.estimator = "rhs from isotropic spectra";
    return b;
}

KhmBudget khm_rhs(KhmRelation relation, const RadialSpectrum& flow, const ForcingSpec& forcing, double nu,
                  const std::vector<double>& ell, const StructureCurve* s_vel) {
    auto fs = forcing_spectrum(forcing, relation == KhmRelation::vor);
    auto b = khm_rhs(relation, forcing.grid.d(), flow, fs, nu, ell, s_vel);
    auto rates = injection_rates(forcing);
    b.flux_scale = std::max(rates.epsilon, rates.eta.value_or(0.0));
    return b;
}

std::vector<KhmBudget> khm_residuals(const std::vector<SpectralField>& snapshots, double nu,
                                     const ForcingSpec& forcing, const std::vector<double>& ell,
                                     const KhmResidualOptions& options) {
    if (snapshots.empty()) throw std::invalid_argument("khm_residuals: no snapshots");
    const WaveGrid& g = snapshots.front().grid;
    if (g != forcing.grid) throw std::invalid_argument("khm_residuals: forcing and snapshots use different grids");
    for (std::size_t i = 1; i < ell.size(); ++i)
        if (!(ell[i] > ell[i - 1])) throw std::invalid_argument("khm_residuals: l grid must increase");
    const int d = g.d();

    // One accumulator over the requested grid followed by the auxiliary grid.
    double hi = ell.back();
    auto aux = log_grid(ell.front() / 64.0, hi, options.aux_points);
    std::vector<double> all = ell;
    all.insert(all.end(), aux.begin(), aux.end());
    StructureAccumulator acc(g, all);

    ShellSpectrum energy(g), enstrophy(g);
    bool have_vor = false;
    for (const auto& s : snapshots) {
        acc.add(s);
        Flow f = flow_of(s);
        auto e = energy_density(f.u);
        for (std::size_t i = 0; i < g.size(); ++i) energy.density[i] += e.density[i];
        if (f.omega) {
            have_vor = true;
            auto w = energy_density(*f.omega);
            for (std::size_t i = 0; i < g.size(); ++i) enstrophy.density[i] += w.density[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(snapshots.size());
    for (auto& v : energy.density) v *= inv;
    for (auto& v : enstrophy.density) v *= inv;
    RadialSpectrum e_spec = options.energy ? *options.energy : radial(energy);
    RadialSpectrum w_spec = options.enstrophy ? *options.enstrophy : radial(enstrophy);

    auto split = [&](StructureKind kind, StructureCurve* aux_curve) {
        auto c = acc.curve(kind);
        StructureCurve main = c, rest = c;
        main.ell.assign(c.ell.begin(), c.ell.begin() + ell.size());
        main.value.assign(c.value.begin(), c.value.begin() + ell.size());
        main.std_error.assign(c.std_error.begin(), c.std_error.begin() + ell.size());
        if (aux_curve) {
            rest.ell.assign(c.ell.begin() + ell.size(), c.ell.end());
            rest.value.assign(c.value.begin() + ell.size(), c.value.end());
            rest.std_error.assign(c.std_error.begin() + ell.size(), c.std_error.end());
            *aux_curve = rest;
        }
        return main;
    };

    std::vector<KhmBudget> out;
    StructureCurve s_vel_aux;
    std::vector<KhmRelation> rels{KhmRelation::vel, KhmRelation::vel_par};
    if (d == 2 && have_vor) rels.push_back(KhmRelation::vor);
    for (auto rel : rels) {
        StructureCurve lhs = split(structure_kind_of(rel), rel == KhmRelation::vel ? &s_vel_aux : nullptr);
        const RadialSpectrum& spec = rel == KhmRelation::vor ? w_spec : e_spec;
        KhmBudget b = khm_rhs(rel, spec, forcing, nu, ell, rel == KhmRelation::vel_par ? &s_vel_aux : nullptr);
        b.lhs = lhs.value;
        b.lhs_stderr = lhs.std_error;
        b.samples = lhs.samples;
        b.estimator = lhs.estimator + (options.energy ? "; rhs from time-averaged spectra" : "; rhs from snapshot spectra");
        b.residual.resize(ell.size());
        for (std::size_t i = 0; i < ell.size(); ++i) b.residual[i] = b.lhs[i] - b.rhs[i];
        out.push_back(std::move(b));
    }
    return out;
}

KhmBudget khm_residual(const std::vector<SpectralField>& snapshots, KhmRelation relation, double nu,
                       const ForcingSpec& forcing, const std::vector<double>& ell,
                       const KhmResidualOptions& options) {
    for (auto& b : khm_residuals(snapshots, nu, forcing, ell, options))
        if (b.relation == relation) return b;
    throw std::invalid_argument("khm_residual: relation " + to_string(relation) + " needs 2D vorticity snapshots");
}

// ============================================================================
// Coefficient families
// ============================================================================

std::string to_string(FamilyId id) {
    switch (id) {
        case FamilyId::dir3d_S0: return "dir3d_S0";
        case FamilyId::dir3d_Spar: return "dir3d_Spar";
        case FamilyId::dir2d_vor: return "dir2d_vor";
        case FamilyId::dir2d_S0: return "dir2d_S0";
        case FamilyId::dir2d_Spar: return "dir2d_Spar";
        case FamilyId::inv_S0: return "inv_S0";
        case FamilyId::inv_Spar: return "inv_Spar";
    }
    return "?";
}

FamilyId family_from_string(const std::string& s) {
    for (auto id : all_families())
        if (to_string(id) == s) return id;
    throw std::invalid_argument("unknown coefficient family '" + s + "'");
}

std::vector<FamilyId> all_families() {
    return {FamilyId::dir3d_S0, FamilyId::dir3d_Spar, FamilyId::dir2d_vor, FamilyId::dir2d_S0,
            FamilyId::dir2d_Spar, FamilyId::inv_S0,    FamilyId::inv_Spar};
}

namespace {

__float128 beta_ratio(int d, int K) {
    if (d == 2) return __float128(1) / (2 * (K + 1));
    return __float128(1) / (2 * K + 3);
}

using boost::math::cyl_bessel_j;

// Fixed 30-point Gauss on panels of width <= 2 (more for fast oscillation):
// the integrands are entire, so each panel is exact to rounding.
double gk(const std::function<double(double)>& f, double a, double b, int min_panels = 1) {
    if (b <= a) return 0.0;
    const int panels = std::max(min_panels, static_cast<int>(std::ceil((b - a) / 2.0)));
    double s = 0.0;
    for (int p = 0; p < panels; ++p) {
        double lo = a + (b - a) * p / panels, hi = a + (b - a) * (p + 1) / panels;
        s += boost::math::quadrature::gauss<double, 30>::integrate(f, lo, hi);
    }
    return s;
}

// mean over S^{d-1} of w(mu) sin(x mu) with mu = n.e, for an odd weight w.
double sphere_sin_average(int d, const std::function<double(double)>& w, double x) {
    const int panels = static_cast<int>(std::ceil(x / 4.0)) + 1;
    if (d == 2)
        return gk([&](double t) { double c = std::cos(t); return w(c) * std::sin(x * c); }, 0.0, kPi, panels) / kPi;
    return gk([&](double mu) { return w(mu) * std::sin(x * mu); }, 0.0, 1.0, panels);
}

}  // namespace

CoefficientFamily coefficient_family(FamilyId id, int d) {
    CoefficientFamily f;
    f.id = id;
    switch (id) {
        case FamilyId::dir3d_S0:
            f.d = 3;
            f.limit = Rational(4, 3);
            f.first = Rational(2, 15);
            f.ratio = [](int m) { return -__float128(1) / (__float128(2 * m + 2) * (2 * m + 5)); };
            f.decay_rate = 1.0;
            f.exact_constant = 2.0;
            f.closed_form = "4/3 - c = (4/x^3) int_0^x t sin t dt";
            break;
        case FamilyId::dir3d_Spar:
            f.d = 3;
            f.limit = Rational(4, 15);
            f.first = Rational(4, 210);
            f.ratio = [](int m) { return -__float128(1) / (__float128(2 * m + 2) * (2 * m + 7)); };
            f.decay_rate = 1.0;
            f.closed_form = "4/15 - c = (4/x^5) int_0^x t int_0^t s sin s ds dt";
            break;
        case FamilyId::dir2d_vor:
            f.d = 2;
            f.limit = Rational(2);
            f.first = Rational(1, 4);
            f.ratio = [](int m) { return -__float128(1) / (4 * __float128(m + 2) * (m + 1)); };
            f.decay_rate = 1.0;
            f.closed_form = "2 - c = 4 J1(x)/x";
            break;
        case FamilyId::dir2d_S0:
            f.d = 2;
            f.limit = Rational(-1, 4);
            f.first = Rational(-1, 96);
            f.ratio = [](int m) { return -__float128(1) / (4 * __float128(m + 2) * (m + 3)); };
            f.decay_rate = 0.5;
            f.closed_form = "-1/4 - c = -(4/x^2) int_0^x J2(t)/t dt";
            break;
        case FamilyId::dir2d_Spar:
            f.d = 2;
            f.limit = Rational(1, 24);
            f.first = Rational(1, 768);
            f.ratio = [](int m) { return -__float128(1) / (4 * __float128(m + 2) * (m + 4)); };
            f.decay_rate = 1.0;
            f.closed_form = "1/24 - c = (4/x^2) int_0^x J3(t)/t^2 dt";
            break;
        case FamilyId::inv_S0:
        case FamilyId::inv_Spar: {
            if (d != 2 && d != 3) throw std::invalid_argument("inverse coefficient families need d = 2 or 3");
            f.d = d;
            const int shift = id == FamilyId::inv_S0 ? 1 : 2;
            // a_m = 4 beta_d(m + shift) (-1)^m / (2^m m!)
            f.limit = -4 * beta(d, shift);
            f.first = -4 * beta(d, shift + 1) / 2;
            f.ratio = [d, shift](int m) { return -beta_ratio(d, m + shift) / (2 * __float128(m + 1)); };
            f.decay_rate = 1.0;
            f.closed_form = id == FamilyId::inv_S0 ? "L - c = 4 T0'(x)/x" : "L - c = 4 L0'(x)/x";
            break;
        }
    }
    return f;
}

double CoefficientFamily::series(double x) const {
    return even_series(x, to_double(first), 1, ratio, false);
}

double CoefficientFamily::gap_closed(double x) const {
    if (x == 0.0) return to_double(limit);
    const double s = std::sin(x), c = std::cos(x);
    const double x2 = x * x, x3 = x2 * x;
    switch (id) {
        case FamilyId::dir3d_S0: return 4.0 * (s - x * c) / x3;
        case FamilyId::dir3d_Spar: return 4.0 * (3.0 * s - 3.0 * x * c - x2 * s) / (x3 * x2);
        case FamilyId::dir2d_vor: return 4.0 * cyl_bessel_j(1, x) / x;
        case FamilyId::dir2d_S0: return 4.0 * cyl_bessel_j(1, x) / x3 - 2.0 / x2;
        case FamilyId::dir2d_Spar: return 0.5 / x2 - 4.0 * cyl_bessel_j(2, x) / (x2 * x2);
        case FamilyId::inv_S0:
            if (d == 2) return -4.0 * cyl_bessel_j(1, x) / x;
            return 4.0 * (x * c - s) / x3;
        case FamilyId::inv_Spar:
            if (d == 2) return -4.0 * cyl_bessel_j(2, x) / x2;
            return 4.0 * (x2 * s - 3.0 * s + 3.0 * x * c) / (x3 * x2);
    }
    return 0.0;
}

double CoefficientFamily::gap_integral(double x) const {
    if (x == 0.0) return to_double(limit);
    const double x2 = x * x;
    switch (id) {
        case FamilyId::dir3d_S0:
            return 4.0 / (x2 * x) * gk([](double t) { return t * std::sin(t); }, 0.0, x);
        case FamilyId::dir3d_Spar:
            return 4.0 / (x2 * x2 * x) * gk([](double t) {
                       return t * gk([](double s) { return s * std::sin(s); }, 0.0, t);
                   }, 0.0, x);
        case FamilyId::dir2d_vor:
            // J1(x) = (1/pi) int_0^pi cos(t - x sin t) dt
            return 4.0 / x *
                   gk([x](double t) { return std::cos(t - x * std::sin(t)); }, 0.0, kPi,
                      static_cast<int>(std::ceil(x / 4.0)) + 1) / kPi;
        case FamilyId::dir2d_S0:
            return -4.0 / x2 * gk([](double t) { return t == 0.0 ? 0.0 : cyl_bessel_j(2, t) / t; }, 0.0, x);
        case FamilyId::dir2d_Spar:
            return 4.0 / x2 * gk([](double t) { return t == 0.0 ? 0.0 : cyl_bessel_j(3, t) / (t * t); }, 0.0, x);
        case FamilyId::inv_S0:
            // T0'(x) = -mean mu sin(x mu)
            return -4.0 / x * sphere_sin_average(d, [](double mu) { return mu; }, x);
        case FamilyId::inv_Spar: {
            // L0'(x) = -mean (n.t)^2 mu sin(x mu); (n.t)^2 is 1 - mu^2 on S^1
            // and averages to (1 - mu^2)/2 on S^2.
            const double tf = d == 2 ? 1.0 : 0.5;
            return -4.0 / x * sphere_sin_average(d, [tf](double mu) { return tf * (1.0 - mu * mu) * mu; }, x);
        }
    }
    return 0.0;
}

double CoefficientFamily::operator()(double x) const {
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("coefficient_c: x must be finite and nonnegative");
    if (x <= kSeriesLimit) return series(x);
    return to_double(limit) - gap_closed(x);
}

double coefficient_c(const CoefficientFamily& family, double x) { return family(x); }

EnvelopeCheck decay_envelope_check(const CoefficientFamily& family, const std::vector<double>& x) {
    for (double v : x)
        if (!(v > 0.0) || v > 200.0) throw std::invalid_argument("decay_envelope_check: grid must lie in (0, 200]");
    EnvelopeCheck r;
    r.id = family.id;
    r.d = family.d;
    r.rate = family.decay_rate;
    const double L = to_double(family.limit);
    std::vector<double> gap(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) gap[i] = std::abs(L - family(x[i]));

    if (family.exact_constant) {
        r.exact = true;
        r.constant = *family.exact_constant;
        for (std::size_t i = 0; i < x.size(); ++i)
            r.max_violation = std::max(r.max_violation, gap[i] - r.constant * std::pow(x[i], -r.rate));
    } else {
        // Fit on even indices, verify on odd ones.
        for (std::size_t i = 0; i < x.size(); i += 2)
            r.constant = std::max(r.constant, gap[i] * std::pow(x[i], r.rate));
        for (std::size_t i = 1; i < x.size(); i += 2)
            r.max_violation = std::max(r.max_violation, gap[i] - r.constant * std::pow(x[i], -r.rate));
    }

    // Running max from the right is the envelope; its log slope over the last
    // decade measures the true decay.
    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> env(x.size());
    double run = 0.0;
    for (std::size_t j = x.size(); j-- > 0;) {
        run = std::max(run, gap[order[j]]);
        env[j] = run;
    }
    double xmax = x[order.back()];
    std::size_t j0 = 0;
    while (j0 < x.size() && x[order[j0]] < xmax / 10.0) ++j0;
    if (x.size() - j0 >= 2 && env[j0] > 0.0 && env.back() > 0.0)
        r.measured_rate = -std::log(env.back() / env[j0]) / std::log(xmax / x[order[j0]]);
    for (std::size_t j = 1; j < x.size(); ++j) {
        double bp = std::pow(x[order[j]], -r.rate), bq = std::pow(x[order[j - 1]], -r.rate);
        if (bp > bq) r.envelope_decreasing = false;
    }
    return r;
}

}  // namespace fluxlaw
