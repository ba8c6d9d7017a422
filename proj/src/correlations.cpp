#include "fluxlaw/correlations.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fluxlaw/parallel.hpp"

namespace fluxlaw {

std::string to_string(StructureKind k) {
    switch (k) {
        case StructureKind::vel: return "S_vel";
        case StructureKind::vel_par: return "S_vel_par";
        case StructureKind::vor: return "S_vor";
    }
    return "?";
}

std::string to_string(CorrelationKind k) {
    switch (k) {
        case CorrelationKind::gamma_vel: return "gamma_vel";
        case CorrelationKind::gamma_vel_par: return "gamma_vel_par";
        case CorrelationKind::gamma_vor: return "gamma_vor";
        case CorrelationKind::a_vel: return "a_vel";
        case CorrelationKind::a_vel_par: return "a_vel_par";
        case CorrelationKind::a_vor: return "a_vor";
    }
    return "?";
}

StructureKind structure_kind_from_string(const std::string& s) {
    for (auto k : {StructureKind::vel, StructureKind::vel_par, StructureKind::vor})
        if (s == to_string(k)) return k;
    if (s == "vel") return StructureKind::vel;
    if (s == "vel_par") return StructureKind::vel_par;
    if (s == "vor") return StructureKind::vor;
    throw std::invalid_argument("unknown structure kind: " + s);
}

CorrelationKind correlation_kind_from_string(const std::string& s) {
    for (auto k : {CorrelationKind::gamma_vel, CorrelationKind::gamma_vel_par, CorrelationKind::gamma_vor,
                   CorrelationKind::a_vel, CorrelationKind::a_vel_par, CorrelationKind::a_vor})
        if (s == to_string(k)) return k;
    throw std::invalid_argument("unknown correlation kind: " + s);
}

Flow flow_of(const SpectralField& snapshot) {
    Flow f;
    if (snapshot.kind == FieldKind::scalar) {
        if (snapshot.grid.d() != 2) throw std::invalid_argument("scalar snapshots are 2D vorticity");
        f.u = biot_savart(snapshot);
        f.omega = snapshot;
    } else {
        f.u = snapshot;
        if (snapshot.grid.d() == 2) f.omega = curl2d(snapshot);
    }
    return f;
}

namespace {

void check_ell(const WaveGrid& g, const std::vector<double>& ell) {
    for (double l : ell)
        if (!(l > 0.0) || l > 0.5 * g.lambda() * (1.0 + 1e-12))
            throw std::invalid_argument("separation outside (0, lambda/2]");
}

bool is_gamma(CorrelationKind k) {
    return k == CorrelationKind::gamma_vel || k == CorrelationKind::gamma_vel_par || k == CorrelationKind::gamma_vor;
}

bool is_parallel(CorrelationKind k) { return k == CorrelationKind::gamma_vel_par || k == CorrelationKind::a_vel_par; }

double mean_sq_err(const std::vector<double>& xs, double* mean) {
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    *mean = m;
    if (xs.size() < 2) return 0.0;
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= static_cast<double>(xs.size() - 1);
    return std::sqrt(v / static_cast<double>(xs.size()));
}

}  // namespace

double structure_integrand(const Flow& flow, StructureKind kind, const std::array<double, 3>& y) {
    const WaveGrid& g = flow.u.grid;
    const int d = g.d();
    double ny = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
    if (!(ny > 0.0)) return 0.0;
    std::array<double, 3> n{y[0] / ny, y[1] / ny, y[2] / ny};
    auto u = transform_to_physical(flow.u);
    auto us = transform_to_physical(spectral_shift(flow.u, y));
    PhysicalField w, ws;
    if (kind == StructureKind::vor) {
        if (!flow.omega) throw std::invalid_argument("S_vor needs a 2D vorticity");
        w = transform_to_physical(*flow.omega);
        ws = transform_to_physical(spectral_shift(*flow.omega, y));
    }
    double acc = 0.0;
    for (std::size_t x = 0; x < g.size(); ++x) {
        double du2 = 0.0, dun = 0.0;
        for (int c = 0; c < d; ++c) {
            double du = us.comp(c)[x] - u.comp(c)[x];
            du2 += du * du;
            dun += du * n[c];
        }
        switch (kind) {
            case StructureKind::vel: acc += du2 * dun; break;
            case StructureKind::vel_par: acc += dun * dun * dun; break;
            case StructureKind::vor: {
                double dw = ws.values[x] - w.values[x];
                acc += dw * dw * dun;
                break;
            }
        }
    }
    return acc / static_cast<double>(g.size());
}

StructureCurve structure_function(const std::vector<SpectralField>& snapshots, StructureKind kind,
                                  const std::vector<double>& ell, const SphereRule& rule) {
    if (snapshots.empty()) throw std::invalid_argument("structure_function: no snapshots");
    const WaveGrid& g = snapshots.front().grid;
    check_ell(g, ell);
    if (rule.d != g.d()) throw std::invalid_argument("structure_function: sphere rule dimension mismatch");
    std::vector<std::vector<double>> per(ell.size(), std::vector<double>(snapshots.size(), 0.0));
    for (std::size_t s = 0; s < snapshots.size(); ++s) {
        if (snapshots[s].grid != g) throw std::invalid_argument("structure_function: snapshots on different grids");
        Flow flow = flow_of(snapshots[s]);
        parallel_for(ell.size(), [&](std::size_t i) {
            double acc = 0.0;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const auto& n = rule.nodes[q];
                acc += rule.weights[q] * structure_integrand(flow, kind, {ell[i] * n[0], ell[i] * n[1], ell[i] * n[2]});
            }
            per[i][s] = acc;
        });
    }
    StructureCurve c;
    c.kind = kind;
    c.ell = ell;
    c.sphere_nodes = static_cast<int>(rule.nodes.size());
    c.samples = snapshots.size();
    c.estimator = "snapshot mean of shift-based x-average; sphere rule quadrature";
    for (auto& v : per) {
        double m;
        c.std_error.push_back(mean_sq_err(v, &m));
        c.value.push_back(m);
    }
    return c;
}

// ============================================================================
// Exact sphere average
// ============================================================================

StructureAccumulator::StructureAccumulator(const WaveGrid& grid, std::vector<double> ell)
    : grid_(grid), ell_(std::move(ell)) {
    check_ell(grid_, ell_);
    std::map<std::int64_t, std::size_t> slot;
    shell_of_.assign(grid_.size(), static_cast<std::size_t>(-1));
    for (std::size_t i = 1; i < grid_.size(); ++i) {
        if (grid_.is_nyquist(i)) continue;
        auto z2 = grid_.z_norm2(i);
        auto it = slot.find(z2);
        if (it == slot.end()) it = slot.emplace(z2, 0).first;
        shell_of_[i] = 0;  // placeholder, renumbered below
    }
    std::size_t next = 0;
    for (auto& [z2, s] : slot) {
        s = next++;
        shell_k_.push_back(grid_.k0() * std::sqrt(static_cast<double>(z2)));
    }
    for (std::size_t i = 1; i < grid_.size(); ++i)
        if (shell_of_[i] != static_cast<std::size_t>(-1)) shell_of_[i] = slot[grid_.z_norm2(i)];
    s1_.assign(ell_.size(), std::vector<double>(shell_k_.size(), 0.0));
    ta_ = s1_;
    tb_ = s1_;
    have_.assign(shell_k_.size(), 0);
    for (auto k : {StructureKind::vel, StructureKind::vel_par, StructureKind::vor}) per_sample_[k].assign(ell_.size(), {});
}

void StructureAccumulator::fill_shell(std::size_t s) {
    const int d = grid_.d();
    for (std::size_t i = 0; i < ell_.size(); ++i) {
        double x = ell_[i] * shell_k_[s];
        // s1 = mean (n.e) sin(x n.e), s3 = mean (n.e)^3 sin(x n.e).
        double s1 = -tangential_kernel_dx(d, 0, x);
        double s3 = -tangential_kernel_dx(d, 1, x);
        // mean n_i n_j n_m sin(x n.e) = a (delta e + 2 perms) + b e e e
        double a = (s1 - s3) / (d - 1);
        s1_[i][s] = s1;
        ta_[i][s] = a;
        tb_[i][s] = s3 - 3.0 * a;
    }
    have_[s] = 1;
}

void StructureAccumulator::add(const SpectralField& snapshot) {
    if (snapshot.grid != grid_) throw std::invalid_argument("StructureAccumulator: grid mismatch");
    const WaveGrid& g = grid_;
    const int d = g.d();
    Flow flow = flow_of(snapshot);
    auto u = transform_to_physical(flow.u);
    const std::size_t N = g.size();
    PhysicalField e(g, 1);
    std::vector<SpectralField> P(9);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            PhysicalField p(g, 1);
            for (std::size_t x = 0; x < N; ++x) p.values[x] = u.comp(i)[x] * u.comp(j)[x];
            P[i * 3 + j] = transform_to_spectral(p, FieldKind::scalar);
            P[j * 3 + i] = P[i * 3 + j];
        }
    for (std::size_t x = 0; x < N; ++x)
        for (int i = 0; i < d; ++i) e.values[x] += u.comp(i)[x] * u.comp(i)[x];
    auto E = transform_to_spectral(e, FieldKind::scalar);
    SpectralField W;
    std::vector<SpectralField> R(d);
    if (flow.omega) {
        auto w = transform_to_physical(*flow.omega);
        PhysicalField ww(g, 1);
        for (std::size_t x = 0; x < N; ++x) ww.values[x] = w.values[x] * w.values[x];
        W = transform_to_spectral(ww, FieldKind::scalar);
        for (int i = 0; i < d; ++i) {
            PhysicalField r(g, 1);
            for (std::size_t x = 0; x < N; ++x) r.values[x] = w.values[x] * u.comp(i)[x];
            R[i] = transform_to_spectral(r, FieldKind::scalar);
        }
    }
    std::vector<double> cv(shell_k_.size(), 0.0), ca(shell_k_.size(), 0.0), cb(shell_k_.size(), 0.0),
        cw(shell_k_.size(), 0.0);
    for (std::size_t k = 1; k < N; ++k) {
        std::size_t s = shell_of_[k];
        if (s == static_cast<std::size_t>(-1)) continue;
        cplx uh[3] = {0.0, 0.0, 0.0};
        double zero = 0.0;
        for (int i = 0; i < d; ++i) {
            uh[i] = flow.u.comp(i)[k];
            zero += std::abs(uh[i]);
        }
        if (zero == 0.0 && !(flow.omega && flow.omega->coeff[k] != cplx(0.0))) continue;
        auto kv = g.k(k);
        double kn = std::sqrt(g.k_norm2(k));
        double ev[3] = {kv[0] / kn, kv[1] / kn, kv[2] / kn};
        cplx eu = 0.0, pe_u = 0.0, epe = 0.0, tr = 0.0;
        for (int i = 0; i < d; ++i) {
            eu += ev[i] * uh[i];
            tr += std::conj(P[i * 3 + i].coeff[k]);
            for (int j = 0; j < d; ++j) {
                cplx pc = std::conj(P[i * 3 + j].coeff[k]);
                pe_u += ev[i] * pc * uh[j];
                epe += ev[i] * pc * ev[j];
            }
        }
        // Re(2i X) = -2 Im X
        cv[s] += -2.0 * (std::conj(E.coeff[k]) * eu + 2.0 * pe_u).imag();
        ca[s] += -6.0 * (tr * eu + 2.0 * pe_u).imag();
        cb[s] += -6.0 * (epe * eu).imag();
        if (flow.omega) {
            cplx re = 0.0;
            for (int i = 0; i < d; ++i) re += ev[i] * std::conj(R[i].coeff[k]);
            cw[s] += -2.0 * (std::conj(W.coeff[k]) * eu + 2.0 * re * flow.omega->coeff[k]).imag();
        }
    }
    for (std::size_t s = 0; s < shell_k_.size(); ++s)
        if (!have_[s] && (cv[s] != 0.0 || ca[s] != 0.0 || cb[s] != 0.0 || cw[s] != 0.0)) fill_shell(s);
    for (std::size_t i = 0; i < ell_.size(); ++i) {
        double sv = 0.0, sp = 0.0, sw = 0.0;
        for (std::size_t s = 0; s < shell_k_.size(); ++s) {
            if (!have_[s]) continue;
            sv += s1_[i][s] * cv[s];
            sp += ta_[i][s] * ca[s] + tb_[i][s] * cb[s];
            sw += s1_[i][s] * cw[s];
        }
        per_sample_[StructureKind::vel][i].push_back(sv);
        per_sample_[StructureKind::vel_par][i].push_back(sp);
        if (flow.omega) per_sample_[StructureKind::vor][i].push_back(sw);
    }
    ++samples_;
}

StructureCurve StructureAccumulator::curve(StructureKind kind) const {
    if (samples_ == 0) throw std::logic_error("StructureAccumulator: no samples");
    const auto& per = per_sample_.at(kind);
    if (per.empty() || per.front().size() != samples_) throw std::invalid_argument("S_vor needs 2D vorticity snapshots");
    StructureCurve c;
    c.kind = kind;
    c.ell = ell_;
    c.sphere_nodes = 0;
    c.samples = samples_;
    c.estimator = "snapshot mean; exact x- and sphere averages via correlation spectra";
    for (const auto& v : per) {
        double m;
        c.std_error.push_back(mean_sq_err(v, &m));
        c.value.push_back(m);
    }
    return c;
}

StructureCurve structure_function_exact(const std::vector<SpectralField>& snapshots, StructureKind kind,
                                        const std::vector<double>& ell) {
    if (snapshots.empty()) throw std::invalid_argument("structure_function_exact: no snapshots");
    StructureAccumulator acc(snapshots.front().grid, ell);
    for (const auto& s : snapshots) acc.add(s);
    return acc.curve(kind);
}

// ============================================================================
// Two-point correlations
// ============================================================================

CorrelationCurve correlation_spectral(const RadialSpectrum& spectrum, int d, CorrelationKind kind,
                                      const std::vector<double>& ell) {
    CorrelationCurve c;
    c.kind = kind;
    c.ell = ell;
    const bool par = is_parallel(kind);
    for (double l : ell) {
        if (!(l >= 0.0)) throw std::invalid_argument("correlation_spectral: negative separation");
        double v = 0.0, dv = 0.0;
        for (std::size_t s = 0; s < spectrum.k.size(); ++s) {
            double k = spectrum.k[s], w = spectrum.w[s];
            if (w == 0.0) continue;
            double x = l * k;
            v += w * (par ? longitudinal_kernel(d, 0, x) : tangential_kernel(d, 0, x));
            if (k > 0.0) dv += w * k * (par ? longitudinal_kernel_dx(d, 0, x) : tangential_kernel_dx(d, 0, x));
        }
        c.value.push_back(v);
        c.derivative.push_back(dv);
    }
    return c;
}

RadialSpectrum forcing_spectrum(const ForcingSpec& spec, bool curl) {
    std::map<std::int64_t, double> groups;
    const WaveGrid& g = spec.grid;
    for (std::size_t j = 0; j < spec.count(); ++j) {
        for (const auto& m : spec.components[j]) {
            double z2 = double(m.z[0]) * m.z[0] + double(m.z[1]) * m.z[1] + double(m.z[2]) * m.z[2];
            double a2 = 0.0;
            if (curl) {
                if (g.d() != 2) throw std::invalid_argument("forcing_spectrum: curl needs d = 2");
                cplx cu = cplx(0.0, 1.0) * (g.k0() * m.z[0] * m.amp[1] - g.k0() * m.z[1] * m.amp[0]);
                a2 = std::norm(cu);
            } else {
                for (int i = 0; i < g.d(); ++i) a2 += std::norm(m.amp[i]);
            }
            // (1/2) (|f^(k)|^2 + |f^(-k)|^2)
            groups[static_cast<std::int64_t>(z2)] += a2;
        }
    }
    RadialSpectrum out;
    for (auto& [z2, w] : groups) out.add(g.k0() * std::sqrt(static_cast<double>(z2)), w);
    return out;
}

CorrelationCurve correlation_forcing(const ForcingSpec& spec, CorrelationKind kind, const std::vector<double>& ell) {
    if (is_gamma(kind)) throw std::invalid_argument("correlation_forcing: expects an a_* kind");
    return correlation_spectral(forcing_spectrum(spec, kind == CorrelationKind::a_vor), spec.grid.d(), kind, ell);
}

CorrelationCurve correlation_shift(const SpectralField& snapshot, CorrelationKind kind, const std::vector<double>& ell,
                                   const SphereRule& rule) {
    if (!is_gamma(kind)) throw std::invalid_argument("correlation_shift: expects a gamma_* kind");
    const WaveGrid& g = snapshot.grid;
    check_ell(g, ell);
    Flow flow = flow_of(snapshot);
    const SpectralField& f = kind == CorrelationKind::gamma_vor ? flow.omega.value() : flow.u;
    auto p = transform_to_physical(f);
    CorrelationCurve c;
    c.kind = kind;
    c.ell = ell;
    c.value.assign(ell.size(), 0.0);
    parallel_for(ell.size(), [&](std::size_t i) {
        double acc = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const auto& n = rule.nodes[q];
            auto ps = transform_to_physical(spectral_shift(f, {ell[i] * n[0], ell[i] * n[1], ell[i] * n[2]}));
            double s = 0.0;
            for (std::size_t x = 0; x < g.size(); ++x) {
                if (kind == CorrelationKind::gamma_vel_par) {
                    double a = 0.0, b = 0.0;
                    for (int cc = 0; cc < g.d(); ++cc) {
                        a += n[cc] * p.comp(cc)[x];
                        b += n[cc] * ps.comp(cc)[x];
                    }
                    s += a * b;
                } else {
                    for (int cc = 0; cc < p.ncomp; ++cc) s += p.comp(cc)[x] * ps.comp(cc)[x];
                }
            }
            acc += rule.weights[q] * s / static_cast<double>(g.size());
        }
        c.value[i] = acc;
    });
    return c;
}

SphereRule auto_sphere_rule(int d, double x_max) {
    auto even_at_least = [](double v) {
        int n = static_cast<int>(std::ceil(v));
        return n + (n % 2);
    };
    if (d == 2) return SphereRule::circle(std::max(64, even_at_least(1.5 * x_max + 40.0)));
    return SphereRule::product(std::max(16, even_at_least(0.75 * x_max + 20.0)),
                               std::max(32, even_at_least(1.5 * x_max + 40.0)));
}

double cross_validate(const std::vector<SpectralField>& snapshots, CorrelationKind kind, const std::vector<double>& ell) {
    if (!is_gamma(kind)) throw std::invalid_argument("cross_validate: second-order gamma kinds only");
    if (snapshots.empty()) throw std::invalid_argument("cross_validate: no snapshots");
    const WaveGrid& g = snapshots.front().grid;
    double worst = 0.0;
    for (const auto& snap : snapshots) {
        if (snap.grid != g) throw std::invalid_argument("cross_validate: snapshots on different grids");
        Flow flow = flow_of(snap);
        const SpectralField& f = kind == CorrelationKind::gamma_vor ? flow.omega.value() : flow.u;
        double kmax = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            double a = 0.0;
            for (int c = 0; c < f.components(); ++c) a += std::abs(f.comp(c)[i]);
            if (a > 0.0) kmax = std::max(kmax, std::sqrt(g.k_norm2(i)));
        }
        double lmax = *std::max_element(ell.begin(), ell.end());
        auto shift = correlation_shift(snap, kind, ell, auto_sphere_rule(g.d(), lmax * kmax));
        auto spec = correlation_spectral(radial(energy_density(f)), g.d(), kind, ell);
        double scale = 0.0, diff = 0.0;
        for (std::size_t i = 0; i < ell.size(); ++i) {
            scale = std::max(scale, std::abs(spec.value[i]));
            diff = std::max(diff, std::abs(shift.value[i] - spec.value[i]));
        }
        worst = std::max(worst, scale > 0.0 ? diff / scale : diff);
    }
    return worst;
}

std::vector<double> log_grid(double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2) throw std::invalid_argument("log_grid: need 0 < lo < hi, points >= 2");
    std::vector<double> out;
    for (int i = 0; i < points; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
    out.back() = hi;
    return out;
}

std::vector<double> default_ell_grid(const WaveGrid& g, int points) {
    double kcut = g.k0() * (g.n() / 3.0);
    return log_grid(1.0 / kcut, 0.45 * g.lambda(), points);
}

}  // namespace fluxlaw
