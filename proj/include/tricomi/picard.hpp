#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "admissibility.hpp"
#include "dopri.hpp"
#include "errors.hpp"
#include "exponents.hpp"
#include "grid.hpp"
#include "initial_data.hpp"
#include "norms.hpp"
#include "parallel.hpp"
#include "simulator.hpp"
#include "transforms.hpp"

namespace tricomi {

enum class PicardScheme { WeightedLq, MixedNorm };

inline const char* to_string(PicardScheme s) { return s == PicardScheme::WeightedLq ? "WeightedLq" : "MixedNorm"; }

inline PicardScheme picard_scheme_from_string(const std::string& s) {
    if (s == "WeightedLq") return PicardScheme::WeightedLq;
    if (s == "MixedNorm") return PicardScheme::MixedNorm;
    throw DomainError("unknown Picard scheme '" + s + "'");
}

struct PicardConfig {
    PicardScheme scheme = PicardScheme::WeightedLq;
    double m = 2, alpha = 2, p = 3;  // MixedNorm forces alpha = m - p + 1
    int K = 5;                       // iterates u_0 .. u_K
    double t0 = 1, T_probe = 20;
    Grid grid{256, 32};
    double gamma = std::numeric_limits<double>::quiet_NaN();  // NaN: midpoint of its range
    double q = std::numeric_limits<double>::quiet_NaN();      // NaN: p + 1 (WeightedLq) or the selected pair (MixedNorm)
    double nu = std::numeric_limits<double>::quiet_NaN();
    double sample_dt = 0.05;
    double rtol = 1e-8;
    double stability_factor = 2.5;
};

struct PicardRun {
    PicardScheme scheme = PicardScheme::WeightedLq;
    double m = 0, alpha = 0, p = 0, gamma = 0, q = 0, nu = 0, s = 0, t0 = 0, T_probe = 0;
    int K = 0;
    std::vector<double> M, N;                // k = 0 .. K
    std::vector<double> ratios;              // N_{k+1} / N_k, k = 0 .. K-1 (0 when both vanish)
    std::vector<std::vector<double>> D;      // D[k][j] = || u_k - u_j || in the scheme norm
    std::vector<double> N_tail;              // tail share estimate of N_k^q
    std::size_t samples = 0;
    long steps = 0, rejects = 0;
    bool converged = false;
    std::string warning;                     // hypothesis warnings, empty when none
};

namespace detail {

inline double abs_pow(double x, double p) {
    x = std::abs(x);
    if (p == 2) return x * x;
    if (p == 3) return x * x * x;
    if (p == 4) return (x * x) * (x * x);
    return std::pow(x, p);
}

// |b + d|^p - |b|^p without cancellation when |d| << |b|.
inline double power_difference(double b, double d, double p) {
    if (b == 0) return abs_pow(d, p);
    const double a = b + d;
    if (p == std::floor(p) && p <= 8 && (a > 0) == (b > 0)) {
        // a^n - b^n = (a - b) sum a^i b^{n-1-i}, all terms of one sign
        const double x = std::abs(a), y = std::abs(b);
        double s = 0, yi = 1;
        for (int i = 0; i < int(p); ++i, yi *= y) s = s * x + yi;
        return (b > 0 ? d : -d) * s;
    }
    if (std::abs(d) < std::abs(b)) return std::pow(std::abs(b), p) * std::expm1(p * std::log1p(d / b));
    return std::pow(std::abs(b + d), p) - std::pow(std::abs(b), p);
}

}  // namespace detail

// Iteration u_k'' - t^m Lap u_k = t^alpha |u_{k-1}|^p, u_{-1} = 0, all iterates
// sharing the data at t0. The iterates are advanced together as u_0 and the
// increments d_k = u_k - u_{k-1}, each solving its own linear problem with the
// frozen source t^alpha(|u_{k-1}|^p - |u_{k-2}|^p), so tiny increments keep full
// relative precision. Step control uses the u_0 and d_1 blocks: every block sees
// the same operator, and d_k for k >= 2 starts like (t - t0)^{2k}, which a
// relative error test cannot resolve near t0.
inline PicardRun run_picard(PicardConfig cfg, const InitialData& data) {
    if (cfg.K < 2) throw DomainError("run_picard: requires K >= 2");
    if (!(cfg.T_probe > cfg.t0) || !(cfg.t0 > 0)) throw DomainError("run_picard: requires 0 < t0 < T_probe");
    if (!(cfg.p > 1)) throw DomainError("run_picard: requires p > 1");
    if (!(data.u0.grid == cfg.grid) || !(data.u1.grid == cfg.grid)) throw ShapeError("run_picard: data grid mismatch");
    const Grid& g = cfg.grid;
    const double m = cfg.m, p = cfg.p;
    PicardRun run;
    run.scheme = cfg.scheme;
    run.m = m;
    run.p = p;
    run.K = cfg.K;
    run.t0 = cfg.t0;
    run.T_probe = cfg.T_probe;
    std::ostringstream warn;
    if (cfg.scheme == PicardScheme::WeightedLq) {
        run.alpha = cfg.alpha;
        auto gr = gamma_delta_ranges(m, cfg.alpha, p);
        run.gamma = std::isnan(cfg.gamma) ? 0.5 * (gr.gamma_lo + gr.gamma_hi) : cfg.gamma;
        run.q = std::isnan(cfg.q) ? p + 1 : cfg.q;
        if (gr.empty || !(run.gamma > gr.gamma_lo && run.gamma < gr.gamma_hi))
            warn << "gamma outside (1/(p(p+1)), ((m+1)p-(2alpha+3))/((m+2)(p+1))); ";
        double support = data.radius;
        if (!(support < phi_m(m, cfg.t0) + 2)) warn << "data support reaches the zero set of the shifted weight; ";
    } else {
        run.alpha = m - p + 1;
        NuSelection sel{};
        bool have_pair = std::isnan(cfg.q) || std::isnan(cfg.nu);
        if (have_pair) sel = select_nu(m, p);
        run.nu = std::isnan(cfg.nu) ? sel.nu : cfg.nu;
        run.q = std::isnan(cfg.q) ? sel.q : cfg.q;
        run.s = sobolev_index_s(m, p);
    }
    run.warning = warn.str();
    const double alpha = run.alpha, q = run.q;
    const int K = cfg.K, B = K + 1;
    const std::size_t n = g.size();

    SimConfig sc;
    sc.params = ModelParams::tricomi(m, alpha, p);
    sc.grid = g;
    sc.t0 = cfg.t0;
    sc.t_max = cfg.T_probe;
    sc.data_radius = data.radius;
    validate_config(sc);

    const rvec k2 = wavenumber_sq(g);
    const auto mask = dealias_mask(g);
    const double rho_max = dealiased_rho_max(g);
    const Fft& fft = Fft::get(g.N);

    // layout: block b in [0, B): U_b at [2bn, (2b+1)n), V_b at [(2b+1)n, (2b+2)n)
    using V = std::vector<cplx>;
    V y0(2 * B * n, cplx(0));
    {
        Field2D a = data.u0.to_spectral(), b = data.u1.to_spectral();
        for (std::size_t i = 0; i < n; ++i) {
            y0[i] = mask[i] ? a.values[i] : cplx(0);
            y0[n + i] = mask[i] ? b.values[i] : cplx(0);
        }
    }

    std::vector<cvec> phys(B, cvec(n)), tmp(B, cvec(n));
    std::vector<rvec> u(B, rvec(n));  // u_0 .. u_{K-1} physical, summed
    cvec src(n), srcS(n);
    auto physical_blocks = [&](const V& y, int upto) {
        for (int b = 0; b < upto; ++b) {
            std::copy(y.begin() + 2 * b * n, y.begin() + (2 * b + 1) * n, tmp[b].begin());
            fft.inverse(tmp[b].data(), phys[b].data());
        }
    };
    auto rhs = [&](double t, const V& y, V& d) {
        physical_blocks(y, K);
        const double ta = std::pow(t, alpha), tm = std::pow(t, m);
        for (int b = 0; b < B; ++b) {
            // source of block b: t^a(|u_{b-1}|^p - |u_{b-2}|^p)
            if (b == 0) {
                std::fill(srcS.begin(), srcS.end(), cplx(0));
            } else {
                if (b == 1) {
                    parallel_for(n, [&](std::size_t i) {
                        u[0][i] = phys[0][i].real();
                        src[i] = ta * detail::abs_pow(u[0][i], p);
                    });
                } else {
                    parallel_for(n, [&](std::size_t i) {
                        double dlt = phys[b - 1][i].real();
                        u[b - 1][i] = u[b - 2][i] + dlt;
                        src[i] = ta * detail::power_difference(u[b - 2][i], dlt, p);
                    });
                }
                fft.forward(src.data(), srcS.data());
            }
            const std::size_t o = 2 * b * n;
            parallel_for(n, [&](std::size_t i) {
                d[o + i] = y[o + n + i];
                d[o + n + i] = mask[i] ? -tm * k2[i] * y[o + i] + srcS[i] : cplx(0);
            });
        }
    };

    DopriOptions opt;
    opt.rtol = cfg.rtol;
    double scale = 0;
    for (std::size_t i = 0; i < 2 * n; ++i) scale = std::max(scale, std::abs(y0[i]));
    opt.atol = scale > 0 ? 1e-6 * cfg.rtol * scale : 1e-300;
    opt.h_max = [&](double t) { return cfg.stability_factor / (std::pow(t, m / 2) * rho_max); };
    auto norm = [n](const V& y, const V& yn, const V& e, double rt, double at) {
        double r = 0;
        for (std::size_t b = 0; b < 4; ++b) {
            double se = 0, sy = 0;
            for (std::size_t i = b * n; i < (b + 1) * n; ++i) {
                se += std::norm(e[i]);
                sy += std::max(std::norm(y[i]), std::norm(yn[i]));
            }
            r = std::max(r, std::sqrt(se / n) / (at + rt * std::sqrt(sy / n)));
        }
        return r;
    };
    Dopri5<V, decltype(rhs)> ode(rhs, cfg.t0, y0, opt, norm);

    // acc[k][j], j < k: ||u_k - u_j||; acc[k][k]: the LqLnuL2 (or weighted) part of M_k
    std::vector<std::vector<TimeQuadrature>> acc(B, std::vector<TimeQuadrature>(B));
    std::vector<std::vector<double>> sups(B, std::vector<double>(B, 0.0));
    // MixedNorm extras per iterate: Z u_k mixed norms, and sup_t of t^theta ||Z^beta u_k||_{H^s}
    std::vector<std::vector<TimeQuadrature>> zacc(B, std::vector<TimeQuadrature>(3));
    std::vector<std::vector<double>> zsup(B, std::vector<double>(3, 0.0)), hs_sup(B, std::vector<double>(4, 0.0));
    std::unique_ptr<PolarResampler> polar;
    if (cfg.scheme == PicardScheme::MixedNorm) polar = std::make_unique<PolarResampler>(g, g.N / 2, 128);
    const double theta = alpha / (p + 1);
    const WeightSpec w{WeightKind::PhiMShifted, run.gamma, theta, m, 0};
    const VectorField zs[3] = {VectorField::D1, VectorField::D2, VectorField::Rotation};

    std::vector<rvec> full(B, rvec(n)), inc(B, rvec(n));
    rvec wt(n), diff(n);
    Field2D F(g);
    // slice quantity whose time integral is the q-th power of the norm (its sup for q = inf)
    auto slice = [&](const rvec& f, double t) -> double {
        if (cfg.scheme == PicardScheme::WeightedLq) {
            if (std::isinf(q)) return parallel_max(n, [&](std::size_t i) { return wt[i] * std::abs(f[i]); });
            return grid_integral(g, [&](std::size_t i) {
                double v = std::abs(f[i]);
                return v == 0 ? 0.0 : detail::abs_pow(wt[i] * v, q);
            });
        }
        for (std::size_t i = 0; i < n; ++i) F.values[i] = f[i];
        double v = std::pow(t, theta) * polar->radial_norm(polar->angular_l2(F), run.nu);
        return std::isinf(q) ? v : std::pow(v, q);
    };
    auto record = [&](TimeQuadrature& tq, double& sup, double t, double v) {
        if (std::isinf(q)) sup = std::max(sup, v);
        else tq.add(t, v);
    };
    auto sample = [&](double t, const V& y) {
        physical_blocks(y, B);
        for (int b = 0; b < B; ++b)
            for (std::size_t i = 0; i < n; ++i) inc[b][i] = phys[b][i].real();
        full[0] = inc[0];
        for (int b = 1; b < B; ++b)
            for (std::size_t i = 0; i < n; ++i) full[b][i] = full[b - 1][i] + inc[b][i];
        if (cfg.scheme == PicardScheme::WeightedLq) {
            auto wf = weight_at(w, t);
            parallel_for(n, [&](std::size_t i) { wt[i] = wf(r2_at(g, i)); });
        }
        for (int k = 0; k < B; ++k) {
            record(acc[k][k], sups[k][k], t, slice(full[k], t));
            // u_k - u_j = inc[j+1] + ... + inc[k], built for j = k-1 down to 0
            std::fill(diff.begin(), diff.end(), 0.0);
            for (int j = k - 1; j >= 0; --j) {
                for (std::size_t i = 0; i < n; ++i) diff[i] += inc[j + 1][i];
                record(acc[k][j], sups[k][j], t, slice(diff, t));
            }
        }
        if (cfg.scheme == PicardScheme::MixedNorm) {
            const double tw = std::pow(t, theta);
            for (int k = 0; k < B; ++k) {
                for (std::size_t i = 0; i < n; ++i) F.values[i] = full[k][i];
                Field2D S = F.to_spectral();
                hs_sup[k][0] = std::max(hs_sup[k][0], tw * sobolev_norm(S, run.s, true));
                for (int z = 0; z < 3; ++z) {
                    Field2D Z = vector_field_apply(S, zs[z]);
                    double v = tw * polar->radial_norm(polar->angular_l2(Z), run.nu);
                    record(zacc[k][z], zsup[k][z], t, std::isinf(q) ? v : std::pow(v, q));
                    hs_sup[k][z + 1] = std::max(hs_sup[k][z + 1], tw * sobolev_norm(Z, run.s, true));
                }
            }
        }
        ++run.samples;
    };

    long ns = std::lround(std::ceil((cfg.T_probe - cfg.t0) / cfg.sample_dt - 1e-9));
    sample(cfg.t0, ode.y());
    for (long s = 1; s <= ns; ++s) {
        double tt = s == ns ? cfg.T_probe : cfg.t0 + s * cfg.sample_dt;
        if (ode.advance(tt) != DopriStatus::Reached) {
            std::ostringstream os;
            os << "run_picard: step size collapsed at t = " << ode.t() << " (iterates 0.." << K << ")";
            throw StepCollapseError(os.str(), ode.t());
        }
        sample(tt, ode.y());
    }
    run.steps = ode.steps();
    run.rejects = ode.rejects();

    auto finish = [&](const TimeQuadrature& tq, double sup) {
        return std::isinf(q) ? sup : std::pow(tq.integral(), 1 / q);
    };
    run.D.assign(B, std::vector<double>(B, 0.0));
    for (int k = 0; k < B; ++k)
        for (int j = 0; j < k; ++j) run.D[k][j] = run.D[j][k] = finish(acc[k][j], sups[k][j]);
    run.M.resize(B);
    run.N.resize(B);
    run.N_tail.resize(B);
    for (int k = 0; k < B; ++k) {
        run.M[k] = finish(acc[k][k], sups[k][k]);
        if (cfg.scheme == PicardScheme::MixedNorm) {
            for (int z = 0; z < 3; ++z) run.M[k] += finish(zacc[k][z], zsup[k][z]);
            for (double h : hs_sup[k]) run.M[k] += h;
        }
        run.N[k] = k == 0 ? finish(acc[0][0], sups[0][0]) : run.D[k][k - 1];
        const auto& tq = k == 0 ? acc[0][0] : acc[k][k - 1];
        run.N_tail[k] = std::isinf(q) || tq.size() == 0 ? 0.0 : tq.tail_share(tq.size() - 1);
    }
    run.converged = true;
    for (int k = 0; k < K; ++k) {
        double r = run.N[k] == 0 ? (run.N[k + 1] == 0 ? 0.0 : kInf) : run.N[k + 1] / run.N[k];
        run.ratios.push_back(r);
        if (k >= 1 && !(r <= 0.5)) run.converged = false;
    }
    return run;
}

struct HolderCheck {
    double lhs = 0, rhs = 0;
    double C = 0;  // lhs / rhs, 0 when both vanish
    std::string warning;
};

// First and last lines of the Hoelder chain for iterates k, j:
//   || u_{k+1} - u_{j+1} ||  versus  (M_k + M_j)^{p-1} || u_k - u_j ||.
inline HolderCheck holder_step_check(const PicardRun& run, int k, int j) {
    if (k < 0 || j < 0 || k + 1 > run.K || j + 1 > run.K) throw DomainError("holder_step_check: iterate index out of range");
    HolderCheck h;
    h.lhs = run.D[k + 1][j + 1];
    h.rhs = std::pow(run.M[k] + run.M[j], run.p - 1) * run.D[k][j];
    h.C = h.rhs > 0 ? h.lhs / h.rhs : 0.0;
    if (run.scheme == PicardScheme::WeightedLq) {
        auto gr = gamma_delta_ranges(run.m, run.alpha, run.p);
        if (!(run.gamma > gr.gamma_lo && run.gamma < gr.gamma_hi)) h.warning = "gamma outside its admissible range";
    }
    return h;
}

// Empirical constants of consecutive steps (k, k-1), k = 1 .. K-1.
inline std::vector<double> holder_constants(const PicardRun& run) {
    std::vector<double> c;
    for (int k = 1; k < run.K; ++k) c.push_back(holder_step_check(run, k, k - 1).C);
    return c;
}

struct HolderFit {
    double C = 0;              // max over consecutive steps, so lhs <= C rhs along the run
    double C_min = 0;
    std::vector<double> per_step;
    bool stable = false;       // every per-step constant within 30% of their mean
};

inline HolderFit holder_fit(const PicardRun& run) {
    HolderFit f;
    f.per_step = holder_constants(run);
    if (f.per_step.empty()) return f;
    f.C = *std::max_element(f.per_step.begin(), f.per_step.end());
    f.C_min = *std::min_element(f.per_step.begin(), f.per_step.end());
    double mean = 0;
    for (double c : f.per_step) mean += c / f.per_step.size();
    f.stable = mean > 0 && f.C <= 1.3 * mean && f.C_min >= 0.7 * mean;
    return f;
}

// Smallest amplitude (to rel_tol) at which the iteration stops contracting,
// by bisection on [eps_lo, eps_hi]; the lower end must converge.
inline double picard_epsilon_threshold(const PicardConfig& cfg, DataSpec spec, double eps_lo, double eps_hi,
                                       double rel_tol = 0.05) {
    auto converges = [&](double eps) {
        spec.epsilon = eps;
        return run_picard(cfg, make_initial_data(cfg.grid, spec)).converged;
    };
    if (!(eps_lo > 0 && eps_hi > eps_lo)) throw DomainError("picard_epsilon_threshold: requires 0 < eps_lo < eps_hi");
    if (!converges(eps_lo)) throw DomainError("picard_epsilon_threshold: no contraction at eps_lo");
    if (converges(eps_hi)) return kInf;
    while (eps_hi / eps_lo - 1 > rel_tol) {
        double mid = std::sqrt(eps_lo * eps_hi);
        (converges(mid) ? eps_lo : eps_hi) = mid;
    }
    return eps_hi;
}

}  // namespace tricomi
