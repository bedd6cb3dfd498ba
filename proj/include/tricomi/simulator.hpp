#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "dopri.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "initial_data.hpp"
#include "parallel.hpp"
#include "trace.hpp"
#include "transforms.hpp"

namespace tricomi {

struct SimConfig {
    ModelParams params;
    Grid grid{128, 8};
    double t0 = 1;
    double t_max = 2;
    double rtol = 1e-8;
    double atol = 1e-12;
    double blowup_sup_threshold = 1e6;
    double blowup_step_floor = 1e-9;  // relative to max(1, t)
    int monitor_stride = 0;           // record every k-th accepted step when monitor_dt == 0
    double monitor_dt = 0.1;          // uniform recording interval
    bool keep_snapshots = false;
    double nonlinear_coeff = 1;       // 0 switches the nonlinearity off
    double data_radius = 1;           // support radius used by the containment check
    bool check_containment = true;
    double stability_factor = 2.5;    // step cap = factor / max frequency
    long max_steps = 5'000'000;
    std::function<Field2D(double)> source;  // optional extra forcing (physical)
};

// Largest L-independent radius reached by the support at t_max.
inline double support_radius_at(const SimConfig& c) {
    if (c.params.form == Form::Tricomi)
        return c.data_radius + phi_m(c.params.m, c.t_max) - phi_m(c.params.m, c.t0);
    return c.data_radius + (c.t_max - c.t0);
}

inline void validate_config(const SimConfig& c) {
    c.grid.validate();
    if (!(c.t0 > 0) || !(c.t_max > c.t0)) throw DomainError("SimConfig: requires 0 < t0 < t_max");
    if (!(c.params.p > 1)) throw DomainError("SimConfig: requires p > 1");
    if (c.params.form == Form::Tricomi && !(c.params.m >= 0))
        throw DomainError("SimConfig: requires m >= 0");
    if (c.params.form == Form::DampedWave && !(c.params.mu >= 0))
        throw DomainError("SimConfig: requires mu >= 0");
    if (!(c.rtol > 0) || !(c.atol > 0)) throw DomainError("SimConfig: tolerances must be positive");
    if (c.check_containment) {
        double need = support_radius_at(c) + 0.5;
        if (c.grid.L < need) {
            std::ostringstream os;
            os << "SimConfig: box half-width L = " << c.grid.L << " < " << need
               << " needed to contain the support up to t_max";
            throw DomainError(os.str());
        }
    }
}

namespace detail {

// Scalar monitors and optional snapshot from the spectral state.
struct Monitor {
    const Grid& g;
    const rvec& k2;
    ModelParams mp;
    double coeff = 1;

    ScalarRow scalars(double t, const Field2D& uS, const Field2D& vS, Snapshot* snap) const {
        Field2D u = uS.to_physical(), ut = vS.to_physical();
        Field2D ux = spectral_derivative(uS, 0).to_physical(), uy = spectral_derivative(uS, 1).to_physical();
        ScalarRow r;
        r.t = t;
        r.sup = parallel_max(u.size(), [&](std::size_t i) { return std::abs(u.values[i].real()); });
        r.l2 = std::sqrt(grid_integral(g, [&](std::size_t i) { return std::norm(u.values[i].real()); }));
        r.h1 = std::sqrt(grid_integral(g, [&](std::size_t i) {
            return std::norm(ux.values[i].real()) + std::norm(uy.values[i].real());
        }));
        double m = mp.form == Form::Tricomi ? mp.m : 0.0, a = mp.form == Form::Tricomi ? mp.alpha : 0.0;
        auto ch = conformal_charge_Q0(u, ut, t, m, a, mp.p, Potential{PotentialForm::Signed, coeff});
        r.lagrangian = ch.lagrangian;
        r.q0 = ch.q0;
        if (snap) {
            for (auto& v : u.values) v = v.real();
            for (auto& v : ut.values) v = v.real();
            *snap = Snapshot{t, std::move(u), std::move(ut)};
        }
        return r;
    }
};

// Block-relative RMS error: each half of the state is measured against its own size.
template <class V>
double block_error_norm(const V& y, const V& yn, const V& e, double rt, double at, std::size_t blocks) {
    const std::size_t n = y.size() / blocks;
    double r = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
        double se = 0, sy = 0;
        for (std::size_t i = b * n; i < (b + 1) * n; ++i) {
            se += std::norm(e[i]);
            sy += std::max(std::norm(y[i]), std::norm(yn[i]));
        }
        r = std::max(r, std::sqrt(se / n) / (at + rt * std::sqrt(sy / n)));
    }
    return r;
}

}  // namespace detail

// Method-of-lines pseudo-spectral solver in the spectral variables (U, V = U_t):
//   Tricomi:  V' = -t^m |xi|^2 U + P[c t^alpha |Re u|^p]
//   damped:   V' = -|xi|^2 U - (mu/t) V + P[c |Re u|^p]
// with P the 2/3 dealiasing projection.
inline SimTrace evolve(const SimConfig& cfg, const InitialData& data) {
    validate_config(cfg);
    const Grid& g = cfg.grid;
    if (!(data.u0.grid == g) || !(data.u1.grid == g)) throw ShapeError("evolve: data grid mismatch");
    const ModelParams mp = cfg.params;
    const bool tricomi = mp.form == Form::Tricomi;
    const std::size_t n = g.size();
    const rvec k2 = wavenumber_sq(g);
    const auto mask = dealias_mask(g);
    const double rho_max = dealiased_rho_max(g);

    using V = std::vector<cplx>;
    V y0(2 * n);
    {
        Field2D a = data.u0.to_spectral(), b = data.u1.to_spectral();
        for (std::size_t i = 0; i < n; ++i) {
            y0[i] = mask[i] ? a.values[i] : cplx(0);
            y0[n + i] = mask[i] ? b.values[i] : cplx(0);
        }
    }

    double last_sup = 0;
    Field2D work(g, Space::Spectral), phys(g), nl(g), nlS(g, Space::Spectral);
    const Fft& fft = Fft::get(g.N);
    auto rhs = [&](double t, const V& y, V& d) {
        std::copy(y.begin(), y.begin() + n, work.values.begin());
        fft.inverse(work.values.data(), phys.values.data());
        last_sup = parallel_max(n, [&](std::size_t i) { return std::abs(phys.values[i].real()); });
        const double coef = cfg.nonlinear_coeff * (tricomi ? std::pow(t, mp.alpha) : 1.0);
        const double p = mp.p;
        if (coef != 0) {
            parallel_for(n, [&](std::size_t i) { nl.values[i] = coef * std::pow(std::abs(phys.values[i].real()), p); });
            if (cfg.source) {
                Field2D s = cfg.source(t);
                for (std::size_t i = 0; i < n; ++i) nl.values[i] += s.values[i];
            }
            fft.forward(nl.values.data(), nlS.values.data());
        } else if (cfg.source) {
            Field2D s = cfg.source(t);
            fft.forward(s.values.data(), nlS.values.data());
        } else {
            std::fill(nlS.values.begin(), nlS.values.end(), cplx(0));
        }
        const double tm = tricomi ? std::pow(t, mp.m) : 1.0;
        const double damp = tricomi ? 0.0 : mp.mu / t;
        parallel_for(n, [&](std::size_t i) {
            d[i] = y[n + i];
            d[n + i] = mask[i] ? -tm * k2[i] * y[i] - damp * y[n + i] + nlS.values[i] : cplx(0);
        });
    };

    DopriOptions opt;
    opt.rtol = cfg.rtol;
    opt.atol = cfg.atol;
    opt.max_steps = cfg.max_steps;
    opt.h_max = [&](double t) {
        double w = (tricomi ? std::pow(t, mp.m / 2) : 1.0) * rho_max;
        return w > 0 ? cfg.stability_factor / w : 1e300;
    };
    auto norm = [](const V& y, const V& yn, const V& e, double rt, double at) {
        return detail::block_error_norm(y, yn, e, rt, at, 2);
    };
    Dopri5<V, decltype(rhs)> ode(rhs, cfg.t0, y0, opt, norm);

    SimTrace tr;
    tr.grid = g;
    tr.params = mp;
    detail::Monitor mon{g, k2, mp, cfg.nonlinear_coeff};
    Field2D uS(g, Space::Spectral), vS(g, Space::Spectral);
    auto record = [&](double t, const V& y) {
        std::copy(y.begin(), y.begin() + n, uS.values.begin());
        std::copy(y.begin() + n, y.end(), vS.values.begin());
        Snapshot snap;
        auto row = mon.scalars(t, uS, vS, cfg.keep_snapshots ? &snap : nullptr);
        tr.times.push_back(t);
        tr.scalars.push_back(row);
        if (cfg.keep_snapshots) tr.snapshots.push_back(std::move(snap));
    };
    record(cfg.t0, ode.y());

    std::deque<double> sups{last_sup};
    bool blowup = false, collapse = false;
    long accepted = 0;
    auto on_step = [&](double t, const V& y) {
        // the last stage was evaluated at the accepted state
        double s = last_sup;
        sups.push_back(s);
        if (sups.size() > 11) sups.pop_front();
        tr.sup_trend = (sups.back() - sups.front()) / std::max(sups.front(), 1e-300);
        ++accepted;
        if (!std::isfinite(s) || s > cfg.blowup_sup_threshold) {
            blowup = true;
            tr.t_event = t;
            return false;
        }
        if (ode.last_h() < cfg.blowup_step_floor * std::max(1.0, t)) {
            (tr.sup_trend > 0 ? blowup : collapse) = true;
            tr.t_event = t;
            return false;
        }
        if (cfg.monitor_dt <= 0 && cfg.monitor_stride > 0 && accepted % cfg.monitor_stride == 0) record(t, y);
        return true;
    };

    auto targets = [&] {
        std::vector<double> ts;
        if (cfg.monitor_dt > 0) {
            long k = std::lround(std::ceil((cfg.t_max - cfg.t0) / cfg.monitor_dt - 1e-9));
            for (long j = 1; j < k; ++j) ts.push_back(cfg.t0 + j * cfg.monitor_dt);
        }
        ts.push_back(cfg.t_max);
        return ts;
    }();

    try {
        for (double tt : targets) {
            auto st = ode.advance(tt, on_step);
            if (st == DopriStatus::Stopped) break;
            if (st == DopriStatus::StepCollapse) {
                (tr.sup_trend > 0 ? blowup : collapse) = true;
                tr.t_event = ode.t();
                break;
            }
            if (cfg.monitor_dt > 0 || tt == cfg.t_max) {
                if (tr.times.back() < ode.t()) record(ode.t(), ode.y());
            }
        }
    } catch (const StepCollapseError& e) {
        collapse = true;
        tr.t_event = e.t;
    }
    if (!blowup && !collapse && tr.times.back() < ode.t()) record(ode.t(), ode.y());
    tr.outcome = blowup ? Outcome::BlowupDetected : collapse ? Outcome::StepCollapse : Outcome::ReachedHorizon;
    if (tr.outcome == Outcome::ReachedHorizon) tr.t_event = ode.t();
    tr.steps = ode.steps();
    tr.rejects = ode.rejects();
    return tr;
}

inline SimTrace evolve_semilinear(SimConfig cfg, const InitialData& data) {
    if (cfg.params.form != Form::Tricomi) throw DomainError("evolve_semilinear: expects Tricomi-form parameters");
    return evolve(cfg, data);
}

inline SimTrace evolve_damped(double mu, double p, SimConfig cfg, const InitialData& data) {
    cfg.params = ModelParams::damped(mu, p);
    return evolve(cfg, data);
}

// Conformal charge bookkeeping along a Tricomi-form trace: drift of the
// integrated charge from its start value, and the balance
//   Q(t) - Q(t0) = c * int_{t0}^t int L   (trapezoid in t on the monitor times)
// with c = cc2_coefficient, normalised by the largest |RHS| on the window.
struct ChargeCheck {
    std::vector<double> t, q0, lhs, rhs;
    double c = 0;
    double drift = 0;          // max |Q(t) - Q(t0)| / |Q(t0)|
    double balance_error = 0;  // max |lhs - rhs| / max |rhs|; NaN when rhs vanishes identically
};

inline ChargeCheck charge_balance(const SimTrace& tr) {
    if (tr.params.form != Form::Tricomi) throw DomainError("charge_balance: expects a Tricomi-form trace");
    if (tr.scalars.size() < 2) throw DomainError("charge_balance: needs at least two monitor rows");
    ChargeCheck r;
    const auto& mp = tr.params;
    r.c = cc2_coefficient(mp.m, mp.alpha, mp.p);
    const double Q0 = tr.scalars.front().q0;
    double acc = 0, rmax = 0, emax = 0;
    for (std::size_t k = 0; k < tr.scalars.size(); ++k) {
        const auto& s = tr.scalars[k];
        if (k) {
            const auto& a = tr.scalars[k - 1];
            acc += 0.5 * (s.t - a.t) * (a.lagrangian + s.lagrangian);
        }
        r.t.push_back(s.t);
        r.q0.push_back(s.q0);
        r.lhs.push_back(s.q0 - Q0);
        r.rhs.push_back(r.c * acc);
        r.drift = std::max(r.drift, std::abs(s.q0 - Q0));
        rmax = std::max(rmax, std::abs(r.rhs.back()));
        emax = std::max(emax, std::abs(r.lhs.back() - r.rhs.back()));
    }
    r.drift = Q0 != 0 ? r.drift / std::abs(Q0) : std::numeric_limits<double>::quiet_NaN();
    r.balance_error = rmax > 0 ? emax / rmax : std::numeric_limits<double>::quiet_NaN();
    return r;
}

struct ScanCell {
    ModelParams params;
    double epsilon;
    Outcome outcome;
    double t_event;
};

// Outcome matrix, row-major over params_grid x epsilon_grid.
inline std::vector<ScanCell> blowup_scan(const std::vector<ModelParams>& params_grid,
                                         const std::vector<double>& epsilon_grid, const SimConfig& base,
                                         const DataSpec& data) {
    std::vector<ScanCell> out;
    for (const auto& mp : params_grid)
        for (double eps : epsilon_grid) {
            SimConfig c = base;
            c.params = mp;
            DataSpec d = data;
            d.epsilon = eps;
            c.data_radius = d.radius + std::hypot(d.cx, d.cy);
            auto tr = evolve(c, make_initial_data(c.grid, d));
            out.push_back({mp, eps, tr.outcome, tr.t_event});
        }
    return out;
}

}  // namespace tricomi
