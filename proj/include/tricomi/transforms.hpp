#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "errors.hpp"
#include "exponents.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "trace.hpp"

namespace tricomi {

inline double phi_m(double m, double t) {
    if (!(m >= 0) || !(t >= 0)) throw DomainError("phi_m: requires m >= 0, t >= 0");
    return 2.0 / (m + 2) * std::pow(t, (m + 2) / 2);
}

// inverse of phi_m in t
inline double phi_m_inverse(double m, double s) { return std::pow((m + 2) * s / 2, 2 / (m + 2)); }

inline double psi_mu(double mu, double t) {
    if (mu == 1.0) throw DomainError("psi_mu: mu = 1 is excluded");
    if (!(t > 0)) throw DomainError("psi_mu: requires t > 0");
    double d = std::abs(mu - 1);
    return d * std::pow(t, 1 / d);
}

enum class WeightKind {
    PsiMuLightCone,  // (1 + |psi_mu(t)^2 - |x|^2|)^gamma
    PhiMLightCone,   // (1 + |phi_m(t)^2 - |x|^2|)^gamma
    PhiMShifted,     // ((phi_m(t) + 2)^2 - |x|^2)^gamma
    PhiMCone,        // (phi_m(t)^2 - |x|^2)^gamma
    None
};

struct WeightSpec {
    WeightKind kind = WeightKind::None;
    double gamma = 0;
    double theta = 0;  // time factor t^theta
    double m = 0;      // for the phi_m kinds
    double mu = 0;     // for PsiMuLightCone

    // base of the light-cone factor; may be <= 0 off the support cone
    double base(double t, double r2) const {
        switch (kind) {
            case WeightKind::PsiMuLightCone: {
                double s = psi_mu(mu, t);
                return 1 + std::abs(s * s - r2);
            }
            case WeightKind::PhiMLightCone: {
                double s = phi_m(m, t);
                return 1 + std::abs(s * s - r2);
            }
            case WeightKind::PhiMShifted: {
                double s = phi_m(m, t) + 2;
                return s * s - r2;
            }
            case WeightKind::PhiMCone: {
                double s = phi_m(m, t);
                return s * s - r2;
            }
            case WeightKind::None: return 1;
        }
        return 1;
    }

    // weight including the time factor; zero where the base is not positive
    double value(double t, double r2) const {
        double tf = theta == 0 ? 1.0 : std::pow(t, theta);
        if (kind == WeightKind::None || gamma == 0) return tf;
        double b = base(t, r2);
        return b > 0 ? tf * std::pow(b, gamma) : 0.0;
    }
};

enum class MapDirection { DampedToTricomi, TricomiToDamped };

struct TransformMap {
    MapDirection direction = MapDirection::DampedToTricomi;
    double mu = 0, m = 0, alpha = 0, p = 0;
    double amplitude_power = 0;  // u_tricomi(tau) = t^amplitude_power * u_damped(t), t = phi_m(tau)
    double forcing_power = 0;    // leftover t-power in the damped nonlinearity for generic alpha
    const char* time_map = "t = phi_m(tau)";
};

inline TransformMap damped_to_tricomi(double mu, double p) {
    if (mu == 1.0 || !(mu > 0 && mu < 2)) throw DomainError("damped_to_tricomi: requires mu in (0,1) or (1,2)");
    if (!(p > 1)) throw DomainError("damped_to_tricomi: requires p > 1");
    TransformMap t;
    t.direction = MapDirection::DampedToTricomi;
    t.mu = mu;
    t.p = p;
    if (mu < 1) {
        t.m = t.alpha = 2 * mu / (1 - mu);
        t.amplitude_power = 0;
    } else {
        t.m = 2 * (2 - mu) / (mu - 1);
        t.alpha = 1 + t.m - p;
        t.amplitude_power = mu - 1;
    }
    return t;
}

inline TransformMap tricomi_to_damped(double m, double alpha, double p) {
    if (!(m > 0)) throw DomainError("tricomi_to_damped: requires m > 0");
    TransformMap t;
    t.direction = MapDirection::TricomiToDamped;
    t.m = m;
    t.alpha = alpha;
    t.p = p;
    const double tol = 1e-12 * (1 + std::abs(m));
    if (std::abs(alpha - (1 + m - p)) <= tol) {
        t.mu = (m + 4) / (m + 2);
        t.amplitude_power = t.mu - 1;
    } else {
        t.mu = m / (m + 2);
        t.amplitude_power = 0;
        t.forcing_power = 2 * (alpha - m) / (m + 2);
    }
    return t;
}

inline double theta_exponent(double mu, double p) {
    if (mu == 1.0 || !(mu > 0 && mu < 2)) throw DomainError("theta_exponent: requires mu in (0,1) or (1,2)");
    if (mu < 1) return 2 * mu / ((1 - mu) * (p + 1));
    return (3 - mu - p * (mu - 1)) / ((mu - 1) * (p + 1));
}

// coefficient c in d/dt int Q0 = c int L
inline double cc2_coefficient(double m, double alpha, double p) { return 2 * (alpha + 2) / (p - 1) - m - 1; }

struct FieldDerivatives {
    Field2D u, ut, ux, uy;  // physical
};

inline FieldDerivatives derivatives_of(const Field2D& u, const Field2D& ut) {
    if (!(u.grid == ut.grid)) throw ShapeError("derivatives_of: grid mismatch");
    FieldDerivatives d;
    d.u = u.to_physical();
    d.ut = ut.to_physical();
    Field2D s = u.to_spectral();
    d.ux = spectral_derivative(s, 0).to_physical();
    d.uy = spectral_derivative(s, 1).to_physical();
    return d;
}

// Nonlinear part of L is -c t^alpha V(u). Even, V = |u|^{p+1}/(p+1), has the
// Euler-Lagrange source -c t^alpha |u|^{p-1} u; Signed, V = -u |u|^p/(p+1), has
// +c t^alpha |u|^p, the right-hand side the simulator integrates.
enum class PotentialForm { Even, Signed };

struct Potential {
    PotentialForm form = PotentialForm::Even;
    double coeff = 1;
};

// Pointwise Lagrangian density; the field's real part is used.
inline rvec lagrangian_density(const Field2D& u, const Field2D& ut, const Field2D& ux, const Field2D& uy,
                               double t, double m, double alpha, double p, Potential pot = {}) {
    for (const Field2D* f : {&ut, &ux, &uy})
        if (!(f->grid == u.grid) || f->size() != u.size()) throw ShapeError("lagrangian_density: shape mismatch");
    rvec L(u.size());
    double tm = std::pow(t, m), ta = pot.coeff * std::pow(t, alpha);
    const bool even = pot.form == PotentialForm::Even;
    parallel_for(u.size(), [&](std::size_t i) {
        double v = u.values[i].real(), vt = ut.values[i].real();
        double gx = ux.values[i].real(), gy = uy.values[i].real();
        double V = even ? std::pow(std::abs(v), p + 1) : -v * std::pow(std::abs(v), p);
        L[i] = 0.5 * vt * vt - 0.5 * tm * (gx * gx + gy * gy) - ta * V / (p + 1);
    });
    return L;
}

struct ChargeReport {
    double q0 = 0;          // integral of Q0
    double lagrangian = 0;  // integral of L
    bool support_warning = false;
};

// Fraction of |u|+|u_t| mass in the outer two-cell frame.
inline double boundary_mass_fraction(const Field2D& u, const Field2D& ut) {
    const Grid& g = u.grid;
    double tot = 0, edge = 0;
    for (int iy = 0; iy < g.N; ++iy)
        for (int ix = 0; ix < g.N; ++ix) {
            double v = std::abs(u(ix, iy)) + std::abs(ut(ix, iy));
            tot += v;
            bool near = ix < 2 || iy < 2 || ix >= g.N - 2 || iy >= g.N - 2;
            if (near) edge += v;
        }
    return tot > 0 ? edge / tot : 0.0;
}

inline ChargeReport conformal_charge_Q0(const Field2D& u_in, const Field2D& ut_in, double t, double m,
                                        double alpha, double p, Potential pot = {}) {
    auto d = derivatives_of(u_in, ut_in);
    const Grid& g = d.u.grid;
    rvec L = lagrangian_density(d.u, d.ut, d.ux, d.uy, t, m, alpha, p, pot);
    const double k = (alpha + 2) / (p - 1), s = (m + 2) / 2;
    const int N = g.N;
    ChargeReport r;
    r.q0 = grid_integral(g, [&](std::size_t i) {
        double x = g.x(int(i % N)), y = g.x(int(i / N));
        double v = d.u.values[i].real(), vt = d.ut.values[i].real();
        double xg = x * d.ux.values[i].real() + y * d.uy.values[i].real();
        return vt * (k * v + t * vt + s * xg) - t * L[i];
    });
    r.lagrangian = grid_integral(g, [&](std::size_t i) { return L[i]; });
    r.support_warning = boundary_mass_fraction(d.u, d.ut) > 1e-10;
    return r;
}

// u_lambda(t, x) = lambda^k u(lambda t, lambda^{(m+2)/2} x), k = (alpha+2)/(p-1).
// On a grid this is a relabelling: same samples, box shrunk by lambda^{(m+2)/2}.
inline SimTrace scaling_transform(const SimTrace& tr, double lambda, double m, double alpha, double p) {
    if (!(lambda > 0)) throw RangeError("scaling_transform: lambda must be positive");
    SimTrace out = tr;
    double k = (alpha + 2) / (p - 1);
    double sx = std::pow(lambda, (m + 2) / 2);
    out.grid.L = tr.grid.L / sx;
    double au = std::pow(lambda, k), aut = std::pow(lambda, k + 1);
    for (auto& t : out.times) t /= lambda;
    for (auto& sn : out.snapshots) {
        sn.t /= lambda;
        sn.u.grid = out.grid;
        sn.ut.grid = out.grid;
        for (auto& v : sn.u.values) v *= au;
        for (auto& v : sn.ut.values) v *= aut;
    }
    for (auto& row : out.scalars) row = ScalarRow{row.t / lambda, 0, 0, 0, 0, 0};
    out.t_event /= lambda;
    return out;
}

// Fritsch-Carlson monotone cubic on (xs, ys), evaluated at x.
inline double pchip_eval(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    std::size_t n = xs.size();
    if (n == 1) return ys[0];
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = it == xs.begin() ? 0 : std::size_t(it - xs.begin()) - 1;
    if (i >= n - 1) i = n - 2;
    auto slope = [&](std::size_t j) { return (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]); };
    auto dnode = [&](std::size_t j) -> double {
        if (j == 0) return slope(0);
        if (j == n - 1) return slope(n - 2);
        double a = slope(j - 1), b = slope(j);
        if (a * b <= 0) return 0.0;
        double h0 = xs[j] - xs[j - 1], h1 = xs[j + 1] - xs[j];
        double w1 = 2 * h1 + h0, w2 = h1 + 2 * h0;
        return (w1 + w2) / (w1 / a + w2 / b);
    };
    double h = xs[i + 1] - xs[i], s = (x - xs[i]) / h;
    double d0 = dnode(i), d1 = dnode(i + 1);
    double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    return h00 * ys[i] + h10 * h * d0 + h01 * ys[i + 1] + h11 * h * d1;
}

// Resample snapshots at new times, pointwise monotone cubic in t.
inline SimTrace resample_trace(const SimTrace& tr, const std::vector<double>& times) {
    if (tr.snapshots.size() != tr.times.size() || tr.times.empty())
        throw RangeError("resample_trace: trace carries no snapshots");
    for (double t : times)
        if (t < tr.times.front() - 1e-12 * std::abs(t) || t > tr.times.back() + 1e-12 * std::abs(t))
            throw RangeError("resample_trace: target time outside trace range");
    SimTrace out;
    out.grid = tr.grid;
    out.params = tr.params;
    out.outcome = tr.outcome;
    out.t_event = tr.t_event;
    out.times = times;
    std::size_t nt = tr.times.size(), np = tr.grid.size();
    for (double t : times) {
        Snapshot s{t, Field2D(tr.grid), Field2D(tr.grid)};
        parallel_for(np, [&](std::size_t i) {
            std::vector<double> a(nt), b(nt);
            for (std::size_t k = 0; k < nt; ++k) {
                a[k] = tr.snapshots[k].u.values[i].real();
                b[k] = tr.snapshots[k].ut.values[i].real();
            }
            s.u.values[i] = pchip_eval(tr.times, a, t);
            s.ut.values[i] = pchip_eval(tr.times, b, t);
        });
        out.snapshots.push_back(std::move(s));
        out.scalars.push_back(ScalarRow{t, 0, 0, 0, 0, 0});
    }
    return out;
}

// Map a trace between the damped and Tricomi forms at the mapped times
// (no interpolation). Identity when the trace is already in the target form.
inline SimTrace field_time_change(const SimTrace& tr, const TransformMap& map) {
    Form target = map.direction == MapDirection::DampedToTricomi ? Form::Tricomi : Form::DampedWave;
    if (tr.params.form == target) return tr;
    const double m = map.m, a = map.amplitude_power;
    SimTrace out = tr;
    out.scalars.clear();
    out.params = target == Form::Tricomi ? ModelParams::tricomi(map.m, map.alpha, map.p)
                                         : ModelParams::damped(map.mu, map.p);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        double src = tr.times[k];
        double tau, t;
        if (target == Form::Tricomi) {
            t = src;
            tau = phi_m_inverse(m, t);
            out.times[k] = tau;
        } else {
            tau = src;
            t = phi_m(m, tau);
            out.times[k] = t;
        }
        double dphi = std::pow(tau, m / 2);  // d t / d tau
        double ta = std::pow(t, a);
        if (k < tr.snapshots.size()) {
            auto& sn = out.snapshots[k];
            const auto& in = tr.snapshots[k];
            sn.t = out.times[k];
            for (std::size_t i = 0; i < in.u.size(); ++i) {
                double u = in.u.values[i].real(), ut = in.ut.values[i].real();
                if (target == Form::Tricomi) {
                    // u_tri = t^a u_d; d/dtau = dphi * d/dt
                    sn.u.values[i] = ta * u;
                    sn.ut.values[i] = dphi * (a * ta / t * u + ta * ut);
                } else {
                    double ud = u / ta;
                    sn.u.values[i] = ud;
                    sn.ut.values[i] = ut / (dphi * ta) - a / t * ud;
                }
            }
        }
        out.scalars.push_back(ScalarRow{out.times[k], 0, 0, 0, 0, 0});
    }
    out.t_event = target == Form::Tricomi ? phi_m_inverse(m, tr.t_event) : phi_m(m, tr.t_event);
    return out;
}

}  // namespace tricomi
