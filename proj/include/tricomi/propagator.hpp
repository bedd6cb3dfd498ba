#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "dopri.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "kummer.hpp"
#include "parallel.hpp"
#include "transforms.hpp"

namespace tricomi {

// Per-frequency reduction of the linear operator: y'' + t^m rho^2 y = g(t).
struct ModeState {
    double rho = 0;
    double t = 0;
    cplx y = 0;
    cplx dy_dt = 0;
    long steps = 0;
};

inline double mode_frequency(double m, double rho, double t) { return std::pow(t, m / 2) * rho; }

inline ModeState mode_ode_solve(double m, double rho, double t0, double t1, cplx y0, cplx dy0,
                                const std::function<cplx(double)>& forcing = {}) {
    if (!(t0 >= 0) || !(t1 >= t0)) throw DomainError("mode_ode_solve: requires 0 <= t0 <= t1");
    if (!(rho >= 0) || !std::isfinite(rho)) throw DomainError("mode_ode_solve: rho must be finite and >= 0");
    ModeState r{rho, t1, y0, dy0, 0};
    if (rho == 0 && !forcing) {
        r.y = y0 + dy0 * (t1 - t0);
        return r;
    }
    using V = std::vector<cplx>;
    auto rhs = [&](double t, const V& y, V& d) {
        d[0] = y[1];
        d[1] = -std::pow(t, m) * rho * rho * y[0] + (forcing ? forcing(t) : cplx(0));
    };
    DopriOptions opt;
    opt.rtol = 1e-10;
    opt.atol = 1e-13;
    opt.h_max = [&](double t) {
        double w = mode_frequency(m, rho, std::max(t, 1e-300));
        return w > 0 ? 1.0 / (8 * w) : 1e300;
    };
    Dopri5<V, decltype(rhs)> ode(rhs, t0, V{y0, dy0}, opt);
    if (ode.advance(t1) != DopriStatus::Reached) throw StepCollapseError("mode_ode_solve: step size collapse", ode.t());
    r.y = ode.y()[0];
    r.dy_dt = ode.y()[1];
    r.steps = ode.steps();
    return r;
}

struct SymbolValues {
    cplx V1, V2, dV1, dV2;
};

// V1 = e^{-z/2} Phi(a, 2a; z), V2 = t e^{-z/2} Phi(a2, 2a2; z), z = 2 i phi_m(t) rho,
// a = m/(2(m+2)), a2 = (m+4)/(2(m+2)); derivatives in t.
inline SymbolValues symbol_V(double m, double t, double rho) {
    if (!(m > 0)) throw DomainError("symbol_V: requires m > 0");
    if (!(t >= 0) || !(rho >= 0)) throw DomainError("symbol_V: requires t >= 0, rho >= 0");
    double ph = phi_m(m, t);
    if (ph * rho > 30 * (1 + 1e-12)) throw RegimeError("symbol_V: phi_m(t) rho > 30 is outside the series regime");
    const cplx z(0, 2 * ph * rho);
    const cplx dz(0, 2 * rho * std::pow(t, m / 2));
    const cplx ez = std::exp(-z / 2.0);
    double a1 = m / (2 * (m + 2)), c1 = 2 * a1;
    double a2 = (m + 4) / (2 * (m + 2)), c2 = 2 * a2;
    cplx f1 = kummer_phi(a1, c1, z), g1 = kummer_phi(a1 + 1, c1 + 1, z);
    cplx f2 = kummer_phi(a2, c2, z), g2 = kummer_phi(a2 + 1, c2 + 1, z);
    SymbolValues s;
    s.V1 = ez * f1;
    s.dV1 = ez * (-0.5 * f1 + (a1 / c1) * g1) * dz;
    s.V2 = t * ez * f2;
    s.dV2 = ez * f2 + t * ez * (-0.5 * f2 + (a2 / c2) * g2) * dz;
    return s;
}

// Fundamental system of Y'' + s^m Y = 0 normalized at s = 0. Mode rho is the
// same equation in s = kappa t, kappa = rho^{2/(m+2)}, so one solve serves
// every frequency. Values between nodes use quintic Hermite interpolation with
// Y'' = -s^m Y.
class ScaledModeBasis {
public:
    struct Value {
        double ya, dya, yb, dyb;
    };

    ScaledModeBasis(double m, double s_max) : m_(m), s_max_(s_max) {
        if (!(m >= 0)) throw DomainError("ScaledModeBasis: requires m >= 0");
        if (!(s_max > 0)) throw DomainError("ScaledModeBasis: requires s_max > 0");
        using V = std::vector<double>;
        auto rhs = [m](double s, const V& y, V& d) {
            double w = s > 0 ? std::pow(s, m) : (m == 0 ? 1.0 : 0.0);
            d[0] = y[1];
            d[1] = -w * y[0];
            d[2] = y[3];
            d[3] = -w * y[2];
        };
        DopriOptions opt;
        opt.rtol = 1e-13;
        opt.atol = 1e-15;
        opt.h_max = [m](double s) { return 0.05 / std::max(1.0, std::pow(s, m / 2)); };
        Dopri5<V, decltype(rhs)> ode(rhs, 0.0, V{1, 0, 0, 1}, opt);
        push(0.0, ode.y());
        auto st = ode.advance(s_max * (1 + 1e-12), [&](double s, const V& y) {
            push(s, y);
            return true;
        });
        if (st != DopriStatus::Reached) throw StepCollapseError("ScaledModeBasis: step size collapse", ode.t());
    }

    double m() const { return m_; }
    double s_max() const { return s_max_; }
    std::size_t nodes() const { return s_.size(); }

    Value operator()(double s) const {
        if (s < 0 || s > s_.back()) throw RangeError("ScaledModeBasis: s outside the tabulated range");
        std::size_t i = std::size_t(std::upper_bound(s_.begin(), s_.end(), s) - s_.begin());
        i = i == 0 ? 0 : i - 1;
        if (i + 1 >= s_.size()) i = s_.size() - 2;
        Value v;
        hermite(i, s, 0, v.ya, v.dya);
        hermite(i, s, 2, v.yb, v.dyb);
        return v;
    }

private:
    void push(double s, const std::vector<double>& y) {
        s_.push_back(s);
        for (int k = 0; k < 4; ++k) y_[k].push_back(y[k]);
    }

    double w(double s) const { return s > 0 ? std::pow(s, m_) : (m_ == 0 ? 1.0 : 0.0); }

    // third derivative Y''' = -(m s^{m-1} Y + s^m Y'); infinite at s = 0 when m < 1
    bool third(double s, double y, double dy, double& out) const {
        if (s == 0) {
            if (m_ == 0) { out = -dy; return true; }
            if (m_ == 1) { out = -y; return true; }
            if (m_ > 1) { out = 0; return true; }
            return false;
        }
        out = -(m_ * std::pow(s, m_ - 1) * y + std::pow(s, m_) * dy);
        return true;
    }

    static void quintic(double h, double f0, double d0, double e0, double f1, double d1, double e1, double x,
                        double& val, double& der) {
        // Hermite basis on [0, 1] with values, slopes and curvatures at both ends
        double t = x, t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
        double H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5, H1 = t - 6 * t3 + 8 * t4 - 3 * t5;
        double H2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5), H5 = 10 * t3 - 15 * t4 + 6 * t5;
        double H4 = -4 * t3 + 7 * t4 - 3 * t5, H3 = 0.5 * (t3 - 2 * t4 + t5);
        double dH0 = -30 * t2 + 60 * t3 - 30 * t4, dH1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
        double dH2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4), dH5 = 30 * t2 - 60 * t3 + 30 * t4;
        double dH4 = -12 * t2 + 28 * t3 - 15 * t4, dH3 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
        val = H0 * f0 + h * H1 * d0 + h * h * H2 * e0 + H5 * f1 + h * H4 * d1 + h * h * H3 * e1;
        der = (dH0 * f0 + h * dH1 * d0 + h * h * dH2 * e0 + dH5 * f1 + h * dH4 * d1 + h * h * dH3 * e1) / h;
    }

    void hermite(std::size_t i, double s, int k, double& val, double& der) const {
        double s0 = s_[i], s1 = s_[i + 1], h = s1 - s0, x = (s - s0) / h;
        double y0 = y_[k][i], y1 = y_[k][i + 1], d0 = y_[k + 1][i], d1 = y_[k + 1][i + 1];
        double v, dv;
        quintic(h, y0, d0, -w(s0) * y0, y1, d1, -w(s1) * y1, x, v, dv);
        val = v;
        double t0, t1;
        if (third(s0, y0, d0, t0) && third(s1, y1, d1, t1)) {
            double dd, unused;
            quintic(h, d0, -w(s0) * y0, t0, d1, -w(s1) * y1, t1, x, dd, unused);
            der = dd;
        } else {
            der = dv;
        }
    }

    double m_, s_max_;
    std::vector<double> s_;
    std::vector<double> y_[4];
};

// Values of the fundamental system normalized at t0: y1(t0)=1, y1'(t0)=0,
// y2(t0)=0, y2'(t0)=1.
struct ModeFundamental {
    double y1, dy1, y2, dy2;
};

inline double mode_kappa(double m, double rho) { return std::pow(rho, 2 / (m + 2)); }

inline ModeFundamental mode_fundamental(const ScaledModeBasis& B, double rho, double t0, double t) {
    if (rho == 0) return {1, 0, t - t0, 1};
    double k = mode_kappa(B.m(), rho);
    auto a = B(k * t0), b = B(k * t);
    // [y; y'](t) = M(t) c with M = [[Ya, Yb], [k Ya', k Yb']], det M = k
    double c1a = a.dyb, c1b = -a.dya;
    double c2a = -a.yb / k, c2b = a.ya / k;
    return {c1a * b.ya + c1b * b.yb, k * (c1a * b.dya + c1b * b.dyb), c2a * b.ya + c2b * b.yb,
            k * (c2a * b.dya + c2b * b.dyb)};
}

// Distinct integer |n|^2 of a grid with the slot -> index map.
struct ModeIndex {
    std::vector<long> n2;          // distinct values, ascending
    std::vector<std::uint32_t> slot;  // grid slot -> position in n2

    explicit ModeIndex(const Grid& g) {
        auto k2 = integer_wavenumber_sq(g);
        n2 = std::vector<long>(k2.begin(), k2.end());
        std::sort(n2.begin(), n2.end());
        n2.erase(std::unique(n2.begin(), n2.end()), n2.end());
        slot.resize(k2.size());
        for (std::size_t i = 0; i < k2.size(); ++i)
            slot[i] = std::uint32_t(std::lower_bound(n2.begin(), n2.end(), k2[i]) - n2.begin());
    }
    std::size_t size() const { return n2.size(); }
};

// Homogeneous evolution from data at t0 for every grid frequency.
class LinearPropagator {
public:
    LinearPropagator(const Grid& g, double m, double t0, double t_max)
        : grid_(g), m_(m), t0_(t0), index_(g) {
        g.validate();
        if (!(t0 > 0) && m < 0) throw DomainError("LinearPropagator: requires t0 > 0");
        if (!(t_max >= t0)) throw DomainError("LinearPropagator: requires t_max >= t0");
        double rho_max = g.dk() * std::sqrt(double(index_.n2.back()));
        basis_ = std::make_shared<ScaledModeBasis>(m, std::max(1e-3, mode_kappa(m, rho_max) * t_max * 1.001));
    }

    const Grid& grid() const { return grid_; }
    double t0() const { return t0_; }
    const ModeIndex& index() const { return index_; }
    const ScaledModeBasis& basis() const { return *basis_; }

    std::vector<ModeFundamental> table(double t) const {
        std::vector<ModeFundamental> r(index_.size());
        const double dk = grid_.dk();
        parallel_for(r.size(), [&](std::size_t j) {
            r[j] = mode_fundamental(*basis_, dk * std::sqrt(double(index_.n2[j])), t0_, t);
        });
        return r;
    }

    // spectral (u, u_t) at t from spectral data
    std::pair<Field2D, Field2D> evolve_spectral(const Field2D& U0, const Field2D& U1, double t) const {
        auto tab = table(t);
        Field2D u(grid_, Space::Spectral), ut(grid_, Space::Spectral);
        parallel_for(grid_.size(), [&](std::size_t i) {
            const auto& f = tab[index_.slot[i]];
            u.values[i] = f.y1 * U0.values[i] + f.y2 * U1.values[i];
            ut.values[i] = f.dy1 * U0.values[i] + f.dy2 * U1.values[i];
        });
        return {std::move(u), std::move(ut)};
    }

private:
    Grid grid_;
    double m_, t0_;
    ModeIndex index_;
    std::shared_ptr<ScaledModeBasis> basis_;
};

struct LinearResult {
    Field2D u, ut;  // physical
    double energy = 0;  // 1/2 int u_t^2 + 1/2 t^m int |grad u|^2
    bool support_warning = false;
};

inline double linear_energy(const Field2D& uS, const Field2D& utS, double m, double t) {
    const Grid& g = uS.grid;
    auto k2 = wavenumber_sq(g);
    double scale = g.cell_area() / double(g.size());  // Parseval on the periodic grid
    double tm = std::pow(t, m);
    double e = parallel_sum<double>(g.size(), [&](std::size_t i) {
        return std::norm(utS.values[i]) + tm * k2[i] * std::norm(uS.values[i]);
    });
    return 0.5 * scale * e;
}

inline LinearResult linear_evolve(const Field2D& u0, const Field2D& u1, double m, double t0, double t1) {
    if (!(u0.grid == u1.grid)) throw ShapeError("linear_evolve: grid mismatch");
    LinearPropagator P(u0.grid, m, t0, t1);
    auto [uS, utS] = P.evolve_spectral(u0.to_spectral(), u1.to_spectral(), t1);
    LinearResult r;
    r.energy = linear_energy(uS, utS, m, t1);
    r.u = uS.to_physical();
    r.ut = utS.to_physical();
    r.support_warning = boundary_mass_fraction(r.u, r.ut) > 1e-10;
    return r;
}

// Forced problem w'' - t^m Lap w = F(t, x), zero data at t0, by the method of
// lines on all grid frequencies. F is evaluated at the integrator's stage times.
inline LinearResult duhamel_evolve(const std::function<Field2D(double)>& F, const Grid& g, double m, double t0,
                                   double t1, double rtol = 1e-10) {
    g.validate();
    using V = std::vector<cplx>;
    const std::size_t n = g.size();
    auto k2 = wavenumber_sq(g);
    double k2max = *std::max_element(k2.begin(), k2.end());
    auto rhs = [&](double t, const V& y, V& d) {
        Field2D f = F(t).to_spectral();
        if (!(f.grid == g)) throw ShapeError("duhamel_evolve: source grid mismatch");
        double tm = std::pow(t, m);
        parallel_for(n, [&](std::size_t i) {
            d[i] = y[n + i];
            d[n + i] = -tm * k2[i] * y[i] + f.values[i];
        });
    };
    DopriOptions opt;
    opt.rtol = rtol;
    opt.atol = 1e-14;
    opt.h_max = [&](double t) {
        double w = std::pow(t, m / 2) * std::sqrt(k2max);
        return w > 0 ? 1.0 / (8 * w) : 1e300;
    };
    auto norm = [n](const V& y, const V& yn, const V& e, double rt, double at) {
        // block-relative RMS so the quiet high modes do not drive the step
        double r = 0;
        for (int b = 0; b < 2; ++b) {
            double se = 0, sy = 0;
            for (std::size_t i = b * n; i < (b + 1) * n; ++i) {
                se += std::norm(e[i]);
                sy += std::max(std::norm(y[i]), std::norm(yn[i]));
            }
            r = std::max(r, std::sqrt(se / n) / (at + rt * std::sqrt(sy / n)));
        }
        return r;
    };
    Dopri5<V, decltype(rhs)> ode(rhs, t0, V(2 * n, cplx(0)), opt, norm);
    if (ode.advance(t1) != DopriStatus::Reached) throw StepCollapseError("duhamel_evolve: step size collapse", ode.t());
    Field2D wS(g, Space::Spectral), vS(g, Space::Spectral);
    std::copy(ode.y().begin(), ode.y().begin() + n, wS.values.begin());
    std::copy(ode.y().begin() + n, ode.y().end(), vS.values.begin());
    LinearResult r;
    r.energy = linear_energy(wS, vS, m, t1);
    r.u = wS.to_physical();
    r.ut = vS.to_physical();
    r.support_warning = boundary_mass_fraction(r.u, r.ut) > 1e-10;
    return r;
}

// Per-frequency response g'' + t^m rho^2 g = b(t), g(ta) = g'(ta) = 0, for a
// time profile b supported in [ta, tb]. A separable source b(t) f(x) then has
// the solution w^(t, xi) = g(t, |xi|) f^(xi). Past tb the response continues
// through the homogeneous basis.
class SeparableResponse {
public:
    SeparableResponse(const LinearPropagator& P, std::function<double(double)> b, double ta, double tb,
                      std::vector<double> times, double rtol = 1e-10)
        : index_(P.index()), times_(std::move(times)) {
        if (!(tb > ta)) throw DomainError("SeparableResponse: requires tb > ta");
        if (!std::is_sorted(times_.begin(), times_.end())) throw DomainError("SeparableResponse: times must be sorted");
        const Grid& g = P.grid();
        const double m = P.basis().m();
        const std::size_t n = index_.size();
        std::vector<double> rho(n);
        for (std::size_t j = 0; j < n; ++j) rho[j] = g.dk() * std::sqrt(double(index_.n2[j]));
        using V = std::vector<double>;
        auto rhs = [&](double t, const V& y, V& d) {
            double tm = std::pow(t, m), bt = b(t);
            for (std::size_t j = 0; j < n; ++j) {
                d[j] = y[n + j];
                d[n + j] = -tm * rho[j] * rho[j] * y[j] + bt;
            }
        };
        DopriOptions opt;
        opt.rtol = rtol;
        opt.atol = 1e-16;
        opt.h_max = [&](double t) {
            double w = std::pow(t, m / 2) * rho.back();
            return w > 0 ? 1.0 / (8 * w) : 1e300;
        };
        auto norm = [n](const V& y, const V& yn, const V& e, double rt, double at) {
            double se = 0, sy = 0;
            for (std::size_t i = 0; i < 2 * n; ++i) {
                se += e[i] * e[i];
                sy += std::max(y[i] * y[i], yn[i] * yn[i]);
            }
            return std::sqrt(se / (2 * n)) / (at + rt * std::sqrt(sy / (2 * n)));
        };
        Dopri5<V, decltype(rhs)> ode(rhs, ta, V(2 * n, 0.0), opt, norm);
        g_.resize(times_.size());
        dg_.resize(times_.size());
        std::size_t k = 0;
        for (; k < times_.size() && times_[k] <= ta; ++k) {
            g_[k].assign(n, 0.0);
            dg_[k].assign(n, 0.0);
        }
        for (; k < times_.size() && times_[k] <= tb; ++k) {
            if (ode.advance(times_[k]) != DopriStatus::Reached)
                throw StepCollapseError("SeparableResponse: step size collapse", ode.t());
            g_[k].assign(ode.y().begin(), ode.y().begin() + n);
            dg_[k].assign(ode.y().begin() + n, ode.y().end());
        }
        if (ode.advance(tb) != DopriStatus::Reached) throw StepCollapseError("SeparableResponse: step size collapse", ode.t());
        std::vector<double> gb(ode.y().begin(), ode.y().begin() + n), dgb(ode.y().begin() + n, ode.y().end());
        for (; k < times_.size(); ++k) {
            g_[k].resize(n);
            dg_[k].resize(n);
            const double t = times_[k];
            parallel_for(n, [&](std::size_t j) {
                auto f = mode_fundamental(P.basis(), rho[j], tb, t);
                g_[k][j] = gb[j] * f.y1 + dgb[j] * f.y2;
                dg_[k][j] = gb[j] * f.dy1 + dgb[j] * f.dy2;
            });
        }
    }

    const std::vector<double>& times() const { return times_; }

    // spectral w at times()[k] for source profile f^ (spectral)
    Field2D apply(std::size_t k, const Field2D& fS) const {
        Field2D w(fS.grid, Space::Spectral);
        const auto& gk = g_.at(k);
        for (std::size_t i = 0; i < w.size(); ++i) w.values[i] = gk[index_.slot[i]] * fS.values[i];
        return w;
    }
    Field2D apply_dt(std::size_t k, const Field2D& fS) const {
        Field2D w(fS.grid, Space::Spectral);
        const auto& gk = dg_.at(k);
        for (std::size_t i = 0; i < w.size(); ++i) w.values[i] = gk[index_.slot[i]] * fS.values[i];
        return w;
    }

private:
    ModeIndex index_;
    std::vector<double> times_;
    std::vector<std::vector<double>> g_, dg_;
};

}  // namespace tricomi
