#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "admissibility.hpp"
#include "errors.hpp"
#include "exponents.hpp"
#include "grid.hpp"
#include "initial_data.hpp"
#include "parallel.hpp"
#include "propagator.hpp"
#include "trace.hpp"
#include "transforms.hpp"

namespace tricomi {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct NormReport {
    double value = 0;
    WeightSpec weight;
    double q = 2;
    double nu = std::numeric_limits<double>::quiet_NaN();  // NaN when there is no radial index
    int N = 0;
    double L = 0;
    std::size_t samples = 0;
    double quad_error = 0;      // relative, from halving the time sampling
    double tail_estimate = 0;   // relative share of the q-th power past the last sample
    double resample_error = 0;  // relative, polar resampling only
};

// Weight of a WeightSpec at fixed t as a function of |x|^2; the t-dependent
// parts are evaluated once.
inline std::function<double(double)> weight_at(const WeightSpec& w, double t) {
    const double tf = w.theta == 0 ? 1.0 : std::pow(t, w.theta);
    if (w.kind == WeightKind::None || w.gamma == 0) return [tf](double) { return tf; };
    double s = 0;
    bool light_cone = false;
    switch (w.kind) {
        case WeightKind::PsiMuLightCone: s = psi_mu(w.mu, t); light_cone = true; break;
        case WeightKind::PhiMLightCone: s = phi_m(w.m, t); light_cone = true; break;
        case WeightKind::PhiMShifted: s = phi_m(w.m, t) + 2; break;
        case WeightKind::PhiMCone: s = phi_m(w.m, t); break;
        case WeightKind::None: break;
    }
    const double s2 = s * s, g = w.gamma;
    if (light_cone) return [=](double r2) { return tf * std::pow(1 + std::abs(s2 - r2), g); };
    return [=](double r2) {
        double b = s2 - r2;
        return b > 0 ? tf * std::pow(b, g) : 0.0;
    };
}

inline double r2_at(const Grid& g, std::size_t i) {
    double x = g.x(int(i % std::size_t(g.N))), y = g.x(int(i / std::size_t(g.N)));
    return x * x + y * y;
}

// int |w(t,x) Re u|^q dx, or the weighted sup for q = inf.
inline double weighted_slice_power(const Field2D& u_in, const WeightSpec& w, double t, double q) {
    const Field2D u = u_in.to_physical();
    const Grid& g = u.grid;
    auto wt = weight_at(w, t);
    if (std::isinf(q))
        return parallel_max(u.size(), [&](std::size_t i) { return wt(r2_at(g, i)) * std::abs(u.values[i].real()); });
    return grid_integral(g, [&](std::size_t i) {
        double v = std::abs(u.values[i].real());
        return v == 0 ? 0.0 : std::pow(wt(r2_at(g, i)) * v, q);
    });
}

// Samples f(t_k) on increasing t_k; composite trapezoid with a halving error
// estimate and a power-law tail extrapolation.
struct TimeQuadrature {
    std::vector<double> t, f;

    void add(double tt, double ff) {
        if (!t.empty() && !(tt > t.back())) throw DomainError("TimeQuadrature: times must increase");
        t.push_back(tt);
        f.push_back(ff);
    }
    std::size_t size() const { return t.size(); }

    // integral over [t_0, t_upto]
    double integral(std::size_t upto) const {
        double s = 0;
        for (std::size_t k = 1; k <= upto && k < t.size(); ++k) s += 0.5 * (t[k] - t[k - 1]) * (f[k] + f[k - 1]);
        return s;
    }
    double integral() const { return t.empty() ? 0.0 : integral(t.size() - 1); }

    // |I_h - I_2h| / 3 relative to I_h, over [t_0, t_upto] with upto even
    double halving_error(std::size_t upto) const {
        if (upto < 4) return 0;
        upto -= upto % 2;
        double fine = integral(upto), coarse = 0;
        for (std::size_t k = 2; k <= upto; k += 2) coarse += 0.5 * (t[k] - t[k - 2]) * (f[k] + f[k - 2]);
        return fine != 0 ? std::abs(fine - coarse) / (3 * std::abs(fine)) : 0.0;
    }

    // Share of the integral past t_upto assuming f ~ C t^{-a} from the trailing quarter.
    double tail_share(std::size_t upto) const {
        std::size_t n = upto + 1;
        if (n < 4) return 0;
        std::size_t k0 = n - std::max<std::size_t>(3, n / 4);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int c = 0;
        for (std::size_t k = k0; k < n; ++k) {
            if (!(f[k] > 0)) continue;
            double x = std::log(t[k]), y = std::log(f[k]);
            sx += x, sy += y, sxx += x * x, sxy += x * y;
            ++c;
        }
        double I = integral(upto);
        if (c < 3 || I <= 0) return 0;
        double a = -(c * sxy - sx * sy) / (c * sxx - sx * sx);
        if (!(a > 1)) return kInf;
        return f[upto] * t[upto] / (a - 1) / I;
    }
};

inline void require_snapshots(const SimTrace& tr, std::size_t min_count, const char* who) {
    if (tr.snapshots.size() != tr.times.size() || tr.snapshots.size() < min_count) {
        std::ostringstream os;
        os << who << ": needs at least " << min_count << " snapshots aligned with times, got " << tr.snapshots.size();
        throw InsufficientSamples(os.str());
    }
}

// || weight * u ||_{L^q([t_0, t_end] x R^2)} over the trace's snapshots.
inline NormReport weighted_spacetime_norm(const SimTrace& tr, const WeightSpec& weight, double q) {
    if (!(q >= 1)) throw DomainError("weighted_spacetime_norm: requires q >= 1");
    require_snapshots(tr, 2, "weighted_spacetime_norm");
    NormReport r;
    r.weight = weight;
    r.q = q;
    r.N = tr.grid.N;
    r.L = tr.grid.L;
    r.samples = tr.times.size();
    if (std::isinf(q)) {
        for (const auto& s : tr.snapshots) r.value = std::max(r.value, weighted_slice_power(s.u, weight, s.t, q));
        return r;
    }
    TimeQuadrature tq;
    for (const auto& s : tr.snapshots) tq.add(s.t, weighted_slice_power(s.u, weight, s.t, q));
    r.value = std::pow(tq.integral(), 1 / q);
    r.quad_error = tq.halving_error(tq.size() - 1) / q;
    r.tail_estimate = tq.tail_share(tq.size() - 1);
    return r;
}

// Resampling from the Cartesian grid to r_i = (i + 1/2) dr, theta_j = 2 pi j / n_theta
// by tensor Lagrange interpolation; a 4-point pass alongside the 6-point one
// gives the error estimate.
class PolarResampler {
public:
    explicit PolarResampler(const Grid& g, int n_r = 0, int n_theta = 256, double r_max = 0)
        : grid_(g), nr_(n_r > 0 ? n_r : g.N), nth_(n_theta), rmax_(r_max > 0 ? r_max : g.L) {
        g.validate();
        if (nth_ < 8) throw DomainError("PolarResampler: n_theta must be >= 8");
        dr_ = rmax_ / nr_;
        r_.resize(nr_);
        for (int i = 0; i < nr_; ++i) r_[i] = (i + 0.5) * dr_;
        pts_.resize(std::size_t(nr_) * nth_);
        const double h = g.h();
        for (int i = 0; i < nr_; ++i)
            for (int j = 0; j < nth_; ++j) {
                double th = 2 * M_PI * j / nth_;
                pts_[std::size_t(i) * nth_ + j] = stencil((r_[i] * std::cos(th) + g.L) / h, (r_[i] * std::sin(th) + g.L) / h);
            }
    }

    const std::vector<double>& radii() const { return r_; }
    double dr() const { return dr_; }
    int n_theta() const { return nth_; }

    // sqrt(int_0^{2pi} |f(r_i, theta)|^2 dtheta) per radius; err receives the
    // largest 6-point vs 4-point discrepancy relative to the profile maximum.
    std::vector<double> angular_l2(const Field2D& f_in, double* err = nullptr) const {
        const Field2D f = f_in.to_physical();
        if (!(f.grid == grid_)) throw ShapeError("PolarResampler: grid mismatch");
        std::vector<double> a6(nr_), a4(nr_);
        const double dth = 2 * M_PI / nth_;
        parallel_for(std::size_t(nr_), [&](std::size_t i) {
            double s6 = 0, s4 = 0;
            for (int j = 0; j < nth_; ++j) {
                const auto& p = pts_[i * nth_ + j];
                double v6 = eval<6>(f, p.ix, p.iy, p.wx6, p.wy6), v4 = eval<4>(f, p.ix, p.iy, p.wx4, p.wy4);
                s6 += v6 * v6;
                s4 += v4 * v4;
            }
            a6[i] = std::sqrt(s6 * dth);
            a4[i] = std::sqrt(s4 * dth);
        });
        if (err) {
            double mx = 0, d = 0;
            for (int i = 0; i < nr_; ++i) {
                mx = std::max(mx, a6[i]);
                d = std::max(d, std::abs(a6[i] - a4[i]));
            }
            *err = mx > 0 ? d / mx : 0.0;
        }
        return a6;
    }

    // 6-point interpolated value of Re f at (x, y)
    double sample(const Field2D& f_in, double x, double y) const {
        const Field2D f = f_in.to_physical();
        auto p = stencil((x + grid_.L) / grid_.h(), (y + grid_.L) / grid_.h());
        return eval<6>(f, p.ix, p.iy, p.wx6, p.wy6);
    }

    // int A(r)^nu r dr by the midpoint rule, to the power 1/nu; max for nu = inf.
    // The integrand has slope A(0)^nu at r = 0, which costs O(dr^2) unless
    // subtracted: I = M - dr^2 A(0)^nu / 24 + O(dr^4).
    double radial_norm(const std::vector<double>& A, double nu) const {
        if (std::isinf(nu)) return *std::max_element(A.begin(), A.end());
        double s = 0;
        for (int i = 0; i < nr_; ++i)
            if (A[i] > 0) s += std::pow(A[i], nu) * r_[i] * dr_;
        if (nr_ >= 2) {
            // A^nu is even in r: fit a + b r^2 through the first two radii
            double f0 = (9 * std::pow(A[0], nu) - std::pow(A[1], nu)) / 8;
            s -= dr_ * dr_ * std::max(f0, 0.0) / 24;
        }
        return std::pow(std::max(s, 0.0), 1 / nu);
    }

private:
    struct Point {
        int ix, iy;  // stencil anchor (floor index)
        std::array<double, 6> wx6, wy6;
        std::array<double, 4> wx4, wy4;
    };

    template <int K>
    static std::array<double, K> lagrange(double s) {
        std::array<double, K> w;
        const int o0 = -(K / 2 - 1);
        for (int j = 0; j < K; ++j) {
            double v = 1;
            for (int k = 0; k < K; ++k)
                if (k != j) v *= (s - (o0 + k)) / double(j - k);
            w[j] = v;
        }
        return w;
    }

    static Point stencil(double fx, double fy) {
        Point p;
        p.ix = int(std::floor(fx));
        p.iy = int(std::floor(fy));
        p.wx6 = lagrange<6>(fx - p.ix);
        p.wy6 = lagrange<6>(fy - p.iy);
        p.wx4 = lagrange<4>(fx - p.ix);
        p.wy4 = lagrange<4>(fy - p.iy);
        return p;
    }

    template <int K, class W>
    double eval(const Field2D& f, int ix, int iy, const W& wx, const W& wy) const {
        const int N = grid_.N, o0 = -(K / 2 - 1);
        double s = 0;
        for (int b = 0; b < K; ++b) {
            int y = ((iy + o0 + b) % N + N) % N;
            double row = 0;
            for (int a = 0; a < K; ++a) {
                int x = ((ix + o0 + a) % N + N) % N;
                row += wx[a] * f.values[std::size_t(y) * N + x].real();
            }
            s += wy[b] * row;
        }
        return s;
    }

    Grid grid_;
    int nr_, nth_;
    double rmax_, dr_;
    std::vector<double> r_;
    std::vector<Point> pts_;
};

// || t^time_power u ||_{L^q_t L^nu_r L^2_theta}; nu, q may be inf.
inline NormReport mixed_norm_LqLnuL2(const SimTrace& tr, double q, double nu, double time_power,
                                     double resample_tol = 1e-4, const PolarResampler* sampler = nullptr) {
    if (!(q >= 1) || !(nu >= 1)) throw DomainError("mixed_norm_LqLnuL2: requires q, nu >= 1");
    require_snapshots(tr, 2, "mixed_norm_LqLnuL2");
    std::unique_ptr<PolarResampler> own;
    if (!sampler) {
        own = std::make_unique<PolarResampler>(tr.grid);
        sampler = own.get();
    }
    NormReport r;
    r.q = q;
    r.nu = nu;
    r.N = tr.grid.N;
    r.L = tr.grid.L;
    r.samples = tr.times.size();
    TimeQuadrature tq;
    double mx = 0;
    for (const auto& s : tr.snapshots) {
        double err = 0;
        auto A = sampler->angular_l2(s.u, &err);
        r.resample_error = std::max(r.resample_error, err);
        double v = std::pow(s.t, time_power) * sampler->radial_norm(A, nu);
        mx = std::max(mx, v);
        if (!std::isinf(q)) tq.add(s.t, std::pow(v, q));
    }
    if (r.resample_error > resample_tol) {
        std::ostringstream os;
        os << "mixed_norm_LqLnuL2: polar resampling error estimate " << r.resample_error << " exceeds "
           << resample_tol;
        throw ResolutionError(os.str());
    }
    if (std::isinf(q)) {
        r.value = mx;
    } else {
        r.value = std::pow(tq.integral(), 1 / q);
        r.quad_error = tq.halving_error(tq.size() - 1) / q;
        r.tail_estimate = tq.tail_share(tq.size() - 1);
    }
    return r;
}

// Homogeneous: multiplier |xi|^s; inhomogeneous: (1 + |xi|^2)^{s/2}; then L^2.
inline double sobolev_norm(const Field2D& f, double s, bool homogeneous) {
    const Field2D F = f.to_spectral();
    const Grid& g = F.grid;
    const rvec k2 = wavenumber_sq(g);
    if (homogeneous && s < 0) {
        double mx = parallel_max(F.size(), [&](std::size_t i) { return std::abs(F.values[i]); });
        if (std::abs(F.values[0]) > 1e-12 * mx)
            throw DomainError("sobolev_norm: homogeneous norm with s < 0 needs a zero-mean field");
    }
    double sum = parallel_sum<double>(F.size(), [&](std::size_t i) {
        double mult;
        if (homogeneous) {
            if (k2[i] == 0) return s == 0 ? std::norm(F.values[i]) : 0.0;
            mult = std::pow(k2[i], s / 2);
        } else {
            mult = std::pow(1 + k2[i], s / 2);
        }
        return mult * mult * std::norm(F.values[i]);
    });
    return std::sqrt(sum * g.cell_area() / double(g.size()));
}

// W^{s,1} proxy: L^1 norm of the Bessel potential (1 - Lap)^{s/2} f.
inline double sobolev_w1_proxy(const Field2D& f, double s) {
    Field2D F = f.to_spectral();
    const rvec k2 = wavenumber_sq(F.grid);
    parallel_for(F.size(), [&](std::size_t i) { F.values[i] *= std::pow(1 + k2[i], s / 2); });
    const Field2D u = F.to_physical();
    return grid_integral(u.grid, [&](std::size_t i) { return std::abs(u.values[i]); });
}

enum class VectorField { D1, D2, Rotation };

inline const char* to_string(VectorField z) {
    switch (z) {
        case VectorField::D1: return "D1";
        case VectorField::D2: return "D2";
        case VectorField::Rotation: return "Rotation";
    }
    return "?";
}

// Z u in physical space; Rotation is x1 d2 u - x2 d1 u.
inline Field2D vector_field_apply(const Field2D& f, VectorField z) {
    const Field2D F = f.to_spectral();
    if (z == VectorField::D1) return spectral_derivative(F, 0).to_physical();
    if (z == VectorField::D2) return spectral_derivative(F, 1).to_physical();
    const Field2D d1 = spectral_derivative(F, 0).to_physical(), d2 = spectral_derivative(F, 1).to_physical();
    Field2D r(f.grid);
    const Grid& g = f.grid;
    parallel_for(r.size(), [&](std::size_t i) {
        double x = g.x(int(i % g.N)), y = g.x(int(i / g.N));
        r.values[i] = x * d2.values[i] - y * d1.values[i];
    });
    return r;
}

struct DecayFit {
    double slope = 0, intercept = 0, r2 = 0;
};

// Least squares of log v against log t.
inline DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& v) {
    if (t.size() != v.size()) throw ShapeError("decay_fit: length mismatch");
    if (t.size() < 10) throw InsufficientSamples("decay_fit: needs at least 10 samples");
    auto [lo, hi] = std::minmax_element(t.begin(), t.end());
    if (!(*lo > 0) || *hi < 10 * *lo) throw InsufficientSamples("decay_fit: samples must span a decade in t");
    const std::size_t n = t.size();
    double sx = 0, sy = 0;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(v[i] > 0)) throw DomainError("decay_fit: values must be positive");
        x[i] = std::log(t[i]);
        y[i] = std::log(v[i]);
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    DecayFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

// Sup of Re f after band-limited upsampling by zero padding (factor a power of two).
inline double refined_sup(const Field2D& f, int factor) {
    if (factor < 1 || (factor & (factor - 1)) != 0) throw DomainError("refined_sup: factor must be a power of two");
    if (factor == 1) {
        const Field2D u = f.to_physical();
        return parallel_max(u.size(), [&](std::size_t i) { return std::abs(u.values[i].real()); });
    }
    const Field2D F = f.to_spectral();
    const int N = F.grid.N, M = N * factor;
    cvec big(std::size_t(M) * M, cplx(0)), out(std::size_t(M) * M);
    for (int iy = 0; iy < N; ++iy)
        for (int ix = 0; ix < N; ++ix) {
            int fx = F.grid.freq(ix), fy = F.grid.freq(iy);
            if (std::abs(fx) == N / 2 || std::abs(fy) == N / 2) continue;
            int jx = (fx + M) % M, jy = (fy + M) % M;
            big[std::size_t(jy) * M + jx] = F(ix, iy);
        }
    Fft::get(M).inverse(big.data(), out.data());
    const double scale = double(M) * M / (double(N) * N);
    return scale * parallel_max(out.size(), [&](std::size_t i) { return std::abs(out[i].real()); });
}

struct DecayRun {
    double m = 0;
    std::vector<double> t, sup;
    DecayFit fit;
    double expected = 0;  // -(m+1)/2
    double relative_error = 0;
};

// Sup norm of the linear solution from data at t0, sampled at `samples`
// log-spaced times in [t_start, t_end] with zero-padding refinement.
inline DecayRun linear_sup_decay(double m, const Grid& g, const DataSpec& spec, double t0, double t_start,
                                 double t_end, int samples = 40, int refine = 4) {
    if (!(m >= 0)) throw DomainError("linear_sup_decay: requires m >= 0");
    if (!(t0 > 0 && t_start >= t0 && t_end > t_start)) throw DomainError("linear_sup_decay: requires 0 < t0 <= t_start < t_end");
    auto data = make_initial_data(g, spec);
    double need = data.radius + phi_m(m, t_end) - phi_m(m, t0) + 0.5;
    if (g.L < need) {
        std::ostringstream os;
        os << "linear_sup_decay: box half-width L = " << g.L << " < " << need << " needed to contain the support";
        throw DomainError(os.str());
    }
    LinearPropagator P(g, m, t0, t_end);
    const Field2D U0 = data.u0.to_spectral(), U1 = data.u1.to_spectral();
    DecayRun r;
    r.m = m;
    for (int k = 0; k < samples; ++k) {
        double t = t_start * std::pow(t_end / t_start, samples > 1 ? double(k) / (samples - 1) : 0.0);
        r.t.push_back(t);
        r.sup.push_back(refined_sup(P.evolve_spectral(U0, U1, t).first, refine));
    }
    r.fit = decay_fit(r.t, r.sup);
    r.expected = -(m + 1) / 2;
    r.relative_error = std::abs(r.fit.slope / r.expected - 1);
    return r;
}

// sup over the cone |x| <= phi_m(t) + 1 of (1 + |phi^2 - |x|^2|) / ((phi + 2)^2 - |x|^2), per t.
inline std::vector<double> weight_comparison_ratios(double m, const std::vector<double>& times, int n_r = 2001) {
    std::vector<double> out;
    for (double t : times) {
        double s = phi_m(m, t), R = s + 1, c = 0;
        for (int i = 0; i < n_r; ++i) {
            double r = R * i / (n_r - 1), r2 = r * r;
            double den = (s + 2) * (s + 2) - r2;
            if (!(den > 0)) throw DomainError("weight_comparison_ratios: shifted weight not positive on the cone");
            c = std::max(c, (1 + std::abs(s * s - r2)) / den);
        }
        out.push_back(c);
    }
    return out;
}

enum class ProbeStatement { Lem31, Thm51, Lem32, Lem61 };

inline const char* to_string(ProbeStatement s) {
    switch (s) {
        case ProbeStatement::Lem31: return "Lem31";
        case ProbeStatement::Thm51: return "Thm51";
        case ProbeStatement::Lem32: return "Lem32";
        case ProbeStatement::Lem61: return "Lem61";
    }
    return "?";
}

inline ProbeStatement probe_statement_from_string(const std::string& s) {
    if (s == "Lem31") return ProbeStatement::Lem31;
    if (s == "Thm51") return ProbeStatement::Thm51;
    if (s == "Lem32") return ProbeStatement::Lem32;
    if (s == "Lem61") return ProbeStatement::Lem61;
    throw DomainError("unknown probe statement '" + s + "'");
}

struct ProbeParams {
    ProbeStatement statement = ProbeStatement::Lem31;
    double m = 2, alpha = 2;
    double p = 3;        // Lem32, Lem61: the time weight uses m - p + 1
    double q = 4;
    double nu = 2;       // Lem32, Lem61
    double qt = 2, nut = 2;  // Lem61 dual pair
    double gamma = 0;    // gamma (Lem31) or gamma1 (Thm51)
    double gamma2 = 0;   // Thm51
    double delta = 0;    // Lem31 data smoothness offset
    Grid grid{256, 32};
    double t0 = 1;
    std::vector<double> horizons{10, 20};
    double sample_dt = 0.1;
    DataKind kind = DataKind::SmoothCompactBump;
    double epsilon = 1;
    double data_radius = 1;
    int members = 20;
    std::uint64_t seed = 1;
    double forcing_ta = 1.5, forcing_tb = 3;  // Thm51, Lem61 forcing window
};

struct ProbeResult {
    std::vector<double> horizons;
    std::vector<std::vector<double>> lhs;  // [horizon][member]
    std::vector<double> rhs;               // per member (window-independent)
    std::vector<std::vector<double>> ratios;  // NaN marks a skipped 0/0 member
    std::vector<double> max_ratio;         // per horizon
    double growth = 0;                     // max_ratio(last) / max_ratio(first) - 1
    bool growth_flag = false;              // growth above 20%
    int skipped = 0;
};

inline void probe_fail(const std::string& what) { throw HypothesisViolation("probe hypothesis violated: " + what); }

// Throws HypothesisViolation naming the first failing constraint.
inline void check_probe_hypotheses(const ProbeParams& P) {
    const double m = P.m, a = P.alpha, q = P.q;
    if (!(m > 0)) probe_fail("m > 0");
    auto ghi = [&] { return (m + 1) / (m + 2) - (m + 4 + 2 * a) / ((m + 2) * q); };
    switch (P.statement) {
        case ProbeStatement::Lem31: {
            if (!(a > -1)) probe_fail("alpha > -1");
            double pc = p_crit_tricomi(m, a).value, pf = p_conf_tricomi(m, a);
            if (!(q > pc + 1 && q < pf + 1)) probe_fail("p_crit + 1 < q < p_conf + 1");
            if (!(P.gamma > 0 && P.gamma < ghi())) probe_fail("0 < gamma < (m+1)/(m+2) - (m+4+2 alpha)/((m+2) q)");
            if (!(P.delta > 0 && P.delta < (m + 1) / (m + 2) - P.gamma - 1 / q))
                probe_fail("0 < delta < (m+1)/(m+2) - gamma - 1/q");
            break;
        }
        case ProbeStatement::Thm51: {
            if (!(a > -1 && a <= m)) probe_fail("-1 < alpha <= m");
            if (!(q >= 2 && q <= 2 * (m + 3 + a) / (m + 1))) probe_fail("2 <= q <= 2(m+3+alpha)/(m+1)");
            if (!(P.gamma > 0 && P.gamma < ghi())) probe_fail("0 < gamma1 < (m+1)/(m+2) - (m+4+2 alpha)/((m+2) q)");
            if (!(P.gamma2 > 1 / q)) probe_fail("gamma2 > 1/q");
            break;
        }
        case ProbeStatement::Lem32: {
            const double b = m - P.p + 1, nu = P.nu;
            if (!(q >= 2 && nu >= 2)) probe_fail("q, nu >= 2");
            if (std::isinf(q) && std::isinf(nu)) probe_fail("(q, nu) != (inf, inf)");
            if (!(1 / nu + b / ((m + 2) * (P.p + 1)) > 0)) probe_fail("1/nu + (m-p+1)/((m+2)(p+1)) > 0");
            if (!(1 / q <= (m + 1) / 2 - (m + 2) / (2 * nu) - b / (P.p + 1)))
                probe_fail("1/q <= (m+1)/2 - (m+2)/(2 nu) - (m-p+1)/(p+1)");
            if (!(b > -2 && b <= -1)) probe_fail("-2 < m-p+1 <= -1");
            break;
        }
        case ProbeStatement::Lem61: {
            auto c = mixed_norm_constraints(m, P.p, q, P.nu, P.qt, P.nut);
            if (!c.feasible) {
                AdmissiblePair one;
                for (const auto& r : c.residuals) {
                    one.residuals = {r};
                    one.finalize();
                    if (!one.feasible) probe_fail(r.name);
                }
            }
            break;
        }
    }
    if (P.members < 1) probe_fail("members >= 1");
    if (P.horizons.empty()) probe_fail("at least one horizon");
    for (double T : P.horizons)
        if (!(T > P.t0)) probe_fail("horizon > t0");
}

namespace detail {

inline double forcing_profile(double t, double ta, double tb) {
    double s = (2 * t - ta - tb) / (tb - ta);
    return std::abs(s) < 1 ? std::exp(1 - 1 / (1 - s * s)) : 0.0;
}

inline std::vector<double> probe_times(const ProbeParams& P, std::vector<std::size_t>& horizon_index) {
    double T = *std::max_element(P.horizons.begin(), P.horizons.end());
    long n = std::lround((T - P.t0) / P.sample_dt);
    std::vector<double> ts;
    for (long k = 0; k <= n; ++k) ts.push_back(P.t0 + k * (T - P.t0) / n);
    horizon_index.clear();
    for (double h : P.horizons) {
        long k = std::lround((h - P.t0) / (T - P.t0) * n);
        if (std::abs(ts[k] - h) > 1e-9 * h) throw DomainError("strichartz_ratio_probe: horizons must lie on the sample grid");
        horizon_index.push_back(std::size_t(k));
    }
    return ts;
}

}  // namespace detail

// LHS/RHS of the probed estimate for each family member on [t0, T] for every
// horizon T. The data family is make_initial_data with seeds seed .. seed+members-1;
// forced statements use F_j(t, x) = b(t) f_j(x) with b a smooth bump on the
// forcing window and f_j the u0 of member j.
inline ProbeResult strichartz_ratio_probe(const ProbeParams& P) {
    check_probe_hypotheses(P);
    const Grid& g = P.grid;
    const double m = P.m, a = P.alpha, q = P.q;
    const bool forced = P.statement == ProbeStatement::Thm51 || P.statement == ProbeStatement::Lem61;
    const bool mixed = P.statement == ProbeStatement::Lem32 || P.statement == ProbeStatement::Lem61;
    const double phi0 = phi_m(m, P.t0);
    {
        const double T = *std::max_element(P.horizons.begin(), P.horizons.end());
        const double need = P.data_radius + phi_m(m, T) - phi0 + 0.5;
        if (g.L < need) {
            std::ostringstream os;
            os << "strichartz_ratio_probe: box half-width L = " << g.L << " < " << need
               << " needed to contain the support up to the last horizon";
            throw DomainError(os.str());
        }
    }
    if (!forced && P.statement == ProbeStatement::Lem31 && !(P.data_radius < phi0 + 2))
        probe_fail("data support inside B(0, phi_m(t0) + 2) so the shifted weight stays positive");
    if (forced && !(P.data_radius <= phi_m(m, P.forcing_ta) - 1))
        probe_fail("F = 0 for |x| > phi_m(t) - 1");
    if (forced && !(P.forcing_ta >= P.t0 && P.forcing_tb > P.forcing_ta)) probe_fail("forcing window inside [t0, T]");

    std::vector<std::size_t> hidx;
    const auto ts = detail::probe_times(P, hidx);
    const double Tmax = ts.back();
    LinearPropagator prop(g, m, P.t0, Tmax);

    std::vector<Field2D> A(P.members), B(P.members);  // spectral u0, u1 or source profile f
    std::vector<double> rhs(P.members, 0.0);
    for (int j = 0; j < P.members; ++j) {
        DataSpec ds{P.kind, P.epsilon, P.data_radius, 0, 0, P.seed + std::uint64_t(j)};
        auto d = make_initial_data(g, ds);
        A[j] = d.u0.to_spectral();
        B[j] = d.u1.to_spectral();
    }

    // right-hand sides
    const double tb_end = std::min(P.forcing_tb, Tmax);
    std::unique_ptr<PolarResampler> polar;
    if (mixed) polar = std::make_unique<PolarResampler>(g);
    for (int j = 0; j < P.members; ++j) {
        switch (P.statement) {
            case ProbeStatement::Lem31:
                rhs[j] = sobolev_w1_proxy(A[j], (m + 3) / (m + 2) + P.delta) +
                         sobolev_w1_proxy(B[j], (m + 1) / (m + 2) + P.delta);
                break;
            case ProbeStatement::Lem32: {
                const double b = m - P.p + 1;
                const double s = 1 - 2 / P.nu - 2 / (m + 2) * (1 / q + b / (P.p + 1));
                rhs[j] = sobolev_norm(A[j], s, true) + sobolev_norm(B[j], s - 2 / (m + 2), true);
                break;
            }
            case ProbeStatement::Thm51:
            case ProbeStatement::Lem61: {
                // quadrature of the source norm on the forcing window, 200 panels
                const int n = 200;
                const Field2D f = A[j].to_physical();
                TimeQuadrature tq;
                double qd = P.statement == ProbeStatement::Thm51 ? q / (q - 1) : 1 / (1 - 1 / P.qt);
                for (int k = 0; k <= n; ++k) {
                    double t = P.forcing_ta + (tb_end - P.forcing_ta) * k / n;
                    double bt = detail::forcing_profile(t, P.forcing_ta, P.forcing_tb);
                    double v;
                    if (P.statement == ProbeStatement::Thm51) {
                        WeightSpec w{WeightKind::PhiMCone, P.gamma2, -a / q, m, 0};
                        v = bt == 0 ? 0.0 : std::pow(bt, qd) * weighted_slice_power(f, w, t, qd);
                    } else {
                        double nud = 1 / (1 - 1 / P.nut);
                        v = std::pow(t, (P.p - m - 1) / (P.p + 1)) * bt * polar->radial_norm(polar->angular_l2(f), nud);
                        v = std::pow(v, qd);
                    }
                    tq.add(t, v);
                }
                rhs[j] = std::pow(tq.integral(), 1 / qd);
                break;
            }
        }
    }

    std::unique_ptr<SeparableResponse> resp;
    if (forced)
        resp = std::make_unique<SeparableResponse>(
            prop, [&](double t) { return detail::forcing_profile(t, P.forcing_ta, P.forcing_tb); }, P.forcing_ta,
            P.forcing_tb, ts);

    WeightSpec lw;
    if (P.statement == ProbeStatement::Lem31) lw = WeightSpec{WeightKind::PhiMShifted, P.gamma, a / q, m, 0};
    if (P.statement == ProbeStatement::Thm51) lw = WeightSpec{WeightKind::PhiMCone, P.gamma, a / q, m, 0};
    const double tpow = mixed ? (m - P.p + 1) / (P.p + 1) : 0.0;

    std::vector<TimeQuadrature> tq(P.members);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double t = ts[k];
        std::vector<ModeFundamental> tab;
        if (!forced) tab = prop.table(t);
        for (int j = 0; j < P.members; ++j) {
            Field2D uS;
            if (forced) {
                uS = resp->apply(k, A[j]);
            } else {
                uS = Field2D(g, Space::Spectral);
                const auto& idx = prop.index();
                for (std::size_t i = 0; i < uS.size(); ++i) {
                    const auto& f = tab[idx.slot[i]];
                    uS.values[i] = f.y1 * A[j].values[i] + f.y2 * B[j].values[i];
                }
            }
            double v;
            if (mixed) {
                double nv = std::pow(t, tpow) * polar->radial_norm(polar->angular_l2(uS), P.nu);
                v = std::pow(nv, q);
            } else {
                v = weighted_slice_power(uS, lw, t, q);
            }
            tq[j].add(t, v);
        }
    }

    ProbeResult r;
    r.horizons = P.horizons;
    r.rhs = rhs;
    for (std::size_t h = 0; h < hidx.size(); ++h) {
        std::vector<double> lhs(P.members), rat(P.members);
        double mx = 0;
        for (int j = 0; j < P.members; ++j) {
            lhs[j] = std::pow(tq[j].integral(hidx[h]), 1 / q);
            if (rhs[j] == 0 && lhs[j] == 0) {
                rat[j] = std::numeric_limits<double>::quiet_NaN();
                if (h == 0) ++r.skipped;
                continue;
            }
            rat[j] = lhs[j] / rhs[j];
            mx = std::max(mx, rat[j]);
        }
        r.lhs.push_back(lhs);
        r.ratios.push_back(rat);
        r.max_ratio.push_back(mx);
    }
    if (r.max_ratio.size() >= 2 && r.max_ratio.front() > 0) {
        r.growth = r.max_ratio.back() / r.max_ratio.front() - 1;
        r.growth_flag = r.growth > 0.2;
    }
    return r;
}

}  // namespace tricomi
