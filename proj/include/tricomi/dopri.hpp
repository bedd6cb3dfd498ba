#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>

#include "errors.hpp"

namespace tricomi {

namespace detail {
inline double absval(double x) { return std::abs(x); }
inline double absval(const std::complex<double>& z) { return std::abs(z); }
}  // namespace detail

struct DopriOptions {
    double rtol = 1e-8;
    double atol = 1e-12;
    double h_init = 0;  // 0: automatic
    double h_min_rel = 1e-13;
    long max_steps = 50'000'000;
    std::function<double(double)> h_max;  // optional step cap as a function of t
};

enum class DopriStatus { Reached, Stopped, StepCollapse };

// Dormand-Prince 5(4) with FSAL and standard step control.
// Vec: random-access container of double or std::complex<double>.
// Rhs: void(double t, const Vec& y, Vec& dydt).
// ErrNorm: double(const Vec& y, const Vec& ynew, const Vec& err, double rtol, double atol).
template <class Vec, class Rhs>
class Dopri5 {
public:
    using ErrNorm = std::function<double(const Vec&, const Vec&, const Vec&, double, double)>;

    Dopri5(Rhs rhs, double t0, Vec y0, DopriOptions opt = {}, ErrNorm norm = {})
        : rhs_(std::move(rhs)), opt_(std::move(opt)), norm_(std::move(norm)), t_(t0), y_(std::move(y0)) {
        if (!norm_) norm_ = &Dopri5::rms_norm;
        auto n = y_.size();
        for (Vec* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &yt_, &err_}) *v = y_;
        rhs_(t_, y_, k1_);
        ++nfev_;
        h_ = opt_.h_init;
        (void)n;
    }

    static double rms_norm(const Vec& y, const Vec& yn, const Vec& e, double rtol, double atol) {
        double s = 0;
        std::size_t n = y.size();
        for (std::size_t i = 0; i < n; ++i) {
            double sc = atol + rtol * std::max(detail::absval(y[i]), detail::absval(yn[i]));
            double r = detail::absval(e[i]) / sc;
            s += r * r;
        }
        return n ? std::sqrt(s / double(n)) : 0.0;
    }

    double t() const { return t_; }
    const Vec& y() const { return y_; }
    Vec& y_mut() { return y_; }
    // derivative at the current state (FSAL slot)
    const Vec& dydt() const { return k1_; }
    double last_h() const { return h_last_; }
    long steps() const { return steps_; }
    long rejects() const { return rejects_; }
    long nfev() const { return nfev_; }

    // Re-evaluate the derivative after an external change to y.
    void reset_state() {
        rhs_(t_, y_, k1_);
        ++nfev_;
    }

    // Steps until t == t_target. on_step(t, y) runs after every accepted step and
    // may return false to stop early.
    template <class OnStep>
    DopriStatus advance(double t_target, OnStep&& on_step) {
        if (t_target <= t_) return DopriStatus::Reached;
        if (h_ <= 0) h_ = initial_step(t_target);
        while (t_ < t_target) {
            if (steps_ + rejects_ > opt_.max_steps) throw StepCollapseError("dopri5: step budget exhausted", t_);
            double hcap = opt_.h_max ? opt_.h_max(t_) : std::numeric_limits<double>::infinity();
            double h = std::min(h_, hcap);
            bool clipped = false;
            if (t_ + h >= t_target || t_ + 1.0000001 * h >= t_target) {
                h = t_target - t_;
                clipped = true;
            }
            double hmin = opt_.h_min_rel * std::max(1.0, std::abs(t_));
            if (h < hmin && !clipped) return DopriStatus::StepCollapse;
            double err = attempt(h);
            if (!(err <= 1.0)) {
                ++rejects_;
                double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
                h_ = h * std::min(1.0, fac);
                if (h_ < hmin) return DopriStatus::StepCollapse;
                continue;
            }
            // accept
            t_ = clipped ? t_target : t_ + h;
            std::swap(y_, yt_);
            std::swap(k1_, k7_);
            ++steps_;
            h_last_ = h;
            double fac = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            fac = std::clamp(fac, 0.2, 5.0);
            double hn = h * fac;
            // a clipped step says little about the natural step size
            if (!clipped || hn > h_) h_ = hn;
            if (!on_step(t_, y_)) return DopriStatus::Stopped;
        }
        return DopriStatus::Reached;
    }

    DopriStatus advance(double t_target) {
        return advance(t_target, [](double, const Vec&) { return true; });
    }

private:
    double initial_step(double t_target) {
        // Hairer-Norsett-Wanner starting step
        double d0 = rms_norm(y_, y_, y_, opt_.rtol, opt_.atol);
        double d1 = rms_norm(y_, y_, k1_, opt_.rtol, opt_.atol);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, t_target - t_);
        if (opt_.h_max) h0 = std::min(h0, opt_.h_max(t_));
        std::size_t n = y_.size();
        for (std::size_t i = 0; i < n; ++i) yt_[i] = y_[i] + h0 * k1_[i];
        rhs_(t_ + h0, yt_, k2_);
        ++nfev_;
        for (std::size_t i = 0; i < n; ++i) err_[i] = k2_[i] - k1_[i];
        double d2 = rms_norm(y_, y_, err_, opt_.rtol, opt_.atol) / h0;
        double h1 = (std::max(d1, d2) <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                 : std::pow(0.01 / std::max(d1, d2), 0.2);
        return std::min(100 * h0, h1);
    }

    double attempt(double h) {
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                                a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
        const std::size_t n = y_.size();
        for (std::size_t i = 0; i < n; ++i) yt_[i] = y_[i] + h * (a21 * k1_[i]);
        rhs_(t_ + c2 * h, yt_, k2_);
        for (std::size_t i = 0; i < n; ++i) yt_[i] = y_[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
        rhs_(t_ + c3 * h, yt_, k3_);
        for (std::size_t i = 0; i < n; ++i)
            yt_[i] = y_[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
        rhs_(t_ + c4 * h, yt_, k4_);
        for (std::size_t i = 0; i < n; ++i)
            yt_[i] = y_[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
        rhs_(t_ + c5 * h, yt_, k5_);
        for (std::size_t i = 0; i < n; ++i)
            yt_[i] = y_[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
        rhs_(t_ + h, yt_, k6_);
        for (std::size_t i = 0; i < n; ++i)
            yt_[i] = y_[i] + h * (b1 * k1_[i] + b3 * k3_[i] + b4 * k4_[i] + b5 * k5_[i] + b6 * k6_[i]);
        rhs_(t_ + h, yt_, k7_);
        nfev_ += 6;
        for (std::size_t i = 0; i < n; ++i)
            err_[i] = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
        return norm_(y_, yt_, err_, opt_.rtol, opt_.atol);
    }

    Rhs rhs_;
    DopriOptions opt_;
    ErrNorm norm_;
    double t_;
    Vec y_;
    Vec k1_, k2_, k3_, k4_, k5_, k6_, k7_, yt_, err_;
    double h_ = 0, h_last_ = 0;
    long steps_ = 0, rejects_ = 0, nfev_ = 0;
};

}  // namespace tricomi
