#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <complex>
#include <sstream>

#include "errors.hpp"

namespace tricomi {

// Largest |z| served by the power series. Terms peak near e^{|z|}, so 50
// significant digits leave about 24 after cancellation at |z| = 60.
inline constexpr double kKummerSeriesLimit = 60.0;

namespace detail {

using mpf = boost::multiprecision::cpp_bin_float_50;

struct mpc {
    mpf re, im;
};

inline mpc mul(const mpc& a, const mpc& b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }

}  // namespace detail

// Kummer's confluent hypergeometric function 1F1(a; c; z) by its power series.
inline std::complex<double> kummer_phi(double a, double c, std::complex<double> z) {
    using detail::mpc;
    using detail::mpf;
    if (c <= 0 && std::floor(c) == c) throw DomainError("kummer_phi: c must not be a non-positive integer");
    double az = std::abs(z);
    if (az > kKummerSeriesLimit * (1 + 1e-12)) {
        std::ostringstream os;
        os << "kummer_phi: |z| = " << az << " beyond the series regime (" << kKummerSeriesLimit << ")";
        throw RegimeError(os.str());
    }
    mpc zz{mpf(z.real()), mpf(z.imag())};
    mpc term{mpf(1), mpf(0)};
    mpc sum = term;
    mpf A(a), C(c);
    const mpf eps("1e-40");
    for (int k = 0; k < 5000; ++k) {
        mpf f = (A + k) / ((C + k) * (k + 1));
        term = detail::mul(term, zz);
        term.re *= f;
        term.im *= f;
        sum.re += term.re;
        sum.im += term.im;
        if (k > az + 10) {
            mpf tm = abs(term.re) + abs(term.im);
            mpf sm = abs(sum.re) + abs(sum.im);
            if (tm <= eps * sm) break;
        }
    }
    return {static_cast<double>(sum.re), static_cast<double>(sum.im)};
}

}  // namespace tricomi
