#pragma once

#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace tricomi {

// Bisection to a tight bracket, then Newton polish with a numerical derivative.
// Throws RootNotBracketed when f(lo), f(hi) share a sign.
template <class F>
double bracketed_root(F&& f, double lo, double hi, const char* what = "root") {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) {
        std::ostringstream os;
        os << what << ": no sign change on [" << lo << ", " << hi << "] (f=" << flo << ", " << fhi
           << ")";
        throw RootNotBracketed(os.str());
    }
    for (int i = 0; i < 60 && hi - lo > 1e-9 * (1.0 + std::abs(lo)); ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 8; ++i) {
        double d = 1e-7 * (1.0 + std::abs(x));
        double fx = f(x);
        double df = (f(x + d) - f(x - d)) / (2 * d);
        if (df == 0.0) break;
        double nx = x - fx / df;
        if (!(nx > lo - 1e-9 && nx < hi + 1e-9)) break;
        if (std::abs(nx - x) <= 1e-16 * (1.0 + std::abs(x))) {
            x = nx;
            break;
        }
        x = nx;
    }
    return x;
}

// Larger root of a*x^2 + b*x + c, computed without cancellation.
inline double quadratic_positive_root(double a, double b, double c) {
    double disc = b * b - 4 * a * c;
    if (disc < 0) throw DomainError("quadratic has no real root");
    double s = std::sqrt(disc);
    if (b <= 0) return (-b + s) / (2 * a);
    return (2 * c) / (-b - s);
}

}  // namespace tricomi
