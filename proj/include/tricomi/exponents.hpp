#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "roots.hpp"

namespace tricomi {

enum class Form { DampedWave, Tricomi };

struct ModelParams {
    int n = 2;
    double mu = std::numeric_limits<double>::quiet_NaN();
    double m = std::numeric_limits<double>::quiet_NaN();
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double p = std::numeric_limits<double>::quiet_NaN();
    Form form = Form::Tricomi;

    static ModelParams damped(double mu, double p, int n = 2) {
        ModelParams r;
        r.n = n;
        r.mu = mu;
        r.p = p;
        r.form = Form::DampedWave;
        return r;
    }
    static ModelParams tricomi(double m, double alpha, double p) {
        ModelParams r;
        r.m = m;
        r.alpha = alpha;
        r.p = p;
        r.form = Form::Tricomi;
        return r;
    }
};

enum class CritBranch { Strauss, Fujita, P1, P2 };

inline const char* to_string(CritBranch b) {
    switch (b) {
        case CritBranch::Strauss: return "strauss";
        case CritBranch::Fujita: return "fujita";
        case CritBranch::P1: return "p1";
        case CritBranch::P2: return "p2";
    }
    return "?";
}

struct BranchValue {
    double value;
    CritBranch branch;
};

inline double strauss_poly(double z, double p) { return (z - 1) * p * p - (z + 1) * p - 2; }

inline double strauss_exponent(double z) {
    if (!(z > 1)) throw DomainError("strauss_exponent: requires z > 1");
    return ((z + 1) + std::sqrt(z * z + 10 * z - 7)) / (2 * (z - 1));
}

inline double fujita_exponent(int n) {
    if (n < 1) throw DomainError("fujita_exponent: requires n >= 1");
    return 1.0 + 2.0 / n;
}

inline double mu_bar(int n) {
    if (n < 1) throw DomainError("mu_bar: requires n >= 1");
    return double(n * n + n + 2) / (n + 2);
}

inline BranchValue p_crit_damped(int n, double mu) {
    if (n < 1) throw DomainError("p_crit_damped: requires n >= 1");
    if (!(mu > 0)) throw DomainError("p_crit_damped: requires mu > 0");
    double ps = strauss_exponent(n + mu);
    double pf = fujita_exponent(n);
    // ties at mu = mu_bar(n) are reported on the Strauss side
    return ps >= pf ? BranchValue{ps, CritBranch::Strauss} : BranchValue{pf, CritBranch::Fujita};
}

inline double p1_tricomi(double m, double alpha) { return 1.0 + (2.0 + alpha) / (m + 1); }

inline double p2_poly(double m, double alpha, double p) {
    return (m + 1) * p * p - (3 + 2 * alpha) * p - (m + 2);
}

inline double p2_tricomi(double m, double alpha) {
    return quadratic_positive_root(m + 1, -(3 + 2 * alpha), -(m + 2));
}

inline BranchValue p_crit_tricomi(double m, double alpha) {
    if (!(m > 0)) throw DomainError("p_crit_tricomi: requires m > 0");
    if (!(alpha > -2)) throw DomainError("p_crit_tricomi: requires alpha > -2");
    double a = p1_tricomi(m, alpha), b = p2_tricomi(m, alpha);
    BranchValue r = b >= a ? BranchValue{b, CritBranch::P2} : BranchValue{a, CritBranch::P1};
    // the two branches meet at alpha = -1
    if (alpha > -1 + 1e-12 && r.branch != CritBranch::P2)
        throw std::logic_error("p_crit_tricomi: p2 branch expected for alpha > -1");
    if (alpha < -1 - 1e-12 && r.branch != CritBranch::P1)
        throw std::logic_error("p_crit_tricomi: p1 branch expected for alpha < -1");
    return r;
}

inline double p_conf_tricomi(double m, double alpha) {
    if (!(m >= 0)) throw DomainError("p_conf_tricomi: requires m >= 0");
    return (m + 2 * alpha + 5) / (m + 1);
}

inline double p_conf_damped(double mu) {
    if (mu == 1.0) throw DomainError("p_conf_damped: mu = 1 is excluded");
    if (!(mu > 0 && mu < 2)) throw DomainError("p_conf_damped: requires mu in (0,1) or (1,2)");
    return (mu + 5) / (mu + 1);
}

enum class Q0Hypothesis { AlphaPositive, AlphaNegative, Neither };

struct Q0Result {
    double value;
    Q0Hypothesis hypothesis;
};

inline Q0Result q0_endpoint(double m, double alpha) {
    if (!(m > 0)) throw DomainError("q0_endpoint: requires m > 0");
    double q = 2 * (m + 3 + alpha) / (m + 1);
    Q0Hypothesis h = Q0Hypothesis::Neither;
    if (alpha > 0 && alpha <= m * (m + 3) / (m + 2))
        h = Q0Hypothesis::AlphaPositive;
    else if (alpha > -1 && alpha < 0)
        h = Q0Hypothesis::AlphaNegative;
    return {q, h};
}

inline double q_tilde0(double m, double beta) {
    if (!(m > 0)) throw DomainError("q_tilde0: requires m > 0");
    if (!(beta > 0 && beta <= m / 4)) throw DomainError("q_tilde0: requires 0 < beta <= m/4");
    double den = m + 1 - 2 * beta;
    if (!(den > 0)) throw DomainError("q_tilde0: m + 1 - 2 beta must be positive");
    return (2 * m + 6) / den;
}

struct GammaDeltaRanges {
    double gamma_lo;
    double gamma_hi;
    double delta_hi;  // at gamma = midpoint
    bool empty;
};

inline GammaDeltaRanges gamma_delta_ranges(double m, double alpha, double p) {
    if (!(m > 0) || !(p > 1)) throw DomainError("gamma_delta_ranges: requires m > 0, p > 1");
    GammaDeltaRanges r;
    r.gamma_lo = 1.0 / (p * (p + 1));
    r.gamma_hi = ((m + 1) * p - (2 * alpha + 3)) / ((m + 2) * (p + 1));
    r.empty = !(r.gamma_hi > r.gamma_lo);
    double mid = 0.5 * (r.gamma_lo + r.gamma_hi);
    r.delta_hi = (m + 1) / (m + 2) - mid - 1.0 / (p + 1);
    return r;
}

// G_m(p) from the small-m admissibility analysis.
inline double G_m(double m, double p) {
    return (3 * m + 9) * p * p * p - (2 * m + 3) * p * p - (11 * m + 25) * p - (6 * m + 13);
}

inline double p1_threshold_poly(double m, double p) {
    return (2 * m + 5) * p * p - (4 * m + 8) * p - (2 * m + 5);
}

inline double p_star_poly(double mu, double p) {
    return 3 * (mu + 1) * p * p - 2 * (mu + 4) * p - (mu + 11);
}

inline double mu1_poly(double mu) { return mu * mu * mu + 13 * mu * mu - 21 * mu - 17; }

inline double p1_of_m(double m) {
    return quadratic_positive_root(2 * m + 5, -(4 * m + 8), -(2 * m + 5));
}

inline double pbar_star_of_m(double m) {
    if (!(m > 0)) throw DomainError("pbar_star_of_m: requires m > 0");
    return bracketed_root([m](double p) { return G_m(m, p); }, 1.0, 10.0, "pbar_star");
}

inline double p_star_of_mu(double mu) {
    return quadratic_positive_root(3 * (mu + 1), -2 * (mu + 4), -(mu + 11));
}

struct ThresholdRoots {
    double mu1;
    double m1;
    double m_p1_crossover;
    std::map<std::string, double> residuals;
};

inline ThresholdRoots compute_threshold_roots() {
    ThresholdRoots r;
    r.mu1 = bracketed_root(mu1_poly, 1.0, 2.0, "mu1");
    r.m1 = bracketed_root([](double m) { return G_m(m, m + 2); }, 1e-9, 0.2, "m1");
    r.m_p1_crossover =
        bracketed_root([](double m) { return p1_of_m(m) - (m + 2); }, 1e-9, 0.2, "p1 crossover");
    r.residuals["mu1"] = mu1_poly(r.mu1);
    r.residuals["m1"] = G_m(r.m1, r.m1 + 2);
    r.residuals["m_p1_crossover"] = p1_of_m(r.m_p1_crossover) - (r.m_p1_crossover + 2);
    return r;
}

inline const ThresholdRoots& threshold_roots() {
    static const ThresholdRoots r = compute_threshold_roots();
    return r;
}

struct ExponentReport {
    double p_strauss = std::numeric_limits<double>::quiet_NaN();
    double p_fujita = std::numeric_limits<double>::quiet_NaN();
    double p_crit = std::numeric_limits<double>::quiet_NaN();
    std::string p_crit_branch;
    double p_conf = std::numeric_limits<double>::quiet_NaN();
    double mu_bar = std::numeric_limits<double>::quiet_NaN();
    double q0 = std::numeric_limits<double>::quiet_NaN();
    std::map<std::string, double> residuals;
};

enum class RegimeLabel {
    BlowupKnown,
    GlobalThm11i,
    GlobalThm11ii,
    GlobalThm12,
    GlobalThm13,
    GlobalForthcoming,
    MuEqualsOneOpen,
    Unclassified
};

inline const char* to_string(RegimeLabel l) {
    switch (l) {
        case RegimeLabel::BlowupKnown: return "BlowupKnown";
        case RegimeLabel::GlobalThm11i: return "GlobalThm11i";
        case RegimeLabel::GlobalThm11ii: return "GlobalThm11ii";
        case RegimeLabel::GlobalThm12: return "GlobalThm12";
        case RegimeLabel::GlobalThm13: return "GlobalThm13";
        case RegimeLabel::GlobalForthcoming: return "GlobalForthcoming";
        case RegimeLabel::MuEqualsOneOpen: return "MuEqualsOneOpen";
        case RegimeLabel::Unclassified: return "Unclassified";
    }
    return "?";
}

struct Regime {
    RegimeLabel label = RegimeLabel::Unclassified;
    std::optional<double> nu_choice;
    std::vector<std::string> citations;
};

inline double two_sqrt2_minus1() { return 2 * std::sqrt(2.0) - 1; }

// nu rule of the large-damping global result, in damped variables.
inline double nu_rule_damped(double mu, double p, double mu1) {
    if (mu < mu1) return p + 1.0 / 3.0;
    return p < p_star_of_mu(mu) ? p : p + 1.0 / 3.0;
}

inline Regime classify_damped(int n, double mu, double p) {
    Regime r;
    if (!(mu > 0) || !(p > 1)) throw DomainError("classify_regime: requires mu > 0, p > 1");
    double pc = p_crit_damped(n, mu).value;
    if (p <= pc) {
        r.label = RegimeLabel::BlowupKnown;
        r.citations = {"1 < p <= p_crit: blowup for suitable data"};
        return r;
    }
    if (n != 2) return r;
    if (mu == 1.0) {
        r.label = RegimeLabel::MuEqualsOneOpen;
        r.citations = {"mu = 1 is left open"};
        return r;
    }
    if (mu >= 2) {
        r.label = RegimeLabel::GlobalForthcoming;
        r.citations = {"mu >= 2: not covered here"};
        return r;
    }
    double pconf = p_conf_damped(mu);
    if (p >= pconf) {
        r.label = RegimeLabel::GlobalForthcoming;
        r.citations = {"p >= p_conf: not covered here"};
        return r;
    }
    double t = two_sqrt2_minus1();
    if (mu < t) {
        r.label = RegimeLabel::GlobalThm11i;
        r.citations = {"p_s(2+mu) < p < p_conf, mu in (0,1) u (1, 2sqrt2-1)"};
        return r;
    }
    if (p < 2 / (mu - 1)) {
        r.label = RegimeLabel::GlobalThm11ii;
        r.citations = {"p_s(2+mu) < p < 2/(mu-1), mu in [2sqrt2-1, 2)"};
        return r;
    }
    r.label = RegimeLabel::GlobalThm12;
    r.nu_choice = nu_rule_damped(mu, p, threshold_roots().mu1);
    r.citations = {"2/(mu-1) <= p < p_conf, mixed-norm scheme"};
    return r;
}

inline Regime classify_tricomi(double m, double alpha, double p) {
    Regime r;
    if (!(m > 0) || !(p > 1)) throw DomainError("classify_regime: requires m > 0, p > 1");
    double pc = p_crit_tricomi(m, alpha).value;
    if (p <= pc) {
        r.label = RegimeLabel::BlowupKnown;
        r.citations = {"1 < p <= p_crit(2,m,alpha): blowup for suitable data"};
        return r;
    }
    if (p >= p_conf_tricomi(m, alpha)) {
        r.label = RegimeLabel::GlobalForthcoming;
        r.citations = {"p >= p_conf: not covered here"};
        return r;
    }
    r.label = RegimeLabel::GlobalThm13;
    r.citations = {"p_crit(2,m,alpha) < p < p_conf(2,m,alpha): small-data global existence"};
    return r;
}

inline Regime classify_regime(const ModelParams& mp) {
    if (mp.form == Form::DampedWave) return classify_damped(mp.n, mp.mu, mp.p);
    if (mp.n != 2) return Regime{};
    return classify_tricomi(mp.m, mp.alpha, mp.p);
}

inline ExponentReport exponent_report_damped(int n, double mu) {
    ExponentReport r;
    r.p_strauss = strauss_exponent(n + mu);
    r.p_fujita = fujita_exponent(n);
    auto pc = p_crit_damped(n, mu);
    r.p_crit = pc.value;
    r.p_crit_branch = to_string(pc.branch);
    r.mu_bar = mu_bar(n);
    if (n == 2 && mu > 0 && mu < 2 && mu != 1.0) r.p_conf = p_conf_damped(mu);
    r.residuals["strauss"] = strauss_poly(n + mu, r.p_strauss);
    return r;
}

inline ExponentReport exponent_report_tricomi(double m, double alpha) {
    ExponentReport r;
    r.p_conf = p_conf_tricomi(m, alpha);
    if (m > 0) {
        auto pc = p_crit_tricomi(m, alpha);
        r.p_crit = pc.value;
        r.p_crit_branch = to_string(pc.branch);
        r.q0 = q0_endpoint(m, alpha).value;
        r.residuals["p2"] = p2_poly(m, alpha, p2_tricomi(m, alpha));
    }
    return r;
}

}  // namespace tricomi
