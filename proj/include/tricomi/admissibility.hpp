#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "exponents.hpp"

namespace tricomi {

enum class ConstraintKind { Equality, InequalitySlack, StrictSlack };

struct ConstraintResidual {
    std::string name;
    double value;
    ConstraintKind kind;
};

inline constexpr double kAdmissTol = 1e-12;

struct AdmissiblePair {
    double q = 0, nu = 0;
    double q_tilde = 0, nu_tilde = 0;
    double q_tilde_prime = 0, nu_tilde_prime = 0;
    double s = 0;
    std::vector<ConstraintResidual> residuals;
    bool feasible = false;

    void add(std::string name, double v, ConstraintKind k) { residuals.push_back({std::move(name), v, k}); }

    void finalize() {
        feasible = true;
        for (auto& r : residuals) {
            bool ok = false;
            switch (r.kind) {
                case ConstraintKind::Equality: ok = std::abs(r.value) <= kAdmissTol; break;
                case ConstraintKind::InequalitySlack: ok = r.value >= -kAdmissTol; break;
                case ConstraintKind::StrictSlack: ok = r.value > kAdmissTol; break;
            }
            if (!ok) feasible = false;
        }
    }

    const ConstraintResidual* find(const std::string& name) const {
        for (auto& r : residuals)
            if (r.name == name) return &r;
        return nullptr;
    }
};

inline double dual_exponent(double r) { return r / (r - 1); }

inline double sobolev_index_s(double m, double p) {
    return 1 - (2 * (m - p + 1) + 4) / ((m + 2) * (p - 1));
}

inline double sqrt2_minus1() { return std::sqrt(2.0) - 1; }

inline void require_ugly_rectangle(double m, double p, const char* who) {
    double top = (3 * m + 7) / (m + 3);
    if (!(m > 0 && m <= sqrt2_minus1() + 1e-15) || !(p >= m + 2 - 1e-15 && p < top)) {
        std::ostringstream os;
        os << who << ": (m, p) = (" << m << ", " << p
           << ") outside 0 < m <= sqrt(2)-1, m+2 <= p < (3m+7)/(m+3)";
        throw DomainError(os.str());
    }
}

// Right side of the scaling equality 1/q + (m+2)/nu = R.
inline double ugly_rhs(double m, double p) { return (m - p + 3) / (p - 1) - (m - p + 1) / (p + 1); }

inline double ugly_upper(double m, double p) { return (m + 1) / 2 - (m - p + 1) / (p + 1); }

inline double ugly_lower(double m, double p) { return 3 / (2 * p) + (m - p + 1) / ((p + 1) * p); }

inline double ugly_strict_shift(double m, double p) { return (m - p + 1) / ((m + 2) * (p + 1)); }

inline AdmissiblePair evaluate_ugly(double m, double p, double q, double nu) {
    AdmissiblePair a;
    a.q = q;
    a.nu = nu;
    a.s = sobolev_index_s(m, p);
    // closure q = p q~', nu = p nu~'
    a.q_tilde_prime = q / p;
    a.nu_tilde_prime = nu / p;
    a.q_tilde = a.q_tilde_prime > 1 ? dual_exponent(a.q_tilde_prime) : INFINITY;
    a.nu_tilde = a.nu_tilde_prime > 1 ? dual_exponent(a.nu_tilde_prime) : INFINITY;
    double lhs2 = 1 / q + (m + 2) / (2 * nu);
    a.add("q_lower", q - 2, ConstraintKind::InequalitySlack);
    a.add("q_upper", 2 * p - q, ConstraintKind::InequalitySlack);
    a.add("nu_lower", nu - 2, ConstraintKind::InequalitySlack);
    a.add("nu_upper", 2 * p - nu, ConstraintKind::InequalitySlack);
    a.add("strict", 1 / nu + ugly_strict_shift(m, p), ConstraintKind::StrictSlack);
    a.add("scaling_equality", 1 / q + (m + 2) / nu - ugly_rhs(m, p), ConstraintKind::Equality);
    a.add("upper", ugly_upper(m, p) - lhs2, ConstraintKind::InequalitySlack);
    a.add("lower", lhs2 - ugly_lower(m, p), ConstraintKind::InequalitySlack);
    a.finalize();
    return a;
}

inline AdmissiblePair check_ugly_system(double m, double p, double q, double nu) {
    require_ugly_rectangle(m, p, "check_ugly_system");
    return evaluate_ugly(m, p, q, nu);
}

inline double q_from_nu(double m, double p, double nu) {
    double inv = ugly_rhs(m, p) - (m + 2) / nu;
    if (!(inv > 0)) {
        std::ostringstream os;
        os << "q_from_nu: 1/q = " << inv << " <= 0 at (m, p, nu) = (" << m << ", " << p << ", " << nu
           << ")";
        throw InfeasibleError(os.str());
    }
    return 1 / inv;
}

// Closed forms of the two cases of the nu analysis.
inline double q_case_equals_p(double m, double p) {
    return p * (p - 1) * (p + 1) / ((p + 1) * (m + 2 - m * p) + 2 * p * (m - p + 1));
}

inline double q_case_plus_third(double m, double p) {
    return (p - 1) * (p + 1) * (3 * p + 1) / ((m + 2) * (-3 * p * p + 6 * p + 5));
}

// Interval of x = 1/nu on which every line of the system holds once q is
// eliminated through the scaling equality. Each line is linear in x.
struct NuInterval {
    double x_lo, x_hi;
    bool empty;
};

inline NuInterval feasible_inverse_nu(double m, double p) {
    double R = ugly_rhs(m, p), k = m + 2;
    double lo = 1 / (2 * p), hi = 0.5;
    lo = std::max(lo, (R - 0.5) / k);                        // q >= 2
    hi = std::min(hi, (R - 1 / (2 * p)) / k);                // q <= 2p
    lo = std::max(lo, -ugly_strict_shift(m, p) + 4 * kAdmissTol);  // strict line
    lo = std::max(lo, 2 * (R - ugly_upper(m, p)) / k);       // upper line
    hi = std::min(hi, 2 * (R - ugly_lower(m, p)) / k);       // lower line
    return {lo, hi, !(hi >= lo)};
}

enum class NuBranch { EqualsP, PlusOneThird, IntervalMidpoint };

inline const char* to_string(NuBranch b) {
    switch (b) {
        case NuBranch::EqualsP: return "EqualsP";
        case NuBranch::PlusOneThird: return "PlusOneThird";
        case NuBranch::IntervalMidpoint: return "IntervalMidpoint";
    }
    return "?";
}

struct NuSelection {
    double nu;
    double q;
    NuBranch branch;
    double rule_nu;          // the two-branch rule's value
    NuBranch rule_branch;    // EqualsP or PlusOneThird
    bool rule_feasible;      // whether the rule's pair passes every line
};

// The two-branch rule exactly as stated: nu = p + 1/3 for m >= m1, and for
// m < m1 nu = p below pbar*(m), p + 1/3 above.
inline std::pair<double, NuBranch> nu_rule(double m, double p) {
    const auto& th = threshold_roots();
    if (m < th.m1 && p < pbar_star_of_m(m)) return {p, NuBranch::EqualsP};
    return {p + 1.0 / 3.0, NuBranch::PlusOneThird};
}

inline NuSelection select_nu(double m, double p) {
    require_ugly_rectangle(m, p, "select_nu");
    NuSelection s;
    auto [rn, rb] = nu_rule(m, p);
    s.rule_nu = rn;
    s.rule_branch = rb;
    s.rule_feasible = false;
    double inv = ugly_rhs(m, p) - (m + 2) / rn;
    if (inv > 0) s.rule_feasible = evaluate_ugly(m, p, 1 / inv, rn).feasible;
    if (s.rule_feasible) {
        s.nu = rn;
        s.q = 1 / inv;
        s.branch = rb;
        return s;
    }
    // the rule's q overshoots 2p on part of the rectangle; take the centre of
    // the feasible 1/nu interval instead
    auto iv = feasible_inverse_nu(m, p);
    if (iv.empty) {
        std::ostringstream os;
        os << "select_nu: no admissible nu at (m, p) = (" << m << ", " << p << ")";
        throw InfeasibleError(os.str());
    }
    double x = 0.5 * (iv.x_lo + iv.x_hi);
    s.nu = 1 / x;
    s.q = q_from_nu(m, p, s.nu);
    s.branch = NuBranch::IntervalMidpoint;
    return s;
}

// Intermediate window 0 < m < 0.092, m+2 < p < p1(m) with nu = p.
inline std::optional<double> case_one_alternative(double m, double p) {
    const auto& th = threshold_roots();
    if (m > 0 && m < th.m_p1_crossover && p > m + 2 && p < p1_of_m(m)) return p;
    return std::nullopt;
}

inline AdmissiblePair mixed_norm_constraints(double m, double p, double q, double nu, double q_tilde,
                                             double nu_tilde, bool check_closure = false) {
    AdmissiblePair a;
    a.q = q;
    a.nu = nu;
    a.q_tilde = q_tilde;
    a.nu_tilde = nu_tilde;
    a.q_tilde_prime = dual_exponent(q_tilde);
    a.nu_tilde_prime = dual_exponent(nu_tilde);
    a.s = sobolev_index_s(m, p);
    double th = (m - p + 1) / (p + 1);
    double U = ugly_upper(m, p);
    a.add("q_lower", q - 2, ConstraintKind::InequalitySlack);
    a.add("nu_lower", nu - 2, ConstraintKind::InequalitySlack);
    a.add("q_tilde_lower", q_tilde - 2, ConstraintKind::InequalitySlack);
    a.add("nu_tilde_lower", nu_tilde - 2, ConstraintKind::InequalitySlack);
    a.add("knapsack", U - 1 / q - (m + 2) / (2 * nu), ConstraintKind::InequalitySlack);
    a.add("knapsack_tilde", U - 1 / q_tilde - (m + 2) / (2 * nu_tilde), ConstraintKind::InequalitySlack);
    double left = th + 1 / q + (m + 2) / nu;
    double right = 1 / a.q_tilde_prime + (m + 2) / a.nu_tilde_prime + (p - m - 1) / (p + 1) - 2;
    a.add("scaling_equality", left - right, ConstraintKind::Equality);
    a.add("sobolev_scaling", left - (m + 2) / 2 * (1 - a.s), ConstraintKind::Equality);
    if (check_closure) {
        a.add("closure_q", q - p * a.q_tilde_prime, ConstraintKind::Equality);
        a.add("closure_nu", nu - p * a.nu_tilde_prime, ConstraintKind::Equality);
    }
    a.finalize();
    return a;
}

inline double m_from_mu_ws(double mu) { return 2 * (2 - mu) / (mu - 1); }

inline AdmissiblePair ws_system_check(double mu, double p, double q, double nu) {
    double lo = two_sqrt2_minus1();
    if (!(mu >= lo - 1e-15 && mu < 2) || !(p >= 2 / (mu - 1) - 1e-12 && p < (mu + 5) / (mu + 1))) {
        std::ostringstream os;
        os << "ws_system_check: (mu, p) = (" << mu << ", " << p << ") outside the region";
        throw DomainError(os.str());
    }
    AdmissiblePair a;
    a.q = q;
    a.nu = nu;
    a.s = 1 - (mu + 1 - p * (mu - 1)) / (p - 1);
    a.q_tilde_prime = q / p;
    a.nu_tilde_prime = nu / p;
    a.q_tilde = a.q_tilde_prime > 1 ? dual_exponent(a.q_tilde_prime) : INFINITY;
    a.nu_tilde = a.nu_tilde_prime > 1 ? dual_exponent(a.nu_tilde_prime) : INFINITY;
    double g = 3 - mu - p * (mu - 1), d = mu - 1;
    double lhs2 = 1 / q + 1 / (nu * d);
    a.add("q_lower", q - 2, ConstraintKind::InequalitySlack);
    a.add("q_upper", 2 * p - q, ConstraintKind::InequalitySlack);
    a.add("nu_lower", nu - 2, ConstraintKind::InequalitySlack);
    a.add("nu_upper", 2 * p - nu, ConstraintKind::InequalitySlack);
    a.add("strict", 1 / nu + g / (2 * (p + 1)), ConstraintKind::StrictSlack);
    a.add("scaling_equality",
          1 / q + 2 / (nu * d) - ((mu + 1 - p * d) / ((p - 1) * d) - g / ((p + 1) * d)),
          ConstraintKind::Equality);
    a.add("upper", (3 - mu) / (2 * d) - g / ((p + 1) * d) - lhs2, ConstraintKind::InequalitySlack);
    a.add("lower", lhs2 - (3 / (2 * p) + g / (p * (p + 1) * d)), ConstraintKind::InequalitySlack);
    a.finalize();
    return a;
}

struct FeasibleCell {
    double m, p;
    NuSelection sel;
    AdmissiblePair pair;
};

inline std::vector<FeasibleCell> feasible_region_scan(const std::vector<double>& m_grid,
                                                      const std::vector<double>& p_grid_unit) {
    // p_grid_unit holds fractions in [0,1) of each row's p-interval
    std::vector<FeasibleCell> out;
    out.reserve(m_grid.size() * p_grid_unit.size());
    for (double m : m_grid) {
        double lo = m + 2, hi = (3 * m + 7) / (m + 3);
        for (double f : p_grid_unit) {
            double p = lo + f * (hi - lo);
            FeasibleCell c{m, p, select_nu(m, p), {}};
            c.pair = check_ugly_system(m, p, c.sel.q, c.sel.nu);
            out.push_back(std::move(c));
        }
    }
    return out;
}

// Cell centres in m and left-closed fractions in p; the open end p = (3m+7)/(m+3) is never hit.
inline std::vector<double> default_m_grid(int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = sqrt2_minus1() * (i + 0.5) / n;
    return g;
}

inline std::vector<double> default_p_fractions(int n) {
    std::vector<double> g(n);
    for (int j = 0; j < n; ++j) g[j] = double(j) / n;
    return g;
}

}  // namespace tricomi
