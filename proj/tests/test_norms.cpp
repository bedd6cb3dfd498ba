#include <gtest/gtest.h>

#include <cmath>

#include "tricomi/norms.hpp"

using namespace tricomi;

namespace {

Field2D gaussian(const Grid& g, double cx = 0, double cy = 0) {
    return Field2D::from_function(g, [&](double x, double y) {
        double dx = x - cx, dy = y - cy;
        return std::exp(-(dx * dx + dy * dy));
    });
}

SimTrace constant_trace(const Field2D& u, std::vector<double> times) {
    SimTrace tr;
    tr.grid = u.grid;
    tr.times = times;
    for (double t : times) tr.snapshots.push_back(Snapshot{t, u, Field2D(u.grid)});
    return tr;
}

}  // namespace

TEST(Weights, WeightAtMatchesWeightSpecValue) {
    for (auto kind : {WeightKind::PsiMuLightCone, WeightKind::PhiMLightCone, WeightKind::PhiMShifted,
                      WeightKind::PhiMCone, WeightKind::None}) {
        WeightSpec w{kind, 0.3, 0.7, 1.5, 0.4};
        for (double t : {1.0, 2.5, 7.0}) {
            auto f = weight_at(w, t);
            for (double r2 : {0.0, 1.0, 4.0, 30.0, 200.0}) EXPECT_NEAR(f(r2), w.value(t, r2), 1e-13 * (1 + w.value(t, r2)));
        }
    }
}

TEST(Weights, ComparisonRatiosStayBelowOne) {
    std::vector<double> ts{1, 2, 5, 10, 20};
    auto c = weight_comparison_ratios(2, ts);
    ASSERT_EQ(c.size(), ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        double s = phi_m(2, ts[i]);
        // the edge |x| = phi + 1 gives (2s + 2)/(2s + 3)
        EXPECT_GE(c[i], (2 * s + 2) / (2 * s + 3) - 1e-12);
        EXPECT_LE(c[i], 1.0);
    }
}

TEST(SlicePower, GaussianL2AndSup) {
    Grid g{128, 8};
    Field2D u = gaussian(g);
    WeightSpec none;
    EXPECT_NEAR(weighted_slice_power(u, none, 1, 2), M_PI / 2, 1e-12);
    EXPECT_NEAR(weighted_slice_power(u, none, 1, 1), M_PI, 1e-12);
    EXPECT_NEAR(weighted_slice_power(u, none, 1, kInf), 1.0, 1e-15);
    // time factor enters as t^{theta q}
    WeightSpec tw{WeightKind::None, 0, 0.5};
    EXPECT_NEAR(weighted_slice_power(u, tw, 4, 2), 4 * M_PI / 2, 1e-11);
}

TEST(TimeQuadrature, TrapezoidAndErrorEstimates) {
    TimeQuadrature tq;
    for (int k = 0; k <= 200; ++k) {
        double t = 1 + k * 0.045;
        tq.add(t, std::pow(t, -3));
    }
    double T = tq.t.back();
    double exact = 0.5 * (1 - 1 / (T * T));
    EXPECT_NEAR(tq.integral(), exact, 1e-3);
    // the halving estimate tracks the true trapezoid error
    EXPECT_NEAR(tq.halving_error(200) / (std::abs(tq.integral() - exact) / exact), 1.0, 0.05);
    double exact_share = (0.5 / (T * T)) / (0.5 * (1 - 1 / (T * T)));
    EXPECT_NEAR(tq.tail_share(200) / exact_share, 1.0, 0.02);
    EXPECT_THROW(tq.add(T, 1), DomainError);
}

TEST(SpacetimeNorm, ConstantSnapshots) {
    Grid g{64, 8};
    auto tr = constant_trace(gaussian(g), {1, 1.5, 2, 2.5, 3});
    auto r = weighted_spacetime_norm(tr, WeightSpec{}, 2);
    EXPECT_NEAR(r.value, std::sqrt(2 * M_PI / 2), 1e-10);
    EXPECT_EQ(r.samples, 5u);
    EXPECT_NEAR(weighted_spacetime_norm(tr, WeightSpec{}, kInf).value, 1.0, 1e-15);
    SimTrace empty = tr;
    empty.snapshots.clear();
    EXPECT_THROW(weighted_spacetime_norm(empty, WeightSpec{}, 2), InsufficientSamples);
    EXPECT_THROW(weighted_spacetime_norm(tr, WeightSpec{}, 0.5), DomainError);
}

TEST(PolarResampler, RadialGaussian) {
    Grid g{128, 8};
    PolarResampler P(g);
    double err = 0;
    auto A = P.angular_l2(gaussian(g), &err);
    EXPECT_LT(err, 1e-4);
    const auto& r = P.radii();
    for (std::size_t i = 0; i < r.size(); i += 16)
        EXPECT_NEAR(A[i], std::sqrt(2 * M_PI) * std::exp(-r[i] * r[i]), 1e-5);
    // nu = 2 recovers the L^2 norm
    EXPECT_NEAR(P.radial_norm(A, 2), std::sqrt(M_PI / 2), 1e-6);
    EXPECT_NEAR(P.radial_norm(A, kInf), A[0], 0);
    EXPECT_NEAR(P.sample(gaussian(g), 0.3, -0.41), std::exp(-(0.09 + 0.41 * 0.41)), 1e-5);
}

TEST(MixedNorm, ReducesToL2InSpaceAndFlagsUnderResolution) {
    Grid g{128, 8};
    auto tr = constant_trace(gaussian(g), {1, 2, 3});
    auto r = mixed_norm_LqLnuL2(tr, 2, 2, 0);
    EXPECT_NEAR(r.value, std::sqrt(2 * M_PI / 2), 1e-5);
    EXPECT_DOUBLE_EQ(r.nu, 2);
    // t^1 weight: int_1^3 t^2 dt with the trapezoid on three nodes
    auto rw = mixed_norm_LqLnuL2(tr, 2, 2, 1);
    EXPECT_NEAR(rw.value, std::sqrt((0.5 * (1 + 4) + 0.5 * (4 + 9)) * M_PI / 2), 1e-5);
    Grid coarse{32, 8};
    auto sharp = constant_trace(Field2D::from_function(coarse, [](double x, double y) {
                                    return std::exp(-6 * (x * x + y * y));
                                }),
                                {1, 2});
    EXPECT_THROW(mixed_norm_LqLnuL2(sharp, 2, 2, 0, 1e-6), ResolutionError);
}

TEST(Sobolev, GaussianNorms) {
    Grid g{128, 8};
    Field2D u = gaussian(g);
    EXPECT_NEAR(sobolev_norm(u, 0, true), std::sqrt(M_PI / 2), 1e-12);
    EXPECT_NEAR(sobolev_norm(u, 1, true), std::sqrt(M_PI), 1e-12);
    EXPECT_NEAR(sobolev_norm(u, 1, false), std::sqrt(M_PI / 2 + M_PI), 1e-12);
    EXPECT_THROW(sobolev_norm(u, -0.5, true), DomainError);
    EXPECT_NEAR(sobolev_w1_proxy(u, 0), M_PI, 1e-10);
}

TEST(VectorFields, DerivativesAndRotation) {
    Grid g{128, 8};
    Field2D u = gaussian(g);
    Field2D d1 = vector_field_apply(u, VectorField::D1);
    Field2D rot = vector_field_apply(u, VectorField::Rotation);
    double e1 = 0, er = 0;
    for (int iy = 0; iy < g.N; ++iy)
        for (int ix = 0; ix < g.N; ++ix) {
            double x = g.x(ix), y = g.x(iy);
            e1 = std::max(e1, std::abs(d1(ix, iy).real() + 2 * x * std::exp(-(x * x + y * y))));
            er = std::max(er, std::abs(rot(ix, iy).real()));
        }
    EXPECT_LT(e1, 1e-10);
    EXPECT_LT(er, 1e-10);
    // rotation of an off-centre bump is not zero
    EXPECT_GT(sup_norm(vector_field_apply(gaussian(g, 1.5, 0), VectorField::Rotation)), 0.5);
    EXPECT_STREQ(to_string(VectorField::Rotation), "Rotation");
}

TEST(DecayFit, PowerLawAndSampleChecks) {
    std::vector<double> t, v;
    for (int k = 0; k < 30; ++k) {
        t.push_back(2 * std::pow(20.0, k / 29.0));
        v.push_back(3 * std::pow(t.back(), -1.25));
    }
    auto f = decay_fit(t, v);
    EXPECT_NEAR(f.slope, -1.25, 1e-12);
    EXPECT_NEAR(std::exp(f.intercept), 3, 1e-10);
    EXPECT_NEAR(f.r2, 1, 1e-12);
    EXPECT_THROW(decay_fit({1, 2, 3}, {1, 2, 3}), InsufficientSamples);
    std::vector<double> narrow(12), vals(12, 1.0);
    for (int k = 0; k < 12; ++k) narrow[k] = 1 + k * 0.5;
    EXPECT_THROW(decay_fit(narrow, vals), InsufficientSamples);
}

TEST(RefinedSup, RecoversOffGridPeak) {
    Grid g{32, 8};
    double h = g.h();
    Field2D u = gaussian(g, 0.5 * h, 0.5 * h);
    double coarse = refined_sup(u, 1), fine = refined_sup(u, 8);
    EXPECT_LT(coarse, 0.95);
    EXPECT_NEAR(fine, 1.0, 2e-3);
    EXPECT_GT(fine, coarse);
    EXPECT_THROW(refined_sup(u, 3), DomainError);
}

namespace {

ProbeParams small_probe(ProbeStatement s) {
    ProbeParams P;
    P.statement = s;
    P.m = 2;
    P.alpha = 2;
    P.q = 4;
    P.gamma = 0.0625;
    P.delta = 0.2;
    P.gamma2 = 0.35;
    P.grid = Grid{64, 16};
    P.t0 = 1;
    P.horizons = {3, 4};
    P.sample_dt = 0.1;
    P.data_radius = 1;
    P.members = 3;
    P.forcing_ta = 2;
    P.forcing_tb = 2.6;
    return P;
}

}  // namespace

TEST(Probe, HypothesisChecksNameTheConstraint) {
    auto P = small_probe(ProbeStatement::Lem31);
    EXPECT_NO_THROW(check_probe_hypotheses(P));
    P.gamma = 0.2;
    try {
        check_probe_hypotheses(P);
        FAIL() << "expected a violation";
    } catch (const HypothesisViolation& e) {
        EXPECT_NE(std::string(e.what()).find("gamma"), std::string::npos);
    }
    auto T = small_probe(ProbeStatement::Thm51);
    T.gamma2 = 0.2;
    EXPECT_THROW(check_probe_hypotheses(T), HypothesisViolation);
    for (auto s : {ProbeStatement::Lem31, ProbeStatement::Thm51, ProbeStatement::Lem32, ProbeStatement::Lem61})
        EXPECT_EQ(probe_statement_from_string(to_string(s)), s);
    EXPECT_THROW(probe_statement_from_string("Lem99"), DomainError);
}

TEST(Probe, RatiosAreFiniteAndMonotoneInHorizon) {
    for (auto s : {ProbeStatement::Lem31, ProbeStatement::Thm51}) {
        auto P = small_probe(s);
        auto r = strichartz_ratio_probe(P);
        ASSERT_EQ(r.max_ratio.size(), 2u);
        for (std::size_t h = 0; h < 2; ++h)
            for (int j = 0; j < P.members; ++j) {
                EXPECT_TRUE(std::isfinite(r.ratios[h][j])) << to_string(s);
                EXPECT_GT(r.ratios[h][j], 0) << to_string(s);
            }
        // the LHS integrates over a longer interval at the later horizon
        for (int j = 0; j < P.members; ++j) EXPECT_GE(r.lhs[1][j], r.lhs[0][j]);
        EXPECT_NEAR(r.growth, r.max_ratio[1] / r.max_ratio[0] - 1, 1e-14);
        EXPECT_EQ(r.growth_flag, r.growth > 0.2);
    }
}

TEST(Probe, DeterministicAcrossThreadCounts) {
    auto P = small_probe(ProbeStatement::Lem31);
    set_thread_count(1);
    auto a = strichartz_ratio_probe(P);
    set_thread_count(4);
    auto b = strichartz_ratio_probe(P);
    set_thread_count(1);
    EXPECT_EQ(a.max_ratio, b.max_ratio);
}
