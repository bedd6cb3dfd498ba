#include <gtest/gtest.h>

#include <cmath>

#include "tricomi/propagator.hpp"
#include "tricomi/simulator.hpp"

using namespace tricomi;

namespace {

Field2D dealiased(const Field2D& f) {
    Field2D s = f.to_spectral();
    auto mask = dealias_mask(f.grid);
    for (std::size_t i = 0; i < s.size(); ++i)
        if (!mask[i]) s.values[i] = 0;
    Field2D r = s.to_physical();
    for (auto& v : r.values) v = v.real();
    return r;
}

double rel_l2(const Field2D& a, const Field2D& b) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a.values[i].real() - b.values[i].real());
        den += std::norm(b.values[i].real());
    }
    return std::sqrt(num / den);
}

SimConfig small_config(ModelParams mp, double t_max, Grid g = Grid{64, 6}) {
    SimConfig c;
    c.params = mp;
    c.grid = g;
    c.t0 = 1;
    c.t_max = t_max;
    c.rtol = 1e-10;
    c.atol = 1e-13;
    c.monitor_dt = 0.25;
    c.keep_snapshots = true;
    return c;
}

}  // namespace

TEST(InitialData, ZeroEpsilonGivesZeroFields) {
    auto d = make_initial_data(Grid{32, 4}, DataSpec{DataKind::GaussianBump, 0.0, 1.0});
    EXPECT_EQ(sup_norm(d.u0), 0.0);
    EXPECT_EQ(sup_norm(d.u1), 0.0);
}

TEST(InitialData, ScaledAndSupportedInBall) {
    Grid g{128, 3};
    for (auto k : {DataKind::GaussianBump, DataKind::SmoothCompactBump, DataKind::AnnularBump}) {
        auto d = make_initial_data(g, DataSpec{k, 0.3, 1.0, 0, 0, 7});
        EXPECT_NEAR(std::max(sup_norm(d.u0), sup_norm(d.u1)), 0.3, 1e-15);
        for (int iy = 0; iy < g.N; ++iy)
            for (int ix = 0; ix < g.N; ++ix)
                if (std::hypot(g.x(ix), g.x(iy)) >= 1) {
                    EXPECT_LT(std::abs(d.u0(ix, iy)), 1e-14);
                    EXPECT_LT(std::abs(d.u1(ix, iy)), 1e-14);
                }
    }
}

TEST(InitialData, MollifierProfile) {
    Grid g{32, 2};
    auto d = make_initial_data(g, DataSpec{DataKind::SmoothCompactBump, 1.0, 1.0});
    for (int iy = 0; iy < g.N; ++iy)
        for (int ix = 0; ix < g.N; ++ix) {
            double r2 = g.x(ix) * g.x(ix) + g.x(iy) * g.x(iy);
            double want = r2 < 1 ? std::exp(1 - 1 / (1 - r2)) : 0.0;
            EXPECT_NEAR(d.u0(ix, iy).real(), want, 1e-15);
        }
}

TEST(InitialData, SameSeedBitwiseIdentical) {
    Grid g{64, 3};
    DataSpec s{DataKind::AnnularBump, 0.5, 1.0, 0, 0, 12345};
    auto a = make_initial_data(g, s), b = make_initial_data(g, s);
    EXPECT_TRUE(a.u0.values == b.u0.values);
    EXPECT_TRUE(a.u1.values == b.u1.values);
    s.seed = 54321;
    auto c = make_initial_data(g, s);
    EXPECT_FALSE(a.u0.values == c.u0.values);
}

TEST(Simulator, ContainmentInvariantEnforced) {
    SimConfig c = small_config(ModelParams::tricomi(2, 2, 3), 4, Grid{64, 4});
    InitialData d = make_initial_data(c.grid, DataSpec{});
    EXPECT_THROW(evolve_semilinear(c, d), DomainError);
}

TEST(Simulator, NonlinearityOffMatchesLinearPropagator) {
    for (double m : {0.0, 1.0, 2.0}) {
        SimConfig c = small_config(ModelParams::tricomi(m, 0, 3), 2.5);
        c.nonlinear_coeff = 0;
        c.keep_snapshots = false;
        Field2D u0 = dealiased(Field2D::from_function(c.grid, [](double x, double y) {
            return std::exp(-2 * (x * x + y * y));
        }));
        Field2D u1 = dealiased(Field2D::from_function(c.grid, [](double x, double y) {
            return x * std::exp(-3 * (x * x + y * y));
        }));
        InitialData d{u0, u1, 1, 1};
        c.check_containment = false;
        c.keep_snapshots = true;
        auto tr = evolve_semilinear(c, d);
        ASSERT_EQ(tr.outcome, Outcome::ReachedHorizon);
        auto ref = linear_evolve(u0, u1, m, c.t0, c.t_max);
        const auto& last = tr.snapshots.back();
        ASSERT_DOUBLE_EQ(last.t, c.t_max);
        double err = 0, scale = sup_norm(ref.u);
        for (std::size_t i = 0; i < ref.u.size(); ++i)
            err = std::max(err, std::abs(last.u.values[i].real() - ref.u.values[i].real()));
        EXPECT_LT(err, 1e-7 * std::max(1.0, scale)) << "m=" << m;
    }
}

TEST(Simulator, DampedZeroMuMatchesWave) {
    SimConfig c = small_config(ModelParams::damped(0, 3), 2.5);
    c.nonlinear_coeff = 0;
    c.check_containment = false;
    Field2D u0 = dealiased(Field2D::from_function(c.grid, [](double x, double y) {
        return std::exp(-2 * (x * x + y * y));
    }));
    Field2D u1(c.grid);
    auto tr = evolve_damped(0, 3, c, InitialData{u0, u1, 1, 1});
    auto ref = linear_evolve(u0, u1, 0, c.t0, c.t_max);
    EXPECT_LT(rel_l2(tr.snapshots.back().u, ref.u), 1e-7);
}

TEST(Simulator, ManufacturedSolutionWithSource) {
    // u = cos(t) g(x), g = exp(-|x|^2), forced so that u solves the full equation
    const double m = 1, alpha = 0.5, p = 2.5, a = 0.3;
    SimConfig c = small_config(ModelParams::tricomi(m, alpha, p), 2.0, Grid{64, 6});
    c.check_containment = false;
    c.keep_snapshots = true;
    auto g = [](double x, double y) { return std::exp(-(x * x + y * y)); };
    auto lap_g = [&](double x, double y) { return (4 * (x * x + y * y) - 4) * g(x, y); };
    c.source = [&](double t) {
        return Field2D::from_function(c.grid, [&](double x, double y) {
            double u = a * std::cos(t) * g(x, y);
            double utt = -u;
            double lap = a * std::cos(t) * lap_g(x, y);
            return utt - std::pow(t, m) * lap - std::pow(t, alpha) * std::pow(std::abs(u), p);
        });
    };
    Field2D u0 = Field2D::from_function(c.grid, [&](double x, double y) { return a * std::cos(1.0) * g(x, y); });
    Field2D u1 = Field2D::from_function(c.grid, [&](double x, double y) { return -a * std::sin(1.0) * g(x, y); });
    auto tr = evolve_semilinear(c, InitialData{u0, u1, a, 3});
    ASSERT_EQ(tr.outcome, Outcome::ReachedHorizon);
    for (const auto& s : tr.snapshots) {
        double err = 0;
        for (int iy = 0; iy < c.grid.N; ++iy)
            for (int ix = 0; ix < c.grid.N; ++ix)
                err = std::max(err, std::abs(s.u(ix, iy).real() - a * std::cos(s.t) * g(c.grid.x(ix), c.grid.x(iy))));
        EXPECT_LT(err, 1e-5) << "t=" << s.t;
    }
}

TEST(Simulator, WaveEnergyConserved) {
    SimConfig c = small_config(ModelParams::tricomi(0, 0, 3), 4, Grid{64, 6});
    c.nonlinear_coeff = 0;
    c.check_containment = false;
    InitialData d = make_initial_data(c.grid, DataSpec{DataKind::GaussianBump, 1, 2.0});
    d.u0 = dealiased(d.u0);
    auto tr = evolve_semilinear(c, d);
    auto energy = [&](const Snapshot& sn) {
        Field2D s = sn.u.to_spectral();
        Field2D ux = spectral_derivative(s, 0).to_physical(), uy = spectral_derivative(s, 1).to_physical();
        return 0.5 * grid_integral(c.grid, [&](std::size_t i) {
            return std::norm(sn.ut.values[i].real()) + std::norm(ux.values[i].real()) + std::norm(uy.values[i].real());
        });
    };
    double e0 = energy(tr.snapshots.front());
    for (const auto& sn : tr.snapshots) EXPECT_NEAR(energy(sn), e0, 1e-6 * e0) << "t=" << sn.t;
}

TEST(Simulator, FiniteSpeedWithNonlinearity) {
    const double m = 1;
    SimConfig c = small_config(ModelParams::tricomi(m, 0, 3), 1.75, Grid{256, 8});
    c.data_radius = 2;
    auto d = make_initial_data(c.grid, DataSpec{DataKind::GaussianBump, 0.5, 2.0});
    auto tr = evolve_semilinear(c, d);
    ASSERT_EQ(tr.outcome, Outcome::ReachedHorizon);
    const Grid& g = c.grid;
    for (const auto& s : tr.snapshots) {
        double rad = 2 + phi_m(m, s.t) - phi_m(m, c.t0);
        double out = 0, tot = 0;
        for (int iy = 0; iy < g.N; ++iy)
            for (int ix = 0; ix < g.N; ++ix) {
                double v = std::abs(s.u(ix, iy));
                tot += v;
                if (std::hypot(g.x(ix), g.x(iy)) > rad + 0.3) out += v;
            }
        EXPECT_LT(out, 1e-7 * tot) << "t=" << s.t;
    }
}

TEST(Simulator, SubcriticalLargeDataBlowsUp) {
    SimConfig c = small_config(ModelParams::tricomi(1, 0, 1.8), 8, Grid{128, 14});
    c.rtol = 1e-7;
    c.atol = 1e-10;
    c.keep_snapshots = false;
    auto d = make_initial_data(c.grid, DataSpec{DataKind::SmoothCompactBump, 4.0, 2.0});
    c.check_containment = false;
    auto tr = evolve_semilinear(c, d);
    EXPECT_EQ(tr.outcome, Outcome::BlowupDetected);
    EXPECT_GT(tr.t_event, c.t0);
    EXPECT_LT(tr.t_event, c.t_max);
    for (std::size_t k = 1; k < tr.times.size(); ++k) EXPECT_LT(tr.times[k - 1], tr.times[k]);
    for (const auto& r : tr.scalars) EXPECT_TRUE(std::isfinite(r.sup));
}

TEST(Simulator, BlowupScanMonotoneAndEmpty) {
    SimConfig c = small_config(ModelParams::tricomi(1, 0, 1.8), 8, Grid{128, 14});
    c.rtol = 1e-7;
    c.atol = 1e-10;
    c.keep_snapshots = false;
    c.check_containment = false;
    c.monitor_dt = 1;
    DataSpec ds{DataKind::SmoothCompactBump, 1, 2.0};
    EXPECT_TRUE(blowup_scan({}, {1.0}, c, ds).empty());
    auto cells = blowup_scan({ModelParams::tricomi(1, 0, 1.8)}, {2.0, 4.0, 8.0}, c, ds);
    ASSERT_EQ(cells.size(), 3u);
    for (const auto& cell : cells) EXPECT_EQ(cell.outcome, Outcome::BlowupDetected);
    EXPECT_GT(cells[0].t_event, cells[1].t_event);
    EXPECT_GT(cells[1].t_event, cells[2].t_event);
}

TEST(Simulator, DampedMatchesTransformedTricomi) {
    // Tricomi (m=2, alpha=2, p=3) on tau in [1, 2] corresponds to damped mu=1/2 on t in [1/2, 2]
    const double m = 2, p = 3;
    Grid g{128, 8};
    SimConfig ct = small_config(ModelParams::tricomi(m, 2, p), 2.0, g);
    ct.monitor_dt = 0;
    auto d = make_initial_data(g, DataSpec{DataKind::SmoothCompactBump, 1.0, 1.5, 0, 0, 3});
    d.u0 = dealiased(d.u0);
    d.u1 = dealiased(d.u1);
    ct.data_radius = 1.5;
    auto tt = evolve_semilinear(ct, d);
    ASSERT_EQ(tt.outcome, Outcome::ReachedHorizon);

    SimConfig cd = small_config(ModelParams::damped(0.5, p), phi_m(m, 2.0), g);
    cd.t0 = phi_m(m, 1.0);
    cd.monitor_dt = 0;
    cd.data_radius = 1.5;
    auto map = damped_to_tricomi(0.5, p);
    EXPECT_DOUBLE_EQ(map.m, 2);
    EXPECT_DOUBLE_EQ(map.alpha, 2);
    // initial time derivative: d/dt = (1/tau^{m/2}) d/dtau, tau = 1
    auto td = evolve_damped(0.5, p, cd, d);
    ASSERT_EQ(td.outcome, Outcome::ReachedHorizon);
    auto mapped = field_time_change(td, map);
    EXPECT_NEAR(mapped.times.back(), 2.0, 1e-12);
    EXPECT_LT(rel_l2(mapped.snapshots.back().u, tt.snapshots.back().u), 1e-4);
    EXPECT_LT(rel_l2(mapped.snapshots.back().ut, tt.snapshots.back().ut), 1e-4);
}

TEST(Simulator, DeterministicAcrossThreadCounts) {
    SimConfig c = small_config(ModelParams::tricomi(1, 0, 2.5), 2.0, Grid{128, 6});
    auto d = make_initial_data(c.grid, DataSpec{DataKind::GaussianBump, 0.8, 1.0, 0, 0, 99});
    set_thread_count(1);
    auto a = evolve_semilinear(c, d);
    set_thread_count(4);
    auto b = evolve_semilinear(c, d);
    set_thread_count(1);
    ASSERT_EQ(a.times, b.times);
    for (std::size_t k = 0; k < a.snapshots.size(); ++k) EXPECT_TRUE(a.snapshots[k].u.values == b.snapshots[k].u.values);
    for (std::size_t k = 0; k < a.scalars.size(); ++k) {
        EXPECT_EQ(a.scalars[k].sup, b.scalars[k].sup);
        EXPECT_EQ(a.scalars[k].q0, b.scalars[k].q0);
    }
}

TEST(Simulator, GridRefinementSelfConvergence) {
    const ModelParams mp = ModelParams::tricomi(1, 0, 3);
    auto run = [&](int N, double rtol) {
        SimConfig c = small_config(mp, 2.0, Grid{N, 6});
        c.rtol = rtol;
        c.atol = rtol * 1e-3;
        c.keep_snapshots = false;
        auto d = make_initial_data(c.grid, DataSpec{DataKind::GaussianBump, 0.7, 3.0});
        c.data_radius = 3;
        return evolve_semilinear(c, d).scalars.back();
    };
    auto a = run(128, 1e-8), b = run(256, 1e-9);
    EXPECT_NEAR(a.l2, b.l2, 1e-3 * b.l2);
    EXPECT_NEAR(a.h1, b.h1, 1e-3 * b.h1);
    EXPECT_NEAR(a.sup, b.sup, 1e-3 * b.sup);
}

TEST(Simulator, ChargeConservedAtConformalPower) {
    SimConfig cfg;
    cfg.params = ModelParams::tricomi(2, 2, p_conf_tricomi(2, 2));
    cfg.grid = Grid{64, 10};
    cfg.t0 = 1;
    cfg.t_max = 3;
    cfg.rtol = 1e-9;
    cfg.monitor_dt = 0.02;
    cfg.data_radius = 2;
    auto tr = evolve(cfg, make_initial_data(cfg.grid, DataSpec{DataKind::SmoothCompactBump, 0.5, 2}));
    auto ch = charge_balance(tr);
    EXPECT_EQ(ch.c, 0.0);
    EXPECT_LT(ch.drift, 1e-2);
    EXPECT_TRUE(std::isnan(ch.balance_error));

    cfg.params.p -= 0.5;
    tr = evolve(cfg, make_initial_data(cfg.grid, DataSpec{DataKind::SmoothCompactBump, 0.5, 2}));
    ch = charge_balance(tr);
    EXPECT_GT(ch.drift, 0.05);
    EXPECT_LT(ch.balance_error, 0.05);
}
