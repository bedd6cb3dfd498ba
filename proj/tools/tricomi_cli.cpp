#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tricomi/tricomi.hpp"

using namespace tricomi;

namespace {

// Numerical outcome: exit 3, the manifest is still written.
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Configuration layer: file values overridden by flags; every read is
// recorded so the manifest carries the effective configuration.
class Params {
public:
    Config cfg;
    Json resolved = Json::object();

    double num(const std::string& key, double def) {
        double v = cfg.get_double(key, def);
        resolved[key] = v;
        return v;
    }
    std::optional<double> opt(const std::string& key) {
        if (!cfg.has(key)) return std::nullopt;
        return num(key, 0);
    }
    long long integer(const std::string& key, long long def) {
        long long v = cfg.get_int(key, def);
        resolved[key] = v;
        return v;
    }
    std::string str(const std::string& key, const std::string& def) {
        std::string v = cfg.get_string(key, def);
        resolved[key] = v;
        return v;
    }
    bool flag(const std::string& key, bool def) {
        bool v = cfg.get_bool(key, def);
        resolved[key] = v;
        return v;
    }
    std::vector<double> list(const std::string& key, std::vector<double> def) {
        auto v = cfg.get_list(key, std::move(def));
        resolved[key] = v;
        return v;
    }
    void finish() const {
        auto u = cfg.unused();
        if (!u.empty()) throw DomainError("unknown configuration key '" + u.front() + "'");
    }
};

// One flag bound to one configuration key.
struct Binding {
    std::string flag, key;
    std::string value;
    CLI::Option* opt = nullptr;
};

struct Command {
    CLI::App* app = nullptr;
    std::vector<std::unique_ptr<Binding>> bindings;

    void bind(const std::string& flag, const std::string& key, const std::string& help) {
        auto b = std::make_unique<Binding>();
        b->flag = flag;
        b->key = key;
        b->opt = app->add_option(flag, b->value, help + "  [" + key + "]");
        bindings.push_back(std::move(b));
    }
};

struct Globals {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::vector<std::string> argv;
};

Params load_params(const Globals& G, const Command& c) {
    Params P;
    if (!G.config_path.empty()) P.cfg = Config::load(G.config_path);
    for (const auto& b : c.bindings)
        if (b->opt->count()) P.cfg.set(b->key, b->value);
    if (G.seed) P.cfg.set("seed", std::to_string(*G.seed));
    return P;
}

int resolve_threads(const Globals& G) {
    if (G.threads) {
        if (*G.threads < 1) throw DomainError("--threads must be at least 1");
        return *G.threads;
    }
    if (const char* env = std::getenv("TRICOMI_THREADS")) {
        try {
            double v = parse_number(env);
            if (v >= 1 && v == std::floor(v) && v < 4096) return int(v);
        } catch (const DomainError&) {
        }
        throw DomainError(std::string("TRICOMI_THREADS must be a positive integer, got '") + env + "'");
    }
    return 1;
}

Json num_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

// Writes to the file when --out is given, else to stdout.
struct Sink {
    RunManifest& manifest;
    const Globals& G;

    void primary(const std::string& bytes) {
        if (G.out.empty())
            std::cout << bytes;
        else
            manifest.write_output(G.out, bytes);
    }
    void extra(const std::string& suffix, const std::string& bytes) {
        if (G.out.empty()) return;
        manifest.write_output(G.out + suffix, bytes);
    }
};

void require_out(const Globals& G, const char* cmd) {
    if (G.out.empty()) throw DomainError(std::string(cmd) + ": --out is required");
}

Grid read_grid(Params& P, int N, double L) {
    Grid g{int(P.integer("grid.N", N)), P.num("grid.L", L)};
    g.validate();
    return g;
}

DataSpec read_data(Params& P, DataKind kind, double eps, double R) {
    DataSpec d;
    d.kind = data_kind_from_string(P.str("data.kind", to_string(kind)));
    d.epsilon = P.num("data.epsilon", eps);
    d.radius = P.num("data.radius", R);
    d.seed = std::uint64_t(P.integer("seed", 0));
    return d;
}

// ---- exponents ----

void run_exponents(Params& P, Sink& out) {
    const auto mu = P.opt("model.mu"), m = P.opt("model.m"), alpha = P.opt("model.alpha"), p = P.opt("model.p");
    const std::string fmt = P.str("format", "json");
    if (fmt != "json" && fmt != "csv") throw DomainError("format must be json or csv");
    if (mu && (m || alpha)) throw DomainError("give either --mu or --m/--alpha, not both");
    if (!mu && !(m && alpha)) throw DomainError("requires --mu, or both --m and --alpha");
    if (mu && !p) throw DomainError("--p is required with --mu");
    const int n = mu ? int(P.integer("model.n", 2)) : 2;
    P.finish();

    Json j;
    ExponentReport r;
    std::optional<Regime> reg;
    if (mu) {
        if (n < 1) throw DomainError("--n must be a positive dimension");
        if (!(*mu >= 0)) throw DomainError("--mu must be non-negative");
        r = exponent_report_damped(n, *mu);
        j["form"] = "damped";
        j["n"] = n;
        j["mu"] = *mu;
        reg = classify_regime(ModelParams::damped(*mu, *p, n));
    } else {
        if (!(*m >= 0)) throw DomainError("--m must be non-negative");
        r = exponent_report_tricomi(*m, *alpha);
        j["form"] = "tricomi";
        j["n"] = 2;
        j["m"] = *m;
        j["alpha"] = *alpha;
        if (p) reg = classify_regime(ModelParams::tricomi(*m, *alpha, *p));
    }
    if (p) j["p"] = *p;
    j["p_strauss"] = num_json(r.p_strauss);
    j["p_fujita"] = num_json(r.p_fujita);
    j["p_crit"] = num_json(r.p_crit);
    j["p_crit_branch"] = r.p_crit_branch;
    j["p_conf"] = num_json(r.p_conf);
    j["mu_bar"] = num_json(r.mu_bar);
    j["q0"] = num_json(r.q0);
    Json res = Json::object();
    for (const auto& [k, v] : r.residuals) res[k] = num_json(v);
    j["residuals"] = res;
    if (reg) {
        j["regime"] = to_string(reg->label);
        j["nu_choice"] = reg->nu_choice ? num_json(*reg->nu_choice) : Json(nullptr);
        j["citations"] = reg->citations;
    }

    if (fmt == "json") {
        out.primary(json_text(j));
        return;
    }
    CsvTable t;
    t.header = {"quantity", "value"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        const Json& v = it.value();
        if (v.is_number()) t.add({it.key(), v.get<double>()});
        else if (v.is_string()) t.add({it.key(), v.get<std::string>()});
        else if (v.is_null()) t.add({it.key(), std::string("nan")});
        else if (it.key() == "residuals")
            for (auto r2 = v.begin(); r2 != v.end(); ++r2)
                t.add({"residual." + r2.key(), r2.value().is_null() ? std::nan("") : r2.value().get<double>()});
    }
    out.primary(t.str());
}

// ---- phase ----

std::pair<double, double> parse_range(const std::vector<double>& v, const char* what) {
    if (v.size() != 2 || !(v[0] < v[1])) throw DomainError(std::string(what) + " must be two increasing numbers a,b");
    return {v[0], v[1]};
}

void run_phase(Params& P, Sink& out) {
    const std::string plane = P.str("phase.plane", "mu-p");
    if (plane != "mu-p" && plane != "m-p") throw DomainError("--plane must be mu-p or m-p");
    const std::string spec = P.str("phase.grid", "50x50");
    auto x = spec.find('x');
    if (x == std::string::npos) throw DomainError("--grid must look like NxM");
    long long nx, ny;
    try {
        nx = (long long)parse_number(spec.substr(0, x));
        ny = (long long)parse_number(spec.substr(x + 1));
    } catch (const DomainError&) {
        throw DomainError("--grid must look like NxM with integer N, M");
    }
    if (nx < 0 || ny < 0 || nx > 100000 || ny > 100000) throw DomainError("--grid sizes must lie in [0, 100000]");
    const bool mup = plane == "mu-p";
    auto [x0, x1] = parse_range(P.list("phase.x_range", mup ? std::vector<double>{0, 2} : std::vector<double>{0, 2}), "x range");
    auto [y0, y1] = parse_range(P.list("phase.y_range", {1, mup ? 4.0 : 6.0}), "y range");
    // m-p plane without alpha: the family alpha = m - p + 1 reached from mu in (1, 2)
    const auto fixed_alpha = mup ? std::nullopt : P.opt("model.alpha");
    P.finish();
    if (x0 < 0) throw DomainError(mup ? "mu range must lie in [0, inf)" : "m range must lie in [0, inf)");
    if (y0 < 1) throw DomainError("p range must lie in [1, inf)");

    CsvTable t;
    t.header = {"x", "y", "regime", "nu_branch", "p_crit", "p_conf"};
    for (long long j = 0; j < ny; ++j) {
        const double y = y0 + (double(j) + 0.5) * (y1 - y0) / double(ny);
        for (long long i = 0; i < nx; ++i) {
            const double xv = x0 + (double(i) + 0.5) * (x1 - x0) / double(nx);
            std::string branch;
            double pc, pf;
            Regime r;
            if (mup) {
                r = classify_regime(ModelParams::damped(xv, y));
                pc = p_crit_damped(2, xv).value;
                pf = (xv > 0 && xv < 2 && xv != 1.0) ? p_conf_damped(xv) : std::nan("");
                if (r.nu_choice) branch = to_string(*r.nu_choice == y ? NuBranch::EqualsP : NuBranch::PlusOneThird);
            } else {
                const double alpha = fixed_alpha ? *fixed_alpha : xv - y + 1;
                r = classify_regime(ModelParams::tricomi(xv, alpha, y));
                pc = p_crit_tricomi(xv, alpha).value;
                pf = p_conf_tricomi(xv, alpha);
                if (!fixed_alpha && xv <= sqrt2_minus1() && y >= xv + 2 && y < (3 * xv + 7) / (xv + 3))
                    branch = to_string(select_nu(xv, y).branch);
            }
            t.add({xv, y, std::string(to_string(r.label)), branch, pc, pf});
        }
    }
    out.primary(t.str());
}

// ---- simulate ----

void run_simulate(Params& P, Sink& out, RunManifest& man) {
    SimConfig c;
    const std::string form = P.str("model.form", "tricomi");
    const double p = P.num("model.p", 3);
    if (form == "tricomi")
        c.params = ModelParams::tricomi(P.num("model.m", 2), P.num("model.alpha", 2), p);
    else if (form == "damped")
        c.params = ModelParams::damped(P.num("model.mu", 0.5), p);
    else
        throw DomainError("model.form must be tricomi or damped");
    c.grid = read_grid(P, 128, 16);
    c.t0 = P.num("time.t0", 1);
    c.t_max = P.num("time.t_max", 2);
    c.monitor_dt = P.num("time.monitor_dt", 0.1);
    c.rtol = P.num("solver.rtol", 1e-8);
    c.atol = P.num("solver.atol", 1e-12);
    c.blowup_sup_threshold = P.num("solver.blowup_sup_threshold", 1e6);
    c.stability_factor = P.num("solver.stability_factor", 2.5);
    c.blowup_step_floor = P.num("solver.step_floor", c.blowup_step_floor);
    c.nonlinear_coeff = P.num("model.coeff", 1);
    DataSpec d = read_data(P, DataKind::SmoothCompactBump, 1, 1);
    c.data_radius = d.radius + std::hypot(d.cx, d.cy);
    P.finish();
    if (!(c.monitor_dt > 0)) throw DomainError("time.monitor_dt must be positive");

    auto tr = evolve(c, make_initial_data(c.grid, d));
    CsvTable t;
    t.header = {"t", "sup", "l2", "h1", "lagrangian", "q0"};
    for (const auto& s : tr.scalars) t.add({s.t, s.sup, s.l2, s.h1, s.lagrangian, s.q0});
    out.primary(t.str());
    Json j;
    j["outcome"] = to_string(tr.outcome);
    j["t_event"] = tr.t_event;
    j["sup_trend"] = num_json(tr.sup_trend);
    j["steps"] = tr.steps;
    j["rejects"] = tr.rejects;
    j["samples"] = tr.scalars.size();
    if (!tr.scalars.empty()) {
        j["t_final"] = tr.scalars.back().t;
        j["sup_final"] = num_json(tr.scalars.back().sup);
    }
    if (c.params.form == Form::Tricomi && tr.scalars.size() >= 2) {
        auto ch = charge_balance(tr);
        j["charge"] = Json{{"c", ch.c}, {"drift", num_json(ch.drift)}, {"balance_error", num_json(ch.balance_error)}};
    }
    out.extra(".summary.json", json_text(j));
    if (tr.outcome == Outcome::StepCollapse) {
        man.message = "step size collapsed at t = " + format_number(tr.t_event);
        throw NumericalFailure(man.message);
    }
}

// ---- picard ----

void run_picard_cmd(Params& P, Sink& out) {
    PicardConfig c;
    c.scheme = picard_scheme_from_string(P.str("picard.scheme", to_string(c.scheme)));
    c.m = P.num("model.m", c.m);
    c.alpha = P.num("model.alpha", c.alpha);
    c.p = P.num("model.p", c.p);
    c.K = int(P.integer("picard.K", c.K));
    c.t0 = P.num("picard.t0", c.t0);
    c.T_probe = P.num("picard.T_probe", c.T_probe);
    c.gamma = P.num("picard.gamma", c.gamma);
    c.q = P.num("picard.q", c.q);
    c.nu = P.num("picard.nu", c.nu);
    c.sample_dt = P.num("picard.sample_dt", c.sample_dt);
    c.rtol = P.num("picard.rtol", c.rtol);
    c.grid = read_grid(P, c.grid.N, c.grid.L);
    DataSpec d = read_data(P, DataKind::SmoothCompactBump, 1e-3, 1);
    P.finish();

    auto r = run_picard(c, make_initial_data(c.grid, d));
    CsvTable t;
    t.header = {"k", "M", "N", "ratio", "N_tail"};
    for (int k = 0; k <= r.K; ++k)
        t.add({(long long)k, r.M[k], r.N[k], k ? r.ratios[k - 1] : std::nan(""), r.N_tail[k]});
    out.primary(t.str());

    Json j;
    j["scheme"] = to_string(r.scheme);
    const bool mixed = r.scheme == PicardScheme::MixedNorm;
    const double none = std::nan("");
    const std::vector<std::pair<const char*, double>> fields{
        {"m", r.m}, {"alpha", r.alpha}, {"p", r.p}, {"gamma", mixed ? none : r.gamma}, {"q", r.q},
        {"nu", mixed ? r.nu : none}, {"s", mixed ? r.s : none}, {"t0", r.t0}, {"T_probe", r.T_probe}};
    for (const auto& [k, v] : fields) j[k] = num_json(v);
    j["epsilon"] = d.epsilon;
    j["K"] = r.K;
    j["converged"] = r.converged;
    Json ratios = Json::array();
    for (double v : r.ratios) ratios.push_back(num_json(v));
    j["ratios"] = ratios;
    auto hf = holder_fit(r);
    Json per = Json::array();
    for (double v : hf.per_step) per.push_back(num_json(v));
    j["holder"] = Json{{"C", num_json(hf.C)}, {"C_min", num_json(hf.C_min)}, {"per_step", per}, {"stable", hf.stable}};
    Json D = Json::array();
    for (const auto& row : r.D) {
        Json jr = Json::array();
        for (double v : row) jr.push_back(num_json(v));
        D.push_back(jr);
    }
    j["distances"] = D;
    j["samples"] = r.samples;
    j["steps"] = r.steps;
    j["rejects"] = r.rejects;
    j["warning"] = r.warning;
    out.extra(".summary.json", json_text(j));
}

// ---- decay ----

void run_decay(Params& P, Sink& out) {
    const double m = P.num("model.m", 1);
    Grid g = read_grid(P, 256, 185);
    DataSpec d = read_data(P, DataKind::GaussianBump, 1, 12);
    const double t0 = P.num("time.t0", 1), ta = P.num("time.t_start", 2), tb = P.num("time.t_end", 40);
    const int samples = int(P.integer("decay.samples", 40)), refine = int(P.integer("decay.refine", 4));
    P.finish();
    if (refine < 1) throw DomainError("decay.refine must be at least 1");

    auto r = linear_sup_decay(m, g, d, t0, ta, tb, samples, refine);
    CsvTable t;
    t.header = {"t", "sup"};
    for (std::size_t k = 0; k < r.t.size(); ++k) t.add({r.t[k], r.sup[k]});
    out.primary(t.str());
    Json j;
    j["m"] = m;
    j["slope"] = r.fit.slope;
    j["intercept"] = r.fit.intercept;
    j["r2"] = r.fit.r2;
    j["expected"] = r.expected;
    j["relative_error"] = r.relative_error;
    out.extra(".summary.json", json_text(j));
}

// ---- probe ----

void run_probe(Params& P, Sink& out) {
    ProbeParams q;
    q.statement = probe_statement_from_string(P.str("probe.statement", to_string(q.statement)));
    q.m = P.num("model.m", q.m);
    q.alpha = P.num("model.alpha", q.alpha);
    q.p = P.num("model.p", q.p);
    q.q = P.num("probe.q", q.q);
    q.nu = P.num("probe.nu", q.nu);
    q.qt = P.num("probe.qt", q.qt);
    q.nut = P.num("probe.nut", q.nut);
    q.gamma = P.num("probe.gamma", q.gamma);
    q.gamma2 = P.num("probe.gamma2", q.gamma2);
    q.delta = P.num("probe.delta", q.delta);
    q.grid = read_grid(P, q.grid.N, q.grid.L);
    q.t0 = P.num("time.t0", q.t0);
    q.horizons = P.list("probe.horizons", q.horizons);
    q.sample_dt = P.num("probe.sample_dt", q.sample_dt);
    q.kind = data_kind_from_string(P.str("data.kind", to_string(q.kind)));
    q.epsilon = P.num("data.epsilon", q.epsilon);
    q.data_radius = P.num("data.radius", q.data_radius);
    q.members = int(P.integer("probe.members", q.members));
    q.seed = std::uint64_t(P.integer("seed", (long long)q.seed));
    q.forcing_ta = P.num("probe.forcing_ta", q.forcing_ta);
    q.forcing_tb = P.num("probe.forcing_tb", q.forcing_tb);
    P.finish();

    auto r = strichartz_ratio_probe(q);
    CsvTable t;
    t.header = {"horizon", "member", "seed", "lhs", "rhs", "ratio"};
    for (std::size_t h = 0; h < r.horizons.size(); ++h)
        for (int k = 0; k < q.members; ++k)
            t.add({r.horizons[h], (long long)k, (long long)(q.seed + std::uint64_t(k)), r.lhs[h][k], r.rhs[k],
                   r.ratios[h][k]});
    out.primary(t.str());
    Json j;
    j["statement"] = to_string(q.statement);
    j["horizons"] = r.horizons;
    Json mx = Json::array();
    for (double v : r.max_ratio) mx.push_back(num_json(v));
    j["max_ratio"] = mx;
    j["growth"] = num_json(r.growth);
    j["growth_flag"] = r.growth_flag;
    j["skipped"] = r.skipped;
    out.extra(".summary.json", json_text(j));
}

// ---- transform-check ----

void run_transform_check(Params& P, Sink& out) {
    const auto mu = P.opt("model.mu"), m = P.opt("model.m"), alpha = P.opt("model.alpha");
    const double p = P.num("model.p", 3);
    const bool field = P.flag("check.field", true);
    Grid g{64, 12};
    if (field) g = read_grid(P, 64, 12);
    const double t_max = field ? P.num("check.t_max", 3) : 0;
    P.finish();
    if (mu && (m || alpha)) throw DomainError("give either --mu or --m/--alpha, not both");
    if (!mu && !(m && alpha)) throw DomainError("requires --mu, or both --m and --alpha");

    TransformMap fwd = mu ? damped_to_tricomi(*mu, p) : tricomi_to_damped(*m, *alpha, p);
    const double mu_d = mu ? *mu : fwd.mu;
    TransformMap d2t = damped_to_tricomi(mu_d, p);
    TransformMap back = tricomi_to_damped(d2t.m, d2t.alpha, p);

    Json j;
    j["direction"] = fwd.direction == MapDirection::DampedToTricomi ? "damped_to_tricomi" : "tricomi_to_damped";
    j["time_map"] = fwd.time_map;
    j["mu"] = mu_d;
    j["m"] = d2t.m;
    j["alpha"] = d2t.alpha;
    j["p"] = p;
    j["amplitude_power"] = fwd.amplitude_power;
    j["forcing_power"] = fwd.forcing_power;
    j["theta"] = theta_exponent(mu_d, p);
    j["mu_round_trip_error"] = std::abs(back.mu - mu_d);
    if (mu_d < 1) {
        double pc = p_crit_tricomi(d2t.m, d2t.alpha).value, ps = strauss_exponent(2 + mu_d);
        j["p_crit_tricomi"] = pc;
        j["p_strauss_2_plus_mu"] = ps;
        j["p_crit_identity_error"] = std::abs(pc - ps);
    }
    // for mu > 1 alpha depends on p, so the round trip is taken at p = p_conf itself
    const double pcd = p_conf_damped(mu_d);
    j["p_conf_damped"] = pcd;
    j["p_conf_tricomi"] = p_conf_tricomi(d2t.m, damped_to_tricomi(mu_d, pcd).alpha);

    if (field) {
        // a linear damped solution mapped to Tricomi time against direct Tricomi evolution
        SimConfig sc;
        sc.params = ModelParams::damped(mu_d, p);
        sc.grid = g;
        sc.t0 = 1;
        sc.t_max = t_max;
        sc.nonlinear_coeff = 0;
        sc.rtol = 1e-11;
        sc.atol = 1e-14;
        sc.data_radius = g.L / 5;
        sc.monitor_dt = (t_max - 1) / 4;
        sc.keep_snapshots = true;
        auto data = make_initial_data(g, DataSpec{DataKind::GaussianBump, 1.0, sc.data_radius});
        const auto mask = dealias_mask(g);
        Field2D a = data.u0.to_spectral(), b = data.u1.to_spectral();
        for (std::size_t i = 0; i < a.size(); ++i)
            if (!mask[i]) a.values[i] = b.values[i] = 0;
        data.u0 = a.to_physical();
        data.u1 = b.to_physical();
        auto tri = field_time_change(evolve(sc, data), d2t);
        double worst = 0;
        for (std::size_t k = 1; k < tri.times.size(); ++k) {
            auto r = linear_evolve(tri.snapshots[0].u, tri.snapshots[0].ut, d2t.m, tri.times[0], tri.times[k]);
            double diff = 0;
            for (std::size_t i = 0; i < r.u.size(); ++i)
                diff = std::max(diff, std::abs(r.u.values[i].real() - tri.snapshots[k].u.values[i].real()));
            worst = std::max(worst, diff / sup_norm(r.u));
        }
        j["field_check"] = Json{{"grid_N", g.N}, {"grid_L", g.L}, {"t_max", t_max}, {"max_relative_error", worst},
                                {"passed", worst <= 1e-6}};
    }
    out.primary(json_text(j));
}

// ---- admissible ----

void run_admissible(Params& P, Sink& out) {
    const double m = P.num("model.m", 0.2), p = P.num("model.p", 2.2);
    const auto q = P.opt("admissible.q"), nu = P.opt("admissible.nu");
    P.finish();
    if (bool(q) != bool(nu)) throw DomainError("give both --q and --nu, or neither");
    Json j;
    j["m"] = m;
    j["p"] = p;
    AdmissiblePair a;
    if (q) {
        a = check_ugly_system(m, p, *q, *nu);
        j["nu"] = *nu;
        j["q"] = *q;
        j["branch"] = "given";
    } else {
        auto s = select_nu(m, p);
        a = check_ugly_system(m, p, s.q, s.nu);
        j["nu"] = s.nu;
        j["q"] = s.q;
        j["branch"] = to_string(s.branch);
        j["rule_nu"] = s.rule_nu;
        j["rule_branch"] = to_string(s.rule_branch);
        j["rule_feasible"] = s.rule_feasible;
    }
    j["s"] = num_json(a.s);
    j["feasible"] = a.feasible;
    Json res = Json::array();
    for (const auto& r : a.residuals) {
        const char* kind = r.kind == ConstraintKind::Equality          ? "equality"
                           : r.kind == ConstraintKind::InequalitySlack ? "inequality"
                                                                       : "strict";
        res.push_back(Json{{"name", r.name}, {"kind", kind}, {"value", num_json(r.value)}});
    }
    j["residuals"] = res;
    out.primary(json_text(j));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semilinear generalized Tricomi and scale-invariant damped wave toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));
    Globals G;
    G.argv.assign(argv, argv + argc);

    std::map<std::string, Command> cmds;
    auto add = [&](const std::string& name, const std::string& help) -> Command& {
        Command& c = cmds[name];
        c.app = app.add_subcommand(name, help);
        c.app->add_option("--config", G.config_path, "key = value configuration file")->check(CLI::ExistingFile);
        c.app->add_option("--out", G.out, "output file; manifest at <out>.manifest.json");
        c.app->add_option("--seed", G.seed, "data seed");
        c.app->add_option("--threads", G.threads, "worker threads (default: TRICOMI_THREADS, else 1)");
        return c;
    };

    auto& ex = add("exponents", "critical, conformal and threshold exponents with regime");
    ex.bind("--n", "model.n", "space dimension (damped form)");
    ex.bind("--mu", "model.mu", "damping coefficient");
    ex.bind("--m", "model.m", "Tricomi degeneracy");
    ex.bind("--alpha", "model.alpha", "Tricomi nonlinearity time power");
    ex.bind("--p", "model.p", "nonlinearity exponent");
    bool as_json = false, as_csv = false;
    ex.app->add_flag("--json", as_json, "JSON output (default)");
    ex.app->add_flag("--csv", as_csv, "CSV output");

    auto& ph = add("phase", "regime table over the (mu, p) or (m, p) plane");
    ph.bind("--plane", "phase.plane", "mu-p or m-p");
    ph.bind("--grid", "phase.grid", "cells NxM (x by y)");
    ph.bind("--x-range", "phase.x_range", "x bounds a,b");
    ph.bind("--y-range", "phase.y_range", "p bounds a,b");
    ph.bind("--alpha", "model.alpha", "fixed alpha for the m-p plane (default alpha = m - p + 1)");

    auto& si = add("simulate", "pseudo-spectral evolution with blowup detection");
    si.bind("--form", "model.form", "tricomi or damped");
    si.bind("--m", "model.m", "Tricomi degeneracy");
    si.bind("--alpha", "model.alpha", "time power");
    si.bind("--mu", "model.mu", "damping coefficient");
    si.bind("--p", "model.p", "nonlinearity exponent");
    si.bind("--N", "grid.N", "grid points per side");
    si.bind("--L", "grid.L", "box half-width");
    si.bind("--t0", "time.t0", "start time");
    si.bind("--t-max", "time.t_max", "horizon");
    si.bind("--monitor-dt", "time.monitor_dt", "monitor interval");
    si.bind("--rtol", "solver.rtol", "relative tolerance");
    si.bind("--atol", "solver.atol", "absolute tolerance");
    si.bind("--kind", "data.kind", "GaussianBump, SmoothCompactBump or AnnularBump");
    si.bind("--epsilon", "data.epsilon", "data amplitude");
    si.bind("--radius", "data.radius", "data support radius");

    auto& pc = add("picard", "Picard iteration contraction check");
    pc.bind("--scheme", "picard.scheme", "WeightedLq or MixedNorm");
    pc.bind("--m", "model.m", "Tricomi degeneracy");
    pc.bind("--alpha", "model.alpha", "time power");
    pc.bind("--p", "model.p", "nonlinearity exponent");
    pc.bind("--K", "picard.K", "iterates");
    pc.bind("--t0", "picard.t0", "start time");
    pc.bind("--T", "picard.T_probe", "probe horizon");
    pc.bind("--N", "grid.N", "grid points per side");
    pc.bind("--L", "grid.L", "box half-width");
    pc.bind("--epsilon", "data.epsilon", "data amplitude");
    pc.bind("--radius", "data.radius", "data support radius");

    auto& de = add("decay", "linear sup-norm decay fit");
    de.bind("--m", "model.m", "Tricomi degeneracy");
    de.bind("--N", "grid.N", "grid points per side");
    de.bind("--L", "grid.L", "box half-width");
    de.bind("--radius", "data.radius", "data support radius");
    de.bind("--t-start", "time.t_start", "fit window start");
    de.bind("--t-end", "time.t_end", "fit window end");

    auto& pr = add("probe", "Strichartz-type LHS/RHS ratio probe over a data family");
    pr.bind("--statement", "probe.statement", "Lem31, Thm51, Lem32 or Lem61");
    pr.bind("--members", "probe.members", "family size");
    pr.bind("--horizons", "probe.horizons", "comma-separated horizons");
    pr.bind("--N", "grid.N", "grid points per side");
    pr.bind("--L", "grid.L", "box half-width");

    auto& tc = add("transform-check", "damped <-> Tricomi parameter and field map checks");
    tc.bind("--mu", "model.mu", "damping coefficient");
    tc.bind("--m", "model.m", "Tricomi degeneracy");
    tc.bind("--alpha", "model.alpha", "time power");
    tc.bind("--p", "model.p", "nonlinearity exponent");
    tc.bind("--field", "check.field", "run the field check (true/false)");

    auto& ad = add("admissible", "admissible (q, nu) selection and constraint residuals");
    ad.bind("--m", "model.m", "Tricomi degeneracy");
    ad.bind("--p", "model.p", "nonlinearity exponent");
    ad.bind("--q", "admissible.q", "check this q instead of selecting");
    ad.bind("--nu", "admissible.nu", "check this nu instead of selecting");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::string name;
    for (auto& [n, c] : cmds)
        if (c.app->parsed()) name = n;
    Command& cmd = cmds.at(name);

    RunManifest man;
    man.command_line = G.argv;
    man.started = utc_timestamp();
    Sink sink{man, G};
    Params P;
    int code = 0;
    try {
        int threads = resolve_threads(G);
        set_thread_count(threads);
        man.threads = threads;
        P = load_params(G, cmd);
        if (name == "exponents") {
            if (as_json && as_csv) throw DomainError("--json and --csv are exclusive");
            if (as_csv) P.cfg.set("format", "csv");
            if (as_json) P.cfg.set("format", "json");
        }
        man.seed = std::uint64_t(P.cfg.get_int("seed", 0));

        for (const char* multi : {"simulate", "picard", "decay", "probe"})
            if (name == multi) require_out(G, multi);
        if (name == "exponents") run_exponents(P, sink);
        else if (name == "phase") run_phase(P, sink);
        else if (name == "simulate") run_simulate(P, sink, man);
        else if (name == "picard") run_picard_cmd(P, sink);
        else if (name == "decay") run_decay(P, sink);
        else if (name == "probe") run_probe(P, sink);
        else if (name == "transform-check") run_transform_check(P, sink);
        else if (name == "admissible") run_admissible(P, sink);
    } catch (const NumericalFailure& e) {
        std::cerr << "tricomi " << name << ": " << e.what() << "\n";
        code = 3;
    } catch (const StepCollapseError& e) {
        std::cerr << "tricomi " << name << ": " << e.what() << "\n";
        man.message = e.what();
        code = 3;
    } catch (const ResolutionError& e) {
        std::cerr << "tricomi " << name << ": " << e.what() << "\n";
        man.message = e.what();
        code = 3;
    } catch (const RootNotBracketed& e) {
        std::cerr << "tricomi " << name << ": " << e.what() << "\n";
        man.message = e.what();
        code = 3;
    } catch (const std::exception& e) {
        std::cerr << "tricomi " << name << ": " << e.what() << "\n";
        return 2;
    }

    if (!G.out.empty()) {
        man.configuration = P.resolved;
        man.finished = utc_timestamp();
        man.exit_code = code;
        man.status = code == 0 ? "ok" : "numerical_failure";
        try {
            man.save(G.out + ".manifest.json");
        } catch (const std::exception& e) {
            std::cerr << "tricomi " << name << ": " << e.what() << "\n";
            return code ? code : 2;
        }
    }
    return code;
}
