#include <cmath>
#include <iostream>
#include <sstream>

#include "artifacts.hpp"
#include "viscoflow/constraints.hpp"
#include "viscoflow/integrator.hpp"
#include "viscoflow/linear.hpp"

namespace viscoflow::cli {

namespace {

struct Verdict {
    std::vector<std::string> violations;
    void check(bool ok, const std::string& what) {
        if (!ok) violations.push_back(what);
    }
};

std::ostringstream csv_stream(const char* name) {
    std::ostringstream os;
    os.precision(12);
    os << "# viscoflow " << name << " v1\n";
    return os;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

integrate::RunConfig run_config(const Config& c) {
    integrate::RunConfig r;
    r.dim = c.integer("grid", "dim");
    r.n = c.integer("grid", "n");
    r.L = c.number("grid", "L");
    r.lame.mu = c.number("physics", "mu");
    r.lame.lambda = c.number("physics", "nu") - 2.0 * r.lame.mu;
    r.alpha = c.number("physics", "alpha");
    r.pressure = c.text("physics", "pressure") == "power" ? model::PressureLaw::power(c.number("physics", "gamma_gas"))
                                                          : model::PressureLaw::quadratic();
    r.dt = c.number("run", "dt");
    r.T = c.number("run", "T");
    r.amplitude = c.number("run", "amplitude");
    const int seed = c.integer("run", "seed");
    if (seed < 0) throw ConfigurationError("run.seed must be nonnegative");
    r.seed = static_cast<unsigned>(seed);
    r.cadence = c.integer("run", "cadence");
    r.cfl = c.number("run", "cfl");
    r.data_modes = c.integer("run", "data_modes");
    r.data_kmax = c.integer("run", "data_kmax");
    r.picard_iterations = c.integer("run", "picard_iterations");
    r.picard_init = c.text("run", "picard_init") == "fixed" ? integrate::PicardInit::Fixed
                                                           : integrate::PicardInit::Mollified;
    r.validate();
    return r;
}

json grid_json(const GridPtr& g) {
    return {{"dim", g->dim()}, {"n", g->n()}, {"L", g->L()}, {"cutoff", g->cutoff()}, {"kmax", g->kmax()}};
}

json run_parameters(const integrate::RunConfig& r) {
    const auto p = r.params();
    return {{"grid", grid_json(r.grid())},
            {"physics",
             {{"mu", p.mu()}, {"lambda", p.lame.lambda}, {"nu", p.nu()}, {"a", p.a}, {"chi0", p.pressure.chi0()}}},
            {"run", {{"dt", r.dt}, {"T", r.T}, {"steps", r.steps()}, {"amplitude", r.amplitude}, {"seed", r.seed}}}};
}

void write_snapshots(Manifest& m, const std::string& prefix, const model::PrimitiveState& s) {
    const std::pair<const char*, const SpectralField*> fields[] = {{"rho", &s.rho}, {"u", &s.u}, {"E", &s.E}};
    for (const auto& [name, f] : fields) {
        const std::string file = prefix + "_" + name + ".vfs";
        write_snapshot(m.path(file), *f);
        m.record(file);
    }
}

// ---------------------------------------------------------------- analyze

void analyze(const Config& c, Manifest& m, Verdict& v) {
    const std::string input = c.path("analyze", "input");
    if (input.empty()) throw ConfigurationError("analyze.input is required");
    const auto hs = c.numbers("analyze", "hybrid_s"), ht = c.numbers("analyze", "hybrid_t");
    if (hs.size() != ht.size()) throw ConfigurationError("analyze.hybrid_s and analyze.hybrid_t differ in length");
    const SpectralField f = read_snapshot(input);
    const GridPtr& g = f.grid();
    m.begin({{"grid", grid_json(g)}, {"rank", static_cast<int>(f.rank())}, {"components", f.components()}});

    lp::DyadicFamily fam(g);
    auto os = csv_stream("field norms");
    os << "kind,s,t,value\n";
    json norms = json::array();
    for (double s : c.numbers("analyze", "besov")) {
        const double b = fam.besov_norm(f, s);
        os << "besov," << s << ',' << s << ',' << b << '\n';
        norms.push_back({{"kind", "besov"}, {"s", s}, {"value", b}});
        v.check(std::isfinite(b), "non-finite Besov norm");
    }
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const double h = fam.hybrid_norm(f, hs[i], ht[i]);
        os << "hybrid," << hs[i] << ',' << ht[i] << ',' << h << '\n';
        norms.push_back({{"kind", "hybrid"}, {"s", hs[i]}, {"t", ht[i]}, {"value", h}});
        v.check(std::isfinite(h), "non-finite hybrid norm");
    }
    m.write("norms.csv", os.str());

    auto bs = csv_stream("blocks");
    bs << "q,l2\n";
    const auto blocks = fam.block_norms(f);
    for (int q = fam.q_lo(); q <= fam.q_hi(); ++q) bs << q << ',' << blocks[q - fam.q_lo()] << '\n';
    m.write("blocks.csv", bs.str());

    json summary = {{"input", c.text("analyze", "input")},
                    {"l2", l2_norm(f)},
                    {"max_abs", max_abs(transform_inverse(f))},
                    {"mean", mean_magnitude(f)},
                    {"norms", norms}};
    m.write("summary.json", summary.dump(2) + "\n");
}

// ---------------------------------------------------------------- linear

linear::Pair parse_pair(const std::string& s) {
    for (auto p : {linear::Pair::RhoD, linear::Pair::OmegaW, linear::Pair::EcalD})
        if (s == linear::pair_name(p)) return p;
    throw ConfigurationError("linear.pairs: unknown pair '" + s + "' (rho-d, omega-W, ecal-d)");
}

void linear_mode(const Config& c, Manifest& m, Verdict& v) {
    const double nu = c.number("physics", "nu"), mu = c.number("physics", "mu");
    if (!(nu > 0.0) || !(mu > 0.0)) throw ConfigurationError("linear mode needs nu > 0 and mu > 0");
    const int dim = c.integer("grid", "dim");
    const double tol = c.number("linear", "tolerance");
    std::vector<linear::Pair> pairs;
    for (const auto& w : c.words("linear", "pairs")) pairs.push_back(parse_pair(w));
    const auto xis = c.numbers("linear", "xi");
    for (double r : xis)
        if (!(r > 0.0)) throw ConfigurationError("linear.xi values must be positive");
    const auto k = linear::EnergyConstants::from(nu, mu);
    const auto coeffs = linear::LinearCoeffs::paper(nu, mu, 1.0);
    m.begin({{"physics", {{"nu", nu}, {"mu", mu}}},
             {"dim", dim},
             {"energy", {{"q0", k.q0}, {"eta", k.eta}, {"beta1", k.beta1}, {"beta2", k.beta2}, {"gamma", k.gamma}}}});

    auto sp = csv_stream("spectrum");
    sp << "pair,xi,root1_re,root1_im,root2_re,root2_im,slow_rate\n";
    for (auto p : pairs)
        for (double r : xis) {
            const auto s = linear::constant_coeff_spectrum(p, r, coeffs);
            sp << linear::pair_name(p) << ',' << r << ',' << s.roots[0].real() << ',' << s.roots[0].imag() << ','
               << s.roots[1].real() << ',' << s.roots[1].imag() << ',' << s.slow_rate() << '\n';
        }
    m.write("spectrum.csv", sp.str());

    std::vector<linear::DecayRow> rows;
    for (auto p : pairs)
        for (double r : xis) {
            rows.push_back(linear::decay_study_point(p, r, nu, mu, dim));
            const auto& row = rows.back();
            v.check(row.rel_error() <= tol, std::string(linear::pair_name(p)) + " at |xi|=" + fmt(r) +
                                                ": fitted rate off the oracle by " + fmt(row.rel_error()));
        }
    m.write("decay.csv", linear::decay_csv(rows));

    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, r.rel_error());
    m.write("summary.json", json{{"rows", rows.size()}, {"max_rel_error", worst}, {"tolerance", tol}}.dump(2) + "\n");
}

// ---------------------------------------------------------------- simulate

std::vector<constraints::ConstraintSample> sample_run(const model::PrimitiveState& init,
                                                      const integrate::RunConfig& rc, integrate::DirectRun* out) {
    std::vector<constraints::ConstraintSample> samples;
    auto obs = [&](double t, const integrate::DirectState& s) {
        const auto p = s.to_primitive();
        samples.push_back(constraints::sample_constraints(t, p.rho, p.E, p.u));
    };
    auto run = integrate::run_direct(init, rc, obs);
    if (out) *out = std::move(run);
    return samples;
}

void simulate(const Config& c, Manifest& m, Verdict& v) {
    const auto rc = run_config(c);
    const bool check = c.flag("run", "check_constraints");
    const double sup_factor = c.number("run", "sup_factor");
    m.begin(run_parameters(rc));

    const auto init = integrate::make_initial_data(rc);
    if (c.flag("run", "snapshots")) write_snapshots(m, "initial", init);

    integrate::DirectRun run;
    std::vector<constraints::ConstraintSample> samples;
    if (check)
        samples = sample_run(init, rc, &run);
    else
        run = integrate::run_direct(init, rc);
    m.write("norms.csv", run.norms.csv());

    // invariants of the norm history
    const auto& ns = run.norms.samples;
    bool monotone = true, finite = true;
    for (std::size_t i = 1; i < ns.size(); ++i) {
        const auto &a = ns[i - 1], &b = ns[i];
        if (b.rho_l1 < a.rho_l1 || b.u_l1 < a.u_l1 || b.E_l1 < a.E_l1 || b.l1_total < a.l1_total) monotone = false;
        if (!std::isfinite(b.bnorm)) finite = false;
    }
    v.check(finite, "non-finite norms");
    v.check(monotone, "L1 dissipation columns decrease");
    const double init_norm = run.norms.initial_norm();
    const double sup_ratio = init_norm > 0 ? ns.back().sup_total / init_norm : 0.0;
    v.check(sup_ratio <= sup_factor, "sup-in-time norm exceeds " + fmt(sup_factor) + "x the initial norm");
    v.check(run.max_antisymmetry_defect <= 1e-10, "Omega lost antisymmetry");
    const double total = ns.back().l1_total;
    double tail = 0.0;
    for (const auto& s : ns)
        if (s.t <= 0.75 * rc.T + 1e-12) tail = total - s.l1_total;

    json summary = {{"steps", run.steps},
                    {"initial_norm", init_norm},
                    {"bnorm", run.norms.bnorm()},
                    {"gamma_measured", run.norms.gamma_measured()},
                    {"sup_ratio", sup_ratio},
                    {"l1_total", total},
                    {"l1_tail_fraction", total > 0 ? tail / total : 0.0},
                    {"max_antisymmetry_defect", run.max_antisymmetry_defect},
                    {"max_mean", run.max_mean}};

    if (check) {
        // integrator-error allowance from a rerun at twice the step
        json cons = {{"checked", false}};
        auto coarse_cfg = rc;
        coarse_cfg.dt = 2.0 * rc.dt;
        coarse_cfg.cadence = std::max(1, rc.cadence / 2);
        std::string skip;
        std::vector<constraints::ConstraintSample> coarse;
        try {
            coarse_cfg.validate();
            coarse = sample_run(init, coarse_cfg, nullptr);
        } catch (const Error& e) {
            skip = e.what();
        }
        const auto floors = skip.empty() ? constraints::integrator_floors(samples, coarse) : constraints::Floors{};
        const auto rep = constraints::gronwall_check(samples, 1.1, floors);
        auto os = csv_stream("constraints");
        os << "t,div_res,curl_pointwise,curl_l2_sq,grad_u_inf,div_u_inf,div_sq_majorant,curl_pointwise_majorant,"
              "curl_l2_majorant\n";
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto& s = samples[i];
            os << s.t << ',' << s.div_res << ',' << s.curl.pointwise_max << ',' << s.curl.l2_sum_sq << ','
               << s.grad_u_inf << ',' << s.div_u_inf << ',' << rep.div_corrected.majorant[i] << ','
               << rep.curl_pointwise.majorant[i] << ',' << rep.curl_l2_corrected.majorant[i] << '\n';
        }
        m.write("constraints.csv", os.str());
        cons = {{"checked", skip.empty()},
                {"floors", {{"div_sq", floors.div_sq}, {"curl_pointwise", floors.curl_pointwise},
                            {"curl_l2_sq", floors.curl_l2_sq}}},
                {"worst_ratio",
                 {{"div_stated", rep.div_stated.worst_ratio},
                  {"div_corrected", rep.div_corrected.worst_ratio},
                  {"curl_pointwise", rep.curl_pointwise.worst_ratio},
                  {"curl_l2_stated", rep.curl_l2_stated.worst_ratio},
                  {"curl_l2_corrected", rep.curl_l2_corrected.worst_ratio}}}};
        if (skip.empty()) {
            v.check(rep.div_corrected.holds, "divergence residual above its majorant");
            v.check(rep.curl_pointwise.holds, "pointwise curl residual above its majorant");
            v.check(rep.curl_l2_corrected.holds, "L2 curl residual above its majorant");
        } else {
            cons["skipped"] = "coarse rerun unavailable: " + skip;
            std::cerr << "constraint majorants not checked: " << skip << "\n";
        }
        summary["constraints"] = cons;
    }

    if (c.flag("run", "snapshots")) write_snapshots(m, "final", run.final_state.to_primitive());
    summary["violations"] = v.violations;
    m.write("summary.json", summary.dump(2) + "\n");
}

// ---------------------------------------------------------------- iterate

void iterate_mode(const Config& c, Manifest& m, Verdict& v) {
    auto rc = run_config(c);
    rc.mode = integrate::RunMode::Picard;
    m.begin(run_parameters(rc));
    const auto init = integrate::make_initial_data(rc);
    integrate::PicardOptions opt;
    opt.throw_on_failure = false;
    opt.divergence_factor = c.number("run", "divergence_factor");
    const auto res = integrate::picard_solve(init, rc, opt);
    const auto mon = integrate::uniform_bound_monitor(res);

    auto os = csv_stream("picard");
    os << "iterate,bnorm,U,ratio\n";
    for (std::size_t n = 0; n < res.norms.size(); ++n) {
        os << n << ',' << res.norms[n].bnorm() << ',';
        if (n < res.U.size()) os << res.U[n];
        os << ',';
        if (n >= 1 && n - 1 < res.ratios.size()) os << res.ratios[n - 1];
        os << '\n';
    }
    m.write("iterates.csv", os.str());

    json monitor = {{"gamma_data", mon.gamma_data}, {"Gamma", mon.Gamma},   {"smallness", mon.smallness},
                    {"growth", mon.growth},         {"violation", mon.violation}, {"message", mon.message},
                    {"failure", res.failure},       {"iterates", res.norms.size()}};
    m.write("monitor.json", monitor.dump(2) + "\n");
    v.check(res.failure.empty(), "iteration stopped: " + res.failure);
    v.check(!mon.violation, "uniform-bound monitor: " + mon.message);
}

// ---------------------------------------------------------------- constraints

void constraints_mode(const Config& c, Manifest& m, Verdict& v) {
    constraints::StudyConfig sc;
    sc.n = c.integer("constraints", "n");
    sc.L = c.number("constraints", "L");
    sc.seed_eps = c.number("constraints", "seed_eps");
    sc.r0 = c.number("constraints", "r0");
    sc.u_amp = c.number("constraints", "u_amp");
    sc.admissible_n = c.integer("constraints", "admissible_n");
    sc.admissible_eps = c.number("constraints", "admissible_eps");
    sc.admissible_u = c.number("constraints", "admissible_u");
    sc.dt = c.number("constraints", "dt");
    sc.steps = c.integer("constraints", "steps");
    sc.every = c.integer("constraints", "every");
    if (!(sc.dt > 0.0) || sc.steps < 1 || sc.every < 1) throw ConfigurationError("constraints: dt, steps, every must be positive");
    const auto ns = c.integers("constraints", "refine_n");
    const double min_ratio = c.number("constraints", "min_ratio");
    m.begin({{"study", {{"n", sc.n}, {"L", sc.L}, {"admissible_n", sc.admissible_n}, {"dt", sc.dt}, {"steps", sc.steps}}},
             {"refinement", {{"L", c.number("constraints", "refine_L")}, {"eps", c.number("constraints", "refine_eps")}, {"n", ns}}}});

    const auto res = constraints::majorant_study(sc);
    auto os = csv_stream("majorants");
    os << "trajectory,div_stated,div_corrected,curl_pointwise,curl_l2_stated,curl_l2_corrected,corrected_hold\n";
    for (const auto& r : res) {
        const auto& p = r.report;
        os << r.label << ',' << p.div_stated.worst_ratio << ',' << p.div_corrected.worst_ratio << ','
           << p.curl_pointwise.worst_ratio << ',' << p.curl_l2_stated.worst_ratio << ','
           << p.curl_l2_corrected.worst_ratio << ',' << (r.corrected_hold() ? 1 : 0) << '\n';
        v.check(r.corrected_hold(), r.label + ": corrected majorant exceeded");
    }
    m.write("majorants.csv", os.str());

    const int seed = c.integer("constraints", "refine_seed");
    const auto rows = constraints::refinement_study(c.number("constraints", "refine_L"),
                                                    c.number("constraints", "refine_eps"), ns,
                                                    static_cast<unsigned>(std::max(seed, 0)));
    auto rs = csv_stream("refinement");
    rs << "n,div_res,curl_res,div_ratio,curl_ratio\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rs << rows[i].n << ',' << rows[i].div_res << ',' << rows[i].curl_res << ',';
        if (i > 0) {
            const double dr = rows[i - 1].div_res / rows[i].div_res, cr = rows[i - 1].curl_res / rows[i].curl_res;
            rs << dr << ',' << cr;
            v.check(dr >= min_ratio && cr >= min_ratio,
                    "refinement ratio below " + fmt(min_ratio) + " at n=" + std::to_string(rows[i].n));
        } else {
            rs << ',';
        }
        rs << '\n';
    }
    m.write("refinement.csv", rs.str());
}

// ---------------------------------------------------------------- scaling

void scaling_mode(const Config& c, Manifest& m, Verdict& v) {
    auto g = Grid::create(c.integer("grid", "dim"), c.integer("grid", "n"), c.number("grid", "L"));
    const std::string rn = c.text("scaling", "rank");
    const Rank rank = rn == "scalar" ? Rank::Scalar : rn == "vector" ? Rank::Vector : Rank::Matrix;
    const double tol = c.number("scaling", "tolerance");
    m.begin({{"grid", grid_json(g)}, {"rank", rn}, {"seed", c.integer("scaling", "seed")}});
    lp::DyadicFamily fam(g);
    // band limited to half the retained range so f(2x) stays resolved
    const SpectralField f =
        random_band_limited(g, rank, static_cast<unsigned>(std::max(c.integer("scaling", "seed"), 0)), g->cutoff() / 2);
    const SpectralField sf = scale_dyadic(f);
    auto os = csv_stream("scaling");
    os << "s,norm,scaled_norm,predicted,rel_error\n";
    for (double s : c.numbers("scaling", "s")) {
        const double b = fam.besov_norm(f, s), bs = fam.besov_norm(sf, s), pred = std::exp2(s) * b;
        const double err = std::abs(bs - pred) / pred;
        os << s << ',' << b << ',' << bs << ',' << pred << ',' << err << '\n';
        v.check(err <= tol, "scaling law off by " + fmt(err) + " at s=" + fmt(s));
    }
    m.write("scaling.csv", os.str());
}

}  // namespace

int run(Mode mode, const Config& cfg, const std::string& out_dir, bool strict) {
    Verdict v;
    std::unique_ptr<Manifest> m;
    auto fail = [&](const std::exception& e, int code) {
        std::cerr << "viscoflow " << mode_name(mode) << ": " << e.what() << "\n";
        if (m) {
            try {
                m->finish("error", {e.what()});
            } catch (const std::exception&) {
            }
        }
        return code;
    };
    try {
        m = std::make_unique<Manifest>(out_dir, mode, cfg, strict);
        switch (mode) {
            case Mode::Analyze: analyze(cfg, *m, v); break;
            case Mode::Linear: linear_mode(cfg, *m, v); break;
            case Mode::Simulate: simulate(cfg, *m, v); break;
            case Mode::Iterate: iterate_mode(cfg, *m, v); break;
            case Mode::Constraints: constraints_mode(cfg, *m, v); break;
            case Mode::Scaling: scaling_mode(cfg, *m, v); break;
        }
    } catch (const InputError& e) {
        return fail(e, kExitInput);
    } catch (const ConfigurationError& e) {
        return fail(e, kExitInput);
    } catch (const StepSizeError& e) {
        return fail(e, kExitInput);
    } catch (const Error& e) {
        // stability loss, divergence, broken invariants
        return fail(e, kExitViolation);
    } catch (const std::exception& e) {
        return fail(e, kExitInput);
    }
    m->finish(v.violations.empty() ? "ok" : "violation", v.violations);
    for (const auto& s : v.violations) std::cerr << "violation: " << s << "\n";
    if (!v.violations.empty() && strict) return kExitViolation;
    return kExitOk;
}

}  // namespace viscoflow::cli
