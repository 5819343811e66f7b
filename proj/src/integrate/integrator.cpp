#include "viscoflow/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "viscoflow/calculus.hpp"
#include "viscoflow/constraints.hpp"

namespace viscoflow::integrate {

using namespace calculus;
using model::advect;
using model::matmul;

DirectState DirectState::zeros(const GridPtr& g) {
    return {SpectralField(g, Rank::Scalar), SpectralField(g, Rank::Scalar), SpectralField(g, Rank::Matrix),
            SpectralField(g, Rank::Matrix)};
}

DirectState DirectState::from_primitive(const PrimitiveState& p) {
    auto h = helmholtz_split(p.u);
    DirectState s{p.rho, h.d, h.omega, p.E};
    project_mean_zero(s.rho);
    return s;
}

PrimitiveState DirectState::to_primitive() const { return {rho, helmholtz_reconstruct(d, omega), E}; }

void DirectState::axpy(double h, const DirectState& o) {
    rho.axpy(h, o.rho);
    d.axpy(h, o.d);
    omega.axpy(h, o.omega);
    E.axpy(h, o.E);
}

double distance(const DirectState& a, const DirectState& b) {
    const double r = l2_norm(a.rho - b.rho), d = l2_norm(a.d - b.d), o = l2_norm(a.omega - b.omega),
                 e = l2_norm(a.E - b.E);
    return std::sqrt(r * r + d * d + o * o + e * e);
}

double magnitude(const DirectState& a) {
    const double r = l2_norm(a.rho), d = l2_norm(a.d), o = l2_norm(a.omega), e = l2_norm(a.E);
    return std::sqrt(r * r + d * d + o * o + e * e);
}

Params RunConfig::params() const {
    Params p;
    p.lame = lame;
    p.pressure = pressure;
    p.a = pressure.coupling(alpha);
    return p;
}

GridPtr RunConfig::grid() const { return Grid::create(dim, n, L); }

int RunConfig::steps() const { return static_cast<int>(std::llround(T / dt)); }

void RunConfig::validate() const {
    if (dim != 2 && dim != 3) throw ConfigurationError("dim must be 2 or 3");
    validate_lame(lame, dim);
    if (!(alpha > 0.0)) throw ConfigurationError("alpha must be positive");
    if (!(dt > 0.0) || !(T > 0.0)) throw ConfigurationError("dt and T must be positive");
    if (std::abs(steps() * dt - T) > 1e-9 * T) throw ConfigurationError("T must be a multiple of dt");
    if (picard_iterations < 1) throw ConfigurationError("picard_iterations must be at least 1");
    if (!(amplitude >= 0.0)) throw ConfigurationError("amplitude must be nonnegative");
    if (cadence < 1) throw ConfigurationError("cadence must be at least 1");
    if (!(cfl > 0.0)) throw ConfigurationError("cfl must be positive");
    if (data_modes < 1 || data_kmax < 1) throw ConfigurationError("data_modes and data_kmax must be positive");
    if (2 * data_kmax > n / 3) throw ConfigurationError("data_kmax too large for the grid");
}

namespace {

double sup_abs(const SpectralField& f) { return max_abs(transform_inverse(f)); }

SpectralField random_velocity(const GridPtr& g, int modes, int kmax, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> kd(-kmax, kmax);
    std::normal_distribution<double> nd(0.0, 1.0);
    SpectralField u(g, Rank::Vector);
    for (int m = 0; m < modes; ++m) {
        std::array<int, 3> k{0, 0, 0};
        for (int a = 0; a < g->dim(); ++a) k[a] = kd(rng);
        if (k == std::array<int, 3>{0, 0, 0}) k[0] = 1;
        std::size_t idx;
        bool conj;
        if (!g->locate(k, idx, conj)) continue;
        for (int c = 0; c < g->dim(); ++c) {
            cplx v(nd(rng), nd(rng));
            u.comp(c)[idx] += conj ? std::conj(v) : v;
        }
    }
    project_mean_zero(u);
    return u;
}

}  // namespace

PrimitiveState make_initial_data(const RunConfig& cfg) {
    GridPtr g = cfg.grid();
    if (cfg.amplitude == 0.0) return PrimitiveState::zeros(g);
    SpectralField u = random_velocity(g, cfg.data_modes, cfg.data_kmax, cfg.seed);
    const double us = sup_abs(u);
    if (us > 0.0) u *= cfg.amplitude / us;
    // eps enters E linearly to leading order; one correction pass lands sup|E| on the amplitude.
    // Large amplitudes: the strain bound is capped so the map stays invertible.
    const double cap = 0.45;
    auto map = constraints::FlowMap::random(cfg.dim, cfg.L, 1.0, cfg.data_modes, cfg.data_kmax, cfg.seed + 1000);
    map.eps = std::min(cfg.amplitude, cap) / map.strain_bound();
    const double es = sup_abs(constraints::generate_admissible(g, map).state.E);
    if (es > 0.0) map.eps *= cfg.amplitude / es;
    if (map.strain_bound() > cap) map.eps *= cap / map.strain_bound();
    auto data = constraints::generate_admissible(g, map, &u);
    return data.state;
}

Forcing make_forcing(const DirectState& s, const Params& p) {
    PrimitiveState prim = s.to_primitive();
    auto src = model::assemble_sources(prim, p, true);
    Forcing f;
    f.u = prim.u;
    f.u_phys = transform_inverse(prim.u);
    f.L = std::move(src.L);
    f.M = std::move(src.M);
    f.N = std::move(src.N);
    f.GE = transform_forward(matmul(transform_inverse(gradient(prim.u)), transform_inverse(s.E)));
    return f;
}

DirectState explicit_rhs(const DirectState& s, const Forcing& f, const Params& p) {
    DirectState r;
    r.rho = f.L - advect(f.u_phys, s.rho) - fractional_power(s.d, 1.0);
    r.d = f.M - advect(f.u_phys, s.d);
    r.d.axpy(1.0 + p.a, fractional_power(s.rho, 1.0));
    r.omega = f.N - advect(f.u_phys, s.omega);
    r.omega.axpy(p.a, fractional_power(antisymmetric_part(s.E), 1.0));
    r.E = f.GE - advect(f.u_phys, s.E) + gradient(helmholtz_reconstruct(s.d, s.omega));
    project_mean_zero(r.rho);
    project_mean_zero(r.d);
    project_mean_zero(r.omega);
    return r;
}

double cfl_number(const DirectState& s, double dt) {
    RealField u = transform_inverse(helmholtz_reconstruct(s.d, s.omega));
    double vmax = 0.0;
    const std::size_t np = u.comp[0].size();
    for (std::size_t q = 0; q < np; ++q) {
        double v2 = 0.0;
        for (const auto& c : u.comp) v2 += c[q] * c[q];
        vmax = std::max(vmax, v2);
    }
    return dt * std::sqrt(vmax) * s.grid()->kmax();
}

namespace {

// Per-mode multiplier m(c |xi|^2 h) on every component.
template <class Fn>
void viscous_multiplier(SpectralField& f, double c, double h, Fn m) {
    const GridPtr& g = f.grid();
    const std::size_t ns = g->spectral_size();
    std::vector<double> fac(ns);
    for (std::size_t i = 0; i < ns; ++i) fac[i] = m(c * g->kmag(i) * g->kmag(i) * h);
    for (int c2 = 0; c2 < f.components(); ++c2) {
        auto& a = f.comp(c2);
        for (std::size_t i = 0; i < ns; ++i) a[i] *= fac[i];
    }
}

// with z = c |xi|^2 h:  e^{-z},  (1 - e^{-z})/z,  (e^{-z} - 1 + z)/z^2
double decay(double z) { return std::exp(-z); }
double phi1(double z) { return z < 1e-4 ? 1.0 - z / 2.0 + z * z / 6.0 : -std::expm1(-z) / z; }
double phi2(double z) {
    return z < 1e-3 ? 0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0 : (std::expm1(-z) + z) / (z * z);
}

}  // namespace

StepResult imex_step(const DirectState& s, double dt, const Params& p, double cfl, const Forcing* at_state,
                     const std::function<Forcing(const DirectState&)>* at_stage) {
    const double c = cfl_number(s, dt);
    if (c > cfl) {
        std::ostringstream os;
        os << "CFL number " << c << " exceeds " << cfl;
        throw StepSizeError(os.str());
    }
    model::check_density_bound(s.rho);

    // Exponential RK2: a = e^{-Vh} x + h phi1 k1, x' = a + h phi2 (k2 - k1), with V the
    // viscous symbols of d and Omega.  rho and E carry no symbol, which makes this Heun.
    const Forcing f1 = at_state ? *at_state : make_forcing(s, p);
    const DirectState k1 = explicit_rhs(s, f1, p);
    StepResult out;
    out.stage = s;
    viscous_multiplier(out.stage.d, p.nu(), dt, decay);
    viscous_multiplier(out.stage.omega, p.mu(), dt, decay);
    {
        DirectState hk = k1;
        viscous_multiplier(hk.d, p.nu(), dt, phi1);
        viscous_multiplier(hk.omega, p.mu(), dt, phi1);
        out.stage.axpy(dt, hk);
    }
    model::check_density_bound(out.stage.rho);

    const Forcing f2 = at_stage ? (*at_stage)(out.stage) : make_forcing(out.stage, p);
    DirectState diff = explicit_rhs(out.stage, f2, p);
    diff.axpy(-1.0, k1);
    viscous_multiplier(diff.rho, 0.0, dt, phi2);
    viscous_multiplier(diff.d, p.nu(), dt, phi2);
    viscous_multiplier(diff.omega, p.mu(), dt, phi2);
    viscous_multiplier(diff.E, 0.0, dt, phi2);
    out.next = out.stage;
    out.next.axpy(dt, diff);
    return out;
}

// ---------------------------------------------------------------- norms

double NormSeries::initial_norm() const {
    if (samples.empty()) return 0.0;
    const auto& s = samples.front();
    return s.rho + s.u + s.E;
}

double NormSeries::bnorm() const { return samples.empty() ? 0.0 : samples.back().bnorm; }

double NormSeries::gamma_measured() const {
    const double i = initial_norm();
    return i > 0.0 ? bnorm() / i : 0.0;
}

std::string NormSeries::csv() const {
    std::ostringstream os;
    os.precision(12);
    os << "# viscoflow norm series v1\n";
    os << "t,rho,u,E,rho_l1,u_l1,E_l1,sup_total,l1_total,bnorm\n";
    for (const auto& s : samples)
        os << s.t << ',' << s.rho << ',' << s.u << ',' << s.E << ',' << s.rho_l1 << ',' << s.u_l1 << ',' << s.E_l1
           << ',' << s.sup_total << ',' << s.l1_total << ',' << s.bnorm << '\n';
    return os.str();
}

StateNorms state_norms(const lp::DyadicFamily& fam, const PrimitiveState& s) {
    const double h = 0.5 * fam.grid()->dim();
    StateNorms n;
    n.rho = fam.hybrid_norm(s.rho, h - 1.0, h);
    n.u = fam.besov_norm(s.u, h - 1.0);
    n.E = fam.hybrid_norm(s.E, h - 1.0, h);
    n.rho_rate = fam.hybrid_norm(s.rho, h + 1.0, h);
    n.u_rate = fam.besov_norm(s.u, h + 1.0);
    n.E_rate = fam.hybrid_norm(s.E, h + 1.0, h);
    return n;
}

void accumulate_norms(const StateNorms& n, double t, NormSeries& series) {
    NormSample s;
    s.t = t;
    s.rho = n.rho;
    s.u = n.u;
    s.E = n.E;
    if (!series.samples.empty()) {
        const NormSample& prev = series.samples.back();
        if (!(t > prev.t)) throw InputError("norm samples need increasing times");
        const double h = 0.5 * (t - prev.t);
        s.rho_l1 = prev.rho_l1 + h * (series.last_rho_rate + n.rho_rate);
        s.u_l1 = prev.u_l1 + h * (series.last_u_rate + n.u_rate);
        s.E_l1 = prev.E_l1 + h * (series.last_E_rate + n.E_rate);
    }
    series.sup_rho = std::max(series.sup_rho, n.rho);
    series.sup_u = std::max(series.sup_u, n.u);
    series.sup_E = std::max(series.sup_E, n.E);
    series.last_rho_rate = n.rho_rate;
    series.last_u_rate = n.u_rate;
    series.last_E_rate = n.E_rate;
    s.sup_total = series.sup_rho + series.sup_u + series.sup_E;
    s.l1_total = s.rho_l1 + s.u_l1 + s.E_l1;
    s.bnorm = s.sup_total + s.l1_total;
    series.samples.push_back(s);
}

void accumulate_norms(const lp::DyadicFamily& fam, const PrimitiveState& s, double t, NormSeries& series) {
    accumulate_norms(state_norms(fam, s), t, series);
}

// ---------------------------------------------------------------- direct

DirectRun run_direct(const PrimitiveState& initial, const RunConfig& cfg, const SampleObserver& observer) {
    cfg.validate();
    const Params p = cfg.params();
    const GridPtr& g = initial.grid();
    lp::DyadicFamily fam(g);
    DirectRun run;
    DirectState s = DirectState::from_primitive(initial);
    const int steps = cfg.steps();
    // the L1 integrals need every step; the series keeps every `cadence`-th sample
    NormSeries dense;
    accumulate_norms(fam, s.to_primitive(), 0.0, dense);
    run.norms.samples.push_back(dense.samples.back());
    if (observer) observer(0.0, s);
    for (int k = 1; k <= steps; ++k) {
        s = imex_step(s, cfg.dt, p, cfg.cfl).next;
        accumulate_norms(fam, s.to_primitive(), k * cfg.dt, dense);
        if (k % cfg.cadence == 0 || k == steps) {
            run.norms.samples.push_back(dense.samples.back());
            if (observer) observer(k * cfg.dt, s);
        }
        run.max_antisymmetry_defect = std::max(run.max_antisymmetry_defect, antisymmetry_defect(s.omega));
        run.max_mean = std::max({run.max_mean, mean_magnitude(s.rho), mean_magnitude(s.d), mean_magnitude(s.omega)});
        const auto& last = dense.samples.back();
        if (!std::isfinite(last.bnorm)) throw DivergenceError("non-finite norm at step " + std::to_string(k));
    }
    run.norms.last_rho_rate = dense.last_rho_rate;
    run.norms.last_u_rate = dense.last_u_rate;
    run.norms.last_E_rate = dense.last_E_rate;
    run.norms.sup_rho = dense.sup_rho;
    run.norms.sup_u = dense.sup_u;
    run.norms.sup_E = dense.sup_E;
    run.final_state = std::move(s);
    run.steps = steps;
    return run;
}

// ---------------------------------------------------------------- Picard

SpectralField mollify(const lp::DyadicFamily& fam, const SpectralField& f, int m) {
    // the k = 0 coefficient belongs to no block; it is kept (limit of the low-frequency sum)
    SpectralField out(f.grid(), f.rank());
    for (int c = 0; c < f.components(); ++c) out.comp(c)[0] = f.comp(c)[0];
    for (int q = std::max(fam.q_lo(), -m); q <= std::min(fam.q_hi(), m); ++q) out += fam.block(f, q);
    return out;
}

namespace {

struct Trajectory {
    std::vector<DirectState> states;  // steps + 1
    std::vector<DirectState> stages;  // steps
};

PrimitiveState difference(const DirectState& a, const DirectState& b) {
    DirectState d = a;
    d.axpy(-1.0, b);
    return d.to_primitive();
}

}  // namespace

PicardResult picard_solve(const PrimitiveState& initial, const RunConfig& cfg, PicardOptions opt) {
    cfg.validate();
    const Params p = cfg.params();
    const GridPtr& g = initial.grid();
    lp::DyadicFamily fam(g);
    const int steps = cfg.steps();
    PicardResult res;

    {
        NormSeries s0;
        accumulate_norms(fam, initial, 0.0, s0);
        res.gamma_data = s0.initial_norm();
    }

    // iterate 0: zero trajectory
    Trajectory prev;
    prev.states.assign(steps + 1, DirectState::zeros(g));
    prev.stages.assign(steps, DirectState::zeros(g));
    {
        NormSeries z;
        for (int k = 0; k <= steps; ++k) accumulate_norms(StateNorms{}, k * cfg.dt, z);
        res.norms.push_back(std::move(z));
        res.finals.push_back(DirectState::zeros(g));
    }

    for (int it = 1; it <= cfg.picard_iterations; ++it) {
        PrimitiveState data = initial;
        if (cfg.picard_init == PicardInit::Mollified) {
            const int m = it - 1;
            data.rho = mollify(fam, initial.rho, m);
            data.u = mollify(fam, initial.u, m);
            data.E = mollify(fam, initial.E, m);
        }
        Trajectory cur;
        cur.states.reserve(steps + 1);
        cur.stages.reserve(steps);
        DirectState s = DirectState::from_primitive(data);
        cur.states.push_back(s);
        NormSeries series, diff;
        accumulate_norms(fam, s.to_primitive(), 0.0, series);
        accumulate_norms(fam, difference(s, prev.states[0]), 0.0, diff);
        try {
            for (int k = 0; k < steps; ++k) {
                const Forcing f1 = make_forcing(prev.states[k], p);
                const DirectState& pstage = prev.stages[k];
                std::function<Forcing(const DirectState&)> f2 = [&](const DirectState&) {
                    return make_forcing(pstage, p);
                };
                StepResult r = imex_step(s, cfg.dt, p, cfg.cfl, &f1, &f2);
                s = std::move(r.next);
                cur.stages.push_back(std::move(r.stage));
                cur.states.push_back(s);
                const double t = (k + 1) * cfg.dt;
                accumulate_norms(fam, s.to_primitive(), t, series);
                accumulate_norms(fam, difference(s, prev.states[k + 1]), t, diff);
                const double b = series.bnorm();
                if (!std::isfinite(b) || b > opt.divergence_factor * res.gamma_data)
                    throw DivergenceError("Picard iterate " + std::to_string(it) + " exceeds " +
                                          std::to_string(opt.divergence_factor) + "x the data norm at t=" +
                                          std::to_string(t));
            }
        } catch (const Error& e) {
            if (opt.throw_on_failure) throw;
            res.failure = e.what();
            res.norms.push_back(std::move(series));
            res.finals.push_back(s);
            return res;
        }
        res.norms.push_back(std::move(series));
        res.finals.push_back(s);
        res.U.push_back(diff.bnorm());
        if (res.U.size() >= 2) {
            const double a = res.U[res.U.size() - 2];
            res.ratios.push_back(a > 0.0 ? res.U.back() / a : 0.0);
        }
        prev = std::move(cur);
    }
    return res;
}

UniformBoundReport uniform_bound_monitor(const PicardResult& r) {
    UniformBoundReport rep;
    rep.gamma_data = r.gamma_data;
    double bmax = 0.0;
    for (const auto& n : r.norms) bmax = std::max(bmax, n.bnorm());
    std::ostringstream os;
    if (r.gamma_data > 0.0) {
        rep.Gamma = bmax / r.gamma_data;
        rep.smallness = rep.Gamma * rep.Gamma * r.gamma_data;
    }
    // growth: the last difference fails to contract
    if (r.ratios.size() >= 1 && r.ratios.back() > 0.9) rep.growth = true;
    if (!r.failure.empty()) {
        rep.violation = true;
        os << "iteration stopped: " << r.failure << "; ";
    }
    if (rep.smallness > 1.0) {
        rep.violation = true;
        os << "Gamma^2 gamma = " << rep.smallness << " > 1; ";
    }
    if (rep.growth) {
        rep.violation = true;
        os << "differences not contracting (last ratio " << r.ratios.back() << "); ";
    }
    rep.message = os.str();
    if (rep.message.empty())
        rep.message = "uniform";
    else
        rep.message.resize(rep.message.size() - 2);
    return rep;
}

}  // namespace viscoflow::integrate
