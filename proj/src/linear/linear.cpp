#include "viscoflow/linear.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "viscoflow/calculus.hpp"

namespace viscoflow::linear {

using calculus::fractional_power;
using model::advect;

namespace {

SpectralField lam(const SpectralField& f, double s = 1.0) { return fractional_power(f, s); }

// exp(M t) for a real 2x2 matrix, row major.
std::array<double, 4> expm2(double m00, double m01, double m10, double m11, double t) {
    const double tau = 0.5 * (m00 + m11);
    const double det = m00 * m11 - m01 * m10;
    const std::complex<double> delta = std::sqrt(std::complex<double>(tau * tau - det, 0.0));
    const std::complex<double> dt = delta * t;
    // e^{tau t} cosh(delta t) and e^{tau t} sinh(delta t)/delta, exponents combined so
    // strongly damped modes underflow cleanly instead of inf * 0
    std::complex<double> ch, sh_over;
    if (std::abs(dt) < 1e-3) {
        const std::complex<double> z2 = dt * dt;
        const double e = std::exp(tau * t);
        ch = e * (1.0 + z2 / 2.0 + z2 * z2 / 24.0 + z2 * z2 * z2 / 720.0);
        sh_over = e * t * (1.0 + z2 / 6.0 + z2 * z2 / 120.0 + z2 * z2 * z2 / 5040.0);
    } else {
        const std::complex<double> ep = std::exp(tau * t + dt), em = std::exp(tau * t - dt);
        ch = 0.5 * (ep + em);
        sh_over = (ep - em) / (2.0 * delta);
    }
    const double c = ch.real(), s = sh_over.real();
    return {c + s * (m00 - tau), s * m01, s * m10, c + s * (m11 - tau)};
}

void apply2(const std::array<double, 4>& P, cplx& x, cplx& y) {
    const cplx a = P[0] * x + P[1] * y;
    const cplx b = P[2] * x + P[3] * y;
    x = a;
    y = b;
}

// Block-q inner products (Lambda^p D_q f | D_q g), summed over components.
double block_dot(const lp::DyadicFamily& fam, const SpectralField& f, const SpectralField& g, int q, double p) {
    const GridPtr& gr = fam.grid();
    double s = 0.0;
    for (int c = 0; c < f.components(); ++c) {
        const auto& a = f.comp(c);
        const auto& b = g.comp(c);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double w = fam.weight(i, q);
            if (w == 0.0) continue;
            const double r = gr->kmag(i);
            const double lp = p == 0.0 ? 1.0 : std::pow(r, p);
            s += gr->multiplicity(i) * w * w * lp * (std::conj(a[i]) * b[i]).real();
        }
    }
    return s;
}

struct BlockTerms {
    double positive = 0.0;  // sum of the square terms, for the rounding tolerance
    double radicand = 0.0;
};

BlockTerms low_terms(const lp::DyadicFamily& fam, const HelmholtzState& s, int q, const EnergyConstants& k) {
    const double c = k.nu / k.eta;
    BlockTerms t;
    t.positive = 2 * block_dot(fam, s.rho, s.rho, q, 0) + 2 * block_dot(fam, s.d, s.d, q, 0) +
                 block_dot(fam, s.W, s.W, q, 0) + block_dot(fam, s.ecal, s.ecal, q, 0) +
                 block_dot(fam, s.omega, s.omega, q, 0);
    t.radicand = t.positive - c * (block_dot(fam, s.W, s.omega, q, 1) + block_dot(fam, s.rho, s.d, q, 1) +
                                   block_dot(fam, s.ecal, s.d, q, 1));
    return t;
}

BlockTerms high_terms(const lp::DyadicFamily& fam, const HelmholtzState& s, int q, const EnergyConstants& k,
                      HighForm form) {
    const bool w = form == HighForm::Weighted;
    const double gd = w ? 2 * k.gamma : 1.0, go = w ? k.gamma : 1.0;
    const double b1 = w ? k.beta1 : 1.0, b2 = w ? k.beta2 : 1.0, b3 = w ? 2 * k.beta1 : 1.0;
    BlockTerms t;
    t.positive = block_dot(fam, s.rho, s.rho, q, 2) + block_dot(fam, s.W, s.W, q, 2) +
                 block_dot(fam, s.ecal, s.ecal, q, 2) + gd * block_dot(fam, s.d, s.d, q, 0) +
                 go * block_dot(fam, s.omega, s.omega, q, 0);
    t.radicand = t.positive - b1 * block_dot(fam, s.rho, s.d, q, 1) - b2 * block_dot(fam, s.W, s.omega, q, 1) -
                 b3 * block_dot(fam, s.ecal, s.d, q, 1);
    return t;
}

double finish(const BlockTerms& t, int q, int dim, const char* what) {
    double x = t.radicand;
    if (x < 0.0) {
        if (x < -1e-12 * t.positive)
            throw InvariantViolation(std::string(what) + ": negative radicand in block " + std::to_string(q));
        x = 0.0;
    }
    return std::pow(2.0, q * (0.5 * dim - 1.0)) * std::sqrt(x);
}


}  // namespace

LinearCoeffs LinearCoeffs::paper(double nu, double mu, double a) {
    return {nu, mu, a, 1.0 + a, 1.0 + a};
}

LinearCoeffs LinearCoeffs::consistent(double nu, double mu, double a) {
    return {nu, mu, a, 1.0 + a, 0.5 * (1.0 + a)};
}

double LinearCoeffs::c_rho(DMode m) const {
    switch (m) {
        case DMode::RhoDriven: return rho_to_d;
        case DMode::EDriven: return 0.0;
        default: return 0.5 * rho_to_d;
    }
}

double LinearCoeffs::c_e(DMode m) const {
    switch (m) {
        case DMode::RhoDriven: return 0.0;
        case DMode::EDriven: return e_to_d;
        default: return 0.5 * e_to_d;
    }
}

HelmholtzState linear_rhs(const HelmholtzState& s, const SpectralField* u, const SourceTerms* src,
                          const LinearCoeffs& c, DMode mode) {
    HelmholtzState r;
    SpectralField ld = lam(s.d);
    r.rho = -1.0 * ld;
    r.d = (-c.nu) * lam(s.d, 2.0);
    const double cr = c.c_rho(mode), ce = c.c_e(mode);
    if (cr != 0.0) r.d.axpy(cr, lam(s.rho));
    if (ce != 0.0) r.d.axpy(ce, lam(s.ecal));
    r.omega = (-c.mu) * lam(s.omega, 2.0);
    r.omega.axpy(c.a, lam(s.W));
    r.W = -1.0 * lam(s.omega);
    r.ecal = -2.0 * ld;

    if (u) {
        RealField up = transform_inverse(*u);
        r.rho -= advect(up, s.rho);
        r.d -= advect(up, s.d);
        r.omega -= advect(up, s.omega);
        r.W -= advect(up, s.W);
        r.ecal -= advect(up, s.ecal);
    }
    if (src) {
        r.rho += src->L;
        switch (mode) {
            case DMode::RhoDriven: r.d += src->M; break;
            case DMode::EDriven: r.d += src->J; break;
            case DMode::Averaged:
                r.d.axpy(0.5, src->M);
                r.d.axpy(0.5, src->J);
                break;
        }
        r.omega += src->N;
        r.W += src->Q;
        r.ecal += src->K;
    }
    // W keeps the mean of E^T - E
    for (SpectralField* f : {&r.rho, &r.d, &r.omega, &r.ecal}) project_mean_zero(*f);
    return r;
}

double DualPathReport::max() const { return std::max({rho, d, omega, W, ecal}); }

DualPathReport dual_path(const model::PrimitiveState& s, const model::Params& p) {
    HelmholtzState lhs = model::to_helmholtz(model::primitive_rhs(s, p));
    SourceTerms src = model::assemble_sources(s, p, true);
    HelmholtzState rhs = linear_rhs(model::to_helmholtz(s), &s.u, &src,
                                    LinearCoeffs::consistent(p.nu(), p.mu(), p.a), DMode::RhoDriven);
    DualPathReport rep;
    rep.rho = l2_norm(lhs.rho - rhs.rho);
    rep.d = l2_norm(lhs.d - rhs.d);
    rep.omega = l2_norm(lhs.omega - rhs.omega);
    rep.W = l2_norm(lhs.W - rhs.W);
    rep.ecal = l2_norm(lhs.ecal - rhs.ecal);
    rep.scale = std::sqrt(std::pow(l2_norm(lhs.rho), 2) + std::pow(l2_norm(lhs.d), 2) +
                          std::pow(l2_norm(lhs.omega), 2) + std::pow(l2_norm(lhs.W), 2) +
                          std::pow(l2_norm(lhs.ecal), 2));
    rep.identity_tE = model::identity_tE_residual(s);
    return rep;
}

EnergyConstants EnergyConstants::from(double nu, double mu) {
    if (!(nu > 0.0) || !(mu > 0.0)) throw ConfigurationError("energy constants need nu > 0 and mu > 0");
    EnergyConstants k;
    k.nu = nu;
    k.mu = mu;
    k.beta1 = 2.0 / nu;
    k.beta2 = 2.0 / mu;
    k.gamma = std::max(2.0 / (mu * mu), 5.0 / (nu * nu)) + 1.0;
    // block q carries |xi| >= 2^q 5/6, so this makes ||Lambda D_q f|| >= 2 gamma ||D_q f|| for q >= q0
    k.q0 = static_cast<int>(std::ceil(std::log2(2.0 * k.gamma * 6.0 / 5.0)));
    const double f = std::pow(4.0, k.q0);
    k.eta = std::max({(f * nu * nu + 3.0) / 2.0, nu, nu / mu, f * mu * nu / 2.0}) + 1.0;
    return k;
}

double block_energy_low(const lp::DyadicFamily& fam, const HelmholtzState& s, int q, const EnergyConstants& k) {
    return finish(low_terms(fam, s, q, k), q, fam.grid()->dim(), "block_energy_low");
}

double block_energy_high(const lp::DyadicFamily& fam, const HelmholtzState& s, int q, const EnergyConstants& k,
                         HighForm form) {
    return finish(high_terms(fam, s, q, k, form), q, fam.grid()->dim(), "block_energy_high");
}

std::vector<BlockEnergy> block_energies(const lp::DyadicFamily& fam, const HelmholtzState& s,
                                        const EnergyConstants& k, HighForm form) {
    const int dim = fam.grid()->dim();
    std::vector<BlockEnergy> out;
    for (int q = fam.q_lo(); q <= fam.q_hi(); ++q) {
        BlockEnergy b;
        b.q = q;
        b.regime = q <= k.q0 ? Regime::Low : Regime::High;
        b.weight_exponent = 0.5 * dim - 1.0;
        BlockTerms t = b.regime == Regime::Low ? low_terms(fam, s, q, k) : high_terms(fam, s, q, k, form);
        b.radicand = t.radicand;
        b.value = finish(t, q, dim, "block_energies");
        out.push_back(b);
    }
    return out;
}

std::vector<double> equivalence_ratios(const lp::DyadicFamily& fam, const model::PrimitiveState& s,
                                       const EnergyConstants& k, HighForm form) {
    const int dim = fam.grid()->dim();
    HelmholtzState h = model::to_helmholtz(s);
    auto g = block_energies(fam, h, k, form);
    std::vector<double> out;
    for (const auto& b : g) {
        const int q = b.q;
        const double a = std::sqrt(block_dot(fam, s.rho, s.rho, q, 0)) + std::sqrt(block_dot(fam, s.E, s.E, q, 0));
        const double c = std::sqrt(block_dot(fam, h.d, h.d, q, 0)) + std::sqrt(block_dot(fam, h.omega, h.omega, q, 0));
        const double den = std::pow(2.0, q * lp::hybrid_exponent(q, 0.5 * dim - 1.0, 0.5 * dim)) * a +
                           std::pow(2.0, q * (0.5 * dim - 1.0)) * c;
        if (den > 0.0) out.push_back(b.value / den);
    }
    return out;
}

const char* pair_name(Pair p) {
    switch (p) {
        case Pair::RhoD: return "rho-d";
        case Pair::OmegaW: return "omega-W";
        default: return "ecal-d";
    }
}

double PairSpectrum::slow_rate() const { return std::min(std::abs(roots[0].real()), std::abs(roots[1].real())); }

PairSpectrum constant_coeff_spectrum(Pair pair, double r, const LinearCoeffs& c) {
    if (!(r > 0.0)) throw InputError("constant_coeff_spectrum: |xi| must be positive");
    double b = 0.0, k = 0.0;  // l^2 + b l + k
    switch (pair) {
        case Pair::RhoD: b = c.nu * r * r; k = c.rho_to_d * r * r; break;
        case Pair::OmegaW: b = c.mu * r * r; k = c.a * r * r; break;
        case Pair::EcalD: b = c.nu * r * r; k = 2.0 * c.e_to_d * r * r; break;
    }
    const std::complex<double> disc = std::sqrt(std::complex<double>(b * b - 4.0 * k, 0.0));
    PairSpectrum s;
    // the larger root in magnitude first, the smaller from the product to avoid cancellation
    const std::complex<double> big = (-b - disc) / 2.0;
    s.roots = {big, k / big};
    return s;
}

std::array<PairSpectrum, 3> constant_coeff_spectrum(double r, const LinearCoeffs& c) {
    return {constant_coeff_spectrum(Pair::RhoD, r, c), constant_coeff_spectrum(Pair::OmegaW, r, c),
            constant_coeff_spectrum(Pair::EcalD, r, c)};
}

HelmholtzState Propagator::apply(const HelmholtzState& s0, double t) const {
    HelmholtzState s = s0;
    const GridPtr& g = s.grid();
    const LinearCoeffs& c = coeffs;
    const std::size_t ns = g->spectral_size();
    const int nm = s.omega.components();
    const bool run_rd = !isolate || pair != Pair::OmegaW;
    const bool run_ow = !isolate || pair == Pair::OmegaW;
    if (isolate) {
        if (pair != Pair::RhoD) s.rho.set_zero();
        if (pair != Pair::EcalD) s.ecal.set_zero();
        if (pair == Pair::OmegaW) s.d.set_zero();
        if (pair != Pair::OmegaW) {
            s.omega.set_zero();
            s.W.set_zero();
        }
    }
    for (std::size_t i = 0; i < ns; ++i) {
        const double r = g->kmag(i);
        if (r == 0.0 || !g->retained(i)) continue;
        if (run_ow) {
            const auto P = expm2(-c.mu * r * r, c.a * r, -r, 0.0, t);
            for (int m = 0; m < nm; ++m) apply2(P, s.omega.comp(m)[i], s.W.comp(m)[i]);
        }
        if (!run_rd) continue;
        cplx& rho = s.rho.comp(0)[i];
        cplx& d = s.d.comp(0)[i];
        cplx& ec = s.ecal.comp(0)[i];
        if (isolate && pair == Pair::RhoD) {
            apply2(expm2(0.0, -r, c.rho_to_d * r, -c.nu * r * r, t), rho, d);
        } else if (isolate && pair == Pair::EcalD) {
            apply2(expm2(0.0, -2.0 * r, c.e_to_d * r, -c.nu * r * r, t), ec, d);
        } else {
            // sigma = c1 rho + c2 Ecal and d form a closed pair; 2 rho - Ecal is conserved
            const double c1 = c.c_rho(mode), c2 = c.c_e(mode), kap = c1 + 2.0 * c2;
            const cplx xi = 2.0 * rho - ec;
            cplx sigma = c1 * rho + c2 * ec;
            if (kap == 0.0) {
                d *= std::exp(-c.nu * r * r * t);
                continue;
            }
            apply2(expm2(0.0, -r * kap, r, -c.nu * r * r, t), sigma, d);
            rho = (sigma + c2 * xi) / kap;
            ec = 2.0 * rho - xi;
        }
    }
    return s;
}

double fit_decay_rate(const std::vector<double>& t, const std::vector<double>& log_g) {
    const std::size_t n = t.size();
    if (n < 20 || log_g.size() != n) throw DiagnosticError("decay fit needs at least 20 samples");
    if (!(log_g.front() - log_g.back() >= 1.0))
        throw DiagnosticError("decay fit window spans less than one e-fold");
    double st = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        st += t[i];
        sy += log_g[i];
    }
    st /= n;
    sy /= n;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (t[i] - st) * (log_g[i] - sy);
        den += (t[i] - st) * (t[i] - st);
    }
    return -num / den;
}

DecayRun measure_block_decay(const lp::DyadicFamily& fam, const HelmholtzState& s0, int q, const Propagator& prop,
                             const EnergyConstants& k, double efolds, int samples) {
    const int dim = fam.grid()->dim();
    auto energy = [&](const HelmholtzState& s) {
        return q <= k.q0 ? block_energy_low(fam, s, q, k) : block_energy_high(fam, s, q, k);
    };
    const double g0 = energy(s0);
    if (!(g0 > 0.0)) throw DiagnosticError("seeded state has no energy in block " + std::to_string(q));
    const double wq = std::pow(2.0, q * (0.5 * dim + 1.0));
    auto smooth = [&](const HelmholtzState& s) {
        return wq * (std::sqrt(block_dot(fam, s.d, s.d, q, 0)) + std::sqrt(block_dot(fam, s.omega, s.omega, q, 0)));
    };

    double T = 1.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
        DecayRun run;
        run.q = q;
        const double h = T / samples;
        HelmholtzState s = s0;
        double offset = 0.0;  // log of the factor divided out so far
        double prev_sm = smooth(s);
        run.t.push_back(0.0);
        run.log_g.push_back(std::log(g0));
        for (int n = 1; n <= samples; ++n) {
            s = prop.apply(s, h);
            const double g = energy(s);
            if (!(g > 0.0)) break;
            run.t.push_back(n * h);
            run.log_g.push_back(std::log(g) + offset);
            const double sm = smooth(s) * std::exp(offset);
            run.smoothing_integral += 0.5 * h * (prev_sm + sm);
            prev_sm = sm;
            if (g < 1e-150) {
                for (SpectralField* f : {&s.rho, &s.d, &s.omega, &s.W, &s.ecal}) *f *= 1e150;
                offset += std::log(1e-150);
            }
        }
        const double drop = run.log_g.front() - run.log_g.back();
        if (drop >= efolds && static_cast<int>(run.t.size()) == samples + 1) {
            const std::size_t from = run.t.size() / 3;
            std::vector<double> tt(run.t.begin() + from, run.t.end()), ll(run.log_g.begin() + from, run.log_g.end());
            run.fitted_rate = fit_decay_rate(tt, ll);
            return run;
        }
        if (static_cast<int>(run.t.size()) != samples + 1) {
            T *= 0.5;  // energy vanished numerically; shorten the window
            continue;
        }
        T *= std::clamp(1.2 * efolds / std::max(drop, 1e-3), 1.5, 64.0);
    }
    throw DiagnosticError("decay fit window could not be sized for block " + std::to_string(q));
}

HelmholtzState seed_pair(const GridPtr& g, Pair pair, double r) {
    const double kr = r * g->L();
    const int k = static_cast<int>(std::lround(kr));
    if (std::abs(kr - k) > 1e-9 || k <= 0) throw InputError("seed_pair: r L must be a positive integer");
    std::size_t idx;
    bool conj;
    if (k > g->cutoff() || !g->locate({k, 0, 0}, idx, conj)) throw InputError("seed_pair: mode outside the band");
    HelmholtzState s = HelmholtzState::zeros(g);
    switch (pair) {
        case Pair::RhoD: s.rho.comp(0)[idx] = 0.5; break;
        case Pair::EcalD: s.ecal.comp(0)[idx] = 0.5; break;
        case Pair::OmegaW:
            s.omega(0, 1)[idx] = 0.5;
            s.omega(1, 0)[idx] = -0.5;
            break;
    }
    return s;
}

int dominant_block(const lp::DyadicFamily& fam, double r) {
    int best = fam.q_lo();
    double bw = -1.0;
    for (int q = fam.q_lo(); q <= fam.q_hi(); ++q) {
        const double w = lp::psi(std::ldexp(r, -q));
        if (w > bw) {
            bw = w;
            best = q;
        }
    }
    return best;
}

DecayRow decay_study_point(Pair pair, double r, double nu, double mu, int dim) {
    const double L = r <= 1.0 ? 8.0 : 1.0;
    const int k = static_cast<int>(std::lround(r * L));
    int n = 16;
    while (n / 3 < k) n *= 2;
    auto g = Grid::create(dim, n, L);
    lp::DyadicFamily fam(g);
    Propagator prop;
    prop.coeffs = LinearCoeffs::paper(nu, mu, 1.0);
    prop.isolate = true;
    prop.pair = pair;
    const EnergyConstants kc = EnergyConstants::from(nu, mu);
    DecayRow row;
    row.pair = pair;
    row.xi = r;
    row.q = dominant_block(fam, r);
    row.fitted = measure_block_decay(fam, seed_pair(g, pair, r), row.q, prop, kc).fitted_rate;
    row.oracle = constant_coeff_spectrum(pair, r, prop.coeffs).slow_rate();
    return row;
}

std::string decay_csv(const std::vector<DecayRow>& rows) {
    std::ostringstream os;
    os.precision(10);
    os << "# viscoflow decay v1\n";
    os << "pair,xi,q,fitted_rate,oracle_rate,rel_error\n";
    for (const auto& r : rows)
        os << pair_name(r.pair) << ',' << r.xi << ',' << r.q << ',' << r.fitted << ',' << r.oracle << ','
           << r.rel_error() << '\n';
    return os.str();
}

HelmholtzState weighted_damp(const HelmholtzState& s, double K, double V) {
    const double w = std::exp(-K * V);
    return {w * s.rho, w * s.d, w * s.omega, w * s.W, w * s.ecal};
}

std::vector<double> accumulate_V(const std::vector<double>& t, const std::vector<double>& u_norm) {
    if (t.size() != u_norm.size()) throw InputError("accumulate_V: size mismatch");
    std::vector<double> V(t.size(), 0.0);
    for (std::size_t i = 1; i < t.size(); ++i) V[i] = V[i - 1] + 0.5 * (t[i] - t[i - 1]) * (u_norm[i] + u_norm[i - 1]);
    return V;
}

}  // namespace viscoflow::linear
