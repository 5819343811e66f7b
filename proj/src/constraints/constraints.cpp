#include "viscoflow/constraints.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <numbers>
#include <random>

#include "viscoflow/calculus.hpp"

namespace viscoflow::constraints {

using calculus::divergence;
using calculus::gradient;

namespace {

std::vector<RealField> physical_partials(const SpectralField& f) {
    std::vector<RealField> out;
    for (int l = 0; l < f.dim(); ++l) out.push_back(transform_inverse(partial(f, l)));
    return out;
}

SpectralField advect(const RealField& up, const SpectralField& f) {
    const GridPtr& g = f.grid();
    auto df = physical_partials(f);
    RealField out(g, f.rank());
    for (int c = 0; c < out.components(); ++c)
        for (int l = 0; l < g->dim(); ++l)
            for (std::size_t p = 0; p < out.comp[c].size(); ++p) out.comp[c][p] += up.comp[l][p] * df[l].comp[c][p];
    return transform_forward(out);
}

double det(const double* m, int dim) {
    if (dim == 2) return m[0] * m[3] - m[1] * m[2];
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

// Trapezoid running integral.
std::vector<double> running_integral(const std::vector<double>& t, const std::vector<double>& f) {
    std::vector<double> out(t.size(), 0.0);
    for (std::size_t i = 1; i < t.size(); ++i) out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
    return out;
}

MajorantCheck check(const std::vector<double>& value, const std::vector<double>& rate_integral, double allowance,
                    double floor) {
    MajorantCheck c;
    c.value = value;
    for (std::size_t i = 0; i < value.size(); ++i) {
        const double m = value.front() * std::exp(rate_integral[i]);
        c.majorant.push_back(m);
        const double cap = allowance * m + floor;
        const double r = cap > 0.0 ? value[i] / cap : (value[i] > 0.0 ? INFINITY : 0.0);
        c.worst_ratio = std::max(c.worst_ratio, r);
        if (value[i] > cap) c.holds = false;
    }
    return c;
}

}  // namespace

FlowMap FlowMap::random(int dim, double L, double eps, int n_modes, int kmax, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> kd(-kmax, kmax);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    FlowMap m;
    m.dim = dim;
    m.L = L;
    m.eps = eps;
    while (static_cast<int>(m.modes.size()) < n_modes) {
        Mode md;
        bool zero = true;
        for (int a = 0; a < dim; ++a) {
            md.k[a] = kd(rng);
            if (md.k[a] != 0) zero = false;
        }
        if (zero) continue;
        for (int a = 0; a < dim; ++a) md.amp[a] = ud(rng);
        md.phase = std::numbers::pi * ud(rng);
        m.modes.push_back(md);
    }
    return m;
}

void FlowMap::displacement(const double* y, double* phi) const {
    for (int i = 0; i < dim; ++i) phi[i] = 0.0;
    for (const auto& md : modes) {
        double arg = md.phase;
        for (int a = 0; a < dim; ++a) arg += md.k[a] * y[a] / L;
        const double c = std::cos(arg);
        for (int i = 0; i < dim; ++i) phi[i] += md.amp[i] * c;
    }
}

void FlowMap::gradient(const double* y, double* grad) const {
    for (int i = 0; i < dim * dim; ++i) grad[i] = 0.0;
    for (const auto& md : modes) {
        double arg = md.phase;
        for (int a = 0; a < dim; ++a) arg += md.k[a] * y[a] / L;
        const double s = -std::sin(arg);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) grad[i * dim + j] += md.amp[i] * (md.k[j] / L) * s;
    }
}

double FlowMap::strain_bound() const {
    double b = 0.0;
    for (const auto& md : modes) {
        double a2 = 0.0, k2 = 0.0;
        for (int i = 0; i < dim; ++i) {
            a2 += md.amp[i] * md.amp[i];
            k2 += md.k[i] * md.k[i];
        }
        b += std::sqrt(a2 * k2) / L;
    }
    return std::abs(eps) * b;
}

AdmissibleData generate_admissible(const GridPtr& g, const FlowMap& map, const SpectralField* u0) {
    const int dim = g->dim();
    if (map.dim != dim || map.L != g->L()) throw InputError("flow map does not match the grid");
    if (map.strain_bound() >= 0.5) throw InputError("flow map too strong: eps |grad phi| must stay below 1/2");
    AdmissibleData out;
    out.rho_hat = RealField(g, Rank::Scalar);
    out.F = RealField(g, Rank::Matrix);
    const std::size_t np = g->real_size();
    double x[3], y[3], yn[3], phi[3], grad[9];
    for (std::size_t p = 0; p < np; ++p) {
        for (int a = 0; a < dim; ++a) y[a] = x[a] = g->coordinate(a, p);
        int it = 0;
        for (;; ++it) {
            if (it >= 200) throw InputError("inverse flow map did not converge");
            map.displacement(y, phi);
            double diff = 0.0;
            for (int a = 0; a < dim; ++a) {
                yn[a] = x[a] - map.eps * phi[a];
                diff = std::max(diff, std::abs(yn[a] - y[a]));
                y[a] = yn[a];
            }
            if (diff <= 1e-12 * std::max(1.0, map.L)) break;
        }
        out.max_iterations = std::max(out.max_iterations, it + 1);
        map.gradient(y, grad);
        double Fm[9];
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                Fm[i * dim + j] = (i == j ? 1.0 : 0.0) + map.eps * grad[i * dim + j];
                out.F(i, j)[p] = Fm[i * dim + j];
            }
        const double J = det(Fm, dim);
        const double rh = 1.0 / J;
        out.rho_hat.comp[0][p] = rh;
        out.max_det_defect = std::max(out.max_det_defect, std::abs(J * rh - 1.0));
    }
    RealField rho(g, Rank::Scalar), E(g, Rank::Matrix);
    for (std::size_t p = 0; p < np; ++p) rho.comp[0][p] = out.rho_hat.comp[0][p] - 1.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            E(i, j) = out.F(i, j);
            if (i == j)
                for (double& v : E(i, j)) v -= 1.0;
        }
    out.state.rho = transform_forward(rho);
    out.state.E = transform_forward(E);
    if (u0) {
        if (u0->rank() != Rank::Vector || u0->grid() != g) throw InputError("u0 must be a vector field on the grid");
        out.state.u = *u0;
        project_mean_zero(out.state.u);
    } else {
        out.state.u = SpectralField(g, Rank::Vector);
    }
    return out;
}

SpectralField div_defect(const SpectralField& rho, const SpectralField& E) {
    const GridPtr& g = rho.grid();
    const int dim = g->dim();
    RealField rp = transform_inverse(rho);
    RealField Ep = transform_inverse(E);
    // rho_hat F - I = rho I + E + rho E
    RealField M(g, Rank::Matrix);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            auto& m = M(i, j);
            const auto& e = Ep(i, j);
            for (std::size_t p = 0; p < m.size(); ++p) m[p] = e[p] + rp.comp[0][p] * e[p] + (i == j ? rp.comp[0][p] : 0.0);
        }
    // column divergence: v_j = d_i M_ij
    SpectralField Ms = transform_forward(M);
    return divergence(transpose(Ms));
}

double div_residual(const SpectralField& rho, const SpectralField& E) { return l2_norm(div_defect(rho, E)); }

double div_residual(const RealField& rho_hat, const RealField& F) {
    const GridPtr& g = rho_hat.grid;
    const int dim = g->dim();
    RealField M(g, Rank::Matrix);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            for (std::size_t p = 0; p < M(i, j).size(); ++p) M(i, j)[p] = rho_hat.comp[0][p] * F(i, j)[p];
    return l2_norm(divergence(transpose(transform_forward(M))));
}

CurlMeasure curl_measure(const SpectralField& E) {
    const GridPtr& g = E.grid();
    const int dim = g->dim();
    const std::size_t np = g->real_size();
    RealField Ep = transform_inverse(E);
    auto dE = physical_partials(E);
    CurlMeasure cm;
    std::vector<double> pt(np, 0.0);
    std::vector<double> m(np);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            for (int k = 0; k < dim; ++k) {
                if (j == k) continue;
                for (std::size_t p = 0; p < np; ++p) m[p] = dE[k](i, j)[p] - dE[j](i, k)[p];
                for (int l = 0; l < dim; ++l) {
                    const auto& elk = Ep(l, k);
                    const auto& elj = Ep(l, j);
                    const auto& dlij = dE[l](i, j);
                    const auto& dlik = dE[l](i, k);
                    for (std::size_t p = 0; p < np; ++p) m[p] += elk[p] * dlij[p] - elj[p] * dlik[p];
                }
                double s = 0.0;
                for (std::size_t p = 0; p < np; ++p) {
                    s += m[p] * m[p];
                    pt[p] += m[p] * m[p];
                }
                s /= static_cast<double>(np);
                cm.l2_sum_sq += s;
                cm.l2_max = std::max(cm.l2_max, std::sqrt(s));
            }
    for (double v : pt) cm.pointwise_max = std::max(cm.pointwise_max, v);
    return cm;
}

double curl_residual(const SpectralField& E) { return curl_measure(E).l2_max; }

KinematicState kinematic_rhs(const KinematicState& s, const SpectralField& u) {
    const GridPtr& g = u.grid();
    const int dim = g->dim();
    RealField up = transform_inverse(u);
    SpectralField Gs = gradient(u);
    RealField G = transform_inverse(Gs);
    RealField rp = transform_inverse(s.rho);
    RealField Ep = transform_inverse(s.E);
    SpectralField divu = divergence(u);
    RealField dv = transform_inverse(divu);

    KinematicState r;
    RealField l(g, Rank::Scalar);
    for (std::size_t p = 0; p < l.comp[0].size(); ++p) l.comp[0][p] = -rp.comp[0][p] * dv.comp[0][p];
    r.rho = transform_forward(l) - advect(up, s.rho) - divu;

    RealField GE(g, Rank::Matrix);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            for (int k = 0; k < dim; ++k)
                for (std::size_t p = 0; p < GE(i, j).size(); ++p) GE(i, j)[p] += G(i, k)[p] * Ep(k, j)[p];
    r.E = transform_forward(GE) - advect(up, s.E) + Gs;
    return r;
}

KinematicState kinematic_rk4_step(const KinematicState& s, const SpectralField& u, double dt) {
    auto add = [](const KinematicState& a, double h, const KinematicState& k) {
        KinematicState o = a;
        o.rho.axpy(h, k.rho);
        o.E.axpy(h, k.E);
        return o;
    };
    KinematicState k1 = kinematic_rhs(s, u);
    KinematicState k2 = kinematic_rhs(add(s, 0.5 * dt, k1), u);
    KinematicState k3 = kinematic_rhs(add(s, 0.5 * dt, k2), u);
    KinematicState k4 = kinematic_rhs(add(s, dt, k3), u);
    KinematicState o = s;
    o.rho.axpy(dt / 6.0, k1.rho).axpy(dt / 3.0, k2.rho).axpy(dt / 3.0, k3.rho).axpy(dt / 6.0, k4.rho);
    o.E.axpy(dt / 6.0, k1.E).axpy(dt / 3.0, k2.E).axpy(dt / 3.0, k3.E).axpy(dt / 6.0, k4.E);
    return o;
}

double grad_inf(const SpectralField& u) {
    RealField G = transform_inverse(gradient(u));
    double m = 0.0;
    for (std::size_t p = 0; p < G.comp[0].size(); ++p) {
        double s = 0.0;
        for (const auto& c : G.comp) s += c[p] * c[p];
        m = std::max(m, std::sqrt(s));
    }
    return m;
}

double div_inf(const SpectralField& u) { return max_abs(transform_inverse(divergence(u))); }

ConstraintSample sample_constraints(double t, const SpectralField& rho, const SpectralField& E,
                                    const SpectralField& u) {
    ConstraintSample s;
    s.t = t;
    s.div_res = div_residual(rho, E);
    s.curl = curl_measure(E);
    s.grad_u_inf = grad_inf(u);
    s.div_u_inf = div_inf(u);
    return s;
}

ConstraintReport gronwall_check(const std::vector<ConstraintSample>& samples, double allowance, double floor) {
    return gronwall_check(samples, allowance, Floors{floor * floor, floor * floor, floor * floor});
}

Floors integrator_floors(const std::vector<ConstraintSample>& fine, const std::vector<ConstraintSample>& coarse) {
    Floors f;
    if (fine.empty()) return f;
    const auto& s0 = fine.front();
    f.div_sq = 10 * s0.div_res * s0.div_res;
    f.curl_pointwise = 10 * s0.curl.pointwise_max;
    f.curl_l2_sq = 10 * s0.curl.l2_sum_sq;
    double d = 0, p = 0, l = 0;
    for (const auto& x : coarse) {
        d = std::max(d, x.div_res * x.div_res);
        p = std::max(p, x.curl.pointwise_max);
        l = std::max(l, x.curl.l2_sum_sq);
    }
    f.div_sq += d;
    f.curl_pointwise += p;
    f.curl_l2_sq += l;
    return f;
}

ConstraintReport gronwall_check(const std::vector<ConstraintSample>& samples, double allowance, const Floors& fl) {
    ConstraintReport rep;
    rep.samples = samples;
    if (samples.empty()) return rep;
    std::vector<double> t, gu, du, dv, cpt, cl2;
    for (const auto& s : samples) {
        t.push_back(s.t);
        gu.push_back(s.grad_u_inf);
        du.push_back(s.div_u_inf);
        dv.push_back(s.div_res * s.div_res);
        cpt.push_back(s.curl.pointwise_max);
        cl2.push_back(s.curl.l2_sum_sq);
    }
    const auto Ig = running_integral(t, gu);
    const auto Id = running_integral(t, du);
    std::vector<double> half(Ig.size()), two(Ig.size()), corr(Ig.size());
    for (std::size_t i = 0; i < Ig.size(); ++i) {
        half[i] = 0.5 * Ig[i];
        two[i] = 2.0 * Ig[i];
        corr[i] = 2.0 * Ig[i] + Id[i];
    }
    rep.div_stated = check(dv, half, allowance, fl.div_sq);
    rep.div_corrected = check(dv, Id, allowance, fl.div_sq);
    rep.curl_pointwise = check(cpt, two, allowance, fl.curl_pointwise);
    rep.curl_l2_stated = check(cl2, two, allowance, fl.curl_l2_sq);
    rep.curl_l2_corrected = check(cl2, corr, allowance, fl.curl_l2_sq);
    return rep;
}

std::vector<ConstraintSample> kinematic_trajectory(const KinematicState& s0, const SpectralField& u, double dt,
                                                   int steps, int every) {
    std::vector<ConstraintSample> out;
    KinematicState s = s0;
    out.push_back(sample_constraints(0.0, s.rho, s.E, u));
    for (int n = 1; n <= steps; ++n) {
        s = kinematic_rk4_step(s, u, dt);
        if (n % every == 0 || n == steps) out.push_back(sample_constraints(n * dt, s.rho, s.E, u));
    }
    return out;
}

// ---- studies ---------------------------------------------------------------

namespace {

RealField sample_field(const GridPtr& g, Rank rank, const std::function<double(int, const double*)>& fn) {
    RealField f(g, rank);
    double x[3] = {0, 0, 0};
    for (std::size_t p = 0; p < g->real_size(); ++p) {
        for (int a = 0; a < g->dim(); ++a) x[a] = g->coordinate(a, p);
        for (int c = 0; c < f.components(); ++c) f.comp[c][p] = fn(c, x);
    }
    return f;
}

void require_2d(const GridPtr& g) {
    if (g->dim() != 2) throw InputError("constraint studies are two-dimensional");
}

}  // namespace

SpectralField study_velocity(const GridPtr& g, int variant, double amp) {
    require_2d(g);
    const double L = g->L();
    return transform_forward(sample_field(g, Rank::Vector, [&](int c, const double* x) {
        switch (variant) {
            case 0: return amp * (c == 0 ? std::sin(x[0] / L) : std::sin(x[1] / L + 1.0));
            case 1: return amp * (c == 0 ? std::sin(x[1] / L) : std::cos(x[0] / L));
            default: return amp * (c == 0 ? std::sin(x[0] / L) + std::cos(x[1] / L) : std::sin(2 * x[0] / L));
        }
    }));
}

KinematicState seeded_state(const GridPtr& g, double eps, double r0, unsigned seed) {
    require_2d(g);
    const double L = g->L();
    auto d = generate_admissible(g, FlowMap::random(2, L, eps, 2, 2, seed));
    SpectralField b(g, Rank::Matrix);
    b.comp(0) = transform_forward(sample_field(g, Rank::Scalar, [&](int, const double* x) {
                    return std::cos(x[0] / L + 0.3) * std::cos(2 * x[1] / L);
                })).comp(0);
    const double unit = div_residual(d.state.rho, d.state.E + 1e-4 * b);
    return {d.state.rho, d.state.E + (1e-4 * r0 / unit) * b};
}

KinematicState hessian_state(const GridPtr& g, double amp) {
    require_2d(g);
    const double L = g->L();
    auto phi = transform_forward(sample_field(g, Rank::Scalar, [&](int, const double* x) {
        return amp * (std::cos((2 * x[0] + x[1]) / L) + 0.5 * std::sin((x[0] - 3 * x[1]) / L));
    }));
    return {SpectralField(g, Rank::Scalar), gradient(gradient(phi))};
}

bool TrajectoryResult::corrected_hold() const {
    return report.div_corrected.holds && report.curl_pointwise.holds && report.curl_l2_corrected.holds;
}

std::vector<TrajectoryResult> majorant_study(const StudyConfig& c) {
    auto g = Grid::create(2, c.n, c.L);
    std::vector<TrajectoryResult> out;
    const char* vname[3] = {"compressive", "shear", "mixed"};
    const KinematicState seeded = seeded_state(g, c.seed_eps, c.r0);
    const KinematicState hess = hessian_state(g, 0.5);
    for (int v = 0; v < 3; ++v) {
        SpectralField u = study_velocity(g, v, c.u_amp);
        out.push_back({std::string("seeded/") + vname[v],
                       gronwall_check(kinematic_trajectory(seeded, u, c.dt, c.steps, c.every)), {}});
        out.push_back({std::string("hessian/") + vname[v],
                       gronwall_check(kinematic_trajectory(hess, u, c.dt, c.steps, c.every)), {}});
    }
    auto ga = Grid::create(2, c.admissible_n, c.L);
    auto adm = generate_admissible(ga, FlowMap::random(2, c.L, c.admissible_eps, 2, 2, 5));
    const KinematicState a{adm.state.rho, adm.state.E};
    for (int v = 0; v < 3; ++v) {
        SpectralField u = study_velocity(ga, v, c.admissible_u);
        // integrator-error envelope from the same run at twice the step
        auto coarse = kinematic_trajectory(a, u, 2 * c.dt, c.steps / 2, std::max(1, c.every / 2));
        auto fine = kinematic_trajectory(a, u, c.dt, c.steps, c.every);
        const Floors fl = integrator_floors(fine, coarse);
        TrajectoryResult r{std::string("admissible/") + vname[v], gronwall_check(fine, 1.1, fl), fl};
        out.push_back(std::move(r));
    }
    const KinematicState weak = seeded_state(g, 0.1, c.r0, 11);
    out.push_back({"seeded-weak/mixed",
                   gronwall_check(kinematic_trajectory(weak, study_velocity(g, 2, 0.5 * c.u_amp), c.dt, c.steps, c.every)),
                   {}});
    return out;
}

std::vector<RefinementRow> refinement_study(double L, double eps, const std::vector<int>& ns, unsigned seed) {
    std::vector<RefinementRow> rows;
    for (int n : ns) {
        auto g = Grid::create(2, n, L);
        auto d = generate_admissible(g, FlowMap::random(2, L, eps, 2, 2, seed));
        rows.push_back({n, div_residual(d.state.rho, d.state.E), curl_residual(d.state.E)});
    }
    return rows;
}

}  // namespace viscoflow::constraints
