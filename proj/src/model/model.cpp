#include "viscoflow/model.hpp"

#include <algorithm>
#include <cmath>

namespace viscoflow::model {

using namespace calculus;

namespace {

// d_l f in physical space for every axis l
std::vector<RealField> physical_partials(const SpectralField& f) {
    std::vector<RealField> out;
    for (int l = 0; l < f.dim(); ++l) out.push_back(transform_inverse(partial(f, l)));
    return out;
}

SpectralField inv_lambda(const SpectralField& f) {
    const GridPtr& g = f.grid();
    return apply_multiplier(f, [&](std::size_t i) { return cplx(g->kmag(i) > 0 ? 1.0 / g->kmag(i) : 0.0, 0.0); });
}

SpectralField lambda(const SpectralField& f) {
    const GridPtr& g = f.grid();
    return apply_multiplier(f, [&](std::size_t i) { return cplx(g->kmag(i), 0.0); });
}

// Copy the strict upper triangle into the lower one with a sign flip and
// zero the diagonal.
void make_antisymmetric(SpectralField& m) {
    const int dim = m.dim();
    for (int i = 0; i < dim; ++i) {
        std::fill(m(i, i).begin(), m(i, i).end(), cplx(0.0, 0.0));
        for (int j = i + 1; j < dim; ++j) {
            auto& lo = m(j, i);
            const auto& up = m(i, j);
            for (std::size_t k = 0; k < lo.size(); ++k) lo[k] = -up[k];
        }
    }
}

// Ingredients shared by the source assembly and the primitive right-hand side.
struct Pieces {
    RealField rho, u, E, G;  // physical rho, u, E, grad u
    SpectralField R;         // u.grad u + K grad rho + (rho/(1+rho)) A u - a E_jk d_j E_ik
    SpectralField rhoE;      // rho E
    SpectralField Au;        // A u
};

Pieces build_pieces(const PrimitiveState& s, const Params& p) {
    const GridPtr& g = s.grid();
    const int dim = g->dim();
    Pieces pc;
    pc.rho = transform_inverse(s.rho);
    double rmax = 0.0;
    for (double v : pc.rho.comp[0]) rmax = std::max(rmax, std::abs(v));
    if (rmax > 0.5) throw StabilityError("max |rho| = " + std::to_string(rmax) + " exceeds 1/2");

    pc.u = transform_inverse(s.u);
    pc.E = transform_inverse(s.E);
    SpectralField Gs = gradient(s.u);
    pc.G = transform_inverse(Gs);
    pc.Au = lame_operator(s.u, p.lame);
    RealField Au = transform_inverse(pc.Au);
    RealField grho = transform_inverse(gradient(s.rho));
    auto dE = physical_partials(s.E);

    const std::size_t np = g->real_size();
    std::vector<double> kr(np), frac(np);
    for (std::size_t q = 0; q < np; ++q) {
        const double r = pc.rho.comp[0][q];
        kr[q] = p.pressure.K(r);
        frac[q] = r / (1.0 + r);
    }

    RealField R(g, Rank::Vector);
    for (int i = 0; i < dim; ++i) {
        auto& o = R.comp[i];
        for (int j = 0; j < dim; ++j) {
            const auto& uj = pc.u.comp[j];
            const auto& gij = pc.G(i, j);
            for (std::size_t q = 0; q < np; ++q) o[q] += uj[q] * gij[q];
        }
        for (std::size_t q = 0; q < np; ++q) o[q] += kr[q] * grho.comp[i][q] + frac[q] * Au.comp[i][q];
        for (int j = 0; j < dim; ++j)
            for (int k = 0; k < dim; ++k) {
                const auto& ejk = pc.E(j, k);
                const auto& djeik = dE[j](i, k);
                for (std::size_t q = 0; q < np; ++q) o[q] -= p.a * ejk[q] * djeik[q];
            }
    }
    pc.R = transform_forward(R);

    RealField rE(g, Rank::Matrix);
    for (int c = 0; c < rE.components(); ++c)
        for (std::size_t q = 0; q < np; ++q) rE.comp[c][q] = pc.rho.comp[0][q] * pc.E.comp[c][q];
    pc.rhoE = transform_forward(rE);
    return pc;
}

}  // namespace

// v . grad f for f of any rank, using precomputed physical velocity.
SpectralField advect(const RealField& up, const SpectralField& f) {
    const GridPtr& g = f.grid();
    const int dim = g->dim();
    auto df = physical_partials(f);
    RealField out(g, f.rank());
    for (int c = 0; c < out.components(); ++c) {
        auto& o = out.comp[c];
        for (int l = 0; l < dim; ++l) {
            const auto& a = up.comp[l];
            const auto& b = df[l].comp[c];
            for (std::size_t p = 0; p < o.size(); ++p) o[p] += a[p] * b[p];
        }
    }
    return transform_forward(out);
}

// Matrix product (A B)_ij = A_ik B_kj pointwise.
RealField matmul(const RealField& A, const RealField& B) {
    const int dim = A.grid->dim();
    RealField out(A.grid, Rank::Matrix);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            auto& o = out(i, j);
            for (int k = 0; k < dim; ++k) {
                const auto& a = A(i, k);
                const auto& b = B(k, j);
                for (std::size_t p = 0; p < o.size(); ++p) o[p] += a[p] * b[p];
            }
        }
    return out;
}

PressureLaw PressureLaw::power(double g) {
    if (!(g > 0.0)) throw ConfigurationError("pressure exponent must be positive");
    return {Kind::Power, g};
}

double PressureLaw::P(double x) const { return kind == Kind::Quadratic ? x * x : std::pow(x, gamma_gas); }

double PressureLaw::dP(double x) const {
    return kind == Kind::Quadratic ? 2.0 * x : gamma_gas * std::pow(x, gamma_gas - 1.0);
}

double PressureLaw::chi0() const {
    const double d = dP(1.0);
    if (!(d > 0.0)) throw ConfigurationError("P'(1) must be positive");
    return 1.0 / std::sqrt(d);
}

double PressureLaw::K(double rho) const {
    // quadratic law: 2x / (x*2) is exactly 1 in floating point
    const double x = 1.0 + rho;
    return dP(x) / (x * dP(1.0)) - 1.0;
}

PrimitiveState PrimitiveState::zeros(const GridPtr& g) {
    return {SpectralField(g, Rank::Scalar), SpectralField(g, Rank::Vector), SpectralField(g, Rank::Matrix)};
}

HelmholtzState HelmholtzState::zeros(const GridPtr& g) {
    return {SpectralField(g, Rank::Scalar), SpectralField(g, Rank::Scalar), SpectralField(g, Rank::Matrix),
            SpectralField(g, Rank::Matrix), SpectralField(g, Rank::Scalar)};
}

SourceTerms SourceTerms::zeros(const GridPtr& g) {
    return {SpectralField(g, Rank::Scalar), SpectralField(g, Rank::Scalar), SpectralField(g, Rank::Matrix),
            SpectralField(g, Rank::Matrix), SpectralField(g, Rank::Scalar), SpectralField(g, Rank::Scalar)};
}

HelmholtzState to_helmholtz(const PrimitiveState& s) {
    HelmholtzState h;
    h.rho = s.rho;
    project_mean_zero(h.rho);
    auto parts = helmholtz_split(s.u);
    h.d = std::move(parts.d);
    h.omega = std::move(parts.omega);
    h.W = antisymmetric_part(s.E);
    h.ecal = symmetric_scalar(s.E);
    return h;
}

double check_density_bound(const SpectralField& rho, double bound) {
    RealField r = transform_inverse(rho);
    const double m = max_abs(r);
    if (m > bound) throw StabilityError("max |rho| = " + std::to_string(m) + " exceeds " + std::to_string(bound));
    return m;
}

SpectralField S_term(const SpectralField& E) {
    if (E.rank() != Rank::Matrix) throw InputError("S_term: matrix field required");
    const GridPtr& g = E.grid();
    const int dim = g->dim();
    const std::size_t np = g->real_size();
    RealField Ep = transform_inverse(E);
    auto dE = physical_partials(E);
    // Y_ijk
    auto Y = [&](int i, int j, int k) {
        std::vector<double> y(np, 0.0);
        for (int l = 0; l < dim; ++l) {
            const auto& elk = Ep(l, k);
            const auto& elj = Ep(l, j);
            const auto& dlij = dE[l](i, j);
            const auto& dlik = dE[l](i, k);
            for (std::size_t q = 0; q < np; ++q) y[q] += elk[q] * dlij[q] - elj[q] * dlik[q];
        }
        return y;
    };
    SpectralField out(g, Rank::Matrix);
    std::vector<cplx> hat;
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j) {
            auto& o = out(i, j);
            for (int k = 0; k < dim; ++k) {
                std::vector<double> a = Y(i, j, k);
                const std::vector<double> b = Y(j, i, k);
                for (std::size_t q = 0; q < np; ++q) a[q] -= b[q];
                transform_forward_component(g, a, hat);
                const auto& xi = g->xi_axis(k);
                for (std::size_t m = 0; m < o.size(); ++m) {
                    const double r = g->kmag(m);
                    if (r == 0.0) continue;
                    o[m] += cplx(-xi[m] * hat[m].imag(), xi[m] * hat[m].real()) / r;
                }
            }
        }
    make_antisymmetric(out);
    return out;
}

SourceTerms assemble_sources(const PrimitiveState& s, const Params& p, bool include_S) {
    const GridPtr& g = s.grid();
    Pieces pc = build_pieces(s, p);
    SourceTerms src;

    auto parts = helmholtz_split(s.u);
    SpectralField ecal = symmetric_scalar(s.E);

    // L = -rho div u
    {
        RealField divu = transform_inverse(divergence(s.u));
        RealField l(g, Rank::Scalar);
        for (std::size_t q = 0; q < l.comp[0].size(); ++q) l.comp[0][q] = -pc.rho.comp[0][q] * divu.comp[0][q];
        src.L = transform_forward(l);
    }

    SpectralField udd = advect(pc.u, parts.d);
    SpectralField div_rhoE = divergence(pc.rhoE);
    {
        SpectralField v = pc.R;
        v.axpy(p.a, div_rhoE);
        src.M = udd - inv_lambda_div(v);
    }
    {
        SpectralField v = pc.R;
        v -= div_rhoE;
        src.J = udd - inv_lambda_div(v);
    }

    src.N = advect(pc.u, parts.omega) - inv_lambda_curl(pc.R);
    if (include_S) src.N.axpy(p.a, S_term(s.E));
    make_antisymmetric(src.N);

    SpectralField GE = transform_forward(matmul(pc.G, pc.E));
    src.Q = antisymmetric_part(GE);

    src.K = advect(pc.u, ecal) - symmetric_scalar(advect(pc.u, s.E)) + symmetric_scalar(GE);

    // Q keeps its mean: W = E^T - E inherits the mean of E
    for (SpectralField* f : {&src.L, &src.M, &src.N, &src.K, &src.J}) project_mean_zero(*f);
    return src;
}

PrimitiveState primitive_rhs(const PrimitiveState& s, const Params& p) {
    const GridPtr& g = s.grid();
    Pieces pc = build_pieces(s, p);
    PrimitiveState r;

    SpectralField divu = divergence(s.u);
    {
        RealField dv = transform_inverse(divu);
        RealField l(g, Rank::Scalar);
        for (std::size_t q = 0; q < l.comp[0].size(); ++q) l.comp[0][q] = -pc.rho.comp[0][q] * dv.comp[0][q];
        r.rho = transform_forward(l) - advect(pc.u, s.rho) - divu;
    }

    r.u = pc.Au - pc.R - gradient(s.rho);
    r.u.axpy(p.a, divergence(s.E));

    r.E = transform_forward(matmul(pc.G, pc.E)) - advect(pc.u, s.E) + gradient(s.u);

    project_mean_zero(r.rho);
    project_mean_zero(r.u);
    return r;
}

PrimitiveState primitive_rhs_linear(const PrimitiveState& s, const Params& p) {
    PrimitiveState r;
    r.rho = -1.0 * divergence(s.u);
    r.u = lame_operator(s.u, p.lame) - gradient(s.rho);
    r.u.axpy(p.a, divergence(s.E));
    r.E = gradient(s.u);
    project_mean_zero(r.rho);
    project_mean_zero(r.u);
    return r;
}

double identity_tE_residual(const PrimitiveState& s) {
    const GridPtr& g = s.grid();
    RealField rp = transform_inverse(s.rho);
    RealField Ep = transform_inverse(s.E);
    RealField rE(g, Rank::Matrix);
    for (int c = 0; c < rE.components(); ++c)
        for (std::size_t q = 0; q < rE.comp[c].size(); ++q) rE.comp[c][q] = rp.comp[0][q] * Ep.comp[c][q];
    SpectralField dd = divergence(divergence(transform_forward(rE)));
    SpectralField res = T_op(s.E) - lambda(s.rho) + inv_lambda(dd);
    project_mean_zero(res);
    return l2_norm(res);
}

double constraint_identity_residual(const PrimitiveState& s, const SourceTerms& src, double a) {
    SpectralField ecal = symmetric_scalar(s.E);
    SpectralField res = (1.0 + a) * lambda(s.rho) + src.M - (0.5 * (1.0 + a)) * lambda(ecal) - src.J;
    project_mean_zero(res);
    return l2_norm(res);
}

Nondimensional nondimensionalize(const RealField& rho_hat, const RealField& u_hat, const RealField& F,
                                 const PressureLaw& law, double alpha) {
    const GridPtr& g = rho_hat.grid;
    if (rho_hat.rank != Rank::Scalar || u_hat.rank != Rank::Vector || F.rank != Rank::Matrix)
        throw InputError("nondimensionalize: expected scalar density, vector velocity, matrix F");
    if (u_hat.grid != g || F.grid != g) throw InputError("nondimensionalize: fields on different grids");
    for (double v : rho_hat.comp[0])
        if (!(v > 0.0)) throw InputError("nondimensionalize: density must be positive");
    const double chi0 = law.chi0();
    const double Lp = g->L() / chi0;
    if (Lp < 1.0) throw InputError("nondimensionalize: rescaled domain scale below 1");
    GridPtr h = Grid::create(g->dim(), g->n(), Lp);

    RealField rho(h, Rank::Scalar), u(h, Rank::Vector), E(h, Rank::Matrix);
    rho.comp[0] = rho_hat.comp[0];
    for (double& v : rho.comp[0]) v -= 1.0;
    for (int c = 0; c < u.components(); ++c) {
        u.comp[c] = u_hat.comp[c];
        for (double& v : u.comp[c]) v *= chi0;
    }
    const int dim = g->dim();
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            E(i, j) = F(i, j);
            if (i == j)
                for (double& v : E(i, j)) v -= 1.0;
        }
    Nondimensional out;
    out.state = {transform_forward(rho), transform_forward(u), transform_forward(E)};
    project_mean_zero(out.state.u);
    out.chi0 = chi0;
    out.a = law.coupling(alpha);
    return out;
}

double elastic_energy(const RealField& F, double alpha) {
    if (F.rank != Rank::Matrix) throw InputError("elastic_energy: matrix field required");
    double s = 0.0;
    for (const auto& c : F.comp)
        for (double v : c) s += v * v;
    return 0.5 * alpha * s / static_cast<double>(F.grid->real_size());
}

}  // namespace viscoflow::model
