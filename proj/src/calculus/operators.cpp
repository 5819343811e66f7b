#include <algorithm>
#include <cmath>
#include <limits>

#include "viscoflow/calculus.hpp"

namespace viscoflow::calculus {

namespace {

inline cplx times_i(double s, const cplx& v) { return cplx(-s * v.imag(), s * v.real()); }

double inv(double r) { return r > 0.0 ? 1.0 / r : 0.0; }

void require_rank(const SpectralField& f, Rank r, const char* what) {
    if (f.rank() != r) throw InputError(std::string(what) + ": unexpected field rank");
}

}  // namespace

SpectralField gradient(const SpectralField& f) {
    const GridPtr& g = f.grid();
    const int n = g->dim();
    if (f.rank() == Rank::Scalar) {
        SpectralField out(g, Rank::Vector);
        for (int i = 0; i < n; ++i) out.comp(i) = partial(f, i).comp(0);
        return out;
    }
    if (f.rank() == Rank::Vector) {
        SpectralField out(g, Rank::Matrix);
        for (int j = 0; j < n; ++j) {
            SpectralField dj = partial(f, j);
            for (int i = 0; i < n; ++i) out(i, j) = dj.comp(i);
        }
        return out;
    }
    throw InputError("gradient: scalar or vector field required");
}

SpectralField divergence(const SpectralField& f) {
    const GridPtr& g = f.grid();
    const int n = g->dim();
    const std::size_t ns = g->spectral_size();
    if (f.rank() == Rank::Vector) {
        SpectralField out(g, Rank::Scalar);
        auto& o = out.comp(0);
        for (int j = 0; j < n; ++j) {
            const auto& xi = g->xi_axis(j);
            const auto& a = f.comp(j);
            for (std::size_t i = 0; i < ns; ++i) o[i] += times_i(xi[i], a[i]);
        }
        return out;
    }
    if (f.rank() == Rank::Matrix) {
        SpectralField out(g, Rank::Vector);
        for (int r = 0; r < n; ++r) {
            auto& o = out.comp(r);
            for (int j = 0; j < n; ++j) {
                const auto& xi = g->xi_axis(j);
                const auto& a = f(r, j);
                for (std::size_t i = 0; i < ns; ++i) o[i] += times_i(xi[i], a[i]);
            }
        }
        return out;
    }
    throw InputError("divergence: vector or matrix field required");
}

SpectralField fractional_power(const SpectralField& f, double s) {
    if (s == 0.0) return f;
    if (s < 0.0) {
        const double tol = 1e-12 * std::max(l2_norm(f), std::numeric_limits<double>::min());
        if (mean_magnitude(f) > tol) throw InputError("fractional_power: negative power of a field with nonzero mean");
    }
    const GridPtr& g = f.grid();
    return apply_multiplier(f, [&](std::size_t i) {
        const double r = g->kmag(i);
        return cplx(r > 0.0 ? std::pow(r, s) : 0.0, 0.0);
    });
}

SpectralField curl(const SpectralField& u) {
    require_rank(u, Rank::Vector, "curl");
    const GridPtr& g = u.grid();
    const int n = g->dim();
    const std::size_t ns = g->spectral_size();
    SpectralField out(g, Rank::Matrix);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            auto& a = out(i, j);
            auto& b = out(j, i);
            const auto& xi_i = g->xi_axis(i);
            const auto& xi_j = g->xi_axis(j);
            for (std::size_t k = 0; k < ns; ++k) {
                a[k] = times_i(xi_j[k], u.comp(i)[k]) - times_i(xi_i[k], u.comp(j)[k]);
                b[k] = -a[k];
            }
        }
    return out;
}

SpectralField matrix_curl(const SpectralField& omega) {
    require_rank(omega, Rank::Matrix, "matrix_curl");
    const GridPtr& g = omega.grid();
    const int n = g->dim();
    const std::size_t ns = g->spectral_size();
    SpectralField out(g, Rank::Vector);
    for (int i = 0; i < n; ++i) {
        auto& o = out.comp(i);
        for (int j = 0; j < n; ++j) {
            const auto& xi = g->xi_axis(j);
            const auto& a = omega(j, i);
            for (std::size_t k = 0; k < ns; ++k) o[k] += times_i(xi[k], a[k]);
        }
    }
    return out;
}

SpectralField inv_lambda_div(const SpectralField& v) {
    const GridPtr& g = v.grid();
    SpectralField d = divergence(v);
    return apply_multiplier(d, [&](std::size_t i) { return cplx(inv(g->kmag(i)), 0.0); });
}

SpectralField inv_lambda_curl(const SpectralField& v) {
    const GridPtr& g = v.grid();
    SpectralField c = curl(v);
    return apply_multiplier(c, [&](std::size_t i) { return cplx(inv(g->kmag(i)), 0.0); });
}

HelmholtzParts helmholtz_split(const SpectralField& u) {
    require_rank(u, Rank::Vector, "helmholtz_split");
    return {inv_lambda_div(u), inv_lambda_curl(u)};
}

SpectralField helmholtz_reconstruct(const SpectralField& d, const SpectralField& omega) {
    require_rank(d, Rank::Scalar, "helmholtz_reconstruct");
    require_rank(omega, Rank::Matrix, "helmholtz_reconstruct");
    const GridPtr& g = d.grid();
    SpectralField grad_d = gradient(d);
    SpectralField c = matrix_curl(omega);
    c -= grad_d;
    return apply_multiplier(c, [&](std::size_t i) { return cplx(inv(g->kmag(i)), 0.0); });
}

void validate_lame(const LameParams& p, int dim) {
    if (!(p.mu > 0.0)) throw ConfigurationError("Lame operator requires mu > 0");
    if (!(2.0 * p.mu + dim * p.lambda > 0.0)) throw ConfigurationError("Lame operator requires 2 mu + N lambda > 0");
}

SpectralField lame_operator(const SpectralField& u, const LameParams& p) {
    require_rank(u, Rank::Vector, "lame_operator");
    const GridPtr& g = u.grid();
    const int n = g->dim();
    validate_lame(p, n);
    const std::size_t ns = g->spectral_size();
    SpectralField out(g, Rank::Vector);
    for (std::size_t k = 0; k < ns; ++k) {
        if (!g->retained(k)) continue;
        const double r2 = g->kmag(k) * g->kmag(k);
        cplx xu(0.0, 0.0);
        for (int j = 0; j < n; ++j) xu += g->xi(j, k) * u.comp(j)[k];
        for (int i = 0; i < n; ++i)
            out.comp(i)[k] = -p.mu * r2 * u.comp(i)[k] - (p.lambda + p.mu) * g->xi(i, k) * xu;
    }
    return out;
}

SpectralField R_op(const SpectralField& E) {
    require_rank(E, Rank::Matrix, "R_op");
    const GridPtr& g = E.grid();
    const int n = g->dim();
    const std::size_t ns = g->spectral_size();
    SpectralField out(g, Rank::Matrix);
    for (std::size_t k = 0; k < ns; ++k) {
        const double r = g->kmag(k);
        if (!g->retained(k) || r == 0.0) continue;
        // a_i = xi_k E_ik
        cplx a[3];
        for (int i = 0; i < n; ++i) {
            a[i] = 0.0;
            for (int m = 0; m < n; ++m) a[i] += g->xi(m, k) * E(i, m)[k];
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                // i xi_j i xi_m E_im - i xi_i i xi_m E_jm, divided by |xi|
                const cplx v = -(g->xi(j, k) * a[i] - g->xi(i, k) * a[j]) / r;
                out(i, j)[k] = v;
                out(j, i)[k] = -v;
            }
    }
    return out;
}

SpectralField T_op(const SpectralField& E) {
    require_rank(E, Rank::Matrix, "T_op");
    const GridPtr& g = E.grid();
    const int n = g->dim();
    const std::size_t ns = g->spectral_size();
    SpectralField out(g, Rank::Scalar);
    for (std::size_t k = 0; k < ns; ++k) {
        const double r = g->kmag(k);
        if (!g->retained(k) || r == 0.0) continue;
        cplx s(0.0, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s += g->xi(i, k) * g->xi(j, k) * E(i, j)[k];
        out.comp(0)[k] = -s / r;
    }
    return out;
}

SpectralField symmetric_scalar(const SpectralField& E) {
    require_rank(E, Rank::Matrix, "symmetric_scalar");
    const GridPtr& g = E.grid();
    const int n = g->dim();
    const std::size_t ns = g->spectral_size();
    SpectralField out(g, Rank::Scalar);
    for (std::size_t k = 0; k < ns; ++k) {
        const double r = g->kmag(k);
        if (!g->retained(k) || r == 0.0) continue;
        cplx s(0.0, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s += g->xi(i, k) * g->xi(j, k) * (E(i, j)[k] + E(j, i)[k]);
        out.comp(0)[k] = -s / (r * r);
    }
    return out;
}

SpectralField antisymmetric_part(const SpectralField& E) {
    require_rank(E, Rank::Matrix, "antisymmetric_part");
    const int n = E.dim();
    SpectralField out(E.grid(), Rank::Matrix);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            auto& a = out(i, j);
            auto& b = out(j, i);
            const auto& eij = E(i, j);
            const auto& eji = E(j, i);
            for (std::size_t k = 0; k < a.size(); ++k) {
                a[k] = eji[k] - eij[k];
                b[k] = -a[k];
            }
        }
    return out;
}

EquivalenceReport measure_equivalence(const lp::DyadicFamily& fam, const std::vector<SpectralField>& ensemble,
                                      double s) {
    EquivalenceReport rep;
    rep.sym_min = rep.full_min = std::numeric_limits<double>::infinity();
    for (const auto& E : ensemble) {
        SpectralField Et = transpose(E);
        const double ecal = fam.besov_norm(symmetric_scalar(E), s);
        const double sym = fam.besov_norm(E + Et, s);
        const double anti = fam.besov_norm(Et - E, s);
        const double full = fam.besov_norm(E, s);
        if (sym > 0.0) {
            rep.sym_min = std::min(rep.sym_min, ecal / sym);
            rep.sym_max = std::max(rep.sym_max, ecal / sym);
        }
        if (full > 0.0) {
            const double r = (ecal + anti) / full;
            rep.full_min = std::min(rep.full_min, r);
            rep.full_max = std::max(rep.full_max, r);
        }
        ++rep.samples;
    }
    return rep;
}

}  // namespace viscoflow::calculus
