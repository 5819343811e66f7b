#include <cmath>

#include "viscoflow/littlewood_paley.hpp"

namespace viscoflow::lp {

namespace {

void require_scalar(const SpectralField& f, const char* what) {
    if (f.rank() != Rank::Scalar) throw InputError(std::string(what) + ": scalar fields only");
}

bool is_zero(const SpectralField& f) {
    for (int c = 0; c < f.components(); ++c)
        for (const cplx& v : f.comp(c))
            if (v != cplx(0.0, 0.0)) return false;
    return true;
}

void check_lemma_range(const DyadicFamily& fam, double s1, double s2) {
    const double half = fam.grid()->dim() / 2.0;
    for (double s : {s1, s2})
        if (!(s > -half && s <= 1.0 + half)) throw InputError("regularity index outside (-N/2, 1+N/2]");
}

// physical-space gradient components of a scalar, vector or matrix field:
// out[c][j] = d_j f_c
std::vector<std::vector<std::vector<double>>> physical_gradient(const SpectralField& f) {
    const int dim = f.dim();
    std::vector<std::vector<std::vector<double>>> out(f.components(), std::vector<std::vector<double>>(dim));
    for (int j = 0; j < dim; ++j) {
        SpectralField dj = partial(f, j);
        for (int c = 0; c < f.components(); ++c) transform_inverse_component(f.grid(), dj.comp(c), out[c][j]);
    }
    return out;
}

}  // namespace

SpectralField paraproduct(const DyadicFamily& fam, const SpectralField& f, const SpectralField& g) {
    require_scalar(f, "paraproduct");
    require_scalar(g, "paraproduct");
    require_same_grid(f, g, "paraproduct");
    SpectralField out = f.zeros_like();
    for (int q = fam.q_lo(); q <= fam.q_hi(); ++q) {
        SpectralField low = fam.low_cutoff(f, q - 1);
        if (is_zero(low)) continue;
        SpectralField high = fam.block(g, q);
        if (is_zero(high)) continue;
        out += dealiased_product(low, high);
    }
    return out;
}

SpectralField remainder(const DyadicFamily& fam, const SpectralField& f, const SpectralField& g) {
    require_scalar(f, "remainder");
    require_scalar(g, "remainder");
    require_same_grid(f, g, "remainder");
    SpectralField out = f.zeros_like();
    for (int q = fam.q_lo(); q <= fam.q_hi(); ++q) {
        SpectralField a = fam.block(f, q);
        if (is_zero(a)) continue;
        SpectralField b = fam.block_wide(g, q);
        if (is_zero(b)) continue;
        out += dealiased_product(a, b);
    }
    return out;
}

HomogeneousSymbol HomogeneousSymbol::identity() {
    return {[](const double*, double) { return cplx(1.0, 0.0); }, 0.0};
}

HomogeneousSymbol HomogeneousSymbol::lambda_power(double m) {
    return {[m](const double*, double r) { return cplx(r > 0.0 ? std::pow(r, m) : 0.0, 0.0); }, m};
}

BlockRatioReport measure_convection_constant(const DyadicFamily& fam, const SpectralField& u, const SpectralField& f,
                                             const HomogeneousSymbol& G, double s1, double s2) {
    check_lemma_range(fam, s1, s2);
    if (u.rank() != Rank::Vector) throw InputError("measure_convection_constant: u must be a vector field");
    require_same_grid(u, f, "measure_convection_constant");
    const GridPtr& grid = f.grid();
    const int dim = grid->dim();

    // v = u . grad f, componentwise in f
    std::vector<std::vector<double>> up(dim);
    for (int j = 0; j < dim; ++j) transform_inverse_component(grid, u.comp(j), up[j]);
    auto grad = physical_gradient(f);
    SpectralField v = f.zeros_like();
    std::vector<double> acc(grid->real_size());
    for (int c = 0; c < f.components(); ++c) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int j = 0; j < dim; ++j)
            for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += up[j][p] * grad[c][j][p];
        transform_forward_component(grid, acc, v.comp(c));
    }

    // |G|^2 per mode
    std::vector<double> g2(grid->spectral_size(), 0.0);
    for (std::size_t i = 0; i < g2.size(); ++i) {
        double xi[3] = {grid->xi(0, i), grid->xi(1, i), dim == 3 ? grid->xi(2, i) : 0.0};
        if (grid->retained(i) && grid->kmag(i) > 0.0) g2[i] = std::norm(G.symbol(xi, grid->kmag(i)));
    }

    const double unorm = fam.besov_norm(u, 1.0 + dim / 2.0);
    const double fnorm = fam.hybrid_norm(f, s1, s2);
    BlockRatioReport rep;
    for (int q = fam.q_lo(); q <= fam.q_hi(); ++q) {
        double lhs = 0.0;
        double gf = 0.0;
        for (int c = 0; c < f.components(); ++c) {
            const auto& a = v.comp(c);
            const auto& b = f.comp(c);
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double w = fam.weight(i, q);
                if (w == 0.0) continue;
                const double m = grid->multiplicity(i) * w * w * g2[i];
                lhs += m * (a[i].real() * b[i].real() + a[i].imag() * b[i].imag());
                gf += m * std::norm(b[i]);
            }
        }
        gf = std::sqrt(gf);
        const double denom =
            std::exp2(-q * (hybrid_exponent(q, s1, s2) - G.degree)) * unorm * fnorm * gf;
        if (denom == 0.0) continue;
        const double r = std::abs(lhs) / denom;
        rep.q.push_back(q);
        rep.ratio.push_back(r);
        rep.sup = std::max(rep.sup, r);
        rep.l1 += r;
    }
    return rep;
}

double measure_product_constant(const DyadicFamily& fam, const SpectralField& u, const SpectralField& E, double s1,
                                double s2) {
    check_lemma_range(fam, s1, s2);
    if (u.rank() != Rank::Vector || E.rank() != Rank::Matrix)
        throw InputError("measure_product_constant: u vector and E matrix required");
    require_same_grid(u, E, "measure_product_constant");
    const GridPtr& grid = u.grid();
    const int dim = grid->dim();
    auto gu = physical_gradient(u);  // gu[i][k] = d_k u_i
    RealField Ep = transform_inverse(E);
    RealField prod(grid, Rank::Matrix);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            auto& out = prod(i, j);
            for (int k = 0; k < dim; ++k) {
                const auto& a = gu[i][k];
                const auto& b = Ep(k, j);
                for (std::size_t p = 0; p < out.size(); ++p) out[p] += a[p] * b[p];
            }
        }
    const double num = fam.hybrid_norm(transform_forward(prod), s1, s2);
    const double den = fam.besov_norm(u, 1.0 + dim / 2.0) * fam.hybrid_norm(E, s1, s2);
    if (den == 0.0) return 0.0;
    return num / den;
}

}  // namespace viscoflow::lp
