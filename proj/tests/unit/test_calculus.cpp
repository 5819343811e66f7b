#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "test_support.hpp"
#include "viscoflow/calculus.hpp"

using namespace viscoflow;
using namespace viscoflow::calculus;
using vf_test::random_field;
using vf_test::sample;

namespace {

double max_antisym(const SpectralField& m) { return antisymmetry_defect(m); }

}  // namespace

TEST(FractionalPower, IdentityModeAndRoundTrip) {
    auto g = Grid::create(2, 32, 8.0);
    SpectralField f = random_field(g, Rank::Vector, 1, g->cutoff());
    EXPECT_EQ(vf_test::max_coeff_diff(fractional_power(f, 0.0), f), 0.0);
    const double L = g->L();
    SpectralField c = transform_forward(sample(g, Rank::Scalar, [&](int, const double* x) { return std::cos(x[0] / L); }));
    for (double s : {-1.0, 0.5, 2.0}) {
        SpectralField ref = std::pow(1.0 / L, s) * c;
        EXPECT_LT(vf_test::max_coeff_diff(fractional_power(c, s), ref), 1e-15);
    }
    SpectralField back = fractional_power(fractional_power(f, -1.0), 1.0);
    EXPECT_LE(vf_test::rel_l2(back, f), 1e-13);
}

TEST(FractionalPower, NegativePowerNeedsMeanZero) {
    auto g = Grid::create(2, 16, 8.0);
    SpectralField f = random_field(g, Rank::Scalar, 2, 3);
    f.comp(0)[0] = 0.5;
    EXPECT_THROW(fractional_power(f, -1.0), InputError);
    EXPECT_NO_THROW(fractional_power(f, 1.0));
}

TEST(FractionalPower, BlockIsomorphismBounds) {
    auto g = Grid::create(2, 64, 8.0);
    lp::DyadicFamily fam(g);
    SpectralField f = random_field(g, Rank::Scalar, 3, g->cutoff());
    for (double sigma : {-1.0, 1.0, 2.0}) {
        auto a = fam.block_norms(f);
        auto b = fam.block_norms(fractional_power(f, sigma));
        const double lo = std::pow(sigma > 0 ? 5.0 / 6.0 : 12.0 / 5.0, sigma);
        const double hi = std::pow(sigma > 0 ? 12.0 / 5.0 : 5.0 / 6.0, sigma);
        for (int q = fam.q_lo(); q <= fam.q_hi(); ++q) {
            const double x = a[q - fam.q_lo()] * std::exp2(q * sigma);
            const double y = b[q - fam.q_lo()];
            EXPECT_LE(lo * x, y * (1 + 1e-13));
            EXPECT_LE(y, hi * x * (1 + 1e-13));
        }
    }
}

// Both orders multiply each coefficient by the same two reals; only the
// rounding of the two multiplications can differ.
TEST(Multipliers, CommuteWithBlocks) {
    auto g = Grid::create(2, 64, 8.0);
    lp::DyadicFamily fam(g);
    SpectralField f = random_field(g, Rank::Scalar, 4, g->cutoff());
    for (int q = fam.q_lo(); q <= fam.q_hi(); ++q) {
        SpectralField a = fam.block(fractional_power(f, 1.5), q);
        SpectralField b = fractional_power(fam.block(f, q), 1.5);
        EXPECT_LE(l2_norm(a - b), 4 * std::numeric_limits<double>::epsilon() * l2_norm(a));
    }
}

TEST(Helmholtz, GradientAndSolenoidal) {
    auto g = Grid::create(2, 32, 8.0);
    SpectralField phi = random_field(g, Rank::Scalar, 5, g->cutoff());
    auto parts = helmholtz_split(gradient(phi));
    EXPECT_LE(l2_norm(parts.omega), 1e-15 * l2_norm(parts.d));
    // u = (d_1 psi, -d_0 psi) is divergence free
    SpectralField u(g, Rank::Vector);
    u.comp(0) = partial(phi, 1).comp(0);
    u.comp(1) = (-1.0 * partial(phi, 0)).comp(0);
    auto p2 = helmholtz_split(u);
    EXPECT_LE(l2_norm(p2.d), 1e-15 * l2_norm(p2.omega));
}

TEST(Helmholtz, RoundTripAndIdentities) {
    for (int dim : {2, 3}) {
        auto g = Grid::create(dim, dim == 2 ? 64 : 16, 8.0);
        SpectralField u = random_field(g, Rank::Vector, 6, g->cutoff());
        auto parts = helmholtz_split(u);
        SpectralField back = helmholtz_reconstruct(parts.d, parts.omega);
        EXPECT_LE(vf_test::rel_l2(back, u), 1e-12);
        SpectralField divu = divergence(u);
        EXPECT_LE(l2_norm(divu - fractional_power(parts.d, 1.0)), 1e-12 * l2_norm(divu));
        SpectralField cu = curl(u);
        EXPECT_LE(l2_norm(cu - fractional_power(parts.omega, 1.0)), 1e-12 * l2_norm(cu));
        EXPECT_EQ(max_antisym(parts.omega), 0.0);
        EXPECT_EQ(max_antisym(cu), 0.0);
    }
}

TEST(Lame, Eigenvalues) {
    auto g = Grid::create(2, 32, 8.0);
    const double L = g->L();
    LameParams p{1.3, -0.4};
    const int k0 = 3, k1 = 2;
    const double r2 = (k0 * k0 + k1 * k1) / (L * L);
    // longitudinal: u parallel to k
    SpectralField ul = transform_forward(sample(g, Rank::Vector, [&](int c, const double* x) {
        return (c == 0 ? k0 : k1) * std::sin((k0 * x[0] + k1 * x[1]) / L);
    }));
    SpectralField al = lame_operator(ul, p);
    EXPECT_LE(l2_norm(al + (p.nu() * r2) * ul), 1e-14 * l2_norm(al));
    // transverse: u perpendicular to k
    SpectralField ut = transform_forward(sample(g, Rank::Vector, [&](int c, const double* x) {
        return (c == 0 ? -k1 : k0) * std::cos((k0 * x[0] + k1 * x[1]) / L);
    }));
    SpectralField at = lame_operator(ut, p);
    EXPECT_LE(l2_norm(at + (p.mu * r2) * ut), 1e-14 * l2_norm(at));
    EXPECT_EQ(l2_norm(lame_operator(SpectralField(g, Rank::Vector), p)), 0.0);
}

TEST(Lame, EllipticityEnforced) {
    auto g = Grid::create(3, 16, 8.0);
    SpectralField u(g, Rank::Vector);
    EXPECT_THROW(lame_operator(u, LameParams{0.0, 1.0}), ConfigurationError);
    EXPECT_THROW(lame_operator(u, LameParams{1.0, -0.7}), ConfigurationError);  // 2 - 2.1 < 0
    EXPECT_NO_THROW(lame_operator(u, LameParams{1.0, -0.6}));
}

TEST(Operators, HessianData) {
    for (int dim : {2, 3}) {
        auto g = Grid::create(dim, dim == 2 ? 64 : 16, 8.0);
        SpectralField phi = random_field(g, Rank::Scalar, 7, g->cutoff());
        SpectralField H = gradient(gradient(phi));
        EXPECT_LE(l2_norm(R_op(H)), 1e-14 * l2_norm(H));
        // E + E^T = 2 Hess phi, so Ecal = -2 xi_i xi_j (-xi_i xi_j phi) / |xi|^2 = 2 Lambda^2 phi
        SpectralField ecal = symmetric_scalar(H);
        SpectralField ref = 2.0 * fractional_power(phi, 2.0);
        EXPECT_LE(l2_norm(ecal - ref), 1e-13 * l2_norm(ref));
        // T E = Lambda^{-1} div div Hess phi = Lambda^3 phi
        EXPECT_LE(l2_norm(T_op(H) - fractional_power(phi, 3.0)), 1e-13 * l2_norm(fractional_power(phi, 3.0)));
    }
}

TEST(Operators, SingleModeSymbol) {
    // one mode E_ij = B_ij cos(k.x): Ecal = -(k.(B+B^T)k)/|k|^2 cos(k.x)
    auto g = Grid::create(2, 32, 8.0);
    const double L = g->L();
    const double B[2][2] = {{0.7, -1.1}, {0.4, 0.2}};
    const int k0 = 2, k1 = -3;
    SpectralField E = transform_forward(sample(g, Rank::Matrix, [&](int c, const double* x) {
        return B[c / 2][c % 2] * std::cos((k0 * x[0] + k1 * x[1]) / L);
    }));
    double kbk = 0.0;
    const int k[2] = {k0, k1};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) kbk += k[i] * k[j] * (B[i][j] + B[j][i]);
    const double factor = -kbk / (k0 * k0 + k1 * k1);
    SpectralField ref = transform_forward(
        sample(g, Rank::Scalar, [&](int, const double* x) { return factor * std::cos((k0 * x[0] + k1 * x[1]) / L); }));
    EXPECT_LE(vf_test::max_coeff_diff(symmetric_scalar(E), ref), 1e-15);
}

TEST(Operators, TrivialCases) {
    auto g = Grid::create(2, 32, 8.0);
    SpectralField z(g, Rank::Matrix);
    EXPECT_EQ(l2_norm(R_op(z)), 0.0);
    EXPECT_EQ(l2_norm(T_op(z)), 0.0);
    SpectralField v = random_field(g, Rank::Vector, 8, g->cutoff());
    SpectralField A = curl(v);
    EXPECT_LE(l2_norm(symmetric_scalar(A)), 1e-15 * l2_norm(A));
    // constant multiple of the identity, projected mean zero
    SpectralField I(g, Rank::Matrix);
    I(0, 0)[0] = 3.0;
    I(1, 1)[0] = 3.0;
    project_mean_zero(I);
    EXPECT_EQ(l2_norm(symmetric_scalar(I)), 0.0);
}

TEST(Operators, AntisymmetricPart) {
    auto g = Grid::create(3, 16, 8.0);
    SpectralField E = random_field(g, Rank::Matrix, 9, g->cutoff());
    SpectralField W = antisymmetric_part(E);
    EXPECT_EQ(antisymmetry_defect(W), 0.0);
    EXPECT_LE(l2_norm(W - (transpose(E) - E)), 1e-15 * l2_norm(W));
}

TEST(Equivalence, ConstantsWithinBracket) {
    for (int dim : {2, 3}) {
        auto g = Grid::create(dim, dim == 2 ? 64 : 16, 8.0);
        lp::DyadicFamily fam(g);
        std::vector<SpectralField> ens;
        for (unsigned s = 0; s < 12; ++s) ens.push_back(random_field(g, Rank::Matrix, 100 + s, g->cutoff()));
        for (double s : {0.0, dim / 2.0 - 1.0, dim / 2.0}) {
            auto rep = measure_equivalence(fam, ens, s);
            EXPECT_EQ(rep.samples, 12);
            EXPECT_GE(rep.sym_min, 0.25);
            EXPECT_LE(rep.sym_max, 4.0);
            EXPECT_GE(rep.full_min, 0.25);
            EXPECT_LE(rep.full_max, 4.0);
        }
    }
}
