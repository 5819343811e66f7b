#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "viscoflow/calculus.hpp"
#include "viscoflow/constraints.hpp"
#include "viscoflow/integrator.hpp"
#include "viscoflow/linear.hpp"

using namespace viscoflow;
using namespace viscoflow::integrate;
using vf_test::random_field;

namespace {

RunConfig small_config(double amp, double T, double dt, int n = 32) {
    RunConfig c;
    c.n = n;
    c.L = 1.0;
    c.amplitude = amp;
    c.T = T;
    c.dt = dt;
    return c;
}

DirectState random_direct(const GridPtr& g, unsigned seed, int band, double amp) {
    DirectState s;
    s.rho = random_field(g, Rank::Scalar, seed, band, amp);
    s.d = random_field(g, Rank::Scalar, seed + 1, band, amp);
    s.omega = calculus::antisymmetric_part(random_field(g, Rank::Matrix, seed + 2, band, amp));
    s.E = random_field(g, Rank::Matrix, seed + 3, band, amp);
    project_mean_zero(s.rho);
    project_mean_zero(s.d);
    return s;
}

model::HelmholtzState to_h(const DirectState& s) {
    return {s.rho, s.d, s.omega, calculus::antisymmetric_part(s.E), calculus::symmetric_scalar(s.E)};
}

double hdiff(const model::HelmholtzState& a, const model::HelmholtzState& b) {
    return l2_norm(a.rho - b.rho) + l2_norm(a.d - b.d) + l2_norm(a.omega - b.omega) + l2_norm(a.W - b.W) +
           l2_norm(a.ecal - b.ecal);
}

}  // namespace

TEST(Step, ZeroStateStaysZero) {
    auto g = Grid::create(2, 16, 1.0);
    auto s = DirectState::zeros(g);
    auto r = imex_step(s, 0.1, model::Params{});
    EXPECT_EQ(magnitude(r.next), 0.0);
}

TEST(Step, LinearRegimeLocalErrorIsThirdOrder) {
    auto g = Grid::create(2, 32, 8.0);
    model::Params p;
    auto s = random_direct(g, 3, 6, 1e-8);
    linear::Propagator P;
    P.coeffs = linear::LinearCoeffs::consistent(p.nu(), p.mu(), p.a);
    P.mode = linear::DMode::RhoDriven;
    double err[3];
    const double hs[3] = {0.4, 0.2, 0.1};
    for (int i = 0; i < 3; ++i) {
        auto one = imex_step(s, hs[i], p).next;
        err[i] = hdiff(to_h(one), P.apply(to_h(s), hs[i]));
    }
    const double p1 = std::log2(err[0] / err[1]), p2 = std::log2(err[1] / err[2]);
    EXPECT_NEAR(p1, 3.0, 0.3) << err[0] << " " << err[1];
    EXPECT_NEAR(p2, 3.0, 0.3) << err[1] << " " << err[2];
}

TEST(Step, SecondOrderSelfConvergence) {
    auto cfg = small_config(1e-2, 1.0, 0.1);
    auto init = make_initial_data(cfg);
    auto ref_cfg = cfg;
    ref_cfg.dt = 0.1 / 16;
    auto ref = run_direct(init, ref_cfg).final_state;
    double e[3];
    for (int i = 0; i < 3; ++i) {
        auto c = cfg;
        c.dt = 0.1 / (1 << i);
        e[i] = distance(run_direct(init, c).final_state, ref);
    }
    EXPECT_NEAR(e[0] / e[1], 4.0, 0.6);
    EXPECT_NEAR(e[1] / e[2], 4.0, 0.6);
}

TEST(Step, MatchesPrimitiveRatesOnAdmissibleData) {
    auto cfg = small_config(1e-3, 1.0, 0.1, 64);
    auto init = make_initial_data(cfg);
    model::Params p = cfg.params();
    auto s = DirectState::from_primitive(init);
    auto r = explicit_rhs(s, make_forcing(s, p), p);
    r.d.axpy(-p.nu(), calculus::fractional_power(s.d, 2.0));
    r.omega.axpy(-p.mu(), calculus::fractional_power(s.omega, 2.0));
    auto prim = model::primitive_rhs(init, p);
    auto h = model::to_helmholtz(prim);
    const double scale = l2_norm(h.d) + l2_norm(h.rho);
    EXPECT_LE(l2_norm(r.rho - h.rho), 1e-10 * scale);
    EXPECT_LE(l2_norm(r.d - h.d), 1e-10 * scale);
    EXPECT_LE(l2_norm(r.omega - h.omega), 1e-10 * scale);
    EXPECT_LE(l2_norm(r.E - prim.E), 1e-12 * l2_norm(prim.E));
}

TEST(Step, Errors) {
    auto g = Grid::create(2, 32, 1.0);
    model::Params p;
    auto s = random_direct(g, 9, 4, 1.0);
    s.rho *= 0.1 / max_abs(transform_inverse(s.rho));
    EXPECT_THROW(imex_step(s, 1.0, p), StepSizeError);
    auto t = random_direct(g, 9, 4, 1e-3);
    t.rho *= 0.6 / max_abs(transform_inverse(t.rho));
    EXPECT_THROW(imex_step(t, 0.01, p), StabilityError);
}

TEST(Direct, InvariantsPreserved) {
    auto cfg = small_config(1e-2, 10.0, 0.05);
    auto run = run_direct(make_initial_data(cfg), cfg);
    EXPECT_EQ(run.steps, 200);
    EXPECT_EQ(run.max_antisymmetry_defect, 0.0);
    EXPECT_EQ(run.max_mean, 0.0);
    const auto& s = run.norms.samples;
    for (std::size_t i = 1; i < s.size(); ++i) {
        EXPECT_GE(s[i].rho_l1, s[i - 1].rho_l1);
        EXPECT_GE(s[i].u_l1, s[i - 1].u_l1);
        EXPECT_GE(s[i].E_l1, s[i - 1].E_l1);
        EXPECT_LE(s[i].sup_total, 10 * run.norms.initial_norm());
    }
    EXPECT_TRUE(std::isfinite(run.norms.gamma_measured()));
    EXPECT_GT(run.norms.gamma_measured(), 1.0);
}

TEST(Direct, CadenceKeepsDenseIntegrals) {
    auto cfg = small_config(1e-2, 2.0, 0.05);
    auto init = make_initial_data(cfg);
    auto dense = run_direct(init, cfg);
    cfg.cadence = 8;
    auto sparse = run_direct(init, cfg);
    EXPECT_EQ(sparse.norms.samples.size(), 6u);  // t = 0, 0.4, ..., 2.0
    EXPECT_EQ(sparse.norms.bnorm(), dense.norms.bnorm());
}

TEST(Norms, ZeroTrajectory) {
    auto g = Grid::create(2, 16, 1.0);
    lp::DyadicFamily fam(g);
    NormSeries s;
    for (int k = 0; k < 5; ++k) accumulate_norms(fam, model::PrimitiveState::zeros(g), 0.1 * k, s);
    EXPECT_EQ(s.bnorm(), 0.0);
    EXPECT_EQ(s.gamma_measured(), 0.0);
    EXPECT_THROW(accumulate_norms(fam, model::PrimitiveState::zeros(g), 0.4, s), InputError);
}

TEST(Norms, DecayingBlockIntegral) {
    auto g = Grid::create(2, 32, 1.0);
    lp::DyadicFamily fam(g);
    model::PrimitiveState p0 = model::PrimitiveState::zeros(g);
    p0.u = fam.block(random_field(g, Rank::Vector, 4, 10), 2);
    const double c = 0.7, T = 3.0, dt = 0.01;
    NormSeries s;
    for (int k = 0; k <= 300; ++k) {
        model::PrimitiveState p = p0;
        p.u *= std::exp(-c * k * dt);
        accumulate_norms(fam, p, k * dt, s);
    }
    const double n0 = fam.besov_norm(p0.u, 2.0);
    const double exact = n0 * (1 - std::exp(-c * T)) / c;
    EXPECT_NEAR(s.samples.back().u_l1, exact, 0.005 * exact);
    EXPECT_EQ(s.samples.back().rho_l1, 0.0);
    EXPECT_DOUBLE_EQ(s.samples.back().sup_total, fam.besov_norm(p0.u, 0.0));
}

TEST(Norms, CsvLayout) {
    NormSeries s;
    accumulate_norms(StateNorms{1, 2, 3, 1, 1, 1}, 0.0, s);
    accumulate_norms(StateNorms{1, 2, 3, 1, 1, 1}, 1.0, s);
    auto csv = s.csv();
    EXPECT_EQ(csv.substr(0, 2), "# ");
    EXPECT_NE(csv.find("t,rho,u,E,rho_l1,u_l1,E_l1,sup_total,l1_total,bnorm\n"), std::string::npos);
    EXPECT_NE(csv.find("\n1,1,2,3,1,1,1,6,3,9\n"), std::string::npos);
}

TEST(Data, InitialDataShape) {
    auto cfg = small_config(1e-2, 1.0, 0.1, 64);
    auto d = make_initial_data(cfg);
    EXPECT_NEAR(max_abs(transform_inverse(d.u)), 1e-2, 1e-15);
    EXPECT_NEAR(max_abs(transform_inverse(d.E)), 1e-2, 2e-4);
    EXPECT_EQ(mean_magnitude(d.u), 0.0);
    EXPECT_LE(constraints::div_residual(d.rho, d.E), 1e-10);
    cfg.amplitude = 0.5;
    auto big = make_initial_data(cfg);
    EXPECT_NEAR(max_abs(transform_inverse(big.u)), 0.5, 1e-12);
    cfg.amplitude = 0.0;
    EXPECT_EQ(l2_norm(make_initial_data(cfg).E), 0.0);
}

TEST(Data, ConfigValidation) {
    RunConfig c;
    EXPECT_NO_THROW(c.validate());
    c.dt = 0.03;
    EXPECT_THROW(c.validate(), ConfigurationError);
    c = RunConfig{};
    c.lame = {1.0, -1.0};
    EXPECT_THROW(c.validate(), ConfigurationError);
    c = RunConfig{};
    c.data_kmax = 20;
    EXPECT_THROW(c.validate(), ConfigurationError);
}

TEST(Picard, MollifyBounds) {
    auto g = Grid::create(2, 32, 8.0);
    lp::DyadicFamily fam(g);
    SpectralField f = random_field(g, Rank::Matrix, 5, 10);
    f.comp(0)[0] = 0.25;
    EXPECT_LE(l2_norm(mollify(fam, f, 100) - f), 1e-14 * l2_norm(f));
    auto m = mollify(fam, f, -1);
    EXPECT_EQ(m.comp(0)[0], cplx(0.25, 0.0));
    m.comp(0)[0] = 0.0;
    EXPECT_EQ(l2_norm(m), 0.0);
}

TEST(Picard, ZeroDataGivesZeroIterates) {
    auto cfg = small_config(0.0, 1.0, 0.1);
    cfg.picard_iterations = 3;
    auto r = picard_solve(make_initial_data(cfg), cfg);
    ASSERT_EQ(r.finals.size(), 4u);
    for (const auto& f : r.finals) EXPECT_EQ(magnitude(f), 0.0);
    for (double u : r.U) EXPECT_EQ(u, 0.0);
    auto m = uniform_bound_monitor(r);
    EXPECT_FALSE(m.violation);
}

TEST(Picard, LinearRegimeConvergesAtOnce) {
    auto cfg = small_config(1e-6, 1.0, 0.1);
    cfg.picard_iterations = 3;
    cfg.picard_init = PicardInit::Fixed;
    auto r = picard_solve(make_initial_data(cfg), cfg);
    EXPECT_LE(distance(r.finals[2], r.finals[3]), 1e-8 * magnitude(r.finals[3]));
    EXPECT_LE(r.U[2], 1e-8 * r.norms[3].bnorm());
}

TEST(Picard, ContractsAndMatchesDirect) {
    for (PicardInit init : {PicardInit::Mollified, PicardInit::Fixed}) {
        auto cfg = small_config(1e-2, 2.0, 0.05);
        cfg.picard_iterations = 5;
        cfg.picard_init = init;
        auto data = make_initial_data(cfg);
        auto r = picard_solve(data, cfg);
        ASSERT_EQ(r.ratios.size(), 4u);
        for (std::size_t k = 2; k < r.ratios.size(); ++k) EXPECT_LE(r.ratios[k], 0.9) << k;
        auto d = run_direct(data, cfg);
        EXPECT_LE(distance(r.finals.back(), d.final_state), 1e-6 * magnitude(d.final_state));
    }
}

TEST(Picard, MonitorAmplitudeSweepAndStress) {
    double G[2];
    int i = 0;
    for (double amp : {1e-3, 1e-2}) {
        auto cfg = small_config(amp, 2.0, 0.05);
        cfg.picard_iterations = 4;
        auto m = uniform_bound_monitor(picard_solve(make_initial_data(cfg), cfg));
        EXPECT_FALSE(m.violation) << m.message;
        G[i++] = m.Gamma;
    }
    EXPECT_NEAR(G[0] / G[1], 1.0, 0.2);

    auto big = small_config(0.5, 1.0, 0.01);
    big.picard_iterations = 4;
    auto r = picard_solve(make_initial_data(big), big, {false});
    auto m = uniform_bound_monitor(r);
    EXPECT_TRUE(m.violation) << m.message;
}

TEST(Picard, DivergenceIsAnError) {
    // Gamma is about 3 for this data, so a factor of 1 must trip
    auto cfg = small_config(1e-2, 2.0, 0.05);
    cfg.picard_iterations = 2;
    auto data = make_initial_data(cfg);
    PicardOptions strict;
    strict.divergence_factor = 1.0;
    EXPECT_THROW(picard_solve(data, cfg, strict), DivergenceError);
    strict.throw_on_failure = false;
    auto r = picard_solve(data, cfg, strict);
    EXPECT_NE(r.failure.find("exceeds"), std::string::npos);
    EXPECT_TRUE(uniform_bound_monitor(r).violation);
    EXPECT_NO_THROW(picard_solve(data, cfg));
}
