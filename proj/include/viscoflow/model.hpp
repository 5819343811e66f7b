#pragma once

#include "viscoflow/calculus.hpp"
#include "viscoflow/spectral.hpp"

namespace viscoflow::model {

// Barotropic pressure law P(rho_hat).
struct PressureLaw {
    enum class Kind { Quadratic, Power };
    Kind kind = Kind::Quadratic;
    double gamma_gas = 2.0;

    static PressureLaw quadratic() { return {Kind::Quadratic, 2.0}; }
    static PressureLaw power(double g);

    double P(double rho_hat) const;
    double dP(double rho_hat) const;
    // (P'(1))^{-1/2}
    double chi0() const;
    // K(rho) = P'(rho+1) / ((1+rho) P'(1)) - 1
    double K(double rho) const;
    double coupling(double alpha) const { return alpha / dP(1.0); }
};

struct Params {
    calculus::LameParams lame;
    double a = 1.0;
    PressureLaw pressure = PressureLaw::quadratic();

    double nu() const { return lame.nu(); }
    double mu() const { return lame.mu; }
};

struct PrimitiveState {
    SpectralField rho;  // scalar
    SpectralField u;    // vector
    SpectralField E;    // matrix, F - I

    static PrimitiveState zeros(const GridPtr& g);
    const GridPtr& grid() const { return rho.grid(); }
};

struct HelmholtzState {
    SpectralField rho;
    SpectralField d;
    SpectralField omega;
    SpectralField W;     // E^T - E
    SpectralField ecal;  // symmetric scalar of E

    static HelmholtzState zeros(const GridPtr& g);
    const GridPtr& grid() const { return rho.grid(); }
};

// v . grad f for f of any rank, v given in physical space; truncated to the
// retained spectrum.
SpectralField advect(const RealField& v_phys, const SpectralField& f);
// Pointwise (A B)_ij = A_ik B_kj.
RealField matmul(const RealField& A, const RealField& B);

// Linear in the state, so it also converts rates.
HelmholtzState to_helmholtz(const PrimitiveState& s);

struct SourceTerms {
    SpectralField L;  // scalar
    SpectralField M;  // scalar, rho-driven d equation
    SpectralField N;  // antisymmetric matrix
    SpectralField Q;  // antisymmetric matrix
    SpectralField K;  // scalar
    SpectralField J;  // scalar, E-driven d equation

    static SourceTerms zeros(const GridPtr& g);
};

// Sources at a frozen state.  include_S adds a*S to N.  Throws StabilityError
// when max|rho| > 1/2.
SourceTerms assemble_sources(const PrimitiveState& s, const Params& p, bool include_S);

// S_ij = Lambda^{-1} d_k (Y_ijk - Y_jik), Y_ijk = E_lk d_l E_ij - E_lj d_l E_ik.
SpectralField S_term(const SpectralField& E);

// Time derivative of the primitive system.
PrimitiveState primitive_rhs(const PrimitiveState& s, const Params& p);
// Same with every quadratic and higher term dropped.
PrimitiveState primitive_rhs_linear(const PrimitiveState& s, const Params& p);

// max |rho| on the grid; throws StabilityError above 1/2.
double check_density_bound(const SpectralField& rho, double bound = 0.5);

// ||T E - Lambda rho + Lambda^{-1} div div(rho E)||_{L2}
double identity_tE_residual(const PrimitiveState& s);
// ||(1+a) Lambda rho + M - ((1+a)/2) Lambda Ecal - J||_{L2}
double constraint_identity_residual(const PrimitiveState& s, const SourceTerms& src, double a);

struct Nondimensional {
    PrimitiveState state;
    double chi0 = 1.0;
    double a = 1.0;
};
// Maps dimensional samples (rho_hat, u_hat, F) on grid g to perturbation
// variables on a grid of scale L / chi0 (same n).  Throws InputError on
// nonpositive density or if the rescaled domain drops below L = 1.
Nondimensional nondimensionalize(const RealField& rho_hat, const RealField& u_hat, const RealField& F,
                                 const PressureLaw& law, double alpha);

// Grid average of (alpha/2) |F|^2.
double elastic_energy(const RealField& F, double alpha);

}  // namespace viscoflow::model
