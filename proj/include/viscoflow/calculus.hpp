#pragma once

#include <vector>

#include "viscoflow/littlewood_paley.hpp"
#include "viscoflow/spectral.hpp"

namespace viscoflow::calculus {

// scalar -> vector (d_i f); vector -> matrix with (grad u)_{ij} = d_j u_i.
SpectralField gradient(const SpectralField& f);
// vector -> scalar; matrix -> vector with (div E)_i = d_j E_{ij}.
SpectralField divergence(const SpectralField& f);

// Lambda^s: coefficient scaled by |xi|^s.  The mean mode maps to zero for
// s > 0 and is left alone for s = 0.
SpectralField fractional_power(const SpectralField& f, double s);

// (curl u)_{ij} = d_j u_i - d_i u_j
SpectralField curl(const SpectralField& u);
// Vector built from an antisymmetric matrix: (curl Omega)_i = d_j Omega_{ji}.
SpectralField matrix_curl(const SpectralField& omega);
// Lambda^{-1} div and Lambda^{-1} curl of a vector field (mean ignored).
SpectralField inv_lambda_div(const SpectralField& v);
SpectralField inv_lambda_curl(const SpectralField& v);

struct HelmholtzParts {
    SpectralField d;      // Lambda^{-1} div u
    SpectralField omega;  // Lambda^{-1} curl u
};
HelmholtzParts helmholtz_split(const SpectralField& u);
// u = -Lambda^{-1} grad d + Lambda^{-1} curl Omega
SpectralField helmholtz_reconstruct(const SpectralField& d, const SpectralField& omega);

struct LameParams {
    double mu = 1.0;
    double lambda = -0.5;
    double nu() const { return lambda + 2.0 * mu; }
};
// Throws ConfigurationError unless mu > 0 and 2 mu + N lambda > 0.
void validate_lame(const LameParams& p, int dim);
// Symbol -mu |xi|^2 I - (lambda + mu) xi (x) xi.
SpectralField lame_operator(const SpectralField& u, const LameParams& p);

// Lambda^{-1} curl div E: (R E)_{ij} = Lambda^{-1}(d_j d_k E_{ik} - d_i d_k E_{jk}).
SpectralField R_op(const SpectralField& E);
// Lambda^{-1} div div E = Lambda^{-1} d_i d_j E_{ij}.
SpectralField T_op(const SpectralField& E);
// Lambda^{-2} d_i d_j (E_{ij} + E_{ji}), summed.
SpectralField symmetric_scalar(const SpectralField& E);

// E^T - E
SpectralField antisymmetric_part(const SpectralField& E);

struct EquivalenceReport {
    double sym_min = 0.0, sym_max = 0.0;    // ||Ecal|| / ||E + E^T||
    double full_min = 0.0, full_max = 0.0;  // (||Ecal|| + ||E - E^T||) / ||E||
    int samples = 0;
};
EquivalenceReport measure_equivalence(const lp::DyadicFamily& fam, const std::vector<SpectralField>& ensemble, double s);

}  // namespace viscoflow::calculus
