#pragma once

#include <functional>
#include <vector>

#include "viscoflow/spectral.hpp"

namespace viscoflow::lp {

inline constexpr double kShellInner = 5.0 / 6.0;
inline constexpr double kShellOuter = 12.0 / 5.0;
inline constexpr double kFlatEdge = 5.0 / 3.0;

// Radial cutoff: 1 on [0, 5/3], 0 on [12/5, inf), smooth in between.
double chi(double r);
// psi(r) = chi(r) - chi(2r), supported in [5/6, 12/5].
double psi(double r);

// Exponent weight phi^{s,t}(q): s for q <= 0, t for q >= 1.
inline double hybrid_exponent(int q, double s, double t) { return q <= 0 ? s : t; }

// Dyadic decomposition attached to a grid.  Each nonzero mode meets at most
// two consecutive blocks; the weights are tabulated once.
class DyadicFamily {
public:
    explicit DyadicFamily(GridPtr grid);

    const GridPtr& grid() const { return grid_; }
    int q_lo() const { return q_lo_; }
    int q_hi() const { return q_hi_; }
    int block_count() const { return q_hi_ - q_lo_ + 1; }

    // psi(2^{-q}|xi|) at spectral index idx.
    double weight(std::size_t idx, int q) const;
    // First block touching the mode (the second is first + 1).
    int first_block(std::size_t idx) const { return first_[idx]; }

    SpectralField block(const SpectralField& f, int q) const;
    // Delta_{q-1} + Delta_q + Delta_{q+1}
    SpectralField block_wide(const SpectralField& f, int q) const;
    SpectralField low_cutoff(const SpectralField& f, int q) const;

    // ||Delta_q f||_{L2} for q = q_lo..q_hi (index q - q_lo), summed over
    // components.
    std::vector<double> block_norms(const SpectralField& f) const;
    // (Lambda^a Delta_q f | Delta_q g) for q = q_lo..q_hi.
    std::vector<double> block_inner(const SpectralField& f, const SpectralField& g, double lambda_power = 0.0) const;

    double besov_norm(const SpectralField& f, double s) const;
    double hybrid_norm(const SpectralField& f, double s, double t) const;
    // Shared weighted sum used by both norms so that hybrid(s,s) == besov(s)
    // bit for bit.
    double weighted_sum(const std::vector<double>& norms, double s, double t) const;

private:
    GridPtr grid_;
    int q_lo_;
    int q_hi_;
    std::vector<int> first_;
    std::vector<double> w0_;
    std::vector<double> w1_;
};

// Bony pieces for scalar fields.
SpectralField paraproduct(const DyadicFamily& fam, const SpectralField& f, const SpectralField& g);
SpectralField remainder(const DyadicFamily& fam, const SpectralField& f, const SpectralField& g);

// Homogeneous Fourier symbol G(xi) of degree m.
struct HomogeneousSymbol {
    std::function<cplx(const double* xi, double r)> symbol;
    double degree = 0.0;

    static HomogeneousSymbol identity();
    static HomogeneousSymbol lambda_power(double m);
};

struct BlockRatioReport {
    std::vector<int> q;
    std::vector<double> ratio;
    double sup = 0.0;
    double l1 = 0.0;
};

// Per-block ratio |(G Delta_q(u.grad f) | G Delta_q f)| /
// (2^{-q(phi(q)-m)} ||u||_{B^{1+N/2}} ||f||_{B~^{s1,s2}} ||G Delta_q f||).
BlockRatioReport measure_convection_constant(const DyadicFamily& fam, const SpectralField& u, const SpectralField& f,
                                             const HomogeneousSymbol& G, double s1, double s2);

// ||grad u E||_{B~^{s1,s2}} / (||u||_{B^{1+N/2}} ||E||_{B~^{s1,s2}}).
double measure_product_constant(const DyadicFamily& fam, const SpectralField& u, const SpectralField& E, double s1,
                                double s2);

}  // namespace viscoflow::lp
