#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "viscoflow/spectral.hpp"

namespace vf_test {

using namespace viscoflow;

// Random real field with coefficients on |k_a| <= band (all axes), mean zero,
// Hermitian by construction (passes through physical space once).
inline SpectralField random_field(const GridPtr& g, Rank rank, unsigned seed, int band, double amp = 1.0,
                                  double decay = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    SpectralField f(g, rank);
    for (int c = 0; c < f.components(); ++c)
        for (std::size_t i = 0; i < g->spectral_size(); ++i) {
            const auto& k = g->wavevector(i);
            bool in = g->retained(i);
            for (int a = 0; a < g->dim(); ++a)
                if (std::abs(k[a]) > band) in = false;
            const double re = nd(rng), im = nd(rng);
            if (in) f.comp(c)[i] = amp * std::exp(-decay * g->kmag(i)) * cplx(re, im);
        }
    project_mean_zero(f);
    SpectralField out = transform_forward(transform_inverse(f));
    project_mean_zero(out);
    return out;
}

// Rescale so that the largest grid value has magnitude `sup`.
inline SpectralField with_sup(const SpectralField& f, double sup) {
    RealField r = transform_inverse(f);
    double m = 0.0;
    for (const auto& c : r.comp)
        for (double v : c) m = std::max(m, std::abs(v));
    return m > 0 ? (sup / m) * f : f;
}

// Sample a function of position on the grid.
inline RealField sample(const GridPtr& g, Rank rank, const std::function<double(int comp, const double* x)>& fn) {
    RealField f(g, rank);
    double x[3] = {0, 0, 0};
    for (std::size_t p = 0; p < g->real_size(); ++p) {
        for (int a = 0; a < g->dim(); ++a) x[a] = g->coordinate(a, p);
        for (int c = 0; c < f.components(); ++c) f.comp[c][p] = fn(c, x);
    }
    return f;
}

inline double max_coeff_diff(const SpectralField& a, const SpectralField& b) {
    double m = 0.0;
    for (int c = 0; c < a.components(); ++c)
        for (std::size_t i = 0; i < a.comp(c).size(); ++i) m = std::max(m, std::abs(a.comp(c)[i] - b.comp(c)[i]));
    return m;
}

inline double rel_l2(const SpectralField& a, const SpectralField& b) {
    const double n = l2_norm(b);
    return l2_norm(a - b) / (n > 0 ? n : 1.0);
}

}  // namespace vf_test
