#include <climits>
#include <cmath>

#include "viscoflow/littlewood_paley.hpp"

namespace viscoflow::lp {

namespace {

double bump(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

}  // namespace

double chi(double r) {
    if (r <= kFlatEdge) return 1.0;
    if (r >= kShellOuter) return 0.0;
    const double x = (r - kFlatEdge) / (kShellOuter - kFlatEdge);
    const double a = bump(x);
    const double b = bump(1.0 - x);
    return b / (a + b);
}

double psi(double r) { return chi(r) - chi(2.0 * r); }

DyadicFamily::DyadicFamily(GridPtr grid) : grid_(std::move(grid)) {
    q_lo_ = static_cast<int>(std::floor(std::log2((1.0 / grid_->L()) * 5.0 / 12.0)));
    q_hi_ = static_cast<int>(std::ceil(std::log2(grid_->kmax() * 6.0 / 5.0)));
    const std::size_t ns = grid_->spectral_size();
    first_.assign(ns, INT_MIN);
    w0_.assign(ns, 0.0);
    w1_.assign(ns, 0.0);
    for (std::size_t i = 0; i < ns; ++i) {
        const double r = grid_->kmag(i);
        if (!grid_->retained(i) || r == 0.0) continue;
        // smallest q with 2^{-q} r < 12/5
        int q = static_cast<int>(std::floor(std::log2(r * 5.0 / 12.0))) + 1;
        while (std::ldexp(r, -q) >= kShellOuter) ++q;
        while (std::ldexp(r, -(q - 1)) < kShellOuter) --q;
        first_[i] = q;
        w0_[i] = psi(std::ldexp(r, -q));
        w1_[i] = psi(std::ldexp(r, -(q + 1)));
        if (q < q_lo_ || q > q_hi_) w0_[i] = 0.0;
        if (q + 1 < q_lo_ || q + 1 > q_hi_) w1_[i] = 0.0;
    }
}

double DyadicFamily::weight(std::size_t idx, int q) const {
    const int f = first_[idx];
    if (f == INT_MIN) return 0.0;
    if (q == f) return w0_[idx];
    if (q == f + 1) return w1_[idx];
    return 0.0;
}

SpectralField DyadicFamily::block(const SpectralField& f, int q) const {
    if (q < q_lo_ || q > q_hi_) return f.zeros_like();
    return apply_multiplier(f, [&](std::size_t i) { return cplx(weight(i, q), 0.0); });
}

SpectralField DyadicFamily::block_wide(const SpectralField& f, int q) const {
    return apply_multiplier(f, [&](std::size_t i) {
        double w = 0.0;
        for (int p = q - 1; p <= q + 1; ++p)
            if (p >= q_lo_ && p <= q_hi_) w += weight(i, p);
        return cplx(w, 0.0);
    });
}

SpectralField DyadicFamily::low_cutoff(const SpectralField& f, int q) const {
    // S_q = sum_{p <= q-1} Delta_p, summed block by block.
    return apply_multiplier(f, [&](std::size_t i) {
        const int b = first_[i];
        if (b == INT_MIN) return cplx(0.0, 0.0);
        double w = 0.0;
        if (b <= q - 1) w += w0_[i];
        if (b + 1 <= q - 1) w += w1_[i];
        return cplx(w, 0.0);
    });
}

std::vector<double> DyadicFamily::block_norms(const SpectralField& f) const {
    std::vector<double> acc(block_count(), 0.0);
    for (int c = 0; c < f.components(); ++c) {
        const auto& a = f.comp(c);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const int b = first_[i];
            if (b == INT_MIN) continue;
            const double e = grid_->multiplicity(i) * std::norm(a[i]);
            if (b >= q_lo_ && b <= q_hi_) acc[b - q_lo_] += w0_[i] * w0_[i] * e;
            if (b + 1 >= q_lo_ && b + 1 <= q_hi_) acc[b + 1 - q_lo_] += w1_[i] * w1_[i] * e;
        }
    }
    for (double& v : acc) v = std::sqrt(v);
    return acc;
}

std::vector<double> DyadicFamily::block_inner(const SpectralField& f, const SpectralField& g,
                                              double lambda_power) const {
    require_same_grid(f, g, "block_inner");
    if (f.rank() != g.rank()) throw InputError("block_inner: rank mismatch");
    std::vector<double> acc(block_count(), 0.0);
    for (int c = 0; c < f.components(); ++c) {
        const auto& a = f.comp(c);
        const auto& b = g.comp(c);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const int q = first_[i];
            if (q == INT_MIN) continue;
            double e = grid_->multiplicity(i) * (a[i].real() * b[i].real() + a[i].imag() * b[i].imag());
            if (lambda_power != 0.0) e *= std::pow(grid_->kmag(i), lambda_power);
            if (q >= q_lo_ && q <= q_hi_) acc[q - q_lo_] += w0_[i] * w0_[i] * e;
            if (q + 1 >= q_lo_ && q + 1 <= q_hi_) acc[q + 1 - q_lo_] += w1_[i] * w1_[i] * e;
        }
    }
    return acc;
}

double DyadicFamily::weighted_sum(const std::vector<double>& norms, double s, double t) const {
    double total = 0.0;
    for (int q = q_lo_; q <= q_hi_; ++q) {
        const double e = hybrid_exponent(q, s, t);
        total += std::exp2(e * q) * norms[q - q_lo_];
    }
    return total;
}

double DyadicFamily::besov_norm(const SpectralField& f, double s) const {
    return weighted_sum(block_norms(f), s, s);
}

double DyadicFamily::hybrid_norm(const SpectralField& f, double s, double t) const {
    return weighted_sum(block_norms(f), s, t);
}

}  // namespace viscoflow::lp
