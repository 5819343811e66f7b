#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "viscoflow/errors.hpp"

namespace viscoflow {

using cplx = std::complex<double>;

// Periodic grid on [0, 2*pi*L)^dim with n points per axis.
//
// Spectral arrays use the real-to-complex half layout: the last axis keeps
// wavenumbers 0..n/2, the other axes run over FFTW order (0..n/2, -n/2+1..-1).
// Coefficients are Fourier-series coefficients, i.e. the k=0 entry is the
// grid mean.  Retained modes satisfy |k_a| <= cutoff() on every axis, with
// cutoff() = floor(n/3); everything else (Nyquist included) is held at zero.
class Grid {
public:
    static std::shared_ptr<const Grid> create(int dim, int n, double L = 8.0);
    ~Grid();
    Grid(const Grid&) = delete;
    Grid& operator=(const Grid&) = delete;

    int dim() const { return dim_; }
    int n() const { return n_; }
    double L() const { return L_; }
    int cutoff() const { return cutoff_; }
    std::size_t real_size() const { return real_size_; }
    std::size_t spectral_size() const { return spectral_size_; }

    // Integer wavevector of a spectral index (unused axes are zero).
    const std::array<int, 3>& wavevector(std::size_t idx) const { return k_[idx]; }
    // Physical frequency component k_a / L.
    double xi(int axis, std::size_t idx) const { return xi_[axis][idx]; }
    const std::vector<double>& xi_axis(int axis) const { return xi_[axis]; }
    // |k| / L.
    double kmag(std::size_t idx) const { return kmag_[idx]; }
    const std::vector<double>& kmag() const { return kmag_; }
    bool retained(std::size_t idx) const { return retained_[idx] != 0; }
    // Number of full-spectrum modes represented by this half-spectrum entry
    // (1 or 2), zero for dropped modes.
    double multiplicity(std::size_t idx) const { return mult_[idx]; }
    // Largest retained physical frequency.
    double kmax() const { return kmax_; }
    // Spectral index holding wavevector k, and whether the entry stores the
    // conjugate partner (-k).  Returns false when k is not representable.
    bool locate(const std::array<int, 3>& k, std::size_t& idx, bool& conj) const;

    // Grid coordinate of a real-space index along an axis.
    double coordinate(int axis, std::size_t ridx) const;

    // Unnormalized FFTW calls; callers go through transform_forward/inverse.
    void forward_raw(const double* in, cplx* out) const;
    void inverse_raw(const cplx* in, double* out) const;

private:
    Grid(int dim, int n, double L);
    int dim_;
    int n_;
    double L_;
    int cutoff_;
    std::size_t real_size_;
    std::size_t spectral_size_;
    std::vector<std::array<int, 3>> k_;
    std::array<std::vector<double>, 3> xi_;
    std::vector<double> kmag_;
    std::vector<unsigned char> retained_;
    std::vector<double> mult_;
    double kmax_ = 0.0;
    void* plan_fwd_ = nullptr;
    void* plan_inv_ = nullptr;
};

using GridPtr = std::shared_ptr<const Grid>;

enum class Rank { Scalar = 0, Vector = 1, Matrix = 2 };

int component_count(int dim, Rank rank);

// Real-space samples, one array per component.  Matrix component (i,j) lives
// at i*dim + j.
struct RealField {
    GridPtr grid;
    Rank rank = Rank::Scalar;
    std::vector<std::vector<double>> comp;

    RealField() = default;
    RealField(GridPtr g, Rank r);
    int components() const { return static_cast<int>(comp.size()); }
    std::vector<double>& operator()(int i, int j) { return comp[i * grid->dim() + j]; }
    const std::vector<double>& operator()(int i, int j) const { return comp[i * grid->dim() + j]; }
};

class SpectralField {
public:
    SpectralField() = default;
    SpectralField(GridPtr g, Rank r);

    const GridPtr& grid() const { return grid_; }
    Rank rank() const { return rank_; }
    int dim() const { return grid_->dim(); }
    int components() const { return static_cast<int>(comp_.size()); }
    bool empty() const { return !grid_; }

    std::vector<cplx>& comp(int c) { return comp_[c]; }
    const std::vector<cplx>& comp(int c) const { return comp_[c]; }
    std::vector<cplx>& operator()(int i, int j) { return comp_[i * dim() + j]; }
    const std::vector<cplx>& operator()(int i, int j) const { return comp_[i * dim() + j]; }

    SpectralField& operator+=(const SpectralField& o);
    SpectralField& operator-=(const SpectralField& o);
    SpectralField& operator*=(double s);
    // this += s * o
    SpectralField& axpy(double s, const SpectralField& o);
    void set_zero();

    SpectralField zeros_like() const { return SpectralField(grid_, rank_); }

private:
    GridPtr grid_;
    Rank rank_ = Rank::Scalar;
    std::vector<std::vector<cplx>> comp_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

void require_same_grid(const SpectralField& a, const SpectralField& b, const char* what);

// physical values -> coefficients (normalized by n^dim, truncated to the
// retained spectrum; the mean is kept).
SpectralField transform_forward(const RealField& f);
RealField transform_inverse(const SpectralField& f);
void transform_forward_component(const GridPtr& g, const std::vector<double>& in, std::vector<cplx>& out);
void transform_inverse_component(const GridPtr& g, const std::vector<cplx>& in, std::vector<double>& out);

// Zero the k=0 coefficient of every component.
void project_mean_zero(SpectralField& f);
// Largest |coefficient at k=0| over components.
double mean_magnitude(const SpectralField& f);

// Real inner product over the torus, grid-averaged: (f|g) = mean(sum_c f_c g_c).
double inner(const SpectralField& f, const SpectralField& g);
double inner_component(const GridPtr& g, const std::vector<cplx>& a, const std::vector<cplx>& b);
// Grid-averaged L2 norm.
double l2_norm(const SpectralField& f);
double l2_norm_component(const GridPtr& g, const std::vector<cplx>& a);
double max_abs(const RealField& f);

// Apply a per-mode multiplier m(idx) to every component.
SpectralField apply_multiplier(const SpectralField& f, const std::function<cplx(std::size_t)>& m);

// Product of two fields where at least one is scalar (componentwise scaling),
// computed pointwise and truncated back to the retained spectrum.  With
// band-limited inputs this is exact on retained modes.
SpectralField dealiased_product(const SpectralField& f, const SpectralField& g);

// Reference product for tests: pads both inputs onto a grid with 2n points per
// axis, multiplies, transforms back, keeps the retained modes of the base grid.
SpectralField padded_product(const SpectralField& f, const SpectralField& g);

// x -> f(2x): coefficient at 2k takes the value at k.  Modes whose doubled
// wavevector falls outside the retained spectrum are dropped.
SpectralField scale_dyadic(const SpectralField& f);

// Copy coefficients onto another grid of the same dimension and L (the
// overlap of the two retained spectra is kept).
SpectralField resample(const SpectralField& f, const GridPtr& target);

// Mean-zero real field with Gaussian coefficients on |k_a| <= band.
SpectralField random_band_limited(const GridPtr& g, Rank rank, unsigned seed, int band);

// Field snapshot I/O; see docs/snapshot_format.md.
void write_snapshot(const std::string& path, const SpectralField& f);
SpectralField read_snapshot(const std::string& path);

// Partial derivative along an axis: multiplier i*xi_axis.
SpectralField partial(const SpectralField& f, int axis);

// Antisymmetric part check helpers.
SpectralField transpose(const SpectralField& m);
double antisymmetry_defect(const SpectralField& m);

}  // namespace viscoflow
