#include <fftw3.h>

#include <cmath>
#include <cstdlib>
#include <mutex>

#include "viscoflow/spectral.hpp"

namespace viscoflow {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

int requested_threads() {
    const char* env = std::getenv("VISCOFLOW_THREADS");
    if (!env) return 1;
    int t = std::atoi(env);
    return t > 1 ? t : 1;
}

void init_threads_once() {
    static std::once_flag flag;
    std::call_once(flag, [] {
        if (requested_threads() > 1) fftw_init_threads();
    });
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

std::shared_ptr<const Grid> Grid::create(int dim, int n, double L) {
    if (dim != 2 && dim != 3) throw InputError("grid dimension must be 2 or 3");
    if (n < 8 || !is_power_of_two(n)) throw InputError("points per axis must be a power of two >= 8");
    if (!(L >= 1.0) || !std::isfinite(L)) throw InputError("domain scale L must be >= 1");
    return std::shared_ptr<const Grid>(new Grid(dim, n, L));
}

Grid::Grid(int dim, int n, double L) : dim_(dim), n_(n), L_(L), cutoff_(n / 3) {
    const int nh = n / 2 + 1;
    real_size_ = 1;
    for (int a = 0; a < dim; ++a) real_size_ *= static_cast<std::size_t>(n);
    spectral_size_ = real_size_ / n * nh;

    k_.resize(spectral_size_);
    for (int a = 0; a < 3; ++a) xi_[a].assign(spectral_size_, 0.0);
    kmag_.resize(spectral_size_);
    retained_.resize(spectral_size_);
    mult_.resize(spectral_size_);

    auto wrap = [n](int i) { return i <= n / 2 ? i : i - n; };
    for (std::size_t idx = 0; idx < spectral_size_; ++idx) {
        std::array<int, 3> k{0, 0, 0};
        std::size_t rem = idx;
        int last = static_cast<int>(rem % nh);
        rem /= nh;
        if (dim == 2) {
            k[0] = wrap(static_cast<int>(rem));
            k[1] = last;
        } else {
            k[1] = wrap(static_cast<int>(rem % n));
            k[0] = wrap(static_cast<int>(rem / n));
            k[2] = last;
        }
        k_[idx] = k;
        bool keep = true;
        double s = 0.0;
        for (int a = 0; a < dim; ++a) {
            if (std::abs(k[a]) > cutoff_) keep = false;
            xi_[a][idx] = k[a] / L;
            s += xi_[a][idx] * xi_[a][idx];
        }
        kmag_[idx] = std::sqrt(s);
        retained_[idx] = keep ? 1 : 0;
        mult_[idx] = keep ? (last == 0 ? 1.0 : 2.0) : 0.0;
        if (keep) kmax_ = std::max(kmax_, kmag_[idx]);
    }

    init_threads_once();
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (requested_threads() > 1) fftw_plan_with_nthreads(requested_threads());
    std::vector<int> dims(dim, n);
    double* rin = fftw_alloc_real(real_size_);
    fftw_complex* cout = fftw_alloc_complex(spectral_size_);
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plan_fwd_ = fftw_plan_dft_r2c(dim, dims.data(), rin, cout, flags);
    plan_inv_ = fftw_plan_dft_c2r(dim, dims.data(), cout, rin, flags);
    fftw_free(rin);
    fftw_free(cout);
}

Grid::~Grid() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    if (plan_inv_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
}

bool Grid::locate(const std::array<int, 3>& kin, std::size_t& idx, bool& conj) const {
    std::array<int, 3> k = kin;
    const int last = dim_ - 1;
    conj = false;
    if (k[last] < 0) {
        for (int a = 0; a < dim_; ++a) k[a] = -k[a];
        conj = true;
    }
    for (int a = 0; a < dim_; ++a)
        if (std::abs(k[a]) >= n_ / 2) return false;
    auto unwrap = [this](int v) { return static_cast<std::size_t>(v >= 0 ? v : v + n_); };
    const std::size_t nh = n_ / 2 + 1;
    if (dim_ == 2) {
        idx = unwrap(k[0]) * nh + static_cast<std::size_t>(k[1]);
    } else {
        idx = (unwrap(k[0]) * n_ + unwrap(k[1])) * nh + static_cast<std::size_t>(k[2]);
    }
    return true;
}

double Grid::coordinate(int axis, std::size_t ridx) const {
    std::size_t i;
    if (dim_ == 2) {
        i = axis == 0 ? ridx / n_ : ridx % n_;
    } else {
        if (axis == 0) i = ridx / (static_cast<std::size_t>(n_) * n_);
        else if (axis == 1) i = (ridx / n_) % n_;
        else i = ridx % n_;
    }
    return 2.0 * M_PI * L_ * static_cast<double>(i) / n_;
}

void Grid::forward_raw(const double* in, cplx* out) const {
    fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_fwd_), const_cast<double*>(in),
                         reinterpret_cast<fftw_complex*>(out));
}

void Grid::inverse_raw(const cplx* in, double* out) const {
    // c2r overwrites its input.
    std::vector<cplx> scratch(in, in + spectral_size_);
    fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_inv_), reinterpret_cast<fftw_complex*>(scratch.data()),
                         out);
}

}  // namespace viscoflow
