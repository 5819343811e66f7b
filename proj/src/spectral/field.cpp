#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>

#include "viscoflow/spectral.hpp"

namespace viscoflow {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

int component_count(int dim, Rank rank) {
    switch (rank) {
        case Rank::Scalar: return 1;
        case Rank::Vector: return dim;
        case Rank::Matrix: return dim * dim;
    }
    return 1;
}

RealField::RealField(GridPtr g, Rank r) : grid(std::move(g)), rank(r) {
    comp.assign(component_count(grid->dim(), r), std::vector<double>(grid->real_size(), 0.0));
}

SpectralField::SpectralField(GridPtr g, Rank r) : grid_(std::move(g)), rank_(r) {
    comp_.assign(component_count(grid_->dim(), r), std::vector<cplx>(grid_->spectral_size(), cplx(0.0, 0.0)));
}

void require_same_grid(const SpectralField& a, const SpectralField& b, const char* what) {
    if (a.grid() != b.grid()) throw InputError(std::string(what) + ": fields live on different grids");
}

static void require_same_shape(const SpectralField& a, const SpectralField& b, const char* what) {
    require_same_grid(a, b, what);
    if (a.rank() != b.rank()) throw InputError(std::string(what) + ": rank mismatch");
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
    require_same_shape(*this, o, "operator+=");
    for (int c = 0; c < components(); ++c) {
        auto& a = comp_[c];
        const auto& b = o.comp_[c];
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    }
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
    require_same_shape(*this, o, "operator-=");
    for (int c = 0; c < components(); ++c) {
        auto& a = comp_[c];
        const auto& b = o.comp_[c];
        for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    }
    return *this;
}

SpectralField& SpectralField::operator*=(double s) {
    for (auto& a : comp_)
        for (auto& v : a) v *= s;
    return *this;
}

SpectralField& SpectralField::axpy(double s, const SpectralField& o) {
    require_same_shape(*this, o, "axpy");
    for (int c = 0; c < components(); ++c) {
        auto& a = comp_[c];
        const auto& b = o.comp_[c];
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
    }
    return *this;
}

void SpectralField::set_zero() {
    for (auto& a : comp_) std::fill(a.begin(), a.end(), cplx(0.0, 0.0));
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

void transform_forward_component(const GridPtr& g, const std::vector<double>& in, std::vector<cplx>& out) {
    if (in.size() != g->real_size()) throw InputError("transform_forward: size mismatch");
    out.resize(g->spectral_size());
    g->forward_raw(in.data(), out.data());
    const double scale = 1.0 / static_cast<double>(g->real_size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = g->retained(i) ? out[i] * scale : cplx(0.0, 0.0);
}

void transform_inverse_component(const GridPtr& g, const std::vector<cplx>& in, std::vector<double>& out) {
    if (in.size() != g->spectral_size()) throw InputError("transform_inverse: size mismatch");
    out.resize(g->real_size());
    g->inverse_raw(in.data(), out.data());
}

SpectralField transform_forward(const RealField& f) {
    if (!f.grid) throw InputError("transform_forward: field has no grid");
    if (f.components() != component_count(f.grid->dim(), f.rank))
        throw InputError("transform_forward: component count does not match rank");
    SpectralField out(f.grid, f.rank);
    for (int c = 0; c < f.components(); ++c) transform_forward_component(f.grid, f.comp[c], out.comp(c));
    return out;
}

RealField transform_inverse(const SpectralField& f) {
    RealField out(f.grid(), f.rank());
    for (int c = 0; c < f.components(); ++c) transform_inverse_component(f.grid(), f.comp(c), out.comp[c]);
    return out;
}

void project_mean_zero(SpectralField& f) {
    for (int c = 0; c < f.components(); ++c) f.comp(c)[0] = cplx(0.0, 0.0);
}

double mean_magnitude(const SpectralField& f) {
    double m = 0.0;
    for (int c = 0; c < f.components(); ++c) m = std::max(m, std::abs(f.comp(c)[0]));
    return m;
}

double inner_component(const GridPtr& g, const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double m = g->multiplicity(i);
        if (m != 0.0) s += m * (a[i].real() * b[i].real() + a[i].imag() * b[i].imag());
    }
    return s;
}

double inner(const SpectralField& f, const SpectralField& g) {
    require_same_shape(f, g, "inner");
    double s = 0.0;
    for (int c = 0; c < f.components(); ++c) s += inner_component(f.grid(), f.comp(c), g.comp(c));
    return s;
}

double l2_norm_component(const GridPtr& g, const std::vector<cplx>& a) {
    return std::sqrt(std::max(0.0, inner_component(g, a, a)));
}

double l2_norm(const SpectralField& f) { return std::sqrt(std::max(0.0, inner(f, f))); }

double max_abs(const RealField& f) {
    double m = 0.0;
    for (const auto& c : f.comp)
        for (double v : c) m = std::max(m, std::abs(v));
    return m;
}

SpectralField apply_multiplier(const SpectralField& f, const std::function<cplx(std::size_t)>& m) {
    SpectralField out(f.grid(), f.rank());
    const std::size_t ns = f.grid()->spectral_size();
    std::vector<cplx> sym(ns);
    for (std::size_t i = 0; i < ns; ++i) sym[i] = f.grid()->retained(i) ? m(i) : cplx(0.0, 0.0);
    for (int c = 0; c < f.components(); ++c) {
        const auto& a = f.comp(c);
        auto& b = out.comp(c);
        for (std::size_t i = 0; i < ns; ++i) b[i] = sym[i] * a[i];
    }
    return out;
}

SpectralField dealiased_product(const SpectralField& f, const SpectralField& g) {
    require_same_grid(f, g, "dealiased_product");
    const SpectralField* s = nullptr;
    const SpectralField* t = nullptr;
    if (f.rank() == Rank::Scalar) {
        s = &f;
        t = &g;
    } else if (g.rank() == Rank::Scalar) {
        s = &g;
        t = &f;
    } else {
        throw InputError("dealiased_product: one factor must be scalar; use explicit contractions for tensors");
    }
    const GridPtr& grid = f.grid();
    std::vector<double> sp, tp;
    transform_inverse_component(grid, s->comp(0), sp);
    SpectralField out(grid, t->rank());
    for (int c = 0; c < t->components(); ++c) {
        transform_inverse_component(grid, t->comp(c), tp);
        for (std::size_t i = 0; i < tp.size(); ++i) tp[i] *= sp[i];
        transform_forward_component(grid, tp, out.comp(c));
    }
    return out;
}

SpectralField resample(const SpectralField& f, const GridPtr& target) {
    const GridPtr& src = f.grid();
    if (src->dim() != target->dim() || src->L() != target->L())
        throw InputError("resample: grids differ in dimension or domain scale");
    SpectralField out(target, f.rank());
    for (std::size_t i = 0; i < target->spectral_size(); ++i) {
        if (!target->retained(i)) continue;
        std::size_t j;
        bool conj;
        if (!src->locate(target->wavevector(i), j, conj) || !src->retained(j)) continue;
        for (int c = 0; c < f.components(); ++c) {
            const cplx v = f.comp(c)[j];
            out.comp(c)[i] = conj ? std::conj(v) : v;
        }
    }
    return out;
}

SpectralField padded_product(const SpectralField& f, const SpectralField& g) {
    require_same_grid(f, g, "padded_product");
    const GridPtr& base = f.grid();
    GridPtr fine = Grid::create(base->dim(), 2 * base->n(), base->L());
    SpectralField prod = dealiased_product(resample(f, fine), resample(g, fine));
    return resample(prod, base);
}

SpectralField random_band_limited(const GridPtr& g, Rank rank, unsigned seed, int band) {
    if (band < 1) throw InputError("random_band_limited: band must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    auto in_band = [&](std::size_t i) {
        if (!g->retained(i)) return false;
        for (int a = 0; a < g->dim(); ++a)
            if (std::abs(g->wavevector(i)[a]) > band) return false;
        return true;
    };
    SpectralField f(g, rank);
    for (int c = 0; c < f.components(); ++c)
        for (std::size_t i = 0; i < g->spectral_size(); ++i) {
            const double re = nd(rng), im = nd(rng);
            if (in_band(i)) f.comp(c)[i] = cplx(re, im);
        }
    // a round trip through physical space restores Hermitian symmetry on the k = 0 planes
    SpectralField out = transform_forward(transform_inverse(f));
    for (int c = 0; c < out.components(); ++c)
        for (std::size_t i = 0; i < g->spectral_size(); ++i)
            if (!in_band(i)) out.comp(c)[i] = 0.0;
    project_mean_zero(out);
    return out;
}

SpectralField scale_dyadic(const SpectralField& f) {
    const GridPtr& g = f.grid();
    SpectralField out(g, f.rank());
    for (std::size_t i = 0; i < g->spectral_size(); ++i) {
        if (!g->retained(i)) continue;
        const auto& k = g->wavevector(i);
        bool even = true;
        std::array<int, 3> h{0, 0, 0};
        for (int a = 0; a < g->dim(); ++a) {
            if (k[a] % 2 != 0) even = false;
            h[a] = k[a] / 2;
        }
        if (!even) continue;
        std::size_t j;
        bool conj;
        if (!g->locate(h, j, conj)) continue;
        for (int c = 0; c < f.components(); ++c) {
            const cplx v = f.comp(c)[j];
            out.comp(c)[i] = conj ? std::conj(v) : v;
        }
    }
    return out;
}

SpectralField partial(const SpectralField& f, int axis) {
    const GridPtr& g = f.grid();
    if (axis < 0 || axis >= g->dim()) throw InputError("partial: axis out of range");
    SpectralField out(g, f.rank());
    const auto& xi = g->xi_axis(axis);
    for (int c = 0; c < f.components(); ++c) {
        const auto& a = f.comp(c);
        auto& b = out.comp(c);
        for (std::size_t i = 0; i < a.size(); ++i) b[i] = g->retained(i) ? cplx(-xi[i] * a[i].imag(), xi[i] * a[i].real()) : cplx(0.0, 0.0);
    }
    return out;
}

SpectralField transpose(const SpectralField& m) {
    if (m.rank() != Rank::Matrix) throw InputError("transpose: matrix field required");
    SpectralField out(m.grid(), Rank::Matrix);
    const int n = m.dim();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = m(j, i);
    return out;
}

double antisymmetry_defect(const SpectralField& m) {
    if (m.rank() != Rank::Matrix) throw InputError("antisymmetry_defect: matrix field required");
    double d = 0.0;
    const int n = m.dim();
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const auto& a = m(i, j);
            const auto& b = m(j, i);
            for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] + b[k]));
        }
    return d;
}

// ---- snapshots -------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'V', 'F', 'L', 'D', 'S', 'N', 'A', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& os, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    os.write(buf, sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
    char buf[sizeof(T)];
    is.read(buf, sizeof(T));
    if (!is) throw InputError("snapshot truncated");
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

}  // namespace

void write_snapshot(const std::string& path, const SpectralField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open snapshot for writing: " + path);
    const GridPtr& g = f.grid();
    os.write(kMagic, 8);
    put<std::uint32_t>(os, kVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(g->dim()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(f.rank()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(g->n()));
    put<double>(os, g->L());
    put<std::uint32_t>(os, static_cast<std::uint32_t>(f.components()));
    put<std::uint32_t>(os, 0u);
    for (int c = 0; c < f.components(); ++c)
        for (const cplx& v : f.comp(c)) {
            put<double>(os, v.real());
            put<double>(os, v.imag());
        }
    if (!os) throw InputError("error writing snapshot: " + path);
}

SpectralField read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open snapshot: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) throw InputError("not a field snapshot: " + path);
    const auto version = get<std::uint32_t>(is);
    if (version != kVersion) throw InputError("unsupported snapshot version");
    const auto dim = get<std::uint32_t>(is);
    const auto rank = get<std::uint32_t>(is);
    const auto n = get<std::uint32_t>(is);
    const auto L = get<double>(is);
    const auto ncomp = get<std::uint32_t>(is);
    (void)get<std::uint32_t>(is);
    if (rank > 2) throw InputError("snapshot rank out of range");
    GridPtr g = Grid::create(static_cast<int>(dim), static_cast<int>(n), L);
    SpectralField f(g, static_cast<Rank>(rank));
    if (static_cast<int>(ncomp) != f.components()) throw InputError("snapshot component count inconsistent with rank");
    for (int c = 0; c < f.components(); ++c)
        for (cplx& v : f.comp(c)) {
            const double re = get<double>(is);
            const double im = get<double>(is);
            v = cplx(re, im);
        }
    return f;
}

}  // namespace viscoflow
