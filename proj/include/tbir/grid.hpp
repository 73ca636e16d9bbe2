#pragma once

// Cell-centred grids on the unit square/cube and the two field containers
// everything else works with.  A grid with m cells per axis has centres at
// (i + 1/2) * h, h = 1/m.  Velocity grids carry `pad` extra cells per side
// so that characteristics can leave the domain without falling off the
// lattice; padded centres start at (1/2 - pad) * h.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tbir {

inline constexpr int kMaxDim = 3;

inline bool is_power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

struct GridSpec {
    int n = 2;    // spatial dimension, 2 or 3
    int m = 8;    // cells per axis inside the domain (power of two)
    int pad = 0;  // extra cells per side, for velocity grids

    double h() const { return 1.0 / m; }
    int extent() const { return m + 2 * pad; }

    // number of lattice points including padding
    std::int64_t size() const {
        std::int64_t s = 1;
        for (int a = 0; a < n; ++a) s *= extent();
        return s;
    }
    // number of cells inside the domain
    std::int64_t domain_size() const {
        std::int64_t s = 1;
        for (int a = 0; a < n; ++a) s *= m;
        return s;
    }

    // centre coordinate of lattice index i along one axis
    double center(int i) const { return (i + 0.5 - pad) * h(); }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline void validate_grid(const GridSpec& g) {
    if (g.n != 2 && g.n != 3)
        throw std::invalid_argument("grid: dimension must be 2 or 3, got " + std::to_string(g.n));
    if (!is_power_of_two(g.m))
        throw std::invalid_argument("grid: cells per axis must be a power of two, got " +
                                    std::to_string(g.m));
    if (g.pad < 0) throw std::invalid_argument("grid: negative padding");
}

inline GridSpec make_grid(int n, int m, int pad = 0) {
    GridSpec g{n, m, pad};
    validate_grid(g);
    return g;
}

// Lexicographic linear index, first axis fastest.
inline std::int64_t linear_index(const GridSpec& g, const std::array<int, kMaxDim>& idx) {
    std::int64_t lin = 0;
    for (int a = g.n - 1; a >= 0; --a) lin = lin * g.extent() + idx[a];
    return lin;
}

inline std::array<int, kMaxDim> unravel_index(const GridSpec& g, std::int64_t lin) {
    std::array<int, kMaxDim> idx{0, 0, 0};
    for (int a = 0; a < g.n; ++a) {
        idx[a] = static_cast<int>(lin % g.extent());
        lin /= g.extent();
    }
    return idx;
}

// Centres of every lattice point (padding included), point-major layout:
// out[p*n + a] is coordinate a of point p.
inline std::vector<double> cell_centers(const GridSpec& g) {
    validate_grid(g);
    const std::int64_t count = g.size();
    std::vector<double> out(count * g.n);
    std::array<int, kMaxDim> idx{0, 0, 0};
    for (std::int64_t p = 0; p < count; ++p) {
        for (int a = 0; a < g.n; ++a) out[p * g.n + a] = g.center(idx[a]);
        for (int a = 0; a < g.n; ++a) {
            if (++idx[a] < g.extent()) break;
            idx[a] = 0;
        }
    }
    return out;
}

// A scalar image sampled at the cell centres of an unpadded grid.  `coeffs`
// is filled by bspline_fit and is empty until then.
struct ScalarField {
    GridSpec grid;
    std::vector<double> samples;
    std::vector<double> coeffs;

    bool has_coeffs() const { return !coeffs.empty(); }
};

inline ScalarField make_field(const GridSpec& g, std::vector<double> samples) {
    validate_grid(g);
    if (g.pad != 0) throw std::invalid_argument("scalar field: image grids carry no padding");
    if (std::ssize(samples) != g.size())
        throw std::invalid_argument("scalar field: sample count " +
                                    std::to_string(samples.size()) + " does not match grid size " +
                                    std::to_string(g.size()));
    for (double s : samples)
        if (!std::isfinite(s)) throw std::invalid_argument("scalar field: non-finite sample");
    return ScalarField{g, std::move(samples), {}};
}

inline ScalarField constant_field(const GridSpec& g, double value) {
    return make_field(g, std::vector<double>(g.size(), value));
}

// Coarsen by a factor of two per axis: each coarse cell is the mean of its
// 2^n children.  Restriction is the workhorse of the multilevel driver and
// preserves the mean exactly.
inline ScalarField restrict_image(const ScalarField& f) {
    const GridSpec& g = f.grid;
    if (g.m < 2) throw std::invalid_argument("restrict_image: grid has a single cell");
    GridSpec cg = make_grid(g.n, g.m / 2);
    std::vector<double> out(cg.size(), 0.0);
    const int children = 1 << g.n;
    std::array<int, kMaxDim> cidx{0, 0, 0};
    for (std::int64_t c = 0; c < cg.size(); ++c) {
        double acc = 0.0;
        for (int corner = 0; corner < children; ++corner) {
            std::array<int, kMaxDim> fidx{0, 0, 0};
            for (int a = 0; a < g.n; ++a) fidx[a] = 2 * cidx[a] + ((corner >> a) & 1);
            acc += f.samples[linear_index(g, fidx)];
        }
        out[c] = acc / children;
        for (int a = 0; a < cg.n; ++a) {
            if (++cidx[a] < cg.extent()) break;
            cidx[a] = 0;
        }
    }
    return ScalarField{cg, std::move(out), {}};
}

}  // namespace tbir
