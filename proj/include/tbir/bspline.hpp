#pragma once

// Cubic B-spline interpolation of cell-centred images with zero extension
// outside the domain.  Fitting solves one tridiagonal system [1/6 4/6 1/6]
// per grid line (Thomas algorithm); coefficients beyond the lattice are
// implicitly zero, so the interpolant decays to exactly zero within two
// cells of the boundary band and vanishes outside.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "tbir/grid.hpp"

namespace tbir {

namespace detail {

// Weights of the four coefficients c[base-1..base+2] around local offset
// t in [0,1), plus d/dt weights.  Both rows sum to 1 and 0 respectively.
inline void spline_weights(double u, std::int64_t& base, double* w, double* dw) {
    double fl = std::floor(u);
    double t = u - fl;
    base = static_cast<std::int64_t>(fl);
    double s = 1.0 - t;
    w[0] = s * s * s / 6.0;
    w[1] = (4.0 - 6.0 * t * t + 3.0 * t * t * t) / 6.0;
    w[2] = (4.0 - 6.0 * s * s + 3.0 * s * s * s) / 6.0;
    w[3] = t * t * t / 6.0;
    if (dw) {
        dw[0] = -0.5 * s * s;
        dw[1] = 0.5 * t * (3.0 * t - 4.0);
        dw[2] = 0.5 * s * (4.0 - 3.0 * s);
        dw[3] = 0.5 * t * t;
    }
}

// Solve tri[1/6, 4/6, 1/6] x = rhs along every line of one axis, in place.
inline void spline_solve_axis(std::vector<double>& data, const GridSpec& g, int axis) {
    const int m = g.extent();
    const double lo = 1.0 / 6.0, di = 4.0 / 6.0;

    // constant-coefficient Thomas factors, shared by all lines
    std::vector<double> cp(m), inv(m);
    double prev = 0.0;
    for (int i = 0; i < m; ++i) {
        double denom = di - lo * prev;
        inv[i] = 1.0 / denom;
        cp[i] = lo * inv[i];
        prev = cp[i];
    }

    std::int64_t stride = 1;
    for (int a = 0; a < axis; ++a) stride *= m;
    const std::int64_t total = g.size();
    const std::int64_t lines = total / m;

    std::vector<double> line(m);
    for (std::int64_t l = 0; l < lines; ++l) {
        // first element of line l: split l into (inner, outer) around `axis`
        std::int64_t inner = l % stride;
        std::int64_t outer = l / stride;
        std::int64_t start = inner + outer * stride * m;

        for (int i = 0; i < m; ++i) line[i] = data[start + i * stride];
        line[0] *= inv[0];
        for (int i = 1; i < m; ++i) line[i] = (line[i] - lo * line[i - 1]) * inv[i];
        for (int i = m - 2; i >= 0; --i) line[i] -= cp[i] * line[i + 1];
        for (int i = 0; i < m; ++i) data[start + i * stride] = line[i];
    }
}

}  // namespace detail

// Returns a copy of `f` with interpolation coefficients attached.  The
// interpolant reproduces every sample at its cell centre.
inline ScalarField bspline_fit(const ScalarField& f) {
    validate_grid(f.grid);
    if (std::ssize(f.samples) != f.grid.size())
        throw std::invalid_argument("bspline_fit: sample count does not match grid");
    ScalarField out = f;
    out.coeffs = f.samples;
    for (int a = 0; a < f.grid.n; ++a) detail::spline_solve_axis(out.coeffs, f.grid, a);
    return out;
}

// Evaluate the interpolant (and optionally its spatial gradient) at a batch
// of points.  `points` is point-major of length P*n, `values` has length P,
// `gradients` is either empty or point-major of length P*n.
inline void bspline_eval(const ScalarField& f, std::span<const double> points,
                         std::span<double> values, std::span<double> gradients = {}) {
    const GridSpec& g = f.grid;
    if (!f.has_coeffs()) throw std::invalid_argument("bspline_eval: field has no coefficients");
    const int n = g.n;
    if (points.size() % n != 0) throw std::invalid_argument("bspline_eval: ragged point array");
    const std::int64_t P = points.size() / n;
    if (std::ssize(values) != P) throw std::invalid_argument("bspline_eval: bad value length");
    const bool want_grad = !gradients.empty();
    if (want_grad && std::ssize(gradients) != P * n)
        throw std::invalid_argument("bspline_eval: bad gradient length");

    const int m = g.extent();
    const double invh = static_cast<double>(g.m);
    std::int64_t stride[kMaxDim] = {1, 1, 1};
    for (int a = 1; a < n; ++a) stride[a] = stride[a - 1] * m;

    std::int64_t base[kMaxDim];
    double w[kMaxDim][4], dw[kMaxDim][4];

    for (std::int64_t p = 0; p < P; ++p) {
        for (int a = 0; a < n; ++a) {
            double u = points[p * n + a] * invh - 0.5 + g.pad;
            detail::spline_weights(u, base[a], w[a], dw[a]);
        }
        double val = 0.0;
        double grad[kMaxDim] = {0.0, 0.0, 0.0};
        const int combos = 1 << (2 * n);  // 4^n
        for (int c = 0; c < combos; ++c) {
            std::int64_t lin = 0;
            bool inside = true;
            int off[kMaxDim];
            for (int a = 0; a < n; ++a) {
                off[a] = (c >> (2 * a)) & 3;
                std::int64_t i = base[a] - 1 + off[a];
                if (i < 0 || i >= m) {
                    inside = false;
                    break;
                }
                lin += i * stride[a];
            }
            if (!inside) continue;
            double coeff = f.coeffs[lin];
            double pw = 1.0;
            for (int a = 0; a < n; ++a) pw *= w[a][off[a]];
            val += pw * coeff;
            if (want_grad) {
                for (int a = 0; a < n; ++a) {
                    double pg = 1.0;
                    for (int b = 0; b < n; ++b) pg *= (b == a) ? dw[b][off[b]] : w[b][off[b]];
                    grad[a] += pg * coeff;
                }
            }
        }
        values[p] = val;
        if (want_grad)
            for (int a = 0; a < n; ++a) gradients[p * n + a] = grad[a] * invh;
    }
}

inline std::vector<double> bspline_values(const ScalarField& f, std::span<const double> points) {
    std::vector<double> vals(points.size() / f.grid.n);
    bspline_eval(f, points, vals);
    return vals;
}

}  // namespace tbir
