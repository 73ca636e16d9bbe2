#pragma once

// Space-time velocity fields.  Spatially the field lives on a padded
// cell-centred lattice and is interpolated multilinearly with zero extension:
// lattice values taper linearly to zero over the first cell beyond the
// outermost centres and vanish outside, so particles that leave the padded
// grid freeze.  In time the field is piecewise linear over time_cells+1
// coefficient planes on [0,1] (queries clamp in time).  Dof layout:
// dofs[(plane*n + component)*S + cell], cell lexicographic, first axis
// fastest.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "tbir/grid.hpp"

namespace tbir {

// Padding rule used by every velocity grid in the solver: wide enough that
// characteristics stepping outside the domain stay on the lattice.
inline int velocity_padding(int m) { return m / 8 > 4 ? m / 8 : 4; }

struct VelocityField {
    GridSpec grid;       // padded
    int time_cells = 1;  // coefficient planes at t = j/time_cells
    std::vector<double> dofs;

    std::int64_t spatial_size() const { return grid.size(); }
    std::int64_t dof_count() const {
        return static_cast<std::int64_t>(time_cells + 1) * grid.n * grid.size();
    }
};

inline VelocityField make_velocity(int n, int m, int time_cells = 1) {
    if (time_cells < 1) throw std::invalid_argument("velocity: need at least one time cell");
    GridSpec g = make_grid(n, m, velocity_padding(m));
    VelocityField v{g, time_cells, {}};
    v.dofs.assign(v.dof_count(), 0.0);
    return v;
}

namespace detail {

// One multilinear space-time interpolation stencil: two coefficient planes
// (kt, kt+1) weighted (1-wt, wt) and 2^n spatial corners.  Corners that fall
// off the lattice are marked invalid and contribute zero to the value, the
// Jacobian and the transpose scatter alike (zero extension).
struct LinStencil {
    int kt = 0;
    double wt = 0.0;
    int n = 2;
    std::int64_t corner[8] = {};  // linear cell index of the low corner + offsets applied
    double cw[8] = {};            // spatial weight per corner
    bool ok[8] = {};              // corner lies on the lattice
    double frac[kMaxDim] = {};
};

inline void linear_stencil(const GridSpec& g, int time_cells, double t, const double* x,
                           LinStencil& st) {
    const int n = g.n;
    st.n = n;

    double tc = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    double ut = tc * time_cells;
    int kt = static_cast<int>(ut);
    if (kt > time_cells - 1) kt = time_cells - 1;
    st.kt = kt;
    st.wt = ut - kt;

    const int ext = g.extent();
    std::int64_t i0[kMaxDim];
    for (int a = 0; a < n; ++a) {
        double u = x[a] * g.m - 0.5 + g.pad;
        // keep the floor cast in range; anything this far out has no valid corner
        if (u < -1.5) u = -1.5;
        if (u > ext + 0.5) u = ext + 0.5;
        double fl = std::floor(u);
        i0[a] = static_cast<std::int64_t>(fl);
        st.frac[a] = u - fl;
    }

    std::int64_t stride[kMaxDim] = {1, 1, 1};
    for (int a = 1; a < n; ++a) stride[a] = stride[a - 1] * ext;

    const int corners = 1 << n;
    for (int c = 0; c < corners; ++c) {
        std::int64_t lin = 0;
        double w = 1.0;
        bool ok = true;
        for (int a = 0; a < n; ++a) {
            int b = (c >> a) & 1;
            std::int64_t i = i0[a] + b;
            if (i < 0 || i >= ext) {
                ok = false;
                break;
            }
            lin += i * stride[a];
            w *= b ? st.frac[a] : 1.0 - st.frac[a];
        }
        st.corner[c] = ok ? lin : 0;
        st.cw[c] = ok ? w : 0.0;
        st.ok[c] = ok;
    }
}

// Value and (optionally) spatial Jacobian of the interpolant of `dofs` at a
// prebuilt stencil.  jac[r*n + c] = d value_r / d x_c.
inline void stencil_apply(const VelocityField& v, std::span<const double> dofs,
                          const LinStencil& st, double* val, double* jac) {
    const int n = st.n;
    const std::int64_t S = v.spatial_size();
    const int corners = 1 << n;
    const double w0 = 1.0 - st.wt, w1 = st.wt;

    const double invh = static_cast<double>(v.grid.m);
    for (int r = 0; r < n; ++r) {
        const double* p0 = dofs.data() + (static_cast<std::int64_t>(st.kt) * n + r) * S;
        const double* p1 = dofs.data() + (static_cast<std::int64_t>(st.kt + 1) * n + r) * S;
        double acc = 0.0;
        double dacc[kMaxDim] = {0.0, 0.0, 0.0};
        for (int c = 0; c < corners; ++c) {
            if (!st.ok[c]) continue;
            double coeff = w0 * p0[st.corner[c]] + w1 * p1[st.corner[c]];
            acc += st.cw[c] * coeff;
            if (jac) {
                for (int a = 0; a < n; ++a) {
                    double pw = 1.0;
                    for (int b = 0; b < n; ++b) {
                        int bit = (c >> b) & 1;
                        if (b == a)
                            pw *= bit ? 1.0 : -1.0;
                        else
                            pw *= bit ? st.frac[b] : 1.0 - st.frac[b];
                    }
                    dacc[a] += pw * coeff;
                }
            }
        }
        val[r] = acc;
        if (jac)
            for (int a = 0; a < n; ++a) jac[r * n + a] = dacc[a] * invh;
    }
}

// Transpose of stencil_apply's value map: scatter z (length n) into dof space.
inline void stencil_scatter(const VelocityField& v, const LinStencil& st, const double* z,
                            std::span<double> dofs) {
    const int n = st.n;
    const std::int64_t S = v.spatial_size();
    const int corners = 1 << n;
    const double w0 = 1.0 - st.wt, w1 = st.wt;
    for (int r = 0; r < n; ++r) {
        double* p0 = dofs.data() + (static_cast<std::int64_t>(st.kt) * n + r) * S;
        double* p1 = dofs.data() + (static_cast<std::int64_t>(st.kt + 1) * n + r) * S;
        for (int c = 0; c < corners; ++c) {
            if (!st.ok[c]) continue;
            double w = st.cw[c] * z[r];
            p0[st.corner[c]] += w0 * w;
            p1[st.corner[c]] += w1 * w;
        }
    }
}

}  // namespace detail

// Batch evaluation of the velocity at one time for point-major `points`;
// `out` is point-major of length P*n.
inline void interp_velocity(const VelocityField& v, double t, std::span<const double> points,
                            std::span<double> out) {
    const int n = v.grid.n;
    if (points.size() % n != 0) throw std::invalid_argument("interp_velocity: ragged points");
    if (out.size() != points.size()) throw std::invalid_argument("interp_velocity: bad output");
    const std::int64_t P = points.size() / n;
    detail::LinStencil st;
    for (std::int64_t p = 0; p < P; ++p) {
        detail::linear_stencil(v.grid, v.time_cells, t, points.data() + p * n, st);
        detail::stencil_apply(v, v.dofs, st, out.data() + p * n, nullptr);
    }
}

}  // namespace tbir
