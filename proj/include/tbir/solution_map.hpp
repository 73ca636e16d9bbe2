#pragma once

// Action of a velocity field on a template image.
//
// transport:  characteristics run backward from the cell centres and the
//             template spline is read off at the feet, preserving intensity
//             along trajectories.
// continuity: one particle per cell runs forward carrying the template
//             value and deposits it onto the grid through exact cell
//             integrals of a box particle of width h (per axis a tent
//             weight of support 2h at the centres), preserving mass.
//
// apply_pde builds everything the optimizer needs at one linearisation
// point: the deformed image plus the caches that make jacvec and its
// transpose cheap to apply repeatedly.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tbir/bspline.hpp"
#include "tbir/flow.hpp"
#include "tbir/grid.hpp"
#include "tbir/velocity.hpp"

namespace tbir {

enum class PdeKind { transport, continuity };

inline PdeKind parse_pde(const std::string& s) {
    if (s == "transport") return PdeKind::transport;
    if (s == "continuity") return PdeKind::continuity;
    throw std::invalid_argument("unknown pde '" + s + "'");
}

namespace detail {

// Deposit stencil of one particle: per axis the two centres straddling the
// particle with tent weights (1-fr, fr).  Corners outside the image are
// dropped (their mass leaves the domain).  dscale carries the 1/h factor of
// the weight derivative with the per-axis sign applied via the corner bit.
struct CicStencil {
    int n = 2;
    std::int64_t i0[kMaxDim] = {};
    double frac[kMaxDim] = {};
};

inline void cic_stencil(const GridSpec& g, const double* x, CicStencil& st) {
    st.n = g.n;
    for (int a = 0; a < g.n; ++a) {
        double u = x[a] * g.m - 0.5;
        double fl = std::floor(u);
        st.i0[a] = static_cast<std::int64_t>(fl);
        st.frac[a] = u - fl;
    }
}

template <typename Visit>
inline void cic_visit(const GridSpec& g, const CicStencil& st, Visit&& visit) {
    const int n = g.n;
    std::int64_t stride[kMaxDim] = {1, 1, 1};
    for (int a = 1; a < n; ++a) stride[a] = stride[a - 1] * g.m;
    const int corners = 1 << n;
    for (int c = 0; c < corners; ++c) {
        std::int64_t lin = 0;
        bool inside = true;
        double w = 1.0;
        for (int a = 0; a < n; ++a) {
            int b = (c >> a) & 1;
            std::int64_t i = st.i0[a] + b;
            if (i < 0 || i >= g.m) {
                inside = false;
                break;
            }
            lin += i * stride[a];
            w *= b ? st.frac[a] : 1.0 - st.frac[a];
        }
        if (inside) visit(c, lin, w);
    }
}

}  // namespace detail

// Row-compressed deposit weights of a batch of particles.
struct PushforwardWeights {
    GridSpec grid;
    std::vector<std::int64_t> offsets;  // particles + 1
    std::vector<std::int64_t> cells;
    std::vector<double> weights;

    std::int64_t particles() const { return std::ssize(offsets) - 1; }
};

inline PushforwardWeights pushforward_weights(const GridSpec& image_grid,
                                              std::span<const double> positions) {
    validate_grid(image_grid);
    if (image_grid.pad != 0)
        throw std::invalid_argument("pushforward_weights: expected an image grid");
    const int n = image_grid.n;
    if (positions.size() % n != 0)
        throw std::invalid_argument("pushforward_weights: ragged positions");
    const std::int64_t P = positions.size() / n;

    PushforwardWeights pw;
    pw.grid = image_grid;
    pw.offsets.reserve(P + 1);
    pw.offsets.push_back(0);
    detail::CicStencil st;
    for (std::int64_t p = 0; p < P; ++p) {
        detail::cic_stencil(image_grid, positions.data() + p * n, st);
        detail::cic_visit(image_grid, st, [&](int, std::int64_t cell, double w) {
            pw.cells.push_back(cell);
            pw.weights.push_back(w);
        });
        pw.offsets.push_back(std::ssize(pw.cells));
    }
    return pw;
}

// One linearisation point of the control-to-state map: the trace of the
// characteristics, the deformed image, and per-particle caches for the
// derivative passes.
struct SolutionMap {
    PdeKind kind = PdeKind::transport;
    GridSpec image_grid;
    FlowTrace trace;
    std::vector<double> image;    // f(v) samples, image_grid.size()
    std::vector<double> grad_f0;  // transport: template gradient at the feet, P*n
    std::vector<double> f0;       // continuity: template samples carried by the particles
};

inline SolutionMap apply_pde(PdeKind kind, const VelocityField& v, const ScalarField& f0,
                             int steps) {
    const GridSpec& ig = f0.grid;
    validate_grid(ig);
    if (ig.n != v.grid.n)
        throw std::invalid_argument("apply_pde: template and velocity dimension differ");

    SolutionMap sm;
    sm.kind = kind;
    sm.image_grid = ig;
    std::vector<double> centers = cell_centers(ig);

    if (kind == PdeKind::transport) {
        if (!f0.has_coeffs())
            throw std::invalid_argument("apply_pde: transport needs a spline-fitted template");
        sm.trace = integrate_characteristics(v, centers, FlowDirection::backward, steps);
        sm.image.resize(ig.size());
        sm.grad_f0.resize(ig.size() * ig.n);
        bspline_eval(f0, sm.trace.end, sm.image, sm.grad_f0);
    } else {
        sm.trace = integrate_characteristics(v, centers, FlowDirection::forward, steps);
        sm.f0 = f0.samples;
        sm.image.assign(ig.size(), 0.0);
        detail::CicStencil st;
        const int n = ig.n;
        for (std::int64_t p = 0; p < sm.trace.points; ++p) {
            detail::cic_stencil(ig, sm.trace.end.data() + p * n, st);
            double fp = sm.f0[p];
            detail::cic_visit(ig, st,
                              [&](int, std::int64_t cell, double w) { sm.image[cell] += w * fp; });
        }
    }
    return sm;
}

inline ScalarField transport_apply(const VelocityField& v, const ScalarField& f0, int steps) {
    SolutionMap sm = apply_pde(PdeKind::transport, v, f0, steps);
    return ScalarField{sm.image_grid, std::move(sm.image), {}};
}

inline ScalarField continuity_apply(const VelocityField& v, const ScalarField& f0, int steps) {
    SolutionMap sm = apply_pde(PdeKind::continuity, v, f0, steps);
    return ScalarField{sm.image_grid, std::move(sm.image), {}};
}

// d f(v) / d v applied to a velocity perturbation w; returns image samples.
inline std::vector<double> solution_jacvec(const SolutionMap& sm, std::span<const double> w) {
    const int n = sm.image_grid.n;
    std::vector<double> dx = flow_jacvec(sm.trace, w);
    std::vector<double> out(sm.image_grid.size(), 0.0);

    if (sm.kind == PdeKind::transport) {
        for (std::int64_t p = 0; p < sm.trace.points; ++p) {
            double acc = 0.0;
            for (int a = 0; a < n; ++a) acc += sm.grad_f0[p * n + a] * dx[p * n + a];
            out[p] = acc;
        }
        return out;
    }

    const GridSpec& ig = sm.image_grid;
    const double invh = static_cast<double>(ig.m);
    detail::CicStencil st;
    for (std::int64_t p = 0; p < sm.trace.points; ++p) {
        detail::cic_stencil(ig, sm.trace.end.data() + p * n, st);
        double fp = sm.f0[p];
        detail::cic_visit(ig, st, [&](int c, std::int64_t cell, double) {
            double acc = 0.0;
            for (int a = 0; a < n; ++a) {
                double dw = ((c >> a) & 1) ? invh : -invh;
                for (int b = 0; b < n; ++b) {
                    if (b == a) continue;
                    dw *= ((c >> b) & 1) ? st.frac[b] : 1.0 - st.frac[b];
                }
                acc += dw * dx[p * n + a];
            }
            out[cell] += fp * acc;
        });
    }
    return out;
}

// Transpose of solution_jacvec: image cotangents z back to velocity dofs.
inline std::vector<double> solution_jacvec_transpose(const SolutionMap& sm,
                                                     std::span<const double> z) {
    const int n = sm.image_grid.n;
    if (std::ssize(z) != sm.image_grid.size())
        throw std::invalid_argument("solution_jacvec_transpose: bad z length");
    std::vector<double> zx(sm.trace.points * n, 0.0);

    if (sm.kind == PdeKind::transport) {
        for (std::int64_t p = 0; p < sm.trace.points; ++p)
            for (int a = 0; a < n; ++a) zx[p * n + a] = sm.grad_f0[p * n + a] * z[p];
        return flow_jacvec_transpose(sm.trace, zx);
    }

    const GridSpec& ig = sm.image_grid;
    const double invh = static_cast<double>(ig.m);
    detail::CicStencil st;
    for (std::int64_t p = 0; p < sm.trace.points; ++p) {
        detail::cic_stencil(ig, sm.trace.end.data() + p * n, st);
        double fp = sm.f0[p];
        detail::cic_visit(ig, st, [&](int c, std::int64_t cell, double) {
            double zc = z[cell] * fp;
            for (int a = 0; a < n; ++a) {
                double dw = ((c >> a) & 1) ? invh : -invh;
                for (int b = 0; b < n; ++b) {
                    if (b == a) continue;
                    dw *= ((c >> b) & 1) ? st.frac[b] : 1.0 - st.frac[b];
                }
                zx[p * n + a] += zc * dw;
            }
        });
    }
    return flow_jacvec_transpose(sm.trace, zx);
}

}  // namespace tbir
