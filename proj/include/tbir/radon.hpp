#pragma once

// Matrix-free parallel-beam Radon transform.  Joseph-style ray marching:
// for each (angle, bin) the ray through the detector bin centre is sampled
// at midpoints with step about h_X, the image is interpolated bilinearly
// (zero outside), and samples are summed times the step length.  The
// adjoint scatters with the identical weights, so the pair is an exact
// transpose.  A 3D volume is projected slice by slice along the last axis;
// rays always live in the first two axes.
//
// `scale` multiplies the operator.  The multilevel driver halves it per
// coarsening step so that operators stay consistent with sinogram data
// restricted by the (g_2j + g_2j+1)/4 rule, which itself halves the values.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tbir/grid.hpp"

namespace tbir {

struct RadonGeometry {
    std::vector<double> angles_deg;
    int bins = 0;                          // q
    double length = std::numbers::sqrt2;   // detector length L
    double scale = 1.0;

    int num_angles() const { return static_cast<int>(angles_deg.size()); }
    double bin_width() const { return length / bins; }
    // signed detector offset of bin centre j
    double bin_center(int j) const { return (j + 0.5) * bin_width() - 0.5 * length; }
};

// Detector resolution tied to the image level k (m = 2^k): q = 1.5 * 2^k.
inline int bins_for_level(int level) {
    if (level < 1) throw std::invalid_argument("bins_for_level: level must be >= 1");
    return 3 << (level - 1);
}

inline int level_for_grid(const GridSpec& g) {
    int level = 0, m = g.m;
    while (m > 1) {
        m >>= 1;
        ++level;
    }
    return level;
}

inline RadonGeometry geometry_for_level(std::vector<double> angles_deg, int level) {
    RadonGeometry geom;
    geom.angles_deg = std::move(angles_deg);
    geom.bins = bins_for_level(level);
    return geom;
}

// Angle specification grammar "count@lo:hi": `count` equally spaced angles
// starting at lo, spaced (hi - lo)/count, hi itself excluded.  The interval
// must lie within [0, 180] degrees.
inline std::vector<double> parse_angle_spec(const std::string& spec) {
    const auto at = spec.find('@');
    const auto colon = spec.find(':', at == std::string::npos ? 0 : at);
    if (at == std::string::npos || colon == std::string::npos)
        throw std::invalid_argument("angle spec '" + spec + "' is not of the form count@lo:hi");
    int count = 0;
    double lo = 0.0, hi = 0.0;
    try {
        std::size_t used = 0;
        count = std::stoi(spec.substr(0, at), &used);
        if (used != at) throw std::invalid_argument("");
        std::string lo_s = spec.substr(at + 1, colon - at - 1);
        std::string hi_s = spec.substr(colon + 1);
        lo = std::stod(lo_s, &used);
        if (used != lo_s.size()) throw std::invalid_argument("");
        hi = std::stod(hi_s, &used);
        if (used != hi_s.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw std::invalid_argument("angle spec '" + spec + "' is not of the form count@lo:hi");
    }
    if (count < 1) throw std::invalid_argument("angle spec: count must be >= 1");
    if (lo < 0.0 || hi > 180.0 || hi < lo)
        throw std::invalid_argument("angle spec: interval must lie within [0, 180]");
    std::vector<double> angles(count);
    for (int i = 0; i < count; ++i) angles[i] = lo + i * (hi - lo) / count;
    return angles;
}

struct Sinogram {
    RadonGeometry geom;
    int slices = 1;
    std::vector<double> samples;  // index ((angle*slices)+slice)*q + bin

    std::int64_t size() const {
        return static_cast<std::int64_t>(geom.num_angles()) * slices * geom.bins;
    }
};

inline Sinogram make_sinogram(RadonGeometry geom, int slices = 1) {
    if (geom.bins < 1) throw std::invalid_argument("sinogram: no detector bins");
    if (geom.num_angles() < 1) throw std::invalid_argument("sinogram: no angles");
    if (slices < 1) throw std::invalid_argument("sinogram: bad slice count");
    Sinogram s{std::move(geom), slices, {}};
    s.samples.assign(s.size(), 0.0);
    return s;
}

namespace detail {

struct RaySetup {
    double cx, cy;    // rotation centre
    double ox, oy;    // detector normal (cos, sin)
    double dx, dy;    // ray direction, perpendicular
    int steps;
    double step;
};

inline RaySetup ray_setup(const GridSpec& g, const RadonGeometry& geom, double angle_deg) {
    double rad = angle_deg * std::numbers::pi / 180.0;
    RaySetup r;
    r.cx = 0.5;
    r.cy = 0.5;
    r.ox = std::cos(rad);
    r.oy = std::sin(rad);
    r.dx = -r.oy;
    r.dy = r.ox;
    r.steps = static_cast<int>(std::ceil(geom.length * g.m - 1e-9));
    r.step = geom.length / r.steps;
    return r;
}

// Bilinear gather / scatter over one xy-slab of extent m with zero
// extension.  Visit receives (flat index within the slab, weight).
template <typename Visit>
inline void bilinear_visit(int m, double x, double y, Visit&& visit) {
    double ux = x * m - 0.5, uy = y * m - 0.5;
    double fx = std::floor(ux), fy = std::floor(uy);
    std::int64_t ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
    double tx = ux - fx, ty = uy - fy;
    const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
    const std::int64_t cx[4] = {ix, ix + 1, ix, ix + 1};
    const std::int64_t cy[4] = {iy, iy, iy + 1, iy + 1};
    for (int c = 0; c < 4; ++c) {
        if (cx[c] < 0 || cx[c] >= m || cy[c] < 0 || cy[c] >= m) continue;
        visit(cx[c] + m * cy[c], w[c]);
    }
}

}  // namespace detail

inline void radon_forward_span(const GridSpec& g, std::span<const double> img,
                               const RadonGeometry& geom, std::span<double> out) {
    validate_grid(g);
    if (geom.bins < 1 || geom.num_angles() < 1)
        throw std::invalid_argument("radon_forward: empty geometry");
    if (std::ssize(img) != g.size()) throw std::invalid_argument("radon_forward: bad image size");
    const int slices = g.n == 3 ? g.m : 1;
    const std::int64_t slab = static_cast<std::int64_t>(g.m) * g.m;
    if (std::ssize(out) != static_cast<std::int64_t>(geom.num_angles()) * slices * geom.bins)
        throw std::invalid_argument("radon_forward: bad output size");

    for (int a = 0; a < geom.num_angles(); ++a) {
        detail::RaySetup r = detail::ray_setup(g, geom, geom.angles_deg[a]);
        for (int sl = 0; sl < slices; ++sl) {
            const double* plane = img.data() + sl * slab;
            double* row = out.data() + (static_cast<std::int64_t>(a) * slices + sl) * geom.bins;
            for (int b = 0; b < geom.bins; ++b) {
                double s = geom.bin_center(b);
                double bx = r.cx + s * r.ox, by = r.cy + s * r.oy;
                double acc = 0.0;
                for (int k = 0; k < r.steps; ++k) {
                    double t = (k + 0.5) * r.step - 0.5 * geom.length;
                    double px = bx + t * r.dx, py = by + t * r.dy;
                    detail::bilinear_visit(g.m, px, py, [&](std::int64_t cell, double w) {
                        acc += w * plane[cell];
                    });
                }
                row[b] = acc * r.step * geom.scale;
            }
        }
    }
}

inline void radon_adjoint_span(const GridSpec& g, std::span<const double> sino,
                               const RadonGeometry& geom, std::span<double> out) {
    validate_grid(g);
    const int slices = g.n == 3 ? g.m : 1;
    const std::int64_t slab = static_cast<std::int64_t>(g.m) * g.m;
    if (std::ssize(sino) != static_cast<std::int64_t>(geom.num_angles()) * slices * geom.bins)
        throw std::invalid_argument("radon_adjoint: bad sinogram size");
    if (std::ssize(out) != g.size()) throw std::invalid_argument("radon_adjoint: bad image size");

    std::fill(out.begin(), out.end(), 0.0);
    for (int a = 0; a < geom.num_angles(); ++a) {
        detail::RaySetup r = detail::ray_setup(g, geom, geom.angles_deg[a]);
        for (int sl = 0; sl < slices; ++sl) {
            double* plane = out.data() + sl * slab;
            const double* row = sino.data() + (static_cast<std::int64_t>(a) * slices + sl) * geom.bins;
            for (int b = 0; b < geom.bins; ++b) {
                double s = geom.bin_center(b);
                double bx = r.cx + s * r.ox, by = r.cy + s * r.oy;
                double val = row[b] * r.step * geom.scale;
                if (val == 0.0) continue;
                for (int k = 0; k < r.steps; ++k) {
                    double t = (k + 0.5) * r.step - 0.5 * geom.length;
                    double px = bx + t * r.dx, py = by + t * r.dy;
                    detail::bilinear_visit(g.m, px, py, [&](std::int64_t cell, double w) {
                        plane[cell] += w * val;
                    });
                }
            }
        }
    }
}

inline Sinogram radon_forward(const ScalarField& f, const RadonGeometry& geom) {
    Sinogram s = make_sinogram(geom, f.grid.n == 3 ? f.grid.m : 1);
    radon_forward_span(f.grid, f.samples, geom, s.samples);
    return s;
}

inline ScalarField radon_adjoint(const Sinogram& s, const GridSpec& grid) {
    const int slices = grid.n == 3 ? grid.m : 1;
    if (slices != s.slices) throw std::invalid_argument("radon_adjoint: slice count mismatch");
    std::vector<double> img(grid.size(), 0.0);
    radon_adjoint_span(grid, s.samples, s.geom, img);
    return ScalarField{grid, std::move(img), {}};
}

// Detector coarsening: coarse bin j averages fine bins (2j, 2j+1) divided
// by four, per angle and slice.  The coarse detector has half the bins of
// a geometry one level down; the extra factor 1/2 is what the multilevel
// operator scale compensates for.
inline Sinogram restrict_sinogram(const Sinogram& s) {
    if (s.geom.bins % 2 != 0) throw std::invalid_argument("restrict_sinogram: odd bin count");
    RadonGeometry cg = s.geom;
    cg.bins = s.geom.bins / 2;
    Sinogram out = make_sinogram(std::move(cg), s.slices);
    const std::int64_t rows = static_cast<std::int64_t>(s.geom.num_angles()) * s.slices;
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* fine = s.samples.data() + r * s.geom.bins;
        double* coarse = out.samples.data() + r * out.geom.bins;
        for (int j = 0; j < out.geom.bins; ++j)
            coarse[j] = (fine[2 * j] + fine[2 * j + 1]) / 4.0;
    }
    return out;
}

}  // namespace tbir
