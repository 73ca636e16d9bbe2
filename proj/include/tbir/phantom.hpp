#pragma once

// Analytic test images.  Shapes are evaluated pointwise at cell centres
// from closed-form expressions, so warped variants are exact rather than
// resampled.  Sharp edges are smoothed over a band of 2 h_X to keep cubic
// spline overshoot in check.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tbir/grid.hpp"

namespace tbir {

enum class PhantomKind { disk_pair, blob_warp, affine_warp };

inline PhantomKind parse_phantom_kind(const std::string& s) {
    if (s == "disk_pair") return PhantomKind::disk_pair;
    if (s == "blob_warp") return PhantomKind::blob_warp;
    if (s == "affine_warp") return PhantomKind::affine_warp;
    throw std::invalid_argument("unknown phantom kind '" + s + "'");
}

namespace detail {

inline double smoothstep01(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x * x * (3.0 - 2.0 * x);
}

struct Blob {
    double cx, cy, sigma, amp;
};

inline const Blob* blob_set(int& count) {
    static const Blob blobs[3] = {
        {0.36, 0.42, 0.080, 1.00},
        {0.60, 0.55, 0.100, 0.80},
        {0.46, 0.68, 0.065, 0.90},
    };
    count = 3;
    return blobs;
}

// Smooth interior warp, zero on the boundary of the unit square.
inline void vortex_warp(double a, double x, double y, double& wx, double& wy) {
    const double pi = std::numbers::pi;
    double sx = std::sin(pi * x), sy = std::sin(pi * y);
    wx = x + a * sx * sx * std::sin(2.0 * pi * y);
    wy = y - a * std::sin(2.0 * pi * x) * sy * sy;
}

}  // namespace detail

// Disk of given radius and intensity centred in the domain, edge smoothed
// over 2 h_X.  In 3D this is a ball.
inline ScalarField disk_image(const GridSpec& g, double radius, double intensity) {
    validate_grid(g);
    std::vector<double> centers = cell_centers(g);
    std::vector<double> vals(g.size());
    const double band = 2.0 * g.h();
    for (std::int64_t p = 0; p < g.size(); ++p) {
        double d2 = 0.0;
        for (int a = 0; a < g.n; ++a) {
            double dx = centers[p * g.n + a] - 0.5;
            d2 += dx * dx;
        }
        double d = std::sqrt(d2);
        vals[p] = intensity * detail::smoothstep01((radius - d) / band + 0.5);
    }
    return ScalarField{g, std::move(vals), {}};
}

// Sum of three Gaussians, optionally pre-warped by the analytic vortex map
// (amplitude 0 gives the plain template).  3D variants modulate by a
// z-profile so the volume stays smooth and interior.
inline ScalarField blob_image(const GridSpec& g, double warp_amplitude = 0.0) {
    validate_grid(g);
    int count = 0;
    const detail::Blob* blobs = detail::blob_set(count);
    std::vector<double> centers = cell_centers(g);
    std::vector<double> vals(g.size());
    for (std::int64_t p = 0; p < g.size(); ++p) {
        double x = centers[p * g.n + 0], y = centers[p * g.n + 1];
        double wx, wy;
        detail::vortex_warp(warp_amplitude, x, y, wx, wy);
        double v = 0.0;
        for (int b = 0; b < count; ++b) {
            double dx = wx - blobs[b].cx, dy = wy - blobs[b].cy;
            v += blobs[b].amp * std::exp(-(dx * dx + dy * dy) / (2.0 * blobs[b].sigma * blobs[b].sigma));
        }
        if (g.n == 3) {
            double z = centers[p * g.n + 2];
            double sz = std::sin(std::numbers::pi * z);
            v *= sz * sz;
        }
        vals[p] = v;
    }
    return ScalarField{g, std::move(vals), {}};
}

// Blob template pushed through rotation (about the domain centre, in the
// first two axes) and isotropic scaling, with an intensity factor.
inline ScalarField blob_affine_image(const GridSpec& g, double angle_deg, double scale,
                                     double intensity) {
    validate_grid(g);
    if (scale <= 0.0) throw std::invalid_argument("blob_affine_image: scale must be positive");
    int count = 0;
    const detail::Blob* blobs = detail::blob_set(count);
    const double rad = angle_deg * std::numbers::pi / 180.0;
    const double ca = std::cos(rad), sa = std::sin(rad);
    std::vector<double> centers = cell_centers(g);
    std::vector<double> vals(g.size());
    for (std::int64_t p = 0; p < g.size(); ++p) {
        double x = centers[p * g.n + 0] - 0.5, y = centers[p * g.n + 1] - 0.5;
        // inverse map: rotate by -angle, divide by scale
        double rx = (ca * x + sa * y) / scale + 0.5;
        double ry = (-sa * x + ca * y) / scale + 0.5;
        double v = 0.0;
        for (int b = 0; b < count; ++b) {
            double dx = rx - blobs[b].cx, dy = ry - blobs[b].cy;
            v += blobs[b].amp * std::exp(-(dx * dx + dy * dy) / (2.0 * blobs[b].sigma * blobs[b].sigma));
        }
        if (g.n == 3) {
            double z = centers[p * g.n + 2];
            double sz = std::sin(std::numbers::pi * z);
            v *= sz * sz;
        }
        vals[p] = intensity * v;
    }
    return ScalarField{g, std::move(vals), {}};
}

// Template/target pairs used by the experiments: a mass-preserving disk
// contraction, a smoothly warped blob cluster, and an affinely moved one.
inline std::pair<ScalarField, ScalarField> make_phantom(PhantomKind kind, int m, int n = 2) {
    GridSpec g = make_grid(n, m);
    switch (kind) {
        case PhantomKind::disk_pair: {
            double r = 0.2;
            double rt = r * std::pow(2.0, -1.0 / n);  // equal mass at twice the intensity
            return {disk_image(g, r, 1.0), disk_image(g, rt, 2.0)};
        }
        case PhantomKind::blob_warp:
            return {blob_image(g, 0.0), blob_image(g, 0.05)};
        case PhantomKind::affine_warp:
        default:
            return {blob_affine_image(g, 0.0, 1.0, 1.0), blob_affine_image(g, 10.0, 1.05, 1.0)};
    }
}

}  // namespace tbir
