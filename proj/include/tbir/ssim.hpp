#pragma once

// Structural similarity index with the standard parameters: 11x11 Gaussian
// window (sigma 1.5), K1 = 0.01, K2 = 0.03, dynamic range taken from the
// reference image (the second argument).  Windows are evaluated only where
// they fit entirely inside the image; the score is their mean.  Volumes are
// scored slice by slice and averaged.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tbir/grid.hpp"

namespace tbir {

namespace detail {

inline const std::vector<double>& ssim_window() {
    static const std::vector<double> w = [] {
        std::vector<double> v(11);
        double sum = 0.0;
        for (int i = 0; i < 11; ++i) {
            double d = i - 5.0;
            v[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
            sum += v[i];
        }
        for (double& x : v) x /= sum;
        return v;
    }();
    return w;
}

inline double ssim_slice(const double* a, const double* b, int m, double c1, double c2) {
    const std::vector<double>& win = ssim_window();
    if (m < 11) throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    double total = 0.0;
    std::int64_t count = 0;
    for (int y0 = 0; y0 + 11 <= m; ++y0)
        for (int x0 = 0; x0 + 11 <= m; ++x0) {
            double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
            for (int wy = 0; wy < 11; ++wy)
                for (int wx = 0; wx < 11; ++wx) {
                    double w = win[wy] * win[wx];
                    double va = a[(x0 + wx) + static_cast<std::int64_t>(m) * (y0 + wy)];
                    double vb = b[(x0 + wx) + static_cast<std::int64_t>(m) * (y0 + wy)];
                    ma += w * va;
                    mb += w * vb;
                    maa += w * va * va;
                    mbb += w * vb * vb;
                    mab += w * va * vb;
                }
            double sa = maa - ma * ma;
            double sb = mbb - mb * mb;
            double sab = mab - ma * mb;
            total += (2 * ma * mb + c1) * (2 * sab + c2) /
                     ((ma * ma + mb * mb + c1) * (sa + sb + c2));
            ++count;
        }
    return total / static_cast<double>(count);
}

}  // namespace detail

inline double ssim(const ScalarField& a, const ScalarField& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("ssim: grids differ");
    double lo = b.samples[0], hi = b.samples[0];
    for (double v : b.samples) {
        lo = v < lo ? v : lo;
        hi = v > hi ? v : hi;
    }
    double range = hi - lo;
    if (range == 0.0) range = 1.0;
    const double c1 = (0.01 * range) * (0.01 * range);
    const double c2 = (0.03 * range) * (0.03 * range);

    const int m = a.grid.m;
    const std::int64_t slab = static_cast<std::int64_t>(m) * m;
    const int slices = a.grid.n == 3 ? m : 1;
    double acc = 0.0;
    for (int s = 0; s < slices; ++s)
        acc += detail::ssim_slice(a.samples.data() + s * slab, b.samples.data() + s * slab, m,
                                  c1, c2);
    return acc / slices;
}

}  // namespace tbir
