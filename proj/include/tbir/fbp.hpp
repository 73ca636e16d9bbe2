#pragma once

// Filtered backprojection baseline.  Each angle row is Ram-Lak filtered in
// the frequency domain (zero-padded to the next power of two, ramp in index
// units) and backprojected with the exact adjoint of the Joseph projector.
// The overall scale pi / (p * h_X^2) makes the discrete chain approximate
// the continuous inversion formula, so a unit disk phantom reconstructs to
// interior values near 1 under dense angles.

#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "tbir/grid.hpp"
#include "tbir/radon.hpp"

namespace tbir {

namespace detail {

// In-place iterative radix-2 Cooley-Tukey; size must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft: size not a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= static_cast<double>(n);
}

inline std::size_t next_pow2(std::size_t v) {
    std::size_t p = 1;
    while (p < v) p <<= 1;
    return p;
}

}  // namespace detail

inline ScalarField fbp(const Sinogram& s, const GridSpec& grid) {
    if (s.geom.num_angles() < 1) throw std::invalid_argument("fbp: no angles");
    const int q = s.geom.bins;
    const std::size_t N = detail::next_pow2(static_cast<std::size_t>(2 * q));

    Sinogram filtered = s;
    std::vector<std::complex<double>> buf(N);
    const std::int64_t rows = static_cast<std::int64_t>(s.geom.num_angles()) * s.slices;
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* row = s.samples.data() + r * q;
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        for (int b = 0; b < q; ++b) buf[b] = row[b];
        detail::fft_radix2(buf, false);
        for (std::size_t k = 0; k < N; ++k) {
            std::size_t fold = k <= N / 2 ? k : N - k;
            buf[k] *= static_cast<double>(fold) / static_cast<double>(N);
        }
        detail::fft_radix2(buf, true);
        double* out = filtered.samples.data() + r * q;
        for (int b = 0; b < q; ++b) out[b] = buf[b].real();
    }

    ScalarField back = radon_adjoint(filtered, grid);
    const double hx = grid.h();
    const double c = std::numbers::pi / (s.geom.num_angles() * hx * hx);
    for (double& v : back.samples) v *= c;
    return back;
}

}  // namespace tbir
