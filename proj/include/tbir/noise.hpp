#pragma once

// Measurement noise: i.i.d. Gaussian with standard deviation
// level * mean(|g|), anchored to the mean so the level is invariant under
// detector refinement.  Normal variates come from Box-Muller over the raw
// mt19937_64 stream, keeping outputs identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>

#include "tbir/radon.hpp"

namespace tbir {

namespace detail {

class GaussianStream {
  public:
    explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_open();
        double u2 = uniform_open();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    double uniform_open() {  // (0, 1]
        return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1p-53;
    }

    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace detail

inline Sinogram add_noise(const Sinogram& s, double level, std::uint64_t seed) {
    if (level < 0.0) throw std::invalid_argument("add_noise: negative level");
    if (level == 0.0) return s;

    double mean_abs = 0.0;
    for (double v : s.samples) mean_abs += std::abs(v);
    mean_abs /= static_cast<double>(s.samples.size());
    const double sigma = level * mean_abs;

    Sinogram out = s;
    detail::GaussianStream g(seed);
    for (double& v : out.samples) v += sigma * g.next();
    return out;
}

}  // namespace tbir
