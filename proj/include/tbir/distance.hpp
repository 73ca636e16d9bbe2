#pragma once

// Data-fidelity terms on sinogram vectors: SSD with midpoint quadrature
// weight h_Y, and 1 minus the squared normalized cross correlation.  Both
// report the same Gauss-Newton curvature surrogate h_Y * identity, which
// keeps the approximate Hessian positive semidefinite.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tbir {

enum class DistanceKind { ssd, ncc };

inline DistanceKind parse_distance(const std::string& s) {
    if (s == "ssd") return DistanceKind::ssd;
    if (s == "ncc") return DistanceKind::ncc;
    throw std::invalid_argument("unknown distance '" + s + "'");
}

struct DistanceEval {
    double value = 0.0;
    std::vector<double> grad;  // d value / d x
    double gn_weight = 0.0;    // curvature surrogate is gn_weight * identity
};

inline DistanceEval ssd(std::span<const double> x, std::span<const double> y, double h_y) {
    if (x.size() != y.size()) throw std::invalid_argument("ssd: length mismatch");
    DistanceEval e;
    e.grad.resize(x.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - y[i];
        acc += d * d;
        e.grad[i] = h_y * d;
    }
    e.value = 0.5 * h_y * acc;
    e.gn_weight = h_y;
    return e;
}

inline DistanceEval ncc(std::span<const double> x, std::span<const double> y, double h_y) {
    if (x.size() != y.size()) throw std::invalid_argument("ncc: length mismatch");
    const std::size_t M = x.size();
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        xy += x[i] * y[i];
        xx += x[i] * x[i];
        yy += y[i] * y[i];
    }
    const double floor2 = 1e-28 * static_cast<double>(M);  // (1e-14 * sqrt(M))^2
    if (xx < floor2 || yy < floor2) throw std::domain_error("NCC undefined at 0");

    DistanceEval e;
    e.value = 1.0 - xy * xy / (xx * yy);
    e.grad.resize(M);
    const double c1 = -2.0 * xy / (xx * yy);
    const double c2 = 2.0 * xy * xy / (xx * xx * yy);
    for (std::size_t i = 0; i < M; ++i) e.grad[i] = c1 * y[i] + c2 * x[i];
    e.gn_weight = h_y;
    return e;
}

inline DistanceEval distance_eval(DistanceKind kind, std::span<const double> x,
                                  std::span<const double> y, double h_y) {
    return kind == DistanceKind::ssd ? ssd(x, y, h_y) : ncc(x, y, h_y);
}

}  // namespace tbir
