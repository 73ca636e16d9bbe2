#pragma once

// Quadratic regularization of velocity fields,
//   R(v) = (h_t h_X^n / 2) (gamma_s |B v|^2 + gamma_t |D_t v|^2 + gamma_0 |v|^2),
// with B one of: per-axis forward differences (diffusion), the n-D Neumann
// Laplacian (curvature), or per-axis third differences (third order), each
// applied componentwise per time plane on the padded lattice.  D_t takes
// forward differences across the time planes.  Everything here is linear,
// so gradient and Hessian-vector product share one operator application;
// the exact Hessian diagonal feeds the Jacobi preconditioner.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tbir/grid.hpp"
#include "tbir/velocity.hpp"

namespace tbir {

enum class RegKind { diffusion, curvature, third_order };

inline RegKind parse_reg_kind(const std::string& s) {
    if (s == "diffusion") return RegKind::diffusion;
    if (s == "curvature") return RegKind::curvature;
    if (s == "third-order" || s == "third_order") return RegKind::third_order;
    throw std::invalid_argument("unknown regularizer '" + s + "'");
}

struct RegConfig {
    RegKind kind = RegKind::curvature;
    double gamma_s = 1.0;
    double gamma_t = 1e2;
    double gamma_0 = 1e-6;
};

inline void validate_reg(const RegConfig& c) {
    if (!(c.gamma_s > 0.0)) throw std::invalid_argument("regularizer: gamma_s must be > 0");
    if (c.gamma_t < 0.0 || c.gamma_0 < 0.0)
        throw std::invalid_argument("regularizer: negative weight");
}

namespace detail {

template <typename F>
inline void for_each_line(const GridSpec& g, int axis, F&& f) {
    const int ext = g.extent();
    std::int64_t stride = 1;
    for (int a = 0; a < axis; ++a) stride *= ext;
    const std::int64_t lines = g.size() / ext;
    for (std::int64_t l = 0; l < lines; ++l) {
        std::int64_t start = (l % stride) + (l / stride) * stride * ext;
        f(start, stride);
    }
}

// n-D Laplacian with zero-Neumann boundaries (missing neighbour reflects).
inline void laplacian_neumann(const GridSpec& g, const double* in, double* out) {
    const double ih2 = static_cast<double>(g.m) * g.m;
    std::fill(out, out + g.size(), 0.0);
    for (int a = 0; a < g.n; ++a) {
        for_each_line(g, a, [&](std::int64_t start, std::int64_t stride) {
            const int ext = g.extent();
            for (int i = 0; i < ext; ++i) {
                double c = in[start + i * stride];
                double lft = i > 0 ? in[start + (i - 1) * stride] : c;
                double rgt = i < ext - 1 ? in[start + (i + 1) * stride] : c;
                out[start + i * stride] += (lft - 2.0 * c + rgt) * ih2;
            }
        });
    }
}

// One slab pass: accumulates |B u|^2 and, when `out` is non-null, adds
// w * B^T B u into it.
inline double spatial_apply(RegKind kind, const GridSpec& g, const double* u, double* out,
                            double w, std::vector<double>& scratch) {
    const int ext = g.extent();
    double norm2 = 0.0;
    if (kind == RegKind::diffusion) {
        const double ih = static_cast<double>(g.m);
        for (int a = 0; a < g.n; ++a) {
            for_each_line(g, a, [&](std::int64_t start, std::int64_t stride) {
                for (int i = 0; i + 1 < ext; ++i) {
                    double t = (u[start + (i + 1) * stride] - u[start + i * stride]) * ih;
                    norm2 += t * t;
                    if (out) {
                        out[start + (i + 1) * stride] += w * t * ih;
                        out[start + i * stride] -= w * t * ih;
                    }
                }
            });
        }
    } else if (kind == RegKind::curvature) {
        scratch.resize(g.size());
        laplacian_neumann(g, u, scratch.data());
        for (double t : scratch) norm2 += t * t;
        if (out) {
            std::vector<double> lap2(g.size());
            laplacian_neumann(g, scratch.data(), lap2.data());
            for (std::int64_t i = 0; i < g.size(); ++i) out[i] += w * lap2[i];
        }
    } else {
        const double ih3 = static_cast<double>(g.m) * g.m * g.m;
        const double c[4] = {-1.0, 3.0, -3.0, 1.0};
        for (int a = 0; a < g.n; ++a) {
            for_each_line(g, a, [&](std::int64_t start, std::int64_t stride) {
                for (int r = 0; r + 3 < ext; ++r) {
                    double t = 0.0;
                    for (int o = 0; o < 4; ++o) t += c[o] * u[start + (r + o) * stride];
                    t *= ih3;
                    norm2 += t * t;
                    if (out)
                        for (int o = 0; o < 4; ++o)
                            out[start + (r + o) * stride] += w * c[o] * ih3 * t;
                }
            });
        }
    }
    return norm2;
}

}  // namespace detail

struct RegEval {
    double value = 0.0;
    std::vector<double> grad;
};

// Shared core: value parts and optionally sigma-and-gamma-weighted B^T B
// application.  `in` is a full dof vector with the shape of `like`.
inline double reg_operator(const RegConfig& cfg, const VelocityField& like,
                           std::span<const double> in, std::vector<double>* out) {
    validate_reg(cfg);
    if (std::ssize(in) != like.dof_count()) throw std::invalid_argument("regularizer: bad length");
    const GridSpec& g = like.grid;
    const std::int64_t S = g.size();
    const int n = g.n;
    const int planes = like.time_cells + 1;
    const double ht = 1.0 / like.time_cells;
    double sigma = ht;
    for (int a = 0; a < n; ++a) sigma *= g.h();

    if (out) out->assign(in.size(), 0.0);
    double* op = out ? out->data() : nullptr;

    double spatial = 0.0;
    std::vector<double> scratch;
    for (int j = 0; j < planes; ++j)
        for (int c = 0; c < n; ++c) {
            std::int64_t off = (static_cast<std::int64_t>(j) * n + c) * S;
            spatial += detail::spatial_apply(cfg.kind, g, in.data() + off, op ? op + off : nullptr,
                                             sigma * cfg.gamma_s, scratch);
        }

    double temporal = 0.0;
    const double iht = like.time_cells;
    for (int j = 0; j + 1 < planes; ++j) {
        std::int64_t lo = static_cast<std::int64_t>(j) * n * S;
        std::int64_t hi = lo + n * S;
        for (std::int64_t i = 0; i < n * S; ++i) {
            double t = (in[hi + i] - in[lo + i]) * iht;
            temporal += t * t;
            if (op) {
                op[hi + i] += sigma * cfg.gamma_t * t * iht;
                op[lo + i] -= sigma * cfg.gamma_t * t * iht;
            }
        }
    }

    double l2 = 0.0;
    for (std::int64_t i = 0; i < std::ssize(in); ++i) {
        l2 += in[i] * in[i];
        if (op) op[i] += sigma * cfg.gamma_0 * in[i];
    }

    return 0.5 * sigma * (cfg.gamma_s * spatial + cfg.gamma_t * temporal + cfg.gamma_0 * l2);
}

inline RegEval reg_eval(const RegConfig& cfg, const VelocityField& v) {
    RegEval e;
    e.value = reg_operator(cfg, v, v.dofs, &e.grad);
    return e;
}

inline std::vector<double> reg_hessvec(const RegConfig& cfg, const VelocityField& like,
                                       std::span<const double> w) {
    std::vector<double> out;
    reg_operator(cfg, like, w, &out);
    return out;
}

// Exact diagonal of the regularization Hessian.
inline std::vector<double> reg_diag(const RegConfig& cfg, const VelocityField& like) {
    validate_reg(cfg);
    const GridSpec& g = like.grid;
    const std::int64_t S = g.size();
    const int n = g.n;
    const int planes = like.time_cells + 1;
    const double ht = 1.0 / like.time_cells;
    double sigma = ht;
    for (int a = 0; a < n; ++a) sigma *= g.h();
    const int ext = g.extent();
    const double ih2 = static_cast<double>(g.m) * g.m;

    // spatial part depends only on the lattice position
    std::vector<double> ds(S, 0.0);
    for (std::int64_t cell = 0; cell < S; ++cell) {
        std::array<int, kMaxDim> idx = unravel_index(g, cell);
        if (cfg.kind == RegKind::diffusion) {
            double d = 0.0;
            for (int a = 0; a < n; ++a)
                d += ((idx[a] > 0 ? 1 : 0) + (idx[a] < ext - 1 ? 1 : 0)) * ih2;
            ds[cell] = d;
        } else if (cfg.kind == RegKind::curvature) {
            double center = 0.0, off = 0.0;
            for (int a = 0; a < n; ++a) {
                int cnt = (idx[a] > 0 ? 1 : 0) + (idx[a] < ext - 1 ? 1 : 0);
                center += -cnt * ih2;
                off += cnt * ih2 * ih2;
            }
            ds[cell] = center * center + off;
        } else {
            const double csq[4] = {1.0, 9.0, 9.0, 1.0};
            const double ih6 = ih2 * ih2 * ih2;
            double d = 0.0;
            for (int a = 0; a < n; ++a)
                for (int o = 0; o < 4; ++o) {
                    int r = idx[a] - o;
                    if (r >= 0 && r + 3 < ext) d += csq[o] * ih6;
                }
            ds[cell] = d;
        }
    }

    std::vector<double> diag(like.dof_count());
    const double iht2 = static_cast<double>(like.time_cells) * like.time_cells;
    for (int j = 0; j < planes; ++j) {
        double dt = ((j > 0 ? 1 : 0) + (j < planes - 1 ? 1 : 0)) * iht2;
        for (int c = 0; c < n; ++c) {
            std::int64_t off = (static_cast<std::int64_t>(j) * n + c) * S;
            for (std::int64_t cell = 0; cell < S; ++cell)
                diag[off + cell] =
                    sigma * (cfg.gamma_s * ds[cell] + cfg.gamma_t * dt + cfg.gamma_0);
        }
    }
    return diag;
}

}  // namespace tbir
