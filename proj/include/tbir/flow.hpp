#pragma once

// Characteristic solver: classical RK4 integration of dX/dt = v(t, X) over
// the unit time interval, forward (0 -> 1) or backward (1 -> 0).  The trace
// keeps every stage location and the velocity Jacobian there, which is
// exactly what the differentiated recursion needs, so d end / d v and its
// transpose can be applied later without re-integration and match the
// discrete integrator to machine precision.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "tbir/grid.hpp"
#include "tbir/velocity.hpp"

namespace tbir {

enum class FlowDirection { forward, backward };

struct FlowTrace {
    GridSpec grid;  // velocity grid
    int time_cells = 1;
    int steps = 0;
    double dt = 0.0;
    double t0 = 0.0;
    std::int64_t points = 0;

    std::vector<double> start;      // P*n
    std::vector<double> end;        // P*n
    std::vector<double> stage_pos;  // steps*4*P*n, stage index s in 0..3
    std::vector<double> stage_jac;  // steps*4*P*n*n, row-major dv_r/dx_c

    std::int64_t dof_count() const {
        return static_cast<std::int64_t>(time_cells + 1) * grid.n * grid.size();
    }
    double stage_time(int step, int s) const {
        double tk = t0 + step * dt;
        return s == 0 ? tk : (s == 3 ? tk + dt : tk + 0.5 * dt);
    }
};

namespace detail {
inline const double* stage_point(const FlowTrace& tr, int step, int s, std::int64_t p) {
    const int n = tr.grid.n;
    return tr.stage_pos.data() + ((static_cast<std::int64_t>(step) * 4 + s) * tr.points + p) * n;
}
inline const double* stage_jacobian(const FlowTrace& tr, int step, int s, std::int64_t p) {
    const int n = tr.grid.n;
    return tr.stage_jac.data() +
           ((static_cast<std::int64_t>(step) * 4 + s) * tr.points + p) * n * n;
}
}  // namespace detail

inline FlowTrace integrate_characteristics(const VelocityField& v, std::span<const double> x0,
                                           FlowDirection dir, int steps) {
    const int n = v.grid.n;
    if (steps < 1) throw std::invalid_argument("integrate_characteristics: steps must be >= 1");
    if (x0.size() % n != 0) throw std::invalid_argument("integrate_characteristics: ragged x0");
    const std::int64_t P = x0.size() / n;

    FlowTrace tr;
    tr.grid = v.grid;
    tr.time_cells = v.time_cells;
    tr.steps = steps;
    tr.dt = (dir == FlowDirection::forward ? 1.0 : -1.0) / steps;
    tr.t0 = dir == FlowDirection::forward ? 0.0 : 1.0;
    tr.points = P;
    tr.start.assign(x0.begin(), x0.end());
    tr.end = tr.start;
    tr.stage_pos.assign(static_cast<std::int64_t>(steps) * 4 * P * n, 0.0);
    tr.stage_jac.assign(static_cast<std::int64_t>(steps) * 4 * P * n * n, 0.0);

    detail::LinStencil st;
    double k[4][kMaxDim];
    double y[kMaxDim];
    const double stage_off[4] = {0.0, 0.5, 0.5, 1.0};

    for (std::int64_t p = 0; p < P; ++p) {
        double* yp = tr.end.data() + p * n;
        for (int step = 0; step < steps; ++step) {
            const double tk = tr.t0 + step * tr.dt;
            for (int s = 0; s < 4; ++s) {
                const double tau = tk + stage_off[s] * tr.dt;
                double coef = s == 0 ? 0.0 : (s == 3 ? tr.dt : 0.5 * tr.dt);
                for (int a = 0; a < n; ++a)
                    y[a] = yp[a] + (s == 0 ? 0.0 : coef * k[s - 1][a]);
                std::int64_t at = ((static_cast<std::int64_t>(step) * 4 + s) * P + p) * n;
                for (int a = 0; a < n; ++a) tr.stage_pos[at + a] = y[a];
                detail::linear_stencil(v.grid, v.time_cells, tau, y, st);
                detail::stencil_apply(v, v.dofs, st, k[s], tr.stage_jac.data() + at * n);
            }
            for (int a = 0; a < n; ++a)
                yp[a] += tr.dt / 6.0 * (k[0][a] + 2.0 * k[1][a] + 2.0 * k[2][a] + k[3][a]);
        }
    }
    return tr;
}

// Directional derivative of the endpoints with respect to the velocity dofs:
// replays the RK4 recursion with v perturbed by w, reusing the recorded
// stage locations and Jacobians.  Returns a P*n point-major vector.
inline std::vector<double> flow_jacvec(const FlowTrace& tr, std::span<const double> w) {
    const int n = tr.grid.n;
    if (std::ssize(w) != tr.dof_count()) throw std::invalid_argument("flow_jacvec: bad w length");
    VelocityField shape{tr.grid, tr.time_cells, {}};

    std::vector<double> out(tr.points * n, 0.0);
    detail::LinStencil st;
    double iw[kMaxDim], dk[4][kMaxDim], dy[kMaxDim];
    const double stage_coef[4] = {0.0, 0.5, 0.5, 1.0};

    for (std::int64_t p = 0; p < tr.points; ++p) {
        double* dyp = out.data() + p * n;  // starts at zero: dX/dv of the seed is 0
        for (int step = 0; step < tr.steps; ++step) {
            for (int s = 0; s < 4; ++s) {
                const double* pos = detail::stage_point(tr, step, s, p);
                const double* A = detail::stage_jacobian(tr, step, s, p);
                for (int a = 0; a < n; ++a)
                    dy[a] = dyp[a] + (s == 0 ? 0.0 : stage_coef[s] * tr.dt * dk[s - 1][a]);
                detail::linear_stencil(tr.grid, tr.time_cells, tr.stage_time(step, s), pos, st);
                detail::stencil_apply(shape, w, st, iw, nullptr);
                for (int r = 0; r < n; ++r) {
                    double acc = iw[r];
                    for (int c = 0; c < n; ++c) acc += A[r * n + c] * dy[c];
                    dk[s][r] = acc;
                }
            }
            for (int a = 0; a < n; ++a)
                dyp[a] += tr.dt / 6.0 * (dk[0][a] + 2.0 * dk[1][a] + 2.0 * dk[2][a] + dk[3][a]);
        }
    }
    return out;
}

// Transpose of flow_jacvec: endpoint cotangents z (P*n) back to velocity
// dof space.  Same stage data walked in reverse.
inline std::vector<double> flow_jacvec_transpose(const FlowTrace& tr, std::span<const double> z) {
    const int n = tr.grid.n;
    if (std::ssize(z) != tr.points * n)
        throw std::invalid_argument("flow_jacvec_transpose: bad z length");
    VelocityField shape{tr.grid, tr.time_cells, {}};

    std::vector<double> out(tr.dof_count(), 0.0);
    detail::LinStencil st;
    double lam[kMaxDim], lk[4][kMaxDim], ly[kMaxDim];
    const double stage_coef[4] = {0.0, 0.5, 0.5, 1.0};
    const double sum_coef[4] = {1.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0};

    for (std::int64_t p = 0; p < tr.points; ++p) {
        for (int a = 0; a < n; ++a) lam[a] = z[p * n + a];
        for (int step = tr.steps - 1; step >= 0; --step) {
            for (int s = 0; s < 4; ++s)
                for (int a = 0; a < n; ++a) lk[s][a] = tr.dt * sum_coef[s] * lam[a];
            for (int s = 3; s >= 0; --s) {
                const double* pos = detail::stage_point(tr, step, s, p);
                const double* A = detail::stage_jacobian(tr, step, s, p);
                // k_s = I(w at stage) + A_s dY_s, dY_s = dY + c_s dt dk_{s-1}
                detail::linear_stencil(tr.grid, tr.time_cells, tr.stage_time(step, s), pos, st);
                detail::stencil_scatter(shape, st, lk[s], out);
                for (int a = 0; a < n; ++a) {
                    double acc = 0.0;
                    for (int r = 0; r < n; ++r) acc += A[r * n + a] * lk[s][r];
                    ly[a] = acc;
                }
                for (int a = 0; a < n; ++a) {
                    lam[a] += ly[a];
                    if (s > 0) lk[s - 1][a] += stage_coef[s] * tr.dt * ly[a];
                }
            }
        }
    }
    return out;
}

}  // namespace tbir
