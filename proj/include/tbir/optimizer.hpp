#pragma once

// Reduced objective J(v) = D(K f(v), g) + R(v) and its inexact
// Gauss-Newton-Krylov minimization.  The gradient is assembled through the
// transposed chain (solution-map transpose of the Radon adjoint of the
// distance gradient); the Hessian surrogate drops the second derivative of
// the solution map and replaces the distance curvature by h_Y * identity,
// which keeps it positive semidefinite.  Inner solves use Jacobi (from the
// regularizer diagonal) preconditioned CG; steps are globalized by Armijo
// backtracking.  The multilevel driver restricts template and data to a
// coarse level, optimizes coarse to fine, and prolongs the velocity.

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tbir/distance.hpp"
#include "tbir/radon.hpp"
#include "tbir/regularizer.hpp"
#include "tbir/solution_map.hpp"

namespace tbir {

struct OptimizerConfig {
    int max_gn_iters = 20;
    double grad_tol = 1e-4;  // relative to the initial gradient norm
    double obj_tol = 1e-6;   // relative objective change
    double step_tol = 1e-6;  // relative step norm
    double armijo_c = 1e-4;
    double armijo_factor = 0.5;
    int max_line_search = 12;
    int max_pcg_iters = 50;
    double pcg_tol = 1e-2;  // relative residual
};

struct Problem {
    PdeKind pde = PdeKind::transport;
    DistanceKind distance = DistanceKind::ssd;
    ScalarField f0;  // template; spline-fitted for transport
    Sinogram data;   // measurements; data.geom doubles as the operator geometry
    RegConfig reg;
    int flow_steps = 5;
};

inline void validate_problem(const Problem& p) {
    if (p.pde == PdeKind::transport && !p.f0.has_coeffs())
        throw std::invalid_argument("objective: transport needs a spline-fitted template");
    if (p.flow_steps < 1) throw std::invalid_argument("objective: flow_steps must be >= 1");
    const int slices = p.f0.grid.n == 3 ? p.f0.grid.m : 1;
    if (p.data.slices != slices || std::ssize(p.data.samples) != p.data.size())
        throw std::invalid_argument("objective: sinogram shape mismatch");
}

struct ObjectiveEval {
    double value = 0.0;
    double data_value = 0.0;
    double reg_value = 0.0;
    std::vector<double> grad;
    std::shared_ptr<const SolutionMap> state;  // linearisation point for hessvec
};

inline ObjectiveEval evaluate_objective(const Problem& p, const VelocityField& v,
                                        bool with_grad) {
    validate_problem(p);
    ObjectiveEval e;
    auto sm = std::make_shared<SolutionMap>(apply_pde(p.pde, v, p.f0, p.flow_steps));

    std::vector<double> pred(p.data.samples.size());
    radon_forward_span(p.f0.grid, sm->image, p.data.geom, pred);
    DistanceEval d =
        distance_eval(p.distance, pred, p.data.samples, p.data.geom.bin_width());
    e.data_value = d.value;
    e.reg_value = reg_operator(p.reg, v, v.dofs, with_grad ? &e.grad : nullptr);
    e.value = e.data_value + e.reg_value;

    if (with_grad) {
        std::vector<double> bp(p.f0.grid.size());
        radon_adjoint_span(p.f0.grid, d.grad, p.data.geom, bp);
        std::vector<double> gd = solution_jacvec_transpose(*sm, bp);
        for (std::int64_t i = 0; i < std::ssize(e.grad); ++i) e.grad[i] += gd[i];
        e.state = std::move(sm);
    }
    return e;
}

// Matrix-free Gauss-Newton Hessian at a linearisation point.
struct HessianOperator {
    const Problem* prob = nullptr;
    std::shared_ptr<const SolutionMap> state;
    const VelocityField* shape = nullptr;
    double eps = 0.0;

    std::vector<double> apply(std::span<const double> w) const {
        const GridSpec& ig = prob->f0.grid;
        std::vector<double> df = solution_jacvec(*state, w);
        std::vector<double> kdf(prob->data.samples.size());
        radon_forward_span(ig, df, prob->data.geom, kdf);
        const double hy = prob->data.geom.bin_width();
        for (double& x : kdf) x *= hy;
        std::vector<double> bp(ig.size());
        radon_adjoint_span(ig, kdf, prob->data.geom, bp);
        std::vector<double> out = solution_jacvec_transpose(*state, bp);
        std::vector<double> rh = reg_hessvec(prob->reg, *shape, w);
        for (std::int64_t i = 0; i < std::ssize(out); ++i) out[i] += rh[i] + eps * w[i];
        return out;
    }
};

// Positive shift making the surrogate strictly definite; scale-aware via
// the mean regularizer diagonal.
inline double psd_shift(const VelocityField& like, std::span<const double> diag) {
    double mean = 0.0;
    for (double d : diag) mean += d;
    mean /= static_cast<double>(diag.size());
    double sigma = 1.0 / like.time_cells;
    for (int a = 0; a < like.grid.n; ++a) sigma *= like.grid.h();
    return 1e-8 * sigma * (1.0 + mean);
}

struct PcgResult {
    std::vector<double> x;
    int iterations = 0;
    double rel_residual = 1.0;
};

// Approximately solve H x = -rhs with Jacobi preconditioner `precond`
// (diagonal, strictly positive).  Returns the iterate with the smallest
// residual norm seen.
template <typename Op>
inline PcgResult pcg(Op&& hessvec, std::span<const double> rhs,
                     std::span<const double> precond, double tol, int maxit) {
    const std::int64_t N = std::ssize(rhs);
    PcgResult res;
    res.x.assign(N, 0.0);

    std::vector<double> r(N), z(N), p(N), best(N, 0.0);
    double bnorm2 = 0.0;
    for (std::int64_t i = 0; i < N; ++i) {
        r[i] = -rhs[i];
        bnorm2 += r[i] * r[i];
    }
    if (bnorm2 == 0.0) return res;
    double best_r2 = bnorm2;
    const double stop2 = tol * tol * bnorm2;

    for (std::int64_t i = 0; i < N; ++i) z[i] = r[i] / precond[i];
    p = z;
    double rz = 0.0;
    for (std::int64_t i = 0; i < N; ++i) rz += r[i] * z[i];

    double r2 = bnorm2;
    int it = 0;
    while (it < maxit && r2 > stop2) {
        std::vector<double> hp = hessvec(std::span<const double>(p));
        double php = 0.0;
        for (std::int64_t i = 0; i < N; ++i) php += p[i] * hp[i];
        if (!(php > 0.0)) break;  // lost positivity; keep best iterate
        double alpha = rz / php;
        r2 = 0.0;
        for (std::int64_t i = 0; i < N; ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * hp[i];
            r2 += r[i] * r[i];
        }
        if (!std::isfinite(r2)) throw std::runtime_error("pcg: non-finite iterate");
        ++it;
        if (r2 < best_r2) {
            best_r2 = r2;
            best = res.x;
        }
        double rz_new = 0.0;
        for (std::int64_t i = 0; i < N; ++i) {
            z[i] = r[i] / precond[i];
            rz_new += r[i] * z[i];
        }
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::int64_t i = 0; i < N; ++i) p[i] = z[i] + beta * p[i];
    }
    res.x = std::move(best);
    res.iterations = it;
    res.rel_residual = std::sqrt(best_r2 / bnorm2);
    return res;
}

struct IterationRecord {
    int iter = 0;
    double obj = 0.0, data = 0.0, reg = 0.0;
    double grad_norm = 0.0;
    double step_norm = 0.0;
    double mu = 0.0;
    double gd = 0.0;  // predicted slope <grad, step direction>
    int pcg_iters = 0;
    int ls_trials = 0;
};

struct ObjectiveReport {
    int level = 0;
    std::vector<IterationRecord> iterations;  // entry 0 is the starting point
    double initial_grad_norm = 0.0;
    double final_obj = 0.0, final_data = 0.0, final_reg = 0.0;
    bool converged = false;
    bool line_search_failed = false;
    std::string stop_reason;
};

inline ObjectiveReport gauss_newton(const Problem& p, VelocityField& v,
                                    const OptimizerConfig& cfg) {
    validate_problem(p);
    ObjectiveReport rep;

    ObjectiveEval cur = evaluate_objective(p, v, true);
    auto norm = [](std::span<const double> x) {
        double s = 0.0;
        for (double t : x) s += t * t;
        return std::sqrt(s);
    };
    double gnorm = norm(cur.grad);
    rep.initial_grad_norm = gnorm;
    rep.iterations.push_back({0, cur.value, cur.data_value, cur.reg_value, gnorm, 0, 0, 0, 0, 0});

    std::vector<double> diag = reg_diag(p.reg, v);
    const double eps = psd_shift(v, diag);
    std::vector<double> precond(diag.size());
    for (std::int64_t i = 0; i < std::ssize(diag); ++i) precond[i] = diag[i] + eps;

    if (gnorm == 0.0) {
        rep.converged = true;
        rep.stop_reason = "gradient zero";
    }

    for (int it = 1; !rep.converged && it <= cfg.max_gn_iters; ++it) {
        if (gnorm <= cfg.grad_tol * rep.initial_grad_norm) {
            rep.converged = true;
            rep.stop_reason = "gradient tolerance";
            break;
        }

        HessianOperator H{&p, cur.state, &v, eps};
        PcgResult sol = pcg([&](std::span<const double> w) { return H.apply(w); }, cur.grad,
                            precond, cfg.pcg_tol, cfg.max_pcg_iters);

        double gd = 0.0;
        for (std::int64_t i = 0; i < std::ssize(sol.x); ++i) gd += sol.x[i] * cur.grad[i];
        if (!(gd < 0.0)) {  // enforce descent: preconditioned steepest descent
            for (std::int64_t i = 0; i < std::ssize(sol.x); ++i)
                sol.x[i] = -cur.grad[i] / precond[i];
            gd = 0.0;
            for (std::int64_t i = 0; i < std::ssize(sol.x); ++i) gd += sol.x[i] * cur.grad[i];
        }

        double mu = 1.0;
        int trials = 0;
        bool accepted = false;
        VelocityField trial = v;
        ObjectiveEval trial_eval;
        while (trials < cfg.max_line_search) {
            for (std::int64_t i = 0; i < std::ssize(sol.x); ++i)
                trial.dofs[i] = v.dofs[i] + mu * sol.x[i];
            trial_eval = evaluate_objective(p, trial, false);
            ++trials;
            if (trial_eval.value <= cur.value + cfg.armijo_c * mu * gd) {
                accepted = true;
                break;
            }
            mu *= cfg.armijo_factor;
        }
        if (!accepted) {
            rep.line_search_failed = true;
            rep.stop_reason = "line search failure";
            break;
        }

        double step = mu * norm(sol.x);
        double prev_obj = cur.value;
        v = std::move(trial);
        cur = evaluate_objective(p, v, true);
        gnorm = norm(cur.grad);
        rep.iterations.push_back({it, cur.value, cur.data_value, cur.reg_value, gnorm, step, mu,
                                  gd, sol.iterations, trials});

        if (std::abs(prev_obj - cur.value) <= cfg.obj_tol * (1.0 + std::abs(prev_obj))) {
            rep.converged = true;
            rep.stop_reason = "objective stagnation";
        } else if (step <= cfg.step_tol * (1.0 + norm(v.dofs))) {
            rep.converged = true;
            rep.stop_reason = "step tolerance";
        }
    }

    if (rep.stop_reason.empty()) rep.stop_reason = "iteration limit";
    rep.final_obj = cur.value;
    rep.final_data = cur.data_value;
    rep.final_reg = cur.reg_value;
    return rep;
}

namespace detail {

inline double sample_slab_clamped(const GridSpec& g, const double* slab, const double* x) {
    const int n = g.n;
    const int ext = g.extent();
    std::int64_t i0[kMaxDim];
    double frac[kMaxDim];
    for (int a = 0; a < n; ++a) {
        double u = x[a] * g.m - 0.5 + g.pad;
        if (u < 0.0) u = 0.0;
        if (u > ext - 1) u = ext - 1;
        std::int64_t i = static_cast<std::int64_t>(std::floor(u));
        if (i > ext - 2) i = ext - 2;
        i0[a] = i;
        frac[a] = u - i;
    }
    std::int64_t stride[kMaxDim] = {1, 1, 1};
    for (int a = 1; a < n; ++a) stride[a] = stride[a - 1] * ext;
    double acc = 0.0;
    for (int c = 0; c < (1 << n); ++c) {
        double w = 1.0;
        std::int64_t lin = 0;
        for (int a = 0; a < n; ++a) {
            int b = (c >> a) & 1;
            w *= b ? frac[a] : 1.0 - frac[a];
            lin += (i0[a] + b) * stride[a];
        }
        acc += w * slab[lin];
    }
    return acc;
}

}  // namespace detail

// Multilinear upsampling of each time plane and component onto the padded
// lattice of the next finer grid.  Constants prolong to the same constant.
inline VelocityField prolong_velocity(const VelocityField& vc, int m_fine) {
    if (m_fine <= vc.grid.m) throw std::invalid_argument("prolong_velocity: not a refinement");
    VelocityField vf = make_velocity(vc.grid.n, m_fine, vc.time_cells);
    const int n = vf.grid.n;
    const std::int64_t Sf = vf.grid.size();
    const std::int64_t Sc = vc.grid.size();
    std::vector<double> centers = cell_centers(vf.grid);
    for (int j = 0; j <= vf.time_cells; ++j)
        for (int c = 0; c < n; ++c) {
            const double* src = vc.dofs.data() + (static_cast<std::int64_t>(j) * n + c) * Sc;
            double* dst = vf.dofs.data() + (static_cast<std::int64_t>(j) * n + c) * Sf;
            for (std::int64_t s = 0; s < Sf; ++s)
                dst[s] = detail::sample_slab_clamped(vc.grid, src, centers.data() + s * n);
        }
    return vf;
}

struct ReconstructResult {
    ScalarField recon;
    VelocityField v;
    std::vector<ObjectiveReport> reports;  // coarse to fine
};

inline ReconstructResult multilevel_reconstruct(const ScalarField& template_fine,
                                                const Sinogram& data_fine, PdeKind pde,
                                                DistanceKind distance, RegConfig reg,
                                                OptimizerConfig cfg, int k_min, int k_max,
                                                int time_cells = 1, int flow_steps = 5) {
    const int n = template_fine.grid.n;
    if (k_min < 3 || k_min > k_max)
        throw std::invalid_argument("multilevel: need 3 <= k_min <= k_max");
    if (template_fine.grid.m != (1 << k_max))
        throw std::invalid_argument("multilevel: template is not at level k_max");
    if (data_fine.geom.bins != bins_for_level(k_max))
        throw std::invalid_argument("multilevel: sinogram is not at level k_max");

    const int L = k_max - k_min + 1;
    std::vector<ScalarField> templates(L);
    std::vector<Sinogram> sinos(L);
    templates[L - 1] = template_fine;
    sinos[L - 1] = data_fine;
    sinos[L - 1].geom.scale = 1.0;
    for (int l = L - 2; l >= 0; --l) {
        templates[l] = restrict_image(templates[l + 1]);
        sinos[l] = restrict_sinogram(sinos[l + 1]);
        sinos[l].geom.scale = sinos[l + 1].geom.scale * 0.5;
    }

    ReconstructResult out;
    out.v = make_velocity(n, 1 << k_min, time_cells);
    for (int l = 0; l < L; ++l) {
        Problem p;
        p.pde = pde;
        p.distance = distance;
        p.f0 = pde == PdeKind::transport ? bspline_fit(templates[l]) : templates[l];
        p.data = sinos[l];
        p.reg = reg;
        p.flow_steps = flow_steps;
        ObjectiveReport rep = gauss_newton(p, out.v, cfg);
        rep.level = k_min + l;
        out.reports.push_back(std::move(rep));
        if (l + 1 < L) out.v = prolong_velocity(out.v, templates[l + 1].grid.m);
    }

    SolutionMap sm = apply_pde(
        pde, out.v,
        pde == PdeKind::transport ? bspline_fit(template_fine) : template_fine, flow_steps);
    out.recon = ScalarField{sm.image_grid, std::move(sm.image), {}};
    return out;
}

}  // namespace tbir
