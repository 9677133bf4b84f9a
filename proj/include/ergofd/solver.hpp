#ifndef ERGOFD_SOLVER_HPP
#define ERGOFD_SOLVER_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ergofd/scheme.hpp"

// Damped explicit pseudo-time iteration driving the assembled residual to
// zero for Dirichlet problems.

namespace ergofd {

enum class SolveStatus { Converged, NonConvergence, Divergence };

inline std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::NonConvergence: return "non_convergence";
        case SolveStatus::Divergence: return "divergence";
    }
    return "?";
}

struct SolverConfig {
    double tol = 1e-8;            // absolute max-norm on the assembled residual
    long max_iters = 2'000'000;
    double cfl_safety = 0.5;      // in (0, 1]
    double dt_floor = 0.0;        // abort knob; 0 disables
    bool halve_on_increase = true;
    long history_stride = 200;
    // Adaptive sigma is a running max within a round; transient-inflated
    // values are dropped by re-solving with a fresh bound from the converged
    // iterate.  Extra rounds are cheap (warm started) and restore the sharp
    // O(h) dissipation error.
    int sigma_refresh_rounds = 8;

    void validate() const {
        if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be > 0");
        if (!(cfl_safety > 0.0) || !(cfl_safety <= 1.0))
            throw std::invalid_argument("SolverConfig: cfl_safety must lie in (0,1]");
    }
};

struct HistoryEntry {
    long iteration = 0;
    double residual = 0.0;
    double dt = 0.0;
};

struct SolveReport {
    long iterations = 0;
    std::vector<HistoryEntry> residual_history;
    bool converged = false;
    SolveStatus status = SolveStatus::NonConvergence;
    double final_residual = std::numeric_limits<double>::infinity();
    double final_dt = 0.0;
    double wall_time_seconds = 0.0;
    bool lambda_zero = false;      // uniqueness not guaranteed at lambda = 0
    long accepted_steps = 0;
    long halvings = 0;
    long acceptance_increases = 0;  // accepted steps that raised the step norm (should be 0)
    long sigma_resets = 0;          // adaptive sigma growth events (norm baseline changes)
};

namespace detail {

// Residual scales in blow-up runs reach ~1e20; an absolute tolerance below the
// floating-point noise of the assembly is unattainable there.  The norm used
// for convergence and step acceptance therefore discounts each node by the
// noise floor of its own terms; for well-scaled problems the weight is 1 and
// this is the plain absolute max norm.
constexpr double kNoiseFactor = 64.0;

inline double noise_floor(double scale) {
    return kNoiseFactor * std::numeric_limits<double>::epsilon() * scale;
}

inline double weighted_norm(const AssembledResidual& ar, const Grid& g, double tol) {
    double m = 0.0;
    for (int k : g.interior_nodes) {
        const double w = tol / (tol + noise_floor(ar.scale[k]));
        m = std::max(m, std::abs(ar.res[k]) * w);
    }
    return m;
}

// Step-acceptance norm: the dt-weighted residual.  Under the monotone scheme
// the update contracts this norm (row sums of I - dt J stay <= 1), which the
// plain max norm does not satisfy once dt varies per node.
inline double step_norm(const AssembledResidual& ar, const Grid& g,
                        const std::vector<double>& dt) {
    double m = 0.0;
    for (int k : g.interior_nodes) m = std::max(m, dt[k] * std::abs(ar.res[k]));
    return m;
}

// Per-node stable pseudo-time step.
inline void dt_field(const ProblemSpec& prob, const Grid& g, const Field& u,
                     const SolverConfig& cfg, const SchemeConfig& scheme,
                     const SigmaField& sigma, std::vector<double>& dt) {
    dt.assign(g.size(), 0.0);
    const double h = g.h, h2 = h * h;
    const double A = prob.op.upper();
    const double alpha = prob.op.alpha;
    const double lam_coef = prob.lambda * (alpha + 1.0);
    for (int node : g.interior_nodes) {
        const GradientStencil s = gradient_stencils(u, node);
        double chi = 0.0;
        for (int ax = 0; ax < g.dim; ++ax)
            chi = std::max(chi, std::pow(std::abs(s.dc[ax]), alpha));
        if (scheme.stencil == StencilKind::SpectralCentral)
            chi += scheme.artificial_viscosity * h;
        double sig_sum = 0.0;
        for (int ax = 0; ax < g.dim; ++ax)
            sig_sum += scheme.sigma_mode == SigmaMode::Fixed ? scheme.sigma_fixed
                                                             : sigma.at(node, ax);
        const double denom = 2.0 * g.dim * A * chi + 2.0 * h * sig_sum +
                             h2 * lam_coef * std::pow(std::abs(u[node]), alpha) + 1e-300;
        dt[node] = std::min(cfg.cfl_safety * h2 / denom, h);
    }
}

}  // namespace detail

// Global stable step: the minimum of the per-node bounds.
inline double stability_dt(const ProblemSpec& prob, const Grid& g, const Field& u,
                           const SolverConfig& cfg, const SchemeConfig& scheme,
                           const SigmaField* sigma = nullptr) {
    SigmaField zero;
    if (!sigma) {
        zero.init(g);
        sigma = &zero;
    }
    std::vector<double> dt;
    detail::dt_field(prob, g, u, cfg, scheme, *sigma, dt);
    double m = g.h;
    for (int node : g.interior_nodes) m = std::min(m, dt[node]);
    return m;
}

struct SolveOptions {
    const Field* initial = nullptr;    // warm start
    const Field* upper_cap = nullptr;  // envelope clamp (blow-up runs)
};

namespace detail {

// One pseudo-time relaxation round with a nondecreasing sigma field.
inline void solve_round(const ProblemSpec& prob, const Grid& grid, const SolverConfig& cfg,
                        const SchemeConfig& scheme, const SolveOptions& opts, double b_sup,
                        const AssemblyWorkspace& ws, Field& u, SigmaField& sigma,
                        SolveReport& rep) {
    AssembledResidual ar = assemble_residual_scaled(prob, grid, u, scheme, &sigma, &ws);
    double rnorm = weighted_norm(ar, grid, cfg.tol);
    const double r0 = rnorm;

    std::vector<double> dt;
    Field trial(grid);
    double step_scale = 1.0;
    long accepted_since_expand = 0;
    int consecutive_halvings = 0;
    double min_dt_last = 0.0;
    const long it0 = rep.iterations;

    auto record = [&](long it) { rep.residual_history.push_back({it, rnorm, min_dt_last}); };
    record(it0);

    rep.status = SolveStatus::NonConvergence;
    rep.converged = false;
    long it = it0;
    for (; it - it0 < cfg.max_iters; ++it) {
        if (rnorm <= cfg.tol) {
            rep.status = SolveStatus::Converged;
            rep.converged = true;
            break;
        }
        if (rnorm > 1e6 * std::max(r0, cfg.tol)) {
            rep.status = SolveStatus::Divergence;
            break;
        }
        dt_field(prob, grid, u, cfg, scheme, sigma, dt);
        min_dt_last = grid.h;
        for (int node : grid.interior_nodes)
            min_dt_last = std::min(min_dt_last, step_scale * dt[node]);
        if (cfg.dt_floor > 0.0 && min_dt_last < cfg.dt_floor) {
            rep.status = SolveStatus::Divergence;
            break;
        }
        const double lnorm = step_norm(ar, grid, dt);

        trial.v = u.v;
        for (int node : grid.interior_nodes) {
            double value = u[node] - step_scale * dt[node] * ar.res[node];
            if (opts.upper_cap) value = std::min(value, (*opts.upper_cap)[node]);
            trial[node] = value;
        }
        AssembledResidual ar_t = assemble_residual_scaled(prob, grid, trial, scheme, &sigma, &ws);
        const double lnorm_t = step_norm(ar_t, grid, dt);

        if (!cfg.halve_on_increase || lnorm_t <= lnorm) {
            if (lnorm_t > lnorm) ++rep.acceptance_increases;
            u.v.swap(trial.v);
            ar = std::move(ar_t);
            rnorm = weighted_norm(ar, grid, cfg.tol);
            ++rep.accepted_steps;
            consecutive_halvings = 0;
            if (++accepted_since_expand >= 100) {
                step_scale = std::min(2.0, step_scale * 1.1);
                accepted_since_expand = 0;
            }
            if (scheme.sigma_mode == SigmaMode::Adaptive &&
                update_sigma(sigma, prob, u, b_sup)) {
                // sigma enters the residual; refresh the reference norm.
                ar = assemble_residual_scaled(prob, grid, u, scheme, &sigma, &ws);
                rnorm = weighted_norm(ar, grid, cfg.tol);
                ++rep.sigma_resets;
            }
        } else {
            step_scale *= 0.5;
            ++rep.halvings;
            if (++consecutive_halvings > 30) {
                rep.status = SolveStatus::Divergence;
                break;
            }
        }
        if ((it + 1 - it0) % cfg.history_stride == 0) record(it + 1);
    }
    rep.iterations = it;
    rep.final_residual = rnorm;
    rep.final_dt = min_dt_last;
    record(it);
}

}  // namespace detail

inline std::pair<Field, SolveReport> solve_dirichlet(const ProblemSpec& prob, const Grid& grid,
                                                     const SolverConfig& cfg,
                                                     const SchemeConfig& scheme,
                                                     const SolveOptions& opts = {}) {
    prob.validate();
    cfg.validate();
    scheme.validate(prob.op, grid.dim);
    const auto t_start = std::chrono::steady_clock::now();

    Field u = opts.initial ? *opts.initial : Field(grid, 0.0);
    for (int k = 0; k < grid.size(); ++k)
        if (grid.is_boundary(k)) u[k] = prob.boundary.g(grid.coord(k));
    if (opts.upper_cap)
        for (int k : grid.interior_nodes) u[k] = std::min(u[k], (*opts.upper_cap)[k]);

    const double b_sup = prob.b.max_abs_on(grid);
    SigmaField sigma;
    sigma.init(grid);
    if (scheme.sigma_mode == SigmaMode::Adaptive) update_sigma(sigma, prob, u, b_sup);

    AssemblyWorkspace ws;
    ws.init(prob, grid);

    SolveReport rep;
    rep.lambda_zero = prob.lambda == 0.0;

    const int rounds = scheme.sigma_mode == SigmaMode::Adaptive
                           ? std::max(1, cfg.sigma_refresh_rounds)
                           : 1;
    for (int round = 0; round < rounds; ++round) {
        if (round > 0) {
            // Drop transient-inflated dissipation: restart from the converged
            // iterate with a freshly computed bound.
            SigmaField fresh;
            fresh.init(grid);
            update_sigma(fresh, prob, u, b_sup);
            bool shrank = false;
            for (size_t i = 0; i < sigma.v.size(); ++i)
                if (fresh.v[i] < sigma.v[i] * (1.0 - 1e-9) - 1e-300) shrank = true;
            if (!shrank) break;
            sigma = std::move(fresh);
        }
        detail::solve_round(prob, grid, cfg, scheme, opts, b_sup, ws, u, sigma, rep);
        if (!rep.converged) break;
    }

    rep.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(u), std::move(rep)};
}

inline void write_history_csv(const SolveReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_history_csv: cannot open " + path);
    out << "iteration,residual,dt\n";
    for (const auto& e : rep.residual_history)
        out << e.iteration << ',' << detail::fmt17(e.residual) << ',' << detail::fmt17(e.dt)
            << '\n';
}

}  // namespace ergofd

#endif
