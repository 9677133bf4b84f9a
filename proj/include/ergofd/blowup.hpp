#ifndef ERGOFD_BLOWUP_HPP
#define ERGOFD_BLOWUP_HPP

#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ergofd/solver.hpp"

// Infinite boundary value problems (u = +inf on the boundary) via monotone
// truncation: solve with boundary value R, escalate R geometrically, stop when
// the interior no longer moves.  Also the two-sided envelope checks.

namespace ergofd {

struct BlowupSolveConfig {
    double r0 = 0.0;           // 0: use the default scale
    double r_growth = 2.0;
    double band_delta = 0.0;   // 0: default 5h
    double tol_R = 1e-4;
    int max_doublings = 20;

    void validate(double h) const {
        if (!(r_growth > 1.0)) throw std::invalid_argument("BlowupSolveConfig: r_growth must be > 1");
        if (band_delta != 0.0 && band_delta < 2.0 * h)
            throw std::invalid_argument("BlowupSolveConfig: band_delta must be >= 2h");
        if (!(tol_R > 0.0)) throw std::invalid_argument("BlowupSolveConfig: tol_R must be > 0");
    }
};

enum class BlowupStatus { Converged, InnerSolveFailure, MonotonicityViolation, RLimit };

inline std::string to_string(BlowupStatus s) {
    switch (s) {
        case BlowupStatus::Converged: return "converged";
        case BlowupStatus::InnerSolveFailure: return "inner_solve_failure";
        case BlowupStatus::MonotonicityViolation: return "monotonicity_violation";
        case BlowupStatus::RLimit: return "r_limit";
    }
    return "?";
}

struct BlowupReport {
    BlowupStatus status = BlowupStatus::RLimit;
    double r_final = 0.0;
    int doublings = 0;
    std::vector<double> interior_delta_history;  // per escalation step
    long total_iterations = 0;
    double wall_time_seconds = 0.0;
    int clamped_count = 0;                // interior nodes pinned by the envelope cap
    std::vector<char> clamped;            // per-node flag
    SolveReport last_inner;

    bool converged() const { return status == BlowupStatus::Converged; }
};

namespace detail {

// Interior value cap: a generous supersolution envelope shifted by R.  It only
// exists to stop transient overshoot; at convergence no node should sit on it.
inline Field envelope_cap(const Grid& grid, const BlowupLaw& law, double lambda, double f_sup,
                          double R, double alpha) {
    Field cap(grid, std::numeric_limits<double>::infinity());
    const double D_env = power(4.0 * (f_sup + 1.0) / lambda, 1.0 / (1.0 + alpha));
    for (int k : grid.interior_nodes)
        cap[k] = law.upper_profile(grid.dist[k]) + D_env + R;
    return cap;
}

}  // namespace detail

struct BlowupWarmStart {
    const Field* field = nullptr;
    double r_start = 0.0;  // last converged boundary value of a previous run
};

inline std::pair<Field, BlowupReport> solve_blowup(const ProblemSpec& prob, const Grid& grid,
                                                   const SolverConfig& solver_cfg,
                                                   const SchemeConfig& scheme,
                                                   const BlowupSolveConfig& cfg,
                                                   const BlowupWarmStart& warm = {}) {
    if (prob.boundary.kind != BoundaryKind::Blowup)
        throw std::invalid_argument("solve_blowup: boundary must be Blowup");
    if (!(prob.lambda > 0.0))
        throw std::invalid_argument("solve_blowup: lambda must be > 0");
    cfg.validate(grid.h);

    const auto t_start = std::chrono::steady_clock::now();
    const double alpha = prob.op.alpha;
    const double f_sup = prob.f.max_abs_on(grid);
    const BlowupLaw law = make_blowup_law(prob.op, prob.beta);
    const double band = cfg.band_delta > 0.0 ? cfg.band_delta : 5.0 * grid.h;

    double R = cfg.r0;
    if (R <= 0.0) {
        const double lam_scale = detail::power(1.0 / prob.lambda, 1.0 / (1.0 + alpha));
        R = std::max(10.0 * detail::power(f_sup / prob.lambda, 1.0 / (1.0 + alpha)),
                     10.0 * lam_scale);
    }
    R = std::max(R, warm.r_start);

    BlowupReport rep;
    Field u(grid, 0.0);

    auto run_inner = [&](double Rk, const Field* init) -> std::pair<Field, SolveReport> {
        ProblemSpec p = prob;
        p.boundary = BoundarySpec::dirichlet(Rk);
        Field cap = detail::envelope_cap(grid, law, prob.lambda, f_sup, Rk, alpha);
        SolveOptions opts;
        opts.initial = init;
        opts.upper_cap = &cap;
        auto [field, inner] = solve_dirichlet(p, grid, solver_cfg, scheme, opts);
        rep.total_iterations += inner.iterations;
        rep.last_inner = inner;
        return {std::move(field), std::move(inner)};
    };

    auto [u0, rep0] = run_inner(R, warm.field);
    u = std::move(u0);
    if (!rep0.converged) {
        rep.status = BlowupStatus::InnerSolveFailure;
        rep.r_final = R;
        return {std::move(u), std::move(rep)};
    }

    rep.status = BlowupStatus::RLimit;
    for (int k = 0; k < cfg.max_doublings; ++k) {
        const double R_next = R * cfg.r_growth;
        auto [u_next, inner] = run_inner(R_next, &u);
        if (!inner.converged) {
            rep.status = BlowupStatus::InnerSolveFailure;
            u = std::move(u_next);
            R = R_next;
            break;
        }
        double delta = 0.0;
        double worst_drop = 0.0;
        for (int node : grid.interior_nodes) {
            const double diff = u_next[node] - u[node];
            worst_drop = std::min(worst_drop, diff);
            if (grid.dist[node] >= band) delta = std::max(delta, std::abs(diff));
        }
        rep.interior_delta_history.push_back(delta);
        u = std::move(u_next);
        R = R_next;
        rep.doublings = k + 1;
        if (worst_drop < -10.0 * solver_cfg.tol) {
            rep.status = BlowupStatus::MonotonicityViolation;
            break;
        }
        if (delta < cfg.tol_R) {
            rep.status = BlowupStatus::Converged;
            break;
        }
    }
    rep.r_final = R;

    // Nodes resting on the envelope cap are R-dependent junk; flag them.
    Field cap = detail::envelope_cap(grid, law, prob.lambda, f_sup, R, alpha);
    rep.clamped.assign(grid.size(), 0);
    for (int node : grid.interior_nodes)
        if (u[node] >= cap[node] * (1.0 - 1e-12)) {
            rep.clamped[node] = 1;
            ++rep.clamped_count;
        }
    rep.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(u), std::move(rep)};
}

// Two-sided envelope check of the truncation limit on a distance band.
struct BoundsCheck {
    double lower_margin = 0.0;
    double upper_margin = 0.0;
    bool pass = false;
    int nodes_checked = 0;
};

inline BoundsCheck verify_bounds(const Field& U, const ProblemSpec& prob, const BlowupLaw& law,
                                 double d_min, double d_max, double slack = 2e-4,
                                 const std::vector<char>* clamped = nullptr) {
    if (!(d_min > 0.0) || !(d_max > d_min)) throw std::invalid_argument("verify_bounds: bad band");
    const Grid& g = *U.grid;
    double d_interior_max = 0.0;
    for (int node : g.interior_nodes) d_interior_max = std::max(d_interior_max, g.dist[node]);
    if (d_min > d_interior_max)
        throw std::invalid_argument("verify_bounds: band outside grid");
    const double D = law.discount_shift * detail::power(prob.lambda, -1.0 / (1.0 + prob.op.alpha));
    BoundsCheck out;
    out.lower_margin = std::numeric_limits<double>::infinity();
    out.upper_margin = std::numeric_limits<double>::infinity();
    for (int node : g.interior_nodes) {
        const double d = g.dist[node];
        if (d < d_min || d > d_max) continue;
        if (clamped && (*clamped)[node]) continue;
        const double lo = law.lower_profile(d) - D;
        const double hi = law.upper_profile(d) + D;
        out.lower_margin = std::min(out.lower_margin, U[node] - lo);
        out.upper_margin = std::min(out.upper_margin, hi - U[node]);
        ++out.nodes_checked;
    }
    if (out.nodes_checked == 0) throw std::invalid_argument("verify_bounds: empty band");
    out.pass = out.lower_margin >= -slack && out.upper_margin >= -slack;
    return out;
}

// Refined sandwich with the direction-dependent boundary coefficient C(x).
inline BoundsCheck verify_bounds_refined(const Field& U, const ProblemSpec& prob, double nu,
                                         double gamma1, double D, double d_min, double d_max,
                                         double slack = 2e-4,
                                         const std::vector<char>* clamped = nullptr) {
    const Grid& g = *U.grid;
    const double gamma = gamma_exponent(prob.op.alpha, prob.beta);
    if (gamma > 0.0 && !(gamma1 < gamma))
        throw std::invalid_argument("verify_bounds_refined: need gamma1 < gamma");
    if (!(gamma1 < std::min(1.0, prob.op.alpha == 0.0 ? 1.0 : prob.op.alpha)))
        throw std::invalid_argument("verify_bounds_refined: need gamma1 < min(1, alpha)");
    BoundsCheck out;
    out.lower_margin = std::numeric_limits<double>::infinity();
    out.upper_margin = std::numeric_limits<double>::infinity();
    for (int node : g.interior_nodes) {
        const double d = g.dist[node];
        if (d < d_min || d > d_max) continue;
        if (clamped && (*clamped)[node]) continue;
        const Vec gd = g.domain.grad_distance(g.coord(node));
        const double C = boundary_constant(prob.op, prob.beta, gd);
        const double corr = nu * detail::power(d, gamma1);
        double lo, hi;
        if (gamma > 0.0) {
            lo = (C - corr) * detail::power(d, -gamma) - D;
            hi = (C + corr) * detail::power(d, -gamma) + D;
        } else {
            const double L = std::abs(std::log(d));
            lo = L * (C - corr) - D;
            hi = L * (C + corr) + D;
        }
        out.lower_margin = std::min(out.lower_margin, U[node] - lo);
        out.upper_margin = std::min(out.upper_margin, hi - U[node]);
        ++out.nodes_checked;
    }
    if (out.nodes_checked == 0) throw std::invalid_argument("verify_bounds_refined: empty band");
    out.pass = out.lower_margin >= -slack && out.upper_margin >= -slack;
    return out;
}

// Smallest D1 that closes the basic sandwich on the band.
inline double calibrate_d1(const Field& U, const ProblemSpec& prob, const BlowupLaw& law,
                           double d_min, double d_max,
                           const std::vector<char>* clamped = nullptr) {
    const Grid& g = *U.grid;
    double need = 0.0;
    int n = 0;
    for (int node : g.interior_nodes) {
        const double d = g.dist[node];
        if (d < d_min || d > d_max) continue;
        if (clamped && (*clamped)[node]) continue;
        need = std::max(need, law.lower_profile(d) - U[node]);
        need = std::max(need, U[node] - law.upper_profile(d));
        ++n;
    }
    if (n == 0) throw std::invalid_argument("calibrate_d1: empty band");
    return need * detail::power(prob.lambda, 1.0 / (1.0 + prob.op.alpha));
}

// CSV of the profile against its envelopes, sorted by distance.
inline void write_profile_csv(const Field& U, const ProblemSpec& prob, const BlowupLaw& law,
                              const std::string& path) {
    const Grid& g = *U.grid;
    const double D = law.discount_shift * detail::power(prob.lambda, -1.0 / (1.0 + prob.op.alpha));
    std::multimap<double, int> by_d;
    for (int node : g.interior_nodes) by_d.emplace(g.dist[node], node);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_profile_csv: cannot open " + path);
    out << "d,U,envelope_lower,envelope_upper\n";
    for (const auto& [d, node] : by_d)
        out << detail::fmt17(d) << ',' << detail::fmt17(U[node]) << ','
            << detail::fmt17(law.lower_profile(d) - D) << ','
            << detail::fmt17(law.upper_profile(d) + D) << '\n';
}

}  // namespace ergofd

#endif
