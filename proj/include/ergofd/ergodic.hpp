#ifndef ERGOFD_ERGODIC_HPP
#define ERGOFD_ERGODIC_HPP

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergofd/blowup.hpp"

// Vanishing-discount drivers for the ergodic pair, blow-up profile fitting,
// the mu* bisection, and an independent 1D shooting/quadrature oracle.

namespace ergofd {

namespace detail {

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double err = left + right - whole;
    if (depth <= 0 || std::abs(err) < 15.0 * tol) return left + right + err / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

// integral over (0, inf) of g^alpha / (g^beta + m) dg, by direct adaptive
// quadrature: finite part on [0, G] plus a tail substitution g = G / s whose
// endpoint power is integrated analytically.
inline double blowup_layer_integral(double alpha, double beta, double m, double tol = 1e-12) {
    const double G = std::max(1.0, 2.0 * std::pow(m, 1.0 / beta));
    const double head = adaptive_simpson(
        [&](double g) { return power(g, alpha) / (power(g, beta) + m); }, 0.0, G, tol);
    // tail: G^(alpha+1) * s^(beta-alpha-2) / (G^beta + m s^beta) on (0, 1]
    const double q = beta - alpha - 2.0;  // in (-1, 0]
    const double Ga = power(G, alpha + 1.0), Gb = power(G, beta);
    const double smooth0 = Ga / Gb;  // integrand / s^q at s = 0
    const double tail_sing = smooth0 / (q + 1.0);
    const double tail_rest = adaptive_simpson(
        [&](double s) {
            const double sq = s > 0.0 ? power(s, q) : 0.0;
            const double hsm = Ga / (Gb + m * power(s, beta));
            return sq * (hsm - smooth0);
        },
        0.0, 1.0, tol);
    return head + tail_sing + tail_rest;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_abs_residual = 0.0;
};

inline LineFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    const size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("linear_fit: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    LineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    for (size_t i = 0; i < n; ++i)
        f.max_abs_residual =
            std::max(f.max_abs_residual, std::abs(ys[i] - f.slope * xs[i] - f.intercept));
    return f;
}

}  // namespace detail

// Ergodic constant for the 1D constant-coefficient blow-up problem on an
// interval of length L: c solves
//   F_coeff * integral_0^inf g^alpha / (g^beta - f0 - c) dg = L / 2 ,
// through the closed form |f0 + c| = (2 F_coeff I / L)^(beta/(beta-alpha-1)),
// I = pi / (beta sin(pi (alpha+1)/beta)), cross-checked against direct
// quadrature plus root finding (1e-6 relative agreement enforced).
inline double shooting_oracle_1d(double alpha, double beta, double F_coeff, double f0,
                                 double L) {
    if (!(beta > alpha + 1.0) || !(beta <= alpha + 2.0))
        throw std::invalid_argument("shooting_oracle_1d: beta must lie in (alpha+1, alpha+2]");
    if (!(F_coeff > 0.0) || !(L > 0.0))
        throw std::invalid_argument("shooting_oracle_1d: need F_coeff > 0 and L > 0");

    const double I = M_PI / (beta * std::sin(M_PI * (alpha + 1.0) / beta));
    const double m_closed = std::pow(2.0 * F_coeff * I / L, beta / (beta - alpha - 1.0));

    // Independent route: bisection on m of F * integral(m) - L/2, in log space.
    auto phi = [&](double m) {
        return F_coeff * detail::blowup_layer_integral(alpha, beta, m) - 0.5 * L;
    };
    double tlo = std::log(m_closed) - 2.0, thi = std::log(m_closed) + 2.0;
    while (phi(std::exp(tlo)) < 0.0) tlo -= 2.0;  // integral decreases in m
    while (phi(std::exp(thi)) > 0.0) thi += 2.0;
    for (int it = 0; it < 80; ++it) {
        const double tm = 0.5 * (tlo + thi);
        (phi(std::exp(tm)) > 0.0 ? tlo : thi) = tm;
    }
    const double m_quad = std::exp(0.5 * (tlo + thi));
    if (std::abs(m_quad - m_closed) > 1e-6 * m_closed)
        throw std::logic_error("shooting_oracle_1d: quadrature and closed form disagree");
    return -m_closed - f0;
}

inline std::vector<double> lambda_schedule(double lambda0, int steps) {
    std::vector<double> s;
    for (int k = 0; k < steps; ++k) s.push_back(lambda0 * std::pow(2.0, -k));
    return s;
}

enum class ErgodicRoute { Blowup, DirichletAlternative };
enum class CaseDetected { NotApplicable, BoundedCase, ErgodicCase, Ambiguous };

inline std::string to_string(CaseDetected c) {
    switch (c) {
        case CaseDetected::NotApplicable: return "n/a";
        case CaseDetected::BoundedCase: return "bounded";
        case CaseDetected::ErgodicCase: return "ergodic";
        case CaseDetected::Ambiguous: return "ambiguous";
    }
    return "?";
}

struct DiscountStep {
    double lambda = 0.0;
    double c = 0.0;          // -lambda |u(x*)|^alpha u(x*)
    double max_abs_u = 0.0;
    double min_u = 0.0;
    double slope = 0.0;      // running log|min u| vs log lambda slope
    double c1_ratio = 0.0;   // lambda max|u|^(1+alpha) / max|f|
};

struct ProfileFit {
    double gamma_fit = 0.0;
    double C_fit = 0.0;
    double grad_exponent = 0.0;
    bool used_log = false;
    int nodes = 0;
};

struct ErgodicResult {
    ErgodicRoute route = ErgodicRoute::Blowup;
    CaseDetected case_detected = CaseDetected::NotApplicable;
    std::vector<DiscountStep> history;
    double c_omega = std::numeric_limits<double>::quiet_NaN();
    bool fit_ok = false;
    bool fit_degenerate = false;
    double fit_q = 0.0;
    ProfileFit fit;
    Field v;            // normalized ergodic candidate (min ~ 0)
    Field limit_field;  // BoundedCase limit of the Dirichlet route
    double probe_rel_dev = 0.0;
    double stabilization = std::numeric_limits<double>::infinity();
    double slope = 0.0;
    bool alpha_warning = false;  // alpha < 2: outside the guaranteed regime
    long total_iterations = 0;
    double wall_time_seconds = 0.0;
    std::string message;
    bool ok = false;
};

namespace detail {

// c_k = c + a lambda^q on the last three points; q clamped to [0.2, 2] with a
// least-squares refit and a last-value fallback when the model misfits.
struct ExtrapolationResult {
    double c = 0.0;
    double a = 0.0;
    double q = 0.0;
    bool fit_ok = false;
    bool degenerate = false;
};

inline ExtrapolationResult extrapolate_c(const std::vector<double>& lambdas,
                                         const std::vector<double>& cs) {
    ExtrapolationResult out;
    const size_t n = cs.size();
    if (n == 0) return out;
    out.c = cs.back();
    if (n < 3) return out;
    const double l1 = lambdas[n - 3], l2 = lambdas[n - 2], l3 = lambdas[n - 1];
    const double c1 = cs[n - 3], c2 = cs[n - 2], c3 = cs[n - 1];
    const double d12 = c1 - c2, d23 = c2 - c3;
    const double span = std::max({std::abs(c1), std::abs(c2), std::abs(c3), 1e-300});
    if (std::abs(d23) <= 1e-14 * span) {  // already flat
        out.c = c3;
        out.fit_ok = true;
        out.q = 1.0;
        return out;
    }
    const double ratio = d12 / d23;
    if (ratio <= 0.0) {
        out.degenerate = true;  // non monotone tail
        return out;
    }
    // q solves (l1^q - l2^q)/(l2^q - l3^q) = ratio; bisection on [0.2, 2].
    auto gap = [&](double q) {
        return (std::pow(l1, q) - std::pow(l2, q)) / (std::pow(l2, q) - std::pow(l3, q)) -
               ratio;
    };
    double qlo = 0.2, qhi = 2.0;
    const double glo = gap(qlo), ghi = gap(qhi);
    double q;
    if (glo == 0.0) {
        q = qlo;
    } else if (ghi == 0.0) {
        q = qhi;
    } else if (glo * ghi > 0.0) {
        q = std::abs(glo) < std::abs(ghi) ? qlo : qhi;  // clamp at the window edge
    } else {
        for (int it = 0; it < 80; ++it) {
            const double qm = 0.5 * (qlo + qhi);
            (gap(qm) * glo > 0.0 ? qlo : qhi) = qm;
        }
        q = 0.5 * (qlo + qhi);
    }
    // least squares in (c, a) at fixed q over the last three points
    std::vector<double> xs = {std::pow(l1, q), std::pow(l2, q), std::pow(l3, q)};
    std::vector<double> ys = {c1, c2, c3};
    const LineFit lf = linear_fit(xs, ys);
    out.q = q;
    out.a = lf.slope;
    out.c = lf.intercept;
    const double spread = std::max(std::abs(c1 - c3), 1e-12 * span);
    if (lf.max_abs_residual > 0.1 * spread) {
        out.c = c3;  // documented fallback
        out.fit_ok = false;
    } else {
        out.fit_ok = true;
    }
    return out;
}

inline double running_slope(const std::vector<double>& lambdas,
                            const std::vector<double>& minus_min_u) {
    // log|min u| vs log lambda over the last up-to-4 points
    std::vector<double> xs, ys;
    const size_t n = lambdas.size();
    for (size_t i = n >= 4 ? n - 4 : 0; i < n; ++i) {
        if (minus_min_u[i] <= 0.0) return 0.0;
        xs.push_back(std::log(lambdas[i]));
        ys.push_back(std::log(minus_min_u[i]));
    }
    if (xs.size() < 2) return 0.0;
    return linear_fit(xs, ys).slope;
}

}  // namespace detail

// Power or log fit of a normalized blow-up profile on a distance band.  When
// the caller knows the expected law (from beta = alpha + 2 or not) it should
// pass expect_log and the law exponent: the raw log-log slope is a poor
// log-case discriminator on profiles with O(1) offsets.
inline ProfileFit fit_blowup_profile(const Field& v, double d_lo, double d_hi,
                                     std::optional<bool> expect_log = {},
                                     std::optional<double> law_gamma = {},
                                     const std::vector<char>* excluded = nullptr) {
    const Grid& g = *v.grid;
    std::vector<int> nodes;
    for (int node : g.interior_nodes) {
        const double d = g.dist[node];
        if (d < d_lo || d > d_hi) continue;
        if (excluded && (*excluded)[node]) continue;
        if (v[node] <= 0.0) continue;
        nodes.push_back(node);
    }
    if (nodes.size() < 6) throw std::invalid_argument("fit_blowup_profile: band has < 6 nodes");

    std::vector<double> logd, logv;
    for (int node : nodes) {
        logd.push_back(std::log(g.dist[node]));
        logv.push_back(std::log(v[node]));
    }
    ProfileFit fit;
    fit.nodes = (int)nodes.size();
    fit.gamma_fit = -detail::linear_fit(logd, logv).slope;
    fit.used_log = expect_log.value_or(std::abs(fit.gamma_fit) < 0.15);

    std::vector<double> basis, vals;
    for (int node : nodes) {
        const double d = g.dist[node];
        basis.push_back(fit.used_log ? std::abs(std::log(d))
                                     : detail::power(d, -(law_gamma ? *law_gamma : fit.gamma_fit)));
        vals.push_back(v[node]);
    }
    fit.C_fit = detail::linear_fit(basis, vals).slope;

    // gradient growth |grad v| ~ d^-(gamma+1)
    std::vector<double> lg, lgrad;
    for (int node : nodes) {
        double g2 = 0.0;
        for (int ax = 0; ax < g.dim; ++ax) {
            const int st = g.stride(ax);
            const double dc = 0.5 * (v[node + st] - v[node - st]) / g.h;
            g2 += dc * dc;
        }
        if (g2 <= 0.0) continue;
        lg.push_back(std::log(g.dist[node]));
        lgrad.push_back(0.5 * std::log(g2));
    }
    if (lg.size() >= 2) fit.grad_exponent = detail::linear_fit(lg, lgrad).slope;
    return fit;
}

struct ErgodicOptions {
    double fit_band_lo = 0.02;
    double fit_band_hi = 0.1;
    double probe_offset = 0.15;   // relative to the domain extent
    double stab_tol = 0.01;       // BoundedCase window
    double slope_window = 0.15;   // ErgodicCase window around -1/(1+alpha)
    int max_extensions = 0;       // extra lambda halvings on Ambiguous
};

// Blow-up route: truncation-limit solves along the discount schedule,
// c_k read at the domain center, extrapolated to lambda = 0.
inline ErgodicResult vanishing_discount_blowup(const ProblemSpec& base, const Grid& grid,
                                               const std::vector<double>& schedule,
                                               const SolverConfig& solver_cfg,
                                               const SchemeConfig& scheme,
                                               const BlowupSolveConfig& blowup_cfg,
                                               const ErgodicOptions& opts = {}) {
    if (schedule.empty()) throw std::invalid_argument("vanishing_discount_blowup: empty schedule");
    for (size_t i = 1; i < schedule.size(); ++i)
        if (!(schedule[i] < schedule[i - 1]))
            throw std::invalid_argument("vanishing_discount_blowup: schedule must decrease");
    const auto t_start = std::chrono::steady_clock::now();

    ErgodicResult res;
    res.route = ErgodicRoute::Blowup;
    res.alpha_warning = base.op.alpha < 2.0;
    const double alpha = base.op.alpha;
    const BlowupLaw law = make_blowup_law(base.op, base.beta);

    const Vec center = grid.domain.center();
    const int x0 = grid.nearest(center);
    const double extent = grid.domain.kind == DomainKind::Disk
                              ? 2.0 * grid.domain.radius
                              : grid.domain.x1 - grid.domain.x0;
    Vec pl = center, pr = center;
    pl[0] -= opts.probe_offset * extent;
    pr[0] += opts.probe_offset * extent;
    const int probe_a = grid.nearest(pl), probe_b = grid.nearest(pr);

    Field u;
    double r_prev = 0.0;
    std::vector<double> lambdas, cs, minus_min;
    std::vector<char> clamped;
    const double f_sup = base.f.max_abs_on(grid);

    for (double lam : schedule) {
        ProblemSpec prob = base;
        prob.lambda = lam;
        prob.boundary = BoundarySpec::blowup();
        BlowupWarmStart warm;
        if (!lambdas.empty()) {
            warm.field = &u;
            warm.r_start = r_prev;
        }
        auto [U, rep] = solve_blowup(prob, grid, solver_cfg, scheme, blowup_cfg, warm);
        res.total_iterations += rep.total_iterations;
        if (!rep.converged()) {
            res.message = "blow-up solve failed at lambda=" + detail::fmt17(lam) + ": " +
                          to_string(rep.status);
            res.ok = false;
            return res;
        }
        u = std::move(U);
        r_prev = rep.r_final;
        clamped = rep.clamped;

        auto c_at = [&](int node) {
            return -lam * detail::power(std::abs(u[node]), alpha) * u[node];
        };
        const double ck = c_at(x0);
        const double dev = std::max(std::abs(c_at(probe_a) - ck), std::abs(c_at(probe_b) - ck));
        res.probe_rel_dev = std::max(res.probe_rel_dev,
                                     dev / std::max(std::abs(ck), 1e-300));

        lambdas.push_back(lam);
        cs.push_back(ck);
        minus_min.push_back(-u.min_interior());
        DiscountStep step;
        step.lambda = lam;
        step.c = ck;
        step.max_abs_u = u.max_abs();
        step.min_u = u.min_interior();
        step.slope = detail::running_slope(lambdas, minus_min);
        step.c1_ratio = lam * detail::power(step.max_abs_u, 1.0 + alpha) / std::max(f_sup, 1e-300);
        res.history.push_back(step);
    }

    const auto ext = detail::extrapolate_c(lambdas, cs);
    res.c_omega = ext.c;
    res.fit_ok = ext.fit_ok;
    res.fit_q = ext.q;
    res.fit_degenerate = ext.degenerate;

    res.v = u;
    const double vmin = u.min_interior();
    for (int k : grid.interior_nodes) res.v[k] = u[k] - vmin;
    for (int k = 0; k < grid.size(); ++k)
        if (grid.is_boundary(k)) res.v[k] = u[k] - vmin;

    res.fit = fit_blowup_profile(res.v, opts.fit_band_lo, opts.fit_band_hi, law.is_log,
                                 law.gamma, clamped.empty() ? nullptr : &clamped);
    res.ok = true;
    res.case_detected = CaseDetected::NotApplicable;
    res.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

// Dirichlet route: g = 0 solves along the schedule, then the alternative:
// either max|u_lambda| stabilizes (bounded case) or |min u| grows like
// lambda^(-1/(1+alpha)) (ergodic case).
inline ErgodicResult dirichlet_alternative(const ProblemSpec& base, const Grid& grid,
                                           std::vector<double> schedule,
                                           const SolverConfig& solver_cfg,
                                           const SchemeConfig& scheme,
                                           const ErgodicOptions& opts = {}) {
    if (schedule.empty()) throw std::invalid_argument("dirichlet_alternative: empty schedule");
    for (size_t i = 1; i < schedule.size(); ++i)
        if (!(schedule[i] < schedule[i - 1]))
            throw std::invalid_argument("dirichlet_alternative: schedule must decrease");
    const auto t_start = std::chrono::steady_clock::now();

    ErgodicResult res;
    res.route = ErgodicRoute::DirichletAlternative;
    res.alpha_warning = base.op.alpha < 2.0;
    const double alpha = base.op.alpha;
    const double target_slope = -1.0 / (1.0 + alpha);
    const double f_sup = base.f.max_abs_on(grid);

    Field u(grid, 0.0);
    std::vector<double> lambdas, cs, minus_min, max_abs;

    auto solve_one = [&](double lam) -> bool {
        ProblemSpec prob = base;
        prob.lambda = lam;
        prob.boundary = BoundarySpec::dirichlet(0.0);
        SolveOptions so;
        so.initial = lambdas.empty() ? nullptr : &u;
        auto [field, rep] = solve_dirichlet(prob, grid, solver_cfg, scheme, so);
        res.total_iterations += rep.iterations;
        if (!rep.converged) {
            res.message = "dirichlet solve failed at lambda=" + detail::fmt17(lam) + ": " +
                          to_string(rep.status);
            return false;
        }
        u = std::move(field);
        const int xmin = u.argmin_interior();
        const double ck = -lam * detail::power(std::abs(u[xmin]), alpha) * u[xmin];
        lambdas.push_back(lam);
        cs.push_back(ck);
        minus_min.push_back(-u.min_interior());
        max_abs.push_back(u.max_abs());
        DiscountStep step;
        step.lambda = lam;
        step.c = ck;
        step.max_abs_u = max_abs.back();
        step.min_u = u.min_interior();
        step.slope = detail::running_slope(lambdas, minus_min);
        step.c1_ratio = lam * detail::power(step.max_abs_u, 1.0 + alpha) / std::max(f_sup, 1e-300);
        res.history.push_back(step);
        return true;
    };

    for (double lam : schedule)
        if (!solve_one(lam)) {
            res.ok = false;
            return res;
        }

    int extensions = 0;
    while (true) {
        const size_t n = max_abs.size();
        res.stabilization = n >= 2 ? std::abs(max_abs[n - 1] - max_abs[n - 2]) /
                                         std::max(max_abs[n - 1], 1e-300)
                                   : std::numeric_limits<double>::infinity();
        res.slope = detail::running_slope(lambdas, minus_min);

        if (res.stabilization < opts.stab_tol) {
            res.case_detected = CaseDetected::BoundedCase;
            break;
        }
        if (std::abs(res.slope - target_slope) <= opts.slope_window) {
            res.case_detected = CaseDetected::ErgodicCase;
            break;
        }
        if (extensions >= opts.max_extensions) {
            res.case_detected = CaseDetected::Ambiguous;
            break;
        }
        ++extensions;
        if (!solve_one(lambdas.back() * 0.5)) {
            res.ok = false;
            return res;
        }
    }

    if (res.case_detected == CaseDetected::BoundedCase) {
        res.limit_field = u;
        res.v = u;
    } else if (res.case_detected == CaseDetected::ErgodicCase) {
        const auto ext = detail::extrapolate_c(lambdas, cs);
        res.c_omega = ext.c;
        res.fit_ok = ext.fit_ok;
        res.fit_q = ext.q;
        res.fit_degenerate = ext.degenerate;
        res.v = u;
        const double shift = u.max_abs();
        for (int k = 0; k < grid.size(); ++k)
            if (!grid.is_exterior(k)) res.v[k] = u[k] + shift;
    }
    res.ok = res.case_detected != CaseDetected::Ambiguous;
    if (!res.ok) res.message = "ambiguous classification (both diagnostics stored)";
    res.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

struct MuStarResult {
    double mu_lo = 0.0;
    double mu_hi = 0.0;
    double mu_star = 0.0;
    struct Classification {
        double mu;
        CaseDetected verdict;
        double slope;
    };
    std::vector<Classification> classifications;
    long total_iterations = 0;
};

// Bisection on mu: a bounded verdict for f + mu means mu >= mu*, an ergodic
// verdict means mu < mu*.
inline MuStarResult mu_star_bisection(const ProblemSpec& base, const Grid& grid, double mu_lo,
                                      double mu_hi, double width,
                                      const std::vector<double>& schedule,
                                      const SolverConfig& solver_cfg, const SchemeConfig& scheme,
                                      ErgodicOptions opts = {}) {
    if (!(mu_hi > mu_lo)) throw std::invalid_argument("mu_star_bisection: bad bracket");
    if (!(width > 0.0)) throw std::invalid_argument("mu_star_bisection: width must be > 0");
    if (opts.max_extensions == 0) opts.max_extensions = 4;

    MuStarResult out;
    auto classify = [&](double mu) -> CaseDetected {
        ProblemSpec prob = base;
        prob.f = base.f.shifted(mu);
        ErgodicResult r = dirichlet_alternative(prob, grid, schedule, solver_cfg, scheme, opts);
        out.total_iterations += r.total_iterations;
        if (!r.ok && r.case_detected != CaseDetected::Ambiguous)
            throw std::runtime_error("mu_star_bisection: inner solve failed at mu=" +
                                     detail::fmt17(mu) + " (" + r.message + ")");
        if (r.case_detected == CaseDetected::Ambiguous)
            throw std::runtime_error("mu_star_bisection: ambiguous classification at mu=" +
                                     detail::fmt17(mu));
        out.classifications.push_back({mu, r.case_detected, r.slope});
        return r.case_detected;
    };

    CaseDetected v_lo = classify(mu_lo), v_hi = classify(mu_hi);
    for (int e = 0; e < 10 && (v_lo != CaseDetected::ErgodicCase ||
                               v_hi != CaseDetected::BoundedCase);
         ++e) {
        const double span = mu_hi - mu_lo;
        if (v_lo == CaseDetected::BoundedCase) {
            mu_lo -= span;
            v_lo = classify(mu_lo);
        }
        if (v_hi == CaseDetected::ErgodicCase) {
            mu_hi += span;
            v_hi = classify(mu_hi);
        }
    }
    if (v_lo != CaseDetected::ErgodicCase || v_hi != CaseDetected::BoundedCase)
        throw std::runtime_error("mu_star_bisection: bracket expansion failed");

    while (mu_hi - mu_lo > width) {
        const double mid = 0.5 * (mu_lo + mu_hi);
        (classify(mid) == CaseDetected::ErgodicCase ? mu_lo : mu_hi) = mid;
    }
    out.mu_lo = mu_lo;
    out.mu_hi = mu_hi;
    out.mu_star = 0.5 * (mu_lo + mu_hi);
    return out;
}

// history CSV: lambda, c_lambda, max|u|, min u, slope
inline void write_discount_csv(const ErgodicResult& res, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_discount_csv: cannot open " + path);
    out << "lambda,c_lambda,max_abs_u,min_u,slope\n";
    for (const auto& s : res.history)
        out << detail::fmt17(s.lambda) << ',' << detail::fmt17(s.c) << ','
            << detail::fmt17(s.max_abs_u) << ',' << detail::fmt17(s.min_u) << ','
            << detail::fmt17(s.slope) << '\n';
}

// profile CSV: d, v (interior nodes, sorted by d)
inline void write_v_profile_csv(const Field& v, const std::string& path) {
    const Grid& g = *v.grid;
    std::multimap<double, int> by_d;
    for (int node : g.interior_nodes) by_d.emplace(g.dist[node], node);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_v_profile_csv: cannot open " + path);
    out << "d,v\n";
    for (const auto& [d, node] : by_d)
        out << detail::fmt17(d) << ',' << detail::fmt17(v[node]) << '\n';
}

}  // namespace ergofd

#endif
