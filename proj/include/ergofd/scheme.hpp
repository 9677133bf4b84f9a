#ifndef ERGOFD_SCHEME_HPP
#define ERGOFD_SCHEME_HPP

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergofd/grid.hpp"
#include "ergofd/operators.hpp"

// Discrete spatial operators: one-sided/central gradients, central Hessian,
// a monotone Lax-Friedrichs Hamiltonian, the degenerate diffusion, and full
// residual assembly.

namespace ergofd {

enum class StencilKind { AxisMonotone, SpectralCentral };
enum class SigmaMode { Adaptive, Fixed };

struct SchemeConfig {
    StencilKind stencil = StencilKind::AxisMonotone;
    SigmaMode sigma_mode = SigmaMode::Adaptive;
    double sigma_fixed = 0.0;            // used when sigma_mode == Fixed
    double artificial_viscosity = 0.0;   // SpectralCentral only, coefficient of h * sum d2

    void validate(const OperatorSpec& op, int dim) const {
        if (stencil == StencilKind::AxisMonotone) {
            if (dim == 2 && op.kind != OperatorKind::Trace)
                throw std::invalid_argument(
                    "SchemeConfig: AxisMonotone requires dim=1 or a trace operator in 2D");
            if (artificial_viscosity != 0.0)
                throw std::invalid_argument(
                    "SchemeConfig: artificial viscosity must be 0 under AxisMonotone");
        }
    }
};

// Scalar coefficient: a constant or a function of position.
struct Coefficient {
    double value = 0.0;
    std::function<double(const Vec&)> fn;  // overrides value when set
    std::string label = "constant(0)";

    double operator()(const Vec& p) const { return fn ? fn(p) : value; }

    static Coefficient constant(double v) {
        Coefficient c;
        c.value = v;
        c.label = "constant(" + detail::fmt17(v) + ")";
        return c;
    }
    static Coefficient function(std::function<double(const Vec&)> f, std::string label) {
        Coefficient c;
        c.fn = std::move(f);
        c.label = std::move(label);
        return c;
    }

    Coefficient shifted(double m) const {
        if (!fn) return constant(value + m);
        auto base = fn;
        return function([base, m](const Vec& p) { return base(p) + m; },
                        label + "+" + detail::fmt17(m));
    }

    double max_abs_on(const Grid& g) const {
        double m = 0.0;
        for (int k = 0; k < g.size(); ++k)
            if (!g.is_exterior(k)) m = std::max(m, std::abs((*this)(g.coord(k))));
        return m;
    }
};

enum class BoundaryKind { DirichletValue, Blowup };

struct BoundarySpec {
    BoundaryKind kind = BoundaryKind::DirichletValue;
    Coefficient g;  // Dirichlet data

    static BoundarySpec dirichlet(double v) {
        return {BoundaryKind::DirichletValue, Coefficient::constant(v)};
    }
    static BoundarySpec dirichlet(Coefficient c) {
        return {BoundaryKind::DirichletValue, std::move(c)};
    }
    static BoundarySpec blowup() { return {BoundaryKind::Blowup, Coefficient::constant(0.0)}; }
};

struct ProblemSpec {
    OperatorSpec op;
    double beta = 2.0;
    Coefficient b = Coefficient::constant(1.0);
    double lambda = 1.0;
    Coefficient f = Coefficient::constant(0.0);
    BoundarySpec boundary = BoundarySpec::dirichlet(0.0);

    void validate() const {
        op.validate();
        if (!(beta > op.alpha + 1.0) || !(beta <= op.alpha + 2.0))
            throw std::invalid_argument("ProblemSpec: beta must lie in (alpha+1, alpha+2]");
        if (!(lambda >= 0.0)) throw std::invalid_argument("ProblemSpec: lambda must be >= 0");
    }
};

struct GradientStencil {
    Vec dm, dp, dc;  // backward, forward, central per axis
};

inline GradientStencil gradient_stencils(const Field& u, int node) {
    const Grid& g = *u.grid;
    GradientStencil s;
    s.dm.dim = s.dp.dim = s.dc.dim = g.dim;
    for (int ax = 0; ax < g.dim; ++ax) {
        const int st = g.stride(ax);
        const double up = u[node + st], um = u[node - st], uc = u[node];
        s.dp[ax] = (up - uc) / g.h;
        s.dm[ax] = (uc - um) / g.h;
        s.dc[ax] = 0.5 * (s.dp[ax] + s.dm[ax]);
    }
    return s;
}

inline SymMat hessian_central(const Field& u, int node) {
    const Grid& g = *u.grid;
    const double h2 = g.h * g.h;
    if (g.dim == 1) {
        const double m = (u[node + 1] - 2.0 * u[node] + u[node - 1]) / h2;
        return SymMat(m);
    }
    const int sx = 1, sy = g.nx;
    const double mxx = (u[node + sx] - 2.0 * u[node] + u[node - sx]) / h2;
    const double myy = (u[node + sy] - 2.0 * u[node] + u[node - sy]) / h2;
    const double mxy = (u[node + sx + sy] + u[node - sx - sy] - u[node + sx - sy] -
                        u[node - sx + sy]) /
                       (4.0 * h2);
    return SymMat(mxx, myy, mxy);
}

// Per-axis second divided difference (the diagonal of hessian_central).
inline double second_difference(const Field& u, int node, int axis) {
    const Grid& g = *u.grid;
    const int st = g.stride(axis);
    return (u[node + st] - 2.0 * u[node] + u[node - st]) / (g.h * g.h);
}

// Per-axis, per-node Lax-Friedrichs dissipation coefficients.  Under the
// Adaptive mode the stored value is a running maximum over the iterates seen
// so far, so sigma never decreases within a solve.
struct SigmaField {
    std::vector<double> v;  // axis-major
    int dim = 1;
    int n = 0;

    void init(const Grid& g, double fill = 0.0) {
        dim = g.dim;
        n = g.size();
        v.assign((size_t)dim * n, fill);
    }
    double at(int node, int axis) const { return v[(size_t)axis * n + node]; }
    double& at(int node, int axis) { return v[(size_t)axis * n + node]; }
};

namespace detail {

// Pointwise lower bound on sigma that makes the assembled residual monotone in
// the neighbor values: the Hamiltonian slope b beta |Dc|^(beta-1) plus the
// variation of the degenerate diffusion coefficient, net of the slack the
// second-difference stencil itself provides.  On resolved smooth iterates the
// stencil slack dominates and no dissipation is needed, which keeps the scheme
// first-order sharp; rough states get the full Lax-Friedrichs coefficient.
inline double required_sigma(const OperatorSpec& op, double beta, double b_sup, double h,
                             double dc_abs, double d2_abs) {
    const double sH = dc_abs > 0.0 ? b_sup * beta * power(dc_abs, beta - 1.0) : 0.0;
    const double alpha = op.alpha;
    const double relief_coef = alpha == 0.0 ? 1.0 : power(dc_abs, alpha);
    const double relief = 2.0 * op.lower() * relief_coef / h;
    double grow = 0.0;
    if (alpha > 0.0) {
        // Slope of s -> |s|^alpha is unbounded at 0 for alpha < 1; cap it at
        // the grid scale.
        const double dc_for_slope = alpha < 1.0 ? std::max(dc_abs, h) : dc_abs;
        grow = dc_for_slope > 0.0
                   ? op.upper() * alpha * power(dc_for_slope, alpha - 1.0) * d2_abs
                   : 0.0;
    }
    return std::max(0.0, sH + grow - relief);
}

}  // namespace detail

// Raise sigma to its adaptive lower bound over the current iterate.  Returns
// whether any coefficient actually increased.
inline bool update_sigma(SigmaField& sigma, const ProblemSpec& prob, const Field& u,
                         double b_sup) {
    const Grid& g = *u.grid;
    bool changed = false;
    for (int node : g.interior_nodes) {
        const GradientStencil s = gradient_stencils(u, node);
        for (int ax = 0; ax < g.dim; ++ax) {
            const double d2 = std::abs(second_difference(u, node, ax));
            const double req = detail::required_sigma(prob.op, prob.beta, b_sup, g.h,
                                                      std::abs(s.dc[ax]), d2);
            double& slot = sigma.at(node, ax);
            if (req > slot) {
                slot = req;
                changed = true;
            }
        }
    }
    return changed;
}

// Lax-Friedrichs Hamiltonian  b |Dc|^beta - sum_i sigma_i (Dp_i - Dm_i)/2.
inline double numerical_hamiltonian(const Field& u, int node, double beta, double b_at,
                                    const SchemeConfig& cfg, const SigmaField* sigma) {
    const GradientStencil s = gradient_stencils(u, node);
    const double grad = s.dc.norm();
    double value = grad > 0.0 ? b_at * detail::power(grad, beta) : 0.0;
    for (int ax = 0; ax < u.grid->dim; ++ax) {
        const double sig = cfg.sigma_mode == SigmaMode::Fixed
                               ? cfg.sigma_fixed
                               : (sigma ? sigma->at(node, ax) : 0.0);
        value -= 0.5 * sig * (s.dp[ax] - s.dm[ax]);
    }
    return value;
}

// Degenerate diffusion F(Theta(Du) D^2u Theta(Du)) in discrete form.
inline double discrete_diffusion(const OperatorSpec& op, const Field& u, int node,
                                 const SchemeConfig& cfg) {
    const Grid& g = *u.grid;
    const GradientStencil s = gradient_stencils(u, node);
    if (cfg.stencil == StencilKind::AxisMonotone) {
        if (g.dim == 1) {
            const double m =
                detail::power(std::abs(s.dc[0]), op.alpha) * second_difference(u, node, 0);
            return base_F_scalar(op, m);
        }
        // 2D trace only: sum_i |Dc_i|^alpha * d2_i.
        double acc = 0.0;
        for (int ax = 0; ax < 2; ++ax)
            acc += detail::power(std::abs(s.dc[ax]), op.alpha) * second_difference(u, node, ax);
        return acc;
    }
    // SpectralCentral: exact eigenvalue evaluation plus O(h) viscosity.
    double value = eval_F(op, s.dc, hessian_central(u, node));
    if (cfg.artificial_viscosity > 0.0) {
        double lap = 0.0;
        for (int ax = 0; ax < g.dim; ++ax) lap += second_difference(u, node, ax);
        value += cfg.artificial_viscosity * g.h * lap;
    }
    return value;
}

// Residual together with the magnitude of its constituent terms; the scale
// bounds the attainable floating-point accuracy at a node.
struct AssembledResidual {
    Field res;
    Field scale;
};

// Per-solve precomputed node data (coefficients do not change while iterating).
struct AssemblyWorkspace {
    std::vector<double> f_vals, b_vals, g_vals;

    void init(const ProblemSpec& prob, const Grid& grid) {
        const int n = grid.size();
        f_vals.assign(n, 0.0);
        b_vals.assign(n, 0.0);
        g_vals.assign(n, 0.0);
        for (int k = 0; k < n; ++k) {
            if (grid.is_exterior(k)) continue;
            const Vec x = grid.coord(k);
            if (grid.is_boundary(k)) {
                if (prob.boundary.kind == BoundaryKind::DirichletValue)
                    g_vals[k] = prob.boundary.g(x);
            } else {
                f_vals[k] = prob.f(x);
                b_vals[k] = prob.b(x);
            }
        }
    }
};

namespace detail {

inline void assemble_into(const ProblemSpec& prob, const Grid& grid, const Field& u,
                          const SchemeConfig& cfg, const SigmaField* sigma,
                          const AssemblyWorkspace& ws, AssembledResidual& out) {
    const double alpha = prob.op.alpha;
    const double h = grid.h, h2 = h * h;
    const bool fixed_sigma = cfg.sigma_mode == SigmaMode::Fixed;
    const bool axiswise = cfg.stencil == StencilKind::AxisMonotone;

    for (int k = 0; k < grid.size(); ++k) {
        if (grid.is_exterior(k)) {
            out.res[k] = 0.0;
            out.scale[k] = 1.0;
            continue;
        }
        if (grid.is_boundary(k)) {
            out.res[k] = prob.boundary.kind == BoundaryKind::DirichletValue
                             ? u[k] - ws.g_vals[k]
                             : 0.0;
            out.scale[k] = 1.0;
            continue;
        }

        double dc[2], dp[2], dm[2], d2[2];
        for (int ax = 0; ax < grid.dim; ++ax) {
            const int st = grid.stride(ax);
            const double up = u[k + st], um = u[k - st], uc = u[k];
            dp[ax] = (up - uc) / h;
            dm[ax] = (uc - um) / h;
            dc[ax] = 0.5 * (dp[ax] + dm[ax]);
            d2[ax] = (up - 2.0 * uc + um) / h2;
        }

        double dd;
        if (axiswise) {
            if (grid.dim == 1) {
                dd = base_F_scalar(prob.op, power(std::abs(dc[0]), alpha) * d2[0]);
            } else {
                dd = power(std::abs(dc[0]), alpha) * d2[0] +
                     power(std::abs(dc[1]), alpha) * d2[1];
            }
        } else {
            Vec p = grid.dim == 1 ? Vec(dc[0]) : Vec(dc[0], dc[1]);
            SymMat M;
            if (grid.dim == 1) {
                M = SymMat(d2[0]);
            } else {
                const int sx = 1, sy = grid.nx;
                const double mxy = (u[k + sx + sy] + u[k - sx - sy] - u[k + sx - sy] -
                                    u[k - sx + sy]) /
                                   (4.0 * h2);
                M = SymMat(d2[0], d2[1], mxy);
            }
            dd = eval_F(prob.op, p, M);
            if (cfg.artificial_viscosity > 0.0) {
                double lap = d2[0];
                if (grid.dim == 2) lap += d2[1];
                dd += cfg.artificial_viscosity * h * lap;
            }
        }

        double grad2 = 0.0;
        for (int ax = 0; ax < grid.dim; ++ax) grad2 += dc[ax] * dc[ax];
        const double grad = std::sqrt(grad2);
        const double ham_b = grad > 0.0 ? ws.b_vals[k] * power(grad, prob.beta) : 0.0;
        double diss = 0.0;
        for (int ax = 0; ax < grid.dim; ++ax) {
            const double sig = fixed_sigma ? cfg.sigma_fixed : (sigma ? sigma->at(k, ax) : 0.0);
            diss += 0.5 * sig * (dp[ax] - dm[ax]);
        }

        const double zero = prob.lambda * power(std::abs(u[k]), alpha) * u[k];
        const double fx = ws.f_vals[k];
        out.res[k] = -dd + ham_b - diss + zero - fx;
        out.scale[k] =
            std::abs(dd) + std::abs(ham_b) + std::abs(diss) + std::abs(zero) + std::abs(fx) + 1.0;
    }
}

}  // namespace detail

inline AssembledResidual assemble_residual_scaled(const ProblemSpec& prob, const Grid& grid,
                                                  const Field& u, const SchemeConfig& cfg,
                                                  const SigmaField* sigma = nullptr,
                                                  const AssemblyWorkspace* ws = nullptr) {
    AssembledResidual out{Field(grid), Field(grid, 1.0)};
    if (ws) {
        detail::assemble_into(prob, grid, u, cfg, sigma, *ws, out);
    } else {
        AssemblyWorkspace local;
        local.init(prob, grid);
        detail::assemble_into(prob, grid, u, cfg, sigma, local, out);
    }
    return out;
}

inline Field assemble_residual(const ProblemSpec& prob, const Grid& grid, const Field& u,
                               const SchemeConfig& cfg, const SigmaField* sigma = nullptr) {
    return assemble_residual_scaled(prob, grid, u, cfg, sigma).res;
}

}  // namespace ergofd

#endif
