#ifndef ERGOFD_BARRIER_HPP
#define ERGOFD_BARRIER_HPP

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergofd/scheme.hpp"

// The analytic sub/supersolution catalog and pointwise certification of the
// sign conditions, plus the ordering and Lipschitz probes.

namespace ergofd {

enum class BarrierFamily { Log, Power, Refined, ConstantExtension };
enum class Orientation { Super, Sub };

inline std::string to_string(BarrierFamily f) {
    switch (f) {
        case BarrierFamily::Log: return "log";
        case BarrierFamily::Power: return "power";
        case BarrierFamily::Refined: return "refined";
        case BarrierFamily::ConstantExtension: return "constant";
    }
    return "?";
}

struct BarrierSpec {
    BarrierFamily family = BarrierFamily::Log;
    Orientation orientation = Orientation::Super;
    double band_lo = 1e-4;
    double band_hi = 0.25;

    // Log: log(1 + C d) on d <= kappa / C.
    double C = 1.0;
    double kappa = 1.0;
    // Power: c0 (d + s)^-gamma (gamma = 0 degenerates to -c0 log(d + s)).
    double c0 = 1.0;
    double s = 0.0;
    double gamma = 1.0;
    // Refined: (C(x) +- nu d^gamma1) d^-gamma +- D, the sign following the
    // orientation; C(x) comes from boundary_constant.
    double nu = 0.0;
    double gamma1 = 0.5;
    double D = 0.0;
    // ConstantExtension: level.
    double level = 0.0;

    void validate(double alpha, double problem_gamma) const {
        if (!(band_lo >= 0.0) || !(band_hi > band_lo))
            throw std::invalid_argument("BarrierSpec: bad band");
        switch (family) {
            case BarrierFamily::Log:
                if (C < 0.0 || kappa < 0.0)
                    throw std::invalid_argument("BarrierSpec: C, kappa must be >= 0");
                break;
            case BarrierFamily::Power:
                if (c0 < 0.0 || s < 0.0 || gamma < 0.0)
                    throw std::invalid_argument("BarrierSpec: c0, s, gamma must be >= 0");
                break;
            case BarrierFamily::Refined:
                if (D < 0.0 || nu < 0.0)
                    throw std::invalid_argument("BarrierSpec: nu, D must be >= 0");
                if (!(gamma1 < std::min(1.0, alpha)))
                    throw std::invalid_argument("BarrierSpec: need gamma1 < min(1, alpha)");
                if (problem_gamma > 0.0 && !(gamma1 < problem_gamma))
                    throw std::invalid_argument("BarrierSpec: need gamma1 < gamma");
                break;
            case BarrierFamily::ConstantExtension: break;
        }
    }
};

struct BarrierEval {
    double value = 0.0;
    Vec gradient;
    SymMat hessian;
};

// Closed-form value and derivatives at a point with distance d, analytic
// grad_d / hess_d.  The refined family treats C(x) as locally constant, which
// is exact on intervals; refined certification is restricted accordingly.
inline BarrierEval eval_barrier(const BarrierSpec& spec, const ProblemSpec& prob, const Vec& x,
                                double d, const Vec& grad_d, const SymMat& hess_d) {
    (void)x;
    if (d < spec.band_lo || d > spec.band_hi)
        throw std::invalid_argument("eval_barrier: d outside the barrier band");
    double val = 0.0, pd = 0.0, pdd = 0.0;  // phi, phi', phi'' in d
    switch (spec.family) {
        case BarrierFamily::Log: {
            const double w = 1.0 + spec.C * d;
            val = std::log(w);
            pd = spec.C / w;
            pdd = -spec.C * spec.C / (w * w);
            break;
        }
        case BarrierFamily::Power: {
            const double w = d + spec.s;
            if (spec.gamma > 0.0) {
                val = spec.c0 * detail::power(w, -spec.gamma);
                pd = -spec.c0 * spec.gamma * detail::power(w, -spec.gamma - 1.0);
                pdd = spec.c0 * spec.gamma * (spec.gamma + 1.0) *
                      detail::power(w, -spec.gamma - 2.0);
            } else {
                val = -spec.c0 * std::log(w);
                pd = -spec.c0 / w;
                pdd = spec.c0 / (w * w);
            }
            break;
        }
        case BarrierFamily::Refined: {
            const double sgn = spec.orientation == Orientation::Super ? 1.0 : -1.0;
            const double gamma = gamma_exponent(prob.op.alpha, prob.beta);
            const double Cx = boundary_constant(prob.op, prob.beta, grad_d);
            const double g1 = spec.gamma1;
            if (gamma > 0.0) {
                val = Cx * detail::power(d, -gamma) +
                      sgn * spec.nu * detail::power(d, g1 - gamma) + sgn * spec.D;
                pd = -gamma * Cx * detail::power(d, -gamma - 1.0) +
                     sgn * spec.nu * (g1 - gamma) * detail::power(d, g1 - gamma - 1.0);
                pdd = gamma * (gamma + 1.0) * Cx * detail::power(d, -gamma - 2.0) +
                      sgn * spec.nu * (g1 - gamma) * (g1 - gamma - 1.0) *
                          detail::power(d, g1 - gamma - 2.0);
            } else {
                const double L = -std::log(d);  // |log d| on d < 1
                const double amp = Cx + sgn * spec.nu * detail::power(d, g1);
                const double amp_d = sgn * spec.nu * g1 * detail::power(d, g1 - 1.0);
                const double amp_dd = sgn * spec.nu * g1 * (g1 - 1.0) * detail::power(d, g1 - 2.0);
                val = L * amp + sgn * spec.D;
                pd = -amp / d + L * amp_d;
                pdd = amp / (d * d) - 2.0 * amp_d / d + L * amp_dd;
            }
            break;
        }
        case BarrierFamily::ConstantExtension: val = spec.level; break;
    }
    BarrierEval out;
    out.value = val;
    out.gradient = grad_d;
    for (int i = 0; i < grad_d.dim; ++i) out.gradient[i] = pd * grad_d[i];
    SymMat dd = outer(grad_d, grad_d);
    if (grad_d.dim == 1) {
        out.hessian = SymMat(pdd * dd.m11 + pd * hess_d.m11);
    } else {
        out.hessian = SymMat(pdd * dd.m11 + pd * hess_d.m11, pdd * dd.m22 + pd * hess_d.m22,
                             pdd * dd.m12 + pd * hess_d.m12);
    }
    return out;
}

struct CertifySample {
    double d = 0.0;
    double residual = 0.0;  // raw pointwise residual
    double margin = 0.0;    // oriented: >= 0 means the sign condition holds
};

struct CertifyReport {
    double min_margin = 0.0;
    double worst_d = 0.0;
    Vec worst_x;
    bool pass = false;
    double epsilon = 1.0;  // beta = alpha + 2 rescaling, if used
    int n_samples = 0;
    std::vector<CertifySample> samples;
};

// Pointwise analytic certification on a fine sample of the band.  With
// epsilon != 1 (allowed only when beta = alpha + 2) the barrier is certified
// for the rescaled problem (b -> eps b, f -> f / eps^(1+alpha)); the reported
// margins apply to eps * phi against the original data.
inline CertifyReport certify_sign(const BarrierSpec& spec, const ProblemSpec& prob,
                                  const DomainSpec& domain, int samples_per_direction,
                                  double epsilon = 1.0, bool keep_samples = false) {
    const double alpha = prob.op.alpha;
    spec.validate(alpha, gamma_exponent(alpha, prob.beta));
    if (epsilon != 1.0 && prob.beta != alpha + 2.0)
        throw std::invalid_argument("certify_sign: epsilon rescaling requires beta = alpha + 2");
    if (spec.family == BarrierFamily::Refined && domain.kind != DomainKind::Interval)
        throw std::invalid_argument(
            "certify_sign: refined barriers are certified on intervals only (C(x) derivatives)");
    if (domain.kind == DomainKind::Rectangle)
        throw std::invalid_argument("certify_sign: rectangle corners are not C^2; use interval/disk");
    if (samples_per_direction < 2)
        throw std::invalid_argument("certify_sign: need at least 2 samples");

    const double eps_pow = detail::power(epsilon, 1.0 + alpha);
    const double orient = spec.orientation == Orientation::Super ? 1.0 : -1.0;

    CertifyReport rep;
    rep.epsilon = epsilon;
    rep.min_margin = std::numeric_limits<double>::infinity();

    auto visit = [&](const Vec& x, double d, const Vec& gd, const SymMat& hd) {
        const BarrierEval be = eval_barrier(spec, prob, x, d, gd, hd);
        // residual of the (eps b, f / eps^(1+alpha)) problem, rescaled back
        const double r = eps_pow * residual_pointwise(prob.op, prob.beta,
                                                      epsilon * prob.b(x), prob.lambda, alpha,
                                                      be.gradient, be.hessian, be.value,
                                                      prob.f(x) / eps_pow);
        const double margin = orient * r;
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.worst_d = d;
            rep.worst_x = x;
        }
        if (keep_samples) rep.samples.push_back({d, r, margin});
        ++rep.n_samples;
    };

    const int n = samples_per_direction;
    if (domain.kind == DomainKind::Interval) {
        for (int side = 0; side < 2; ++side) {
            for (int i = 0; i < n; ++i) {
                const double d = spec.band_lo + (spec.band_hi - spec.band_lo) * i / (n - 1);
                const Vec x(side == 0 ? domain.x0 + d : domain.x1 - d);
                visit(x, d, domain.grad_distance(x), SymMat(0.0));
            }
        }
    } else {
        const int n_angles = 64;
        for (int a = 0; a < n_angles; ++a) {
            const double th = 2.0 * M_PI * a / n_angles;
            for (int i = 0; i < n; ++i) {
                const double d = spec.band_lo + (spec.band_hi - spec.band_lo) * i / (n - 1);
                const double rho = domain.radius - d;
                const Vec x(domain.cx + rho * std::cos(th), domain.cy + rho * std::sin(th));
                visit(x, d, domain.grad_distance(x), domain.hess_distance(x));
            }
        }
    }
    rep.pass = rep.min_margin >= 0.0;
    return rep;
}

enum class SearchedConstant { LogC, RefinedD };

// Bisection for the smallest constant that certifies; the Log band upper edge
// tracks kappa / C as the proof requires.
inline double find_min_constant(BarrierSpec spec, const ProblemSpec& prob,
                                const DomainSpec& domain, SearchedConstant which,
                                double rel_tol, int samples_per_direction = 400,
                                double epsilon = 1.0) {
    auto passes = [&](double c) {
        BarrierSpec s = spec;
        if (which == SearchedConstant::LogC) {
            s.C = c;
            if (s.kappa > 0.0 && c > 0.0) s.band_hi = std::min(spec.band_hi, s.kappa / c);
            if (s.band_hi <= s.band_lo) return false;
        } else {
            s.D = c;
        }
        return certify_sign(s, prob, domain, samples_per_direction, epsilon).pass;
    };
    double hi = which == SearchedConstant::LogC ? std::max(spec.C, 1.0) : std::max(spec.D, 1.0);
    int guard = 0;
    while (!passes(hi)) {
        hi *= 2.0;
        if (hi > 1e6) throw std::runtime_error("find_min_constant: no passing value below 1e6");
        ++guard;
    }
    double lo = 0.0;
    if (passes(lo)) return lo;
    while ((hi - lo) > rel_tol * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        (passes(mid) ? hi : lo) = mid;
    }
    return hi;
}

struct ComparisonReport {
    double max_violation = 0.0;  // max interior (u - v) beyond the boundary allowance
    double boundary_gap = 0.0;   // max(0, max boundary (u - v))
    bool pass = false;
};

// Discrete comparison probe: interior ordering up to the boundary ordering.
inline ComparisonReport comparison_check(const Field& u, const Field& v, double tol) {
    if (u.grid != v.grid) throw std::invalid_argument("comparison_check: grid mismatch");
    const Grid& g = *u.grid;
    double bdy = 0.0;
    for (int k = 0; k < g.size(); ++k)
        if (g.is_boundary(k)) bdy = std::max(bdy, u[k] - v[k]);
    bdy = std::max(bdy, 0.0);
    double worst = -std::numeric_limits<double>::infinity();
    for (int k : g.interior_nodes) worst = std::max(worst, u[k] - v[k]);
    ComparisonReport rep;
    rep.boundary_gap = bdy;
    rep.max_violation = worst - bdy;
    rep.pass = worst <= bdy + tol;
    return rep;
}

struct LipschitzReport {
    double max_quotient = 0.0;
    double weighted_quotient = 0.0;  // |du| * min(d_x, d_y)^exponent / h
    double per_direction[2] = {0.0, 0.0};
    int pairs = 0;
};

// Difference quotients over adjacent node pairs inside {d >= d_min}.
inline LipschitzReport lipschitz_probe(const Field& u, double d_min,
                                       double weight_exponent = 0.0) {
    const Grid& g = *u.grid;
    LipschitzReport rep;
    for (int node : g.interior_nodes) {
        if (g.dist[node] < d_min) continue;
        for (int ax = 0; ax < g.dim; ++ax) {
            const int nb = node + g.stride(ax);
            if (g.is_exterior(nb) || g.dist[nb] < d_min) continue;
            const double q = std::abs(u[nb] - u[node]) / g.h;
            rep.max_quotient = std::max(rep.max_quotient, q);
            rep.per_direction[ax] = std::max(rep.per_direction[ax], q);
            if (weight_exponent > 0.0) {
                const double dmin = std::min(g.dist[node], g.dist[nb]);
                rep.weighted_quotient =
                    std::max(rep.weighted_quotient, q * detail::power(dmin, weight_exponent));
            }
            ++rep.pairs;
        }
    }
    if (rep.pairs == 0) throw std::invalid_argument("lipschitz_probe: empty band");
    return rep;
}

// Certification CSV: one row per sample (d, residual, margin).
inline void write_certify_csv(const CertifyReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_certify_csv: cannot open " + path);
    out << "d,residual,margin\n";
    for (const auto& s : rep.samples)
        out << detail::fmt17(s.d) << ',' << detail::fmt17(s.residual) << ','
            << detail::fmt17(s.margin) << '\n';
}

}  // namespace ergofd

#endif
