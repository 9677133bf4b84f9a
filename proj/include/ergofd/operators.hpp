#ifndef ERGOFD_OPERATORS_HPP
#define ERGOFD_OPERATORS_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

// Pointwise evaluation of the degenerate operator F(Theta_a(p) M Theta_a(p)),
// the full residual of  -F + b|p|^beta + lambda|u|^a u - f,  and the
// closed-form blow-up exponent / boundary coefficient it predicts.

namespace ergofd {

namespace detail {
// pow with fast paths for the small half-integer exponents the equations use.
inline double power(double x, double p) {
    if (p == 2.0) return x * x;
    if (p == 1.0) return x;
    if (p == 0.0) return 1.0;
    if (p == 3.0) return x * x * x;
    if (p == 0.5) return std::sqrt(x);
    if (p == 1.5) return x * std::sqrt(x);
    if (p == 2.5) return x * x * std::sqrt(x);
    if (p == 3.5) return x * x * x * std::sqrt(x);
    if (p == 4.0) {
        const double x2 = x * x;
        return x2 * x2;
    }
    return std::pow(x, p);
}
}  // namespace detail

// Small fixed-size vector for dim <= 2 problems.
struct Vec {
    int dim = 1;
    double a[2] = {0.0, 0.0};

    Vec() = default;
    explicit Vec(double x) : dim(1) { a[0] = x; }
    Vec(double x, double y) : dim(2) {
        a[0] = x;
        a[1] = y;
    }

    double& operator[](int i) { return a[i]; }
    double operator[](int i) const { return a[i]; }

    double norm() const {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) s += a[i] * a[i];
        return std::sqrt(s);
    }
};

inline Vec operator-(const Vec& p, const Vec& q) {
    Vec r = p;
    for (int i = 0; i < p.dim; ++i) r.a[i] -= q.a[i];
    return r;
}

// Symmetric matrix in dimension 1 or 2 (m22, m12 unused when dim = 1).
struct SymMat {
    int dim = 1;
    double m11 = 0.0;
    double m22 = 0.0;
    double m12 = 0.0;

    SymMat() = default;
    explicit SymMat(double m) : dim(1), m11(m) {}
    SymMat(double a11, double a22, double a12) : dim(2), m11(a11), m22(a22), m12(a12) {}

    double trace() const { return dim == 1 ? m11 : m11 + m22; }

    // Eigenvalues, ascending. Closed form for the 2x2 case.
    void eigenvalues(double out[2]) const {
        if (dim == 1) {
            out[0] = m11;
            out[1] = 0.0;
            return;
        }
        const double tr = m11 + m22;
        const double diff = m11 - m22;
        const double disc = std::sqrt(diff * diff + 4.0 * m12 * m12);
        out[0] = 0.5 * (tr - disc);
        out[1] = 0.5 * (tr + disc);
    }
};

inline SymMat outer(const Vec& p, const Vec& q) {
    if (p.dim == 1) return SymMat(p[0] * q[0]);
    return SymMat(p[0] * q[0], p[1] * q[1], 0.5 * (p[0] * q[1] + p[1] * q[0]));
}

// Ellipticity pair 0 < a <= A.
struct EllipticityPair {
    double a = 1.0;
    double A = 1.0;

    void validate() const {
        if (!(a > 0.0) || !(A >= a))
            throw std::invalid_argument("EllipticityPair: need 0 < a <= A");
    }
};

enum class OperatorKind { Trace, PucciPlus, PucciMinus };

inline std::string to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::Trace: return "trace";
        case OperatorKind::PucciPlus: return "pucci_plus";
        case OperatorKind::PucciMinus: return "pucci_minus";
    }
    return "?";
}

struct OperatorSpec {
    OperatorKind kind = OperatorKind::Trace;
    EllipticityPair ell;
    double alpha = 0.0;

    void validate() const {
        if (!(alpha >= 0.0)) throw std::invalid_argument("OperatorSpec: alpha must be >= 0");
        if (kind != OperatorKind::Trace) ell.validate();
    }

    // Effective ellipticity bounds: the trace kind behaves as a = A = 1.
    double lower() const { return kind == OperatorKind::Trace ? 1.0 : ell.a; }
    double upper() const { return kind == OperatorKind::Trace ? 1.0 : ell.A; }
};

// Diagonal of Theta_alpha(p): component i is |p_i|^(alpha/2).
// Convention: alpha = 0 gives the all-ones vector, even at p_i = 0.
inline Vec theta(const Vec& p, double alpha) {
    assert(alpha >= 0.0);
    Vec t = p;
    for (int i = 0; i < p.dim; ++i)
        t[i] = (alpha == 0.0) ? 1.0 : detail::power(std::abs(p[i]), 0.5 * alpha);
    return t;
}

// F applied to a bare symmetric matrix: trace, or a Pucci extremal value
// A tr(M+) - a tr(M-)  /  a tr(M+) - A tr(M-)  via exact eigenvalues.
inline double base_F(const OperatorSpec& spec, const SymMat& M) {
    if (spec.kind == OperatorKind::Trace) return M.trace();
    double ev[2];
    M.eigenvalues(ev);
    double pos = 0.0, neg = 0.0;
    const int n = M.dim;
    for (int i = 0; i < n; ++i) {
        if (ev[i] > 0.0)
            pos += ev[i];
        else
            neg -= ev[i];
    }
    const double a = spec.ell.a, A = spec.ell.A;
    return spec.kind == OperatorKind::PucciPlus ? A * pos - a * neg : a * pos - A * neg;
}

// Scalar version used by the axis-wise scheme in 1D.
inline double base_F_scalar(const OperatorSpec& spec, double m) {
    if (spec.kind == OperatorKind::Trace) return m;
    const double a = spec.ell.a, A = spec.ell.A;
    if (spec.kind == OperatorKind::PucciPlus) return m >= 0.0 ? A * m : a * m;
    return m >= 0.0 ? a * m : A * m;
}

// F(Theta_alpha(p) M Theta_alpha(p)).
inline double eval_F(const OperatorSpec& spec, const Vec& p, const SymMat& M) {
    const Vec t = theta(p, spec.alpha);
    if (M.dim == 1) return base_F_scalar(spec, t[0] * t[0] * M.m11);
    SymMat S(t[0] * t[0] * M.m11, t[1] * t[1] * M.m22, t[0] * t[1] * M.m12);
    return base_F(spec, S);
}

// Full pointwise residual  -F(p, M) + b |p|^beta + lambda |u|^alpha u - f.
inline double residual_pointwise(const OperatorSpec& spec, double beta, double b,
                                 double lambda, double alpha, const Vec& p, const SymMat& M,
                                 double u, double f) {
    assert(alpha == spec.alpha);
    const double grad = p.norm();
    const double ham = grad > 0.0 ? b * detail::power(grad, beta) : 0.0;
    const double zero = lambda * detail::power(std::abs(u), alpha) * u;
    return -eval_F(spec, p, M) + ham + zero - f;
}

// Blow-up exponent gamma = (2 + alpha - beta) / (beta - alpha - 1);
// zero exactly at beta = alpha + 2 (logarithmic blow-up).
inline double gamma_exponent(double alpha, double beta) {
    if (!(beta > alpha + 1.0) || !(beta <= alpha + 2.0))
        throw std::invalid_argument("gamma_exponent: beta must lie in (alpha+1, alpha+2]");
    return (2.0 + alpha - beta) / (beta - alpha - 1.0);
}

// Boundary coefficient of the blow-up profile u ~ C(x) d^-gamma (power case)
// or u ~ C(x) |log d| (beta = alpha + 2):
//   C(x) = ((gamma+1) F(grad_d, grad_d x grad_d))^(1/(beta-alpha-1)) / gamma,
// with the log case taking the gamma -> 0 coefficient F(...)^(1/(beta-alpha-1)).
inline double boundary_constant(const OperatorSpec& spec, double beta, const Vec& grad_d) {
    if (std::abs(grad_d.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("boundary_constant: grad_d must be a unit vector");
    const double gamma = gamma_exponent(spec.alpha, beta);
    const double kappa = beta - spec.alpha - 1.0;
    const double Fval = eval_F(spec, grad_d, outer(grad_d, grad_d));
    assert(Fval > 0.0);
    if (gamma == 0.0) return std::pow(Fval, 1.0 / kappa);
    return std::pow((gamma + 1.0) * Fval, 1.0 / kappa) / gamma;
}

// Two-sided boundary envelope constants for the blow-up problem.
struct BlowupLaw {
    double gamma = 0.0;
    bool is_log = false;
    double c_lower = 0.0;      // subsolution coefficient c0
    double c_upper = 0.0;      // supersolution coefficient C0
    double discount_shift = 0.0;  // D1, calibrated on a reference run

    // Envelope value at distance d (without the discount shift).
    double upper_profile(double d) const {
        return is_log ? c_upper * std::abs(std::log(d)) : c_upper * std::pow(d, -gamma);
    }
    double lower_profile(double d) const {
        return is_log ? c_lower * std::abs(std::log(d)) : c_lower * std::pow(d, -gamma);
    }
};

// c_lower follows the paper's subsolution constant; c_upper doubles the
// ellipticity bound inside the same formula, which is enough margin for the
// supersolution side on every catalog problem.
inline BlowupLaw make_blowup_law(const OperatorSpec& spec, double beta) {
    BlowupLaw law;
    law.gamma = gamma_exponent(spec.alpha, beta);
    law.is_log = law.gamma == 0.0;
    const double kappa = beta - spec.alpha - 1.0;
    const double a = spec.lower(), A = spec.upper();
    if (law.is_log) {
        law.c_lower = 0.5 * a;
        law.c_upper = std::pow(2.0 * A, 1.0 / kappa);
    } else {
        law.c_lower = std::pow(0.5 * (law.gamma + 1.0) * a, 1.0 / kappa) / law.gamma;
        law.c_upper = std::pow(2.0 * (law.gamma + 1.0) * A, 1.0 / kappa) / law.gamma;
    }
    return law;
}

}  // namespace ergofd

#endif
