#ifndef FCS_MEANFIELD_HPP
#define FCS_MEANFIELD_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>

#include "fcs/params.hpp"

// Non-Hermitian mean-field theory of the tilted generator. The generalized
// density matrix is displaced by four independent amplitudes (front/back,
// annihilation/creation); requiring all linear fluctuation terms to vanish
// yields a 4x4 stationarity system, and the remaining scalar is the
// cumulant-generating-function growth rate per unit time.

namespace fcs {

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MeanFields {
    Complex alpha_f{0.0, 0.0};
    Complex alpha_f_plus{0.0, 0.0};
    Complex alpha_b{0.0, 0.0};
    Complex alpha_b_plus{0.0, 0.0};

    Complex xi_f(double u, double v) const { return u * alpha_f - v * alpha_f_plus; }
    Complex xi_b(double u, double v) const { return u * alpha_b - v * alpha_b_plus; }
    Complex eta_f(double u, double v) const { return u * alpha_f_plus - v * alpha_f; }
    Complex eta_b(double u, double v) const { return u * alpha_b_plus - v * alpha_b; }
};

struct CoefficientSet {
    Complex A, A_plus, B, B_plus;  // linear-fluctuation coefficients
    Complex K;                     // scalar CGF rate at these fields

    double max_residual() const {
        return std::max(std::max(std::abs(A), std::abs(A_plus)),
                        std::max(std::abs(B), std::abs(B_plus)));
    }
};

namespace detail {

// Core coefficient algebra in terms of the dissipator phase factors
// e_j = exp(-i chi_j) of the two half-weight ports. wf/wb are the front and
// back detunings (they differ only for the deformed QFI generator).
inline CoefficientSet coefficients_core(const ModelParams& p, Complex e1, Complex e2,
                                        double wf, double wb, Complex beta,
                                        const MeanFields& f) {
    const double u = p.u();
    const double v = p.v();
    const double g = p.gamma;
    const double sg = std::sqrt(g);
    const double om = p.drive;
    const Complex i(0.0, 1.0);
    const Complex ep = 0.5 * (e1 + e2);
    const Complex em = 0.5 * (e1 - e2);

    const Complex xf = f.xi_f(u, v);
    const Complex xb = f.xi_b(u, v);
    const Complex ef = f.eta_f(u, v);
    const Complex eb = f.eta_b(u, v);
    const Complex af = f.alpha_f, afp = f.alpha_f_plus;
    const Complex ab = f.alpha_b, abp = f.alpha_b_plus;

    CoefficientSet c;
    c.A = -i * (wf * af - i * om) - i * p.u2 * afp * af * af
          - g * ep * v * eb - 0.5 * g * (u * xf - v * ef)
          - sg * em * i * v * std::conj(beta);
    c.A_plus = -i * (wf * afp + i * om) - i * p.u2 * afp * afp * af
               + g * ep * u * eb - 0.5 * g * (-v * xf + u * ef)
               + sg * em * i * u * std::conj(beta);
    c.B = i * (wb * ab - i * om) + i * p.u2 * abp * ab * ab
          + g * ep * u * xf - 0.5 * g * (u * xb - v * eb)
          - sg * em * i * u * beta;
    c.B_plus = i * (wb * abp + i * om) + i * p.u2 * abp * abp * ab
               - g * ep * v * xf - 0.5 * g * (-v * xb + u * eb)
               + sg * em * i * v * beta;
    c.K = -i * (wf * afp * af - i * om * afp + i * om * af)
          + i * (wb * abp * ab - i * om * abp + i * om * ab)
          - i * 0.5 * p.u2 * afp * afp * af * af
          + i * 0.5 * p.u2 * abp * abp * ab * ab
          + g * (ep * xf * eb - 0.5 * ef * xf - 0.5 * eb * xb)
          + sg * em * (i * std::conj(beta) * xf - i * beta * eb)
          + std::norm(beta) * (ep - 1.0);
    return c;
}

}  // namespace detail

// Linear-fluctuation coefficients and scalar rate of the tilted generator
// (half-weight dissipators, LO amplitudes -+ i beta), expanded around the
// given mean fields. Kerr terms are the linear part of the displaced quartic.
inline CoefficientSet coefficients(const ModelParams& p, double chi1, double chi2,
                                   const MeanFields& f) {
    const Complex i(0.0, 1.0);
    return detail::coefficients_core(p, std::exp(-i * chi1), std::exp(-i * chi2),
                                     p.omega_delta, p.omega_delta,
                                     Complex(p.beta, 0.0), f);
}

// Deformed-generator analogue used for the quantum Fisher information: the
// forward/backward detunings split as omega +- delta and the two LO-carrying
// half-weight dissipators collapse into a single dissipator (beta drops out,
// which is the same structure as chi1 = chi2 = 0 with beta = 0).
inline CoefficientSet qfi_coefficients(const ModelParams& p, double delta,
                                       const MeanFields& f) {
    return detail::coefficients_core(p, Complex(1.0, 0.0), Complex(1.0, 0.0),
                                     p.omega_delta + delta, p.omega_delta - delta,
                                     Complex(0.0, 0.0), f);
}

struct SolveResult {
    MeanFields fields;
    int newton_iterations = 0;
    double residual = 0.0;
};

using CoefficientFn = std::function<CoefficientSet(const MeanFields&)>;

namespace detail {

inline Eigen::Vector4cd residual_vec(const CoefficientSet& c) {
    Eigen::Vector4cd r;
    r << c.A, c.A_plus, c.B, c.B_plus;
    return r;
}

inline MeanFields from_vec(const Eigen::Vector4cd& x) {
    return MeanFields{x(0), x(1), x(2), x(3)};
}

inline Eigen::Vector4cd to_vec(const MeanFields& f) {
    Eigen::Vector4cd x;
    x << f.alpha_f, f.alpha_f_plus, f.alpha_b, f.alpha_b_plus;
    return x;
}

// For u2 = 0 the coefficients are affine in the fields; extract the 4x4
// complex matrix by probing unit fields and solve directly.
inline SolveResult solve_linear(const CoefficientFn& coef) {
    const Eigen::Vector4cd r0 = residual_vec(coef(MeanFields{}));
    Eigen::Matrix4cd m;
    for (int k = 0; k < 4; ++k) {
        Eigen::Vector4cd e = Eigen::Vector4cd::Zero();
        e(k) = 1.0;
        m.col(k) = residual_vec(coef(from_vec(e))) - r0;
    }
    Eigen::FullPivLU<Eigen::Matrix4cd> lu(m);
    if (!lu.isInvertible()) {
        throw DegenerateSystemError("mean-field stationarity system is singular");
    }
    SolveResult res;
    res.fields = from_vec(lu.solve((-r0).eval()));
    res.residual = residual_vec(coef(res.fields)).cwiseAbs().maxCoeff();
    return res;
}

// Newton iteration with finite-difference Jacobian. The coefficient maps are
// holomorphic polynomials in the four fields, so a single real-direction
// difference per variable is sufficient.
inline SolveResult solve_newton(const CoefficientFn& coef, MeanFields seed,
                                double tol, int max_iter) {
    Eigen::Vector4cd x = to_vec(seed);
    Eigen::Vector4cd r = residual_vec(coef(from_vec(x)));
    const double h = 1e-7;
    SolveResult res;
    for (int it = 0; it < max_iter; ++it) {
        if (r.cwiseAbs().maxCoeff() <= tol) {
            res.fields = from_vec(x);
            res.newton_iterations = it;
            res.residual = r.cwiseAbs().maxCoeff();
            return res;
        }
        Eigen::Matrix4cd jac;
        for (int k = 0; k < 4; ++k) {
            Eigen::Vector4cd xp = x;
            xp(k) += h;
            jac.col(k) = (residual_vec(coef(from_vec(xp))) - r) / h;
        }
        x -= jac.fullPivLu().solve(r);
        r = residual_vec(coef(from_vec(x)));
    }
    throw ConvergenceError("mean-field Newton iteration did not converge, last residual " +
                           std::to_string(r.cwiseAbs().maxCoeff()));
}

// Solve A = A+ = B = B+ = 0 for a family of coefficient functions indexed by
// the Kerr strength, with geometric continuation from the linear solution.
inline SolveResult solve_stationary(
    const std::function<CoefficientFn(double /*u2*/)>& family, double u2,
    double tol, int max_iter) {
    SolveResult res = solve_linear(family(0.0));
    if (u2 == 0.0) return res;
    constexpr int kSteps = 7;  // u2/64, u2/32, ..., u2
    int total_iter = 0;
    for (int s = kSteps - 1; s >= 0; --s) {
        const double u2_step = u2 / static_cast<double>(1 << s);
        res = solve_newton(family(u2_step), res.fields, tol, max_iter);
        total_iter += res.newton_iterations;
    }
    res.newton_iterations = total_iter;
    return res;
}

}  // namespace detail

inline constexpr double kNewtonTol = 1e-12;
inline constexpr int kNewtonMaxIter = 50;

inline SolveResult solve_fields(const ModelParams& p, double chi1, double chi2) {
    p.validate();
    auto family = [&](double u2) -> CoefficientFn {
        ModelParams q = p;
        q.u2 = u2;
        return [q, chi1, chi2](const MeanFields& f) { return coefficients(q, chi1, chi2, f); };
    };
    return detail::solve_stationary(family, p.u2, kNewtonTol, kNewtonMaxIter);
}

inline SolveResult solve_qfi_fields(const ModelParams& p, double delta) {
    p.validate();
    auto family = [&](double u2) -> CoefficientFn {
        ModelParams q = p;
        q.u2 = u2;
        return [q, delta](const MeanFields& f) { return qfi_coefficients(q, delta, f); };
    };
    return detail::solve_stationary(family, p.u2, kNewtonTol, kNewtonMaxIter);
}

// CGF rate K evaluated at the stationary mean fields, general counting-field
// pair. For the photon-number difference use (chi, -chi).
inline Complex cgf_rate(const ModelParams& p, double chi1, double chi2) {
    const SolveResult res = solve_fields(p, chi1, chi2);
    return coefficients(p, chi1, chi2, res.fields).K;
}

inline Complex cgf_rate_difference(const ModelParams& p, double chi) {
    return cgf_rate(p, chi, -chi);
}

// Closed form of the CGF rate for the linear model (u2 = 0), real beta,
// chi1 = -chi2 = chi. The removable chi -> 0 singularity in the odd
// detuning powers is handled by evaluating sin^2(chi/2) cot(chi/2) as
// sin(chi/2) cos(chi/2).
inline Complex closed_form_K(const ModelParams& p, double chi) {
    p.validate();
    if (p.u2 != 0.0) throw InvalidParameter("closed_form_K requires u2 = 0");
    const double w = p.omega_delta;
    const double g = p.gamma;
    const double b2 = p.beta * p.beta;
    const double om = p.drive;
    const double er = std::exp(p.r);
    const double e2r = er * er;
    const double e4r = e2r * e2r;
    const Complex i(0.0, 1.0);

    const double s2 = std::sin(0.5 * chi) * std::sin(0.5 * chi);
    const double sc = std::sin(0.5 * chi) * std::cos(0.5 * chi);  // = s2 * cot(chi/2)
    const double sx = std::sin(chi);
    const double cx = std::cos(chi);

    const double f2 = 8.0 * b2 * g * g * (e4r - 1.0) * cx + 8.0 * b2 * g * g * e4r +
                      16.0 * g * om * om * e2r;
    const double f0 = b2 * g * g * g * g + 4.0 * g * g * g * om * om / e2r;

    // numerator: -2 sin^2(chi/2) [16 b^2 w^4 + f3 w^3 + f2 w^2 + f1 w + f0]
    // with f3, f1 carrying cot(chi/2) factors folded into sc.
    Complex num = -2.0 * s2 * (16.0 * b2 * w * w * w * w + f2 * w * w + f0);
    num += -2.0 * w * w * w * (-32.0 * i * p.beta * std::sqrt(g) * om * er) * sc;
    num += -2.0 * w * (-8.0 * i * p.beta * std::pow(g, 2.5) * om) *
           (er * cx * sc + (1.0 / (er * er * er)) * sx * s2);

    const double d1 = 4.0 * w * w + g * g;
    const double sh2r = std::sinh(2.0 * p.r);
    const double den = 16.0 * w * w * g * g * sh2r * sh2r * sx * sx + d1 * d1;
    return num / den;
}

// The scalar deformed rate F_delta at its stationary fields.
inline Complex qfi_scalar(const ModelParams& p, double delta) {
    const SolveResult res = solve_qfi_fields(p, delta);
    return qfi_coefficients(p, delta, res.fields).K;
}

}  // namespace fcs

#endif
