#ifndef FCS_ODE_HPP
#define FCS_ODE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "fcs/fock.hpp"

namespace fcs {

class StepSizeUnderflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Stack of equally-sized complex matrices evolving under one coupled linear
// system (the generalized state and its counting-field derivatives).
using MatrixStack = std::vector<Matrix>;

inline double stack_max_norm(const MatrixStack& s) {
    double m = 0.0;
    for (const auto& x : s) m = std::max(m, x.cwiseAbs().maxCoeff());
    return m;
}

// Dormand-Prince 5(4) with per-step error control on the max norm.
// rhs(state, out) must write the derivative into out (same shapes).
// observer, when set, is called after every accepted step.
inline void integrate_rk45(
    const std::function<void(const MatrixStack&, MatrixStack&)>& rhs,
    MatrixStack& y, double t0, double t1, double tol,
    const std::function<void(double, const MatrixStack&)>& observer = {}) {
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                        e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                        e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

    const size_t n = y.size();
    auto zeros_like = [&]() {
        MatrixStack s(n);
        for (size_t i = 0; i < n; ++i) s[i] = Matrix::Zero(y[i].rows(), y[i].cols());
        return s;
    };
    MatrixStack k1 = zeros_like(), k2 = zeros_like(), k3 = zeros_like(), k4 = zeros_like(),
                k5 = zeros_like(), k6 = zeros_like(), k7 = zeros_like();
    MatrixStack tmp = zeros_like(), ynew = zeros_like();

    double t = t0;
    double h = std::min(0.1, (t1 - t0) * 0.01);
    const double h_min = (t1 - t0) * 1e-12;
    bool have_k1 = false;

    while (t < t1) {
        h = std::min(h, t1 - t);
        if (!have_k1) {
            rhs(y, k1);
            have_k1 = true;
        }
        for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        rhs(tmp, k2);
        for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(tmp, k3);
        for (size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(tmp, k4);
        for (size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(tmp, k5);
        for (size_t i = 0; i < n; ++i)
            tmp[i] = y[i] +
                     h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(tmp, k6);
        for (size_t i = 0; i < n; ++i)
            ynew[i] = y[i] +
                      h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(ynew, k7);

        // Relative error per stack member; the moment derivatives grow
        // polynomially in t while the base state stays O(1), so a shared
        // scale would starve the small members.
        double err = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double e_i = (h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                     e6 * k6[i] + e7 * k7[i]))
                                   .cwiseAbs()
                                   .maxCoeff();
            const double scale_i = std::max(1.0, y[i].cwiseAbs().maxCoeff());
            err = std::max(err, e_i / scale_i);
        }
        const double tol_step = tol * h;  // error budget proportional to step
        if (err <= tol_step || h <= h_min * 2.0) {
            t += h;
            std::swap(y, ynew);
            std::swap(k1, k7);  // FSAL
            if (observer) observer(t, y);
        } else {
            have_k1 = true;  // k1 still valid for the rejected point
        }
        const double grow =
            (err > 0.0) ? 0.9 * std::pow(tol_step / err, 0.2) : 5.0;
        h *= std::min(5.0, std::max(0.2, grow));
        if (h < h_min) throw StepSizeUnderflow("integrator step size underflow");
    }
    (void)c2; (void)c3; (void)c4; (void)c5;
}

}  // namespace fcs

#endif
