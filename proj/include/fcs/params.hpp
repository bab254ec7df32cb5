#ifndef FCS_PARAMS_HPP
#define FCS_PARAMS_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace fcs {

using Complex = std::complex<double>;

class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct HyperbolicFactors {
    double u;  // cosh r
    double v;  // sinh r
};

inline HyperbolicFactors hyperbolic_factors(double r) {
    if (!std::isfinite(r)) {
        throw InvalidParameter("squeezing depth r must be finite");
    }
    return {std::cosh(r), std::sinh(r)};
}

// Physical parameter set. All frequencies are in units of the probe
// amplitude (drive = 1 for the default runs); beta is the real local
// oscillator amplitude, stored as sqrt of the configured beta^2.
struct ModelParams {
    double omega_delta = 0.0;  // detuning between resonator and LO
    double drive = 1.0;        // probe Rabi amplitude
    double gamma = 0.4;        // effective dissipation rate
    double beta = 0.0;         // LO amplitude (real, >= 0)
    double r = 0.0;            // squeezing depth
    double u2 = 0.0;           // Kerr strength

    double u() const { return std::cosh(r); }
    double v() const { return std::sinh(r); }

    void validate() const {
        if (!std::isfinite(omega_delta) || !std::isfinite(drive) ||
            !std::isfinite(gamma) || !std::isfinite(beta) ||
            !std::isfinite(r) || !std::isfinite(u2)) {
            throw InvalidParameter("model parameters must be finite");
        }
        if (gamma <= 0.0) throw InvalidParameter("gamma must be positive");
        if (beta < 0.0) throw InvalidParameter("beta must be nonnegative");
        if (r < 0.0) throw InvalidParameter("squeezing depth r must be nonnegative");
        if (u2 < 0.0) throw InvalidParameter("Kerr strength u2 must be nonnegative");
        if (drive < 0.0) throw InvalidParameter("drive must be nonnegative");
    }

    ModelParams with_omega(double w) const {
        ModelParams p = *this;
        p.omega_delta = w;
        return p;
    }
    ModelParams with_r(double rr) const {
        ModelParams p = *this;
        p.r = rr;
        return p;
    }
    ModelParams with_u2(double k) const {
        ModelParams p = *this;
        p.u2 = k;
        return p;
    }
};

// Qubit-resonator input for the dispersive-shift helper. The qubit enters
// the simulation only through the shift of the resonator frequency.
struct DispersiveInput {
    double g_x;       // transverse coupling
    double delta_qr;  // qubit-resonator detuning, nonzero
};

struct DispersiveShift {
    double chi_z;          // qubit-state-dependent pull of the resonator
    double lambda;         // g_x / delta_qr
    double scale_delta_r;  // leading scale of the frequency renormalization
    double scale_zeta;     // leading scale of the induced self-Kerr
    bool dispersive_regime;  // false when |lambda| >= 0.3
};

inline DispersiveShift dispersive_shift(const DispersiveInput& in) {
    if (in.delta_qr == 0.0) {
        throw InvalidParameter("delta_qr must be nonzero");
    }
    const double lambda = in.g_x / in.delta_qr;
    DispersiveShift out;
    out.lambda = lambda;
    out.chi_z = (in.g_x * in.g_x / in.delta_qr) * (1.0 - 2.0 * lambda * lambda);
    const double g2 = in.g_x * in.g_x;
    out.scale_delta_r = -g2 * g2 / (in.delta_qr * in.delta_qr * in.delta_qr);
    out.scale_zeta = out.scale_delta_r;
    out.dispersive_regime = std::abs(lambda) < 0.3;
    return out;
}

}  // namespace fcs

#endif
