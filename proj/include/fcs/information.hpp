#ifndef FCS_INFORMATION_HPP
#define FCS_INFORMATION_HPP

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcs/meanfield.hpp"
#include "fcs/params.hpp"

// Information layer: cumulant extraction from a CGF provider, cumulative and
// quantum Fisher information, quantum efficiency, and the reconstructed
// distribution of the accumulated photon-number difference.

namespace fcs {

class InvalidVarianceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UndefinedEfficiencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class WindowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Scaled cumulant generating function rate chi -> K(chi).
using CgfProvider = std::function<Complex(double)>;

enum class CumulantSource {
    MeanfieldClosed,
    MeanfieldGeneral,
    NumericEigenvalue,
    NumericPropagation,
};

struct CumulantSet {
    std::vector<double> rates;  // kappa-dot_1..L per unit time
    double max_imag_residual = 0.0;
    CumulantSource source = CumulantSource::MeanfieldGeneral;
};

// Differentiation steps pinned for bit-for-bit reproducible regression values.
inline constexpr double kChiStep = 1e-2;
inline constexpr double kOmegaStepFactor = 1e-4;  // times gamma

namespace detail {

// Central stencils of second-order accuracy for derivative orders 1..6.
inline Complex central_derivative(const CgfProvider& f, int order, double h) {
    auto at = [&](double x) {
        const Complex v = f(x);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            throw InvalidParameter("non-finite CGF sample at chi = " + std::to_string(x));
        }
        return v;
    };
    const double h2 = h * h;
    switch (order) {
        case 1:
            return (at(h) - at(-h)) / (2.0 * h);
        case 2:
            return (at(h) - 2.0 * at(0.0) + at(-h)) / h2;
        case 3:
            return (at(2 * h) - 2.0 * at(h) + 2.0 * at(-h) - at(-2 * h)) / (2.0 * h * h2);
        case 4:
            return (at(-2 * h) - 4.0 * at(-h) + 6.0 * at(0.0) - 4.0 * at(h) + at(2 * h)) /
                   (h2 * h2);
        case 5:
            return (-at(-3 * h) + 4.0 * at(-2 * h) - 5.0 * at(-h) + 5.0 * at(h) -
                    4.0 * at(2 * h) + at(3 * h)) /
                   (2.0 * h * h2 * h2);
        case 6:
            return (at(-3 * h) - 6.0 * at(-2 * h) + 15.0 * at(-h) - 20.0 * at(0.0) +
                    15.0 * at(h) - 6.0 * at(2 * h) + at(3 * h)) /
                   (h2 * h2 * h2);
        default:
            throw InvalidParameter("derivative order must be in 1..6");
    }
}

inline Complex richardson_derivative(const CgfProvider& f, int order, double h) {
    const Complex dh = central_derivative(f, order, h);
    const Complex dh2 = central_derivative(f, order, 0.5 * h);
    return (4.0 * dh2 - dh) / 3.0;
}

}  // namespace detail

// Cumulant rates as derivatives of K with respect to s = -i chi at 0:
// kappa-dot_l = i^l d^l K / d chi^l |_0.
inline CumulantSet cumulants(const CgfProvider& cgf, int order,
                             CumulantSource source = CumulantSource::MeanfieldGeneral,
                             double chi_step = kChiStep) {
    if (order < 1 || order > 6) throw InvalidParameter("cumulant order must be in 1..6");
    const Complex i(0.0, 1.0);
    CumulantSet out;
    out.source = source;
    Complex il(1.0, 0.0);
    for (int l = 1; l <= order; ++l) {
        il *= i;
        // high-order differences are round-off limited at a fixed step, so
        // widen the stencil with the order; the Richardson pass keeps the
        // truncation error at fourth order in the step
        const double h = chi_step * std::max(1, l - 1);
        const Complex d = il * detail::richardson_derivative(cgf, l, h);
        out.rates.push_back(d.real());
        out.max_imag_residual = std::max(out.max_imag_residual, std::abs(d.imag()));
    }
    return out;
}

// CGF rate of the photon-number difference from the stationary mean-field
// solver; this is the default analytic provider.
inline CgfProvider meanfield_cgf(const ModelParams& p) {
    return [p](double chi) { return cgf_rate_difference(p, chi); };
}

inline CumulantSet meanfield_cumulants(const ModelParams& p, int order) {
    return cumulants(meanfield_cgf(p), order, CumulantSource::MeanfieldGeneral);
}

// Cumulant provider abstraction so the Fisher routines can run on either the
// mean-field solver or the numeric engine.
using CumulantProvider = std::function<CumulantSet(const ModelParams&, int)>;

inline CumulantProvider meanfield_provider() {
    return [](const ModelParams& p, int order) { return meanfield_cumulants(p, order); };
}

// Long-time Gaussian-limit Fisher rate (d kappa-dot_1 / d omega)^2 / kappa-dot_2.
inline double cfi_gaussian(const CumulantProvider& provider, const ModelParams& p,
                           double omega_step = 0.0) {
    const double h = omega_step > 0.0 ? omega_step : kOmegaStepFactor * p.gamma;
    const CumulantSet base = provider(p, 2);
    const double k2 = base.rates[1];
    if (!(k2 > 0.0)) {
        throw InvalidVarianceError("variance rate must be positive, got " + std::to_string(k2));
    }
    auto k1_at = [&](double w) { return provider(p.with_omega(w), 1).rates[0]; };
    auto slope = [&](double step) {
        return (k1_at(p.omega_delta + step) - k1_at(p.omega_delta - step)) / (2.0 * step);
    };
    const double dh = slope(h);
    const double dh2 = slope(0.5 * h);
    const double dk1 = (4.0 * dh2 - dh) / 3.0;
    return dk1 * dk1 / k2;
}

// Closed-form Gaussian-limit Fisher rate, valid without the Kerr term.
inline double cfi_closed_form(const ModelParams& p) {
    p.validate();
    if (p.u2 != 0.0) throw InvalidParameter("closed form requires u2 = 0");
    const double w = p.omega_delta, g = p.gamma, om = p.drive;
    const double b2 = p.beta * p.beta;
    const double e2r = std::exp(2.0 * p.r);
    const double phi = 16.0 * b2 * w * w + 8.0 * b2 * g * g * (2.0 * e2r * e2r - 1.0) +
                       16.0 * g * om * om * e2r;
    const double zero = g * g - 4.0 * w * w;
    const double num = 64.0 * b2 * g * zero * zero * om * om * e2r;
    const double wall = 4.0 * w * w + g * g;
    const double den =
        wall * wall * (g * g * g * g * b2 + 4.0 * om * om * g * g * g / e2r + w * w * phi);
    return num / den;
}

inline double qfi_closed_form(const ModelParams& p) {
    p.validate();
    if (p.u2 != 0.0) throw InvalidParameter("closed form requires u2 = 0");
    const double wall = 4.0 * p.omega_delta * p.omega_delta + p.gamma * p.gamma;
    return 64.0 * p.drive * p.drive * p.gamma * std::exp(2.0 * p.r) / (wall * wall);
}

// QFI rate from the mean-field deformed scalar, central second difference in
// delta with one Richardson refinement.
inline double qfi_rate_meanfield(const ModelParams& p, double delta_step = 0.0) {
    const double d0 = delta_step > 0.0 ? delta_step : 1e-3 * p.gamma;
    auto f = [&](double d) { return qfi_scalar(p, d).real(); };
    auto second = [&](double h) { return (f(h) + f(-h) - 2.0 * f(0.0)) / (h * h); };
    const double dh = second(d0);
    const double dh2 = second(0.5 * d0);
    return -(4.0 * dh2 - dh) / 3.0;
}

inline double quantum_efficiency(double cfi_rate, double qfi_rate) {
    if (!(qfi_rate > 0.0)) {
        throw UndefinedEfficiencyError("efficiency undefined at zero QFI");
    }
    return cfi_rate / qfi_rate;
}

inline double quantum_efficiency(const ModelParams& p) {
    return quantum_efficiency(cfi_closed_form(p), qfi_closed_form(p));
}

struct FisherReport {
    double cfi_rate = 0.0;
    double qfi_rate = 0.0;
    double eta = 0.0;
    std::string cfi_method, qfi_method;
};

// --- distribution of the accumulated photon-number difference ---------------

struct CountDistribution {
    std::vector<long long> support;     // offsets n- (center already applied)
    std::vector<double> probabilities;  // clipped and renormalized
    double time = 0.0;
    long long center = 0;  // ~ round(kappa-dot_1 t)
    double raw_mass = 0.0;  // DFT sum before renormalization

    double mean() const {
        double m = 0.0;
        for (size_t k = 0; k < support.size(); ++k) m += support[k] * probabilities[k];
        return m;
    }
    double variance() const {
        const double m = mean();
        double v = 0.0;
        for (size_t k = 0; k < support.size(); ++k) {
            const double d = support[k] - m;
            v += d * d * probabilities[k];
        }
        return v;
    }
};

namespace detail {

// Fourier inversion of exp(K t) on a uniform chi grid over [-pi, pi):
// p(center + n) for n in [-half, half].
inline std::vector<double> invert_cgf(const CgfProvider& cgf, double t, long long center,
                                      long long half, int n_chi) {
    std::vector<Complex> samples(n_chi);
    const Complex i(0.0, 1.0);
    for (int k = 0; k < n_chi; ++k) {
        const double chi = -M_PI + 2.0 * M_PI * k / n_chi;
        samples[k] = std::exp(cgf(chi) * t + i * chi * static_cast<double>(center));
    }
    std::vector<double> p(2 * half + 1);
    for (long long n = -half; n <= half; ++n) {
        Complex acc = 0.0;
        for (int k = 0; k < n_chi; ++k) {
            const double chi = -M_PI + 2.0 * M_PI * k / n_chi;
            acc += samples[k] * std::exp(i * chi * static_cast<double>(n));
        }
        p[n + half] = (acc / static_cast<double>(n_chi)).real();
    }
    return p;
}

}  // namespace detail

inline CountDistribution distribution(const CgfProvider& cgf, const ModelParams& p, double t,
                                      int n_chi = 256) {
    p.validate();
    if (n_chi < 256 || (n_chi & (n_chi - 1)) != 0) {
        throw InvalidParameter("n_chi must be a power of two, at least 256");
    }
    const CumulantSet c = cumulants(cgf, 2);
    if (!(c.rates[1] > 0.0)) throw InvalidVarianceError("variance rate must be positive");
    const double width = std::sqrt(c.rates[1] * t);
    if (width < 3.0) throw InvalidParameter("horizon too short: distribution width below 3");

    CountDistribution out;
    out.time = t;
    out.center = std::llround(c.rates[0] * t);
    const long long half =
        static_cast<long long>(std::ceil(std::max(8.0 * width, 64.0)));
    while (n_chi < 2 * half + 1) n_chi *= 2;

    std::vector<double> raw = detail::invert_cgf(cgf, t, out.center, half, n_chi);
    if (std::abs(raw.front()) > 1e-6 || std::abs(raw.back()) > 1e-6) {
        throw WindowError("tail mass above 1e-6 at the window edge; enlarge the window");
    }
    out.raw_mass = 0.0;
    for (double v : raw) out.raw_mass += v;
    for (double& v : raw) v = std::max(v, 0.0);  // clip FFT ringing
    double mass = 0.0;
    for (double v : raw) mass += v;
    out.support.reserve(raw.size());
    out.probabilities.reserve(raw.size());
    for (long long n = -half; n <= half; ++n) {
        out.support.push_back(out.center + n);
        out.probabilities.push_back(raw[n + half] / mass);
    }
    return out;
}

// Direct Fisher information of the finite-time count distribution,
// I^C = sum_n p_n (d ln p_n / d omega)^2, per unit time. The perturbed
// distributions share the window chosen at the base point.
inline double cfi_from_distribution(const std::function<CgfProvider(const ModelParams&)>& make,
                                    const ModelParams& p, double t, double omega_step = 0.0,
                                    int n_chi = 256) {
    const double h = omega_step > 0.0 ? omega_step : kOmegaStepFactor * p.gamma;
    const CountDistribution base = distribution(make(p), p, t, n_chi);
    const long long half = (static_cast<long long>(base.support.size()) - 1) / 2;
    int n = n_chi;
    while (n < 2 * half + 1) n *= 2;
    const std::vector<double> plus =
        detail::invert_cgf(make(p.with_omega(p.omega_delta + h)), t, base.center, half, n);
    const std::vector<double> minus =
        detail::invert_cgf(make(p.with_omega(p.omega_delta - h)), t, base.center, half, n);
    double fisher = 0.0;
    for (size_t k = 0; k < base.probabilities.size(); ++k) {
        const double p0 = base.probabilities[k];
        if (p0 < 1e-12) continue;
        const double dp = (plus[k] - minus[k]) / (2.0 * h);
        fisher += dp * dp / p0;
    }
    return fisher / t;
}

}  // namespace fcs

#endif
