#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <utility>

#include "pam/errors.hpp"
#include "pam/integrate.hpp"
#include "pam/jwkb.hpp"
#include "pam/milne.hpp"
#include "pam/potentials.hpp"

namespace pam {

/// A member of the gauge family: the local rotation rate beta(r) and its
/// derivative (needed by the expanded residual operator).
struct GaugeFunction {
    std::function<double(double)> beta;
    std::function<double(double)> beta_prime;
    std::string description;
};

inline GaugeFunction gauge_zero() {
    return {[](double) { return 0.0; }, [](double) { return 0.0; }, "zero"};
}

/// beta = c / alpha^2: c = 1 rotates the amplitude into the travelling wave.
inline GaugeFunction gauge_scaled_connection(const MilneSolution& sol, double c = 1.0) {
    auto alpha = std::make_shared<Trace>(sol.alpha);
    return {[alpha, c](double r) {
                const double a = alpha->eval(r);
                return c / (a * a);
            },
            [alpha, c](double r) {
                const double a = alpha->eval(r);
                const double ap = alpha->eval_deriv(r);
                return -2.0 * c * ap / (a * a * a);
            },
            c == 1.0 ? "milne-inverse-square" : ("scaled:" + std::to_string(c))};
}

inline GaugeFunction gauge_damped_sine() {
    return {[](double r) { return std::exp(-r) * std::sin(r); },
            [](double r) { return std::exp(-r) * (std::cos(r) - std::sin(r)); },
            "damped-sine"};
}

/// psi_beta = alpha exp(i int beta) with the companion connection
/// A_beta = 1/alpha^2 - beta.
struct GaugeWave {
    ComplexWaveTrace psi;
    Trace connection;
};

inline GaugeWave gauge_transform(const MilneSolution& sol, const GaugeFunction& gf,
                                 const IntegratorConfig& cfg = {}) {
    const Trace& alpha = sol.alpha;
    Trace B = quadrature_trace([&](double r) { return gf.beta(r); }, alpha.r_min(),
                               alpha.r_max(), cfg, alpha.nodes);
    GaugeWave out;
    out.psi.nodes = alpha.nodes;
    out.connection.nodes = alpha.nodes;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const double r = alpha.nodes[i];
        const double a = alpha.values[i];
        const double ap = alpha.derivs[i];
        const double b = gf.beta(r);
        const std::complex<double> phase = std::polar(1.0, B.eval(r));
        out.psi.values.push_back(a * phase);
        out.psi.derivs.push_back(std::complex<double>(ap, b * a) * phase);
        out.connection.values.push_back(1.0 / (a * a) - b);
        out.connection.derivs.push_back(-2.0 * ap / (a * a * a) - gf.beta_prime(r));
    }
    out.psi.phase_integral = B.resampled(alpha.nodes);
    return out;
}

struct GaugeResidualReport {
    double max_abs_residual = 0.0;
    double max_imag_residual = 0.0;
    double scale = 0.0;
    std::string beta_tag;
};

/// Residual of the all-beta identity
/// [(d/dr + i/alpha^2 - i beta)^2 + w] alpha exp(i int beta) = 0,
/// with the operator expanded analytically into alpha, alpha', alpha'',
/// beta, beta' terms before substituting trace data. The real part reduces
/// to the amplitude-equation residual; the imaginary terms cancel
/// identically for every beta.
inline GaugeResidualReport gauge_residual(const MilneSolution& sol, const GaugeFunction& gf,
                                          const ScatteringContext& ctx) {
    GaugeResidualReport rep;
    rep.beta_tag = gf.description;
    for (std::size_t i = 0; i + 1 < sol.alpha.size(); ++i) {
        const double h = sol.alpha.nodes[i + 1] - sol.alpha.nodes[i];
        if (h < 1e-12) continue; // twin nodes at a potential step
        const double m = 0.5 * (sol.alpha.nodes[i] + sol.alpha.nodes[i + 1]);
        const double a = sol.alpha.eval(m);
        const double ap = sol.alpha.eval_deriv(m);
        const double app = sol.alpha_prime.eval_deriv(m);
        const double w = local_wavenumber_sq(ctx, m);
        const double b = gf.beta(m);
        const double bp = gf.beta_prime(m);
        const double ac = 1.0 / (a * a) - b;
        const double acp = -2.0 * ap / (a * a * a) - bp;

        const double re = app - b * b * a - 2.0 * ac * b * a - ac * ac * a + w * a;
        const double im = bp * a + 2.0 * b * ap + acp * a + 2.0 * ac * ap;

        rep.max_abs_residual = std::max(rep.max_abs_residual, std::hypot(re, im));
        rep.max_imag_residual = std::max(rep.max_imag_residual, std::abs(im));
        for (double term :
             {std::abs(app), std::abs(w * a), std::abs(b * b * a), std::abs(2.0 * ac * b * a),
              std::abs(ac * ac * a), std::abs(bp * a), std::abs(2.0 * b * ap),
              std::abs(acp * a), std::abs(2.0 * ac * ap)})
            rep.scale = std::max(rep.scale, term);
    }
    return rep;
}

/// Imaginary part of (d/dr + iA)^2 alpha with A = c / alpha^power, relative
/// to the larger of its two terms. For power = 2 the combination
/// 2 A alpha' + A' alpha vanishes identically (A alpha^2 is constant);
/// any other power leaves a finite remainder wherever alpha' != 0.
inline double imaginary_cancellation_check(const MilneSolution& sol, double scale_c,
                                           int power = 2) {
    if (scale_c == 0.0) throw InvalidConfig("imaginary_cancellation_check: c must be nonzero");
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.alpha.size(); ++i) {
        const double a = sol.alpha.values[i];
        const double ap = sol.alpha.derivs[i];
        const double A = scale_c / std::pow(a, power);
        const double Ap = -power * scale_c * ap / std::pow(a, power + 1);
        const double im = 2.0 * A * ap + Ap * a;
        const double scale = std::max(std::abs(2.0 * A * ap), std::abs(Ap * a));
        if (scale > 0.0) worst = std::max(worst, std::abs(im) / scale);
    }
    return worst;
}

} // namespace pam
