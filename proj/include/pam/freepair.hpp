#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <span>

#include "pam/errors.hpp"
#include "pam/integrate.hpp"
#include "pam/potentials.hpp"

namespace pam {

/// Free solutions S_l, C_l of the barrier equation with unit Wronskian
/// S C' - S' C = 1, in the sign convention S_0 = sin x, C_0 = -cos x
/// (so C lags S by pi/2 asymptotically: S ~ sin(x - l pi/2),
/// C ~ -cos(x - l pi/2)).
struct RiccatiBessel {
    double S;
    double Sp;
    double C;
    double Cp;
};

namespace detail {

// Ascending series for the regular solution; used below the recurrence
// switch where upward recurrence loses absolute accuracy.
inline void riccati_regular_series(int ell, double x, double& S, double& Sp) {
    double dfact = 1.0; // (2l+1)!!
    for (int j = 1; j <= 2 * ell + 1; j += 2) dfact *= j;
    const double x2 = x * x;
    double term = std::pow(x, ell + 1) / dfact;
    double sum = term, dsum = (ell + 1) * term;
    for (int m = 1; m < 60; ++m) {
        term *= -0.5 * x2 / (m * (2.0 * (ell + m) + 1.0));
        sum += term;
        dsum += (ell + 1 + 2 * m) * term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    S = sum;
    Sp = dsum / x;
}

} // namespace detail

/// Riccati-Bessel pair for l in 0..6 by upward recurrence from the l = 0, 1
/// closed forms. The regular function switches to its ascending series for
/// x below l, where the recurrence cancellation would cost more than the
/// 1e-10 budget.
inline RiccatiBessel riccati_bessel(int ell, double x) {
    if (ell < 0 || ell > 6) throw UnsupportedEll("riccati_bessel: ell must lie in 0..6");
    if (!(x > 0.0)) throw NonPositiveArgument("riccati_bessel: x must be > 0");

    const double sx = std::sin(x), cx = std::cos(x);
    double S0 = sx, C0 = -cx;
    double S0p = cx, C0p = sx;
    if (ell == 0) return {S0, S0p, C0, C0p};

    double S1 = sx / x - cx, C1 = -cx / x - sx;
    double S1p = S0 - S1 / x, C1p = C0 - C1 / x;
    if (ell == 1) return {S1, S1p, C1, C1p};

    double Cm = C0, Cc = C1, Sm = S0, Sc = S1;
    for (int l = 1; l < ell; ++l) {
        const double f = (2.0 * l + 1.0) / x;
        const double Cn = f * Cc - Cm;
        Cm = Cc;
        Cc = Cn;
        const double Sn = f * Sc - Sm;
        Sm = Sc;
        Sc = Sn;
    }
    double S = Sc, Sp = Sm - ell / x * Sc;
    if (x < static_cast<double>(ell)) detail::riccati_regular_series(ell, x, S, Sp);
    const double C = Cc, Cp = Cm - ell / x * Cc;
    return {S, Sp, C, Cp};
}

/// Regular/irregular reference pair with the fixed Wronskian 2/pi. The pair
/// may come from the free field (below) or from a Milne solution of a
/// long-range problem; callers only rely on this interface.
struct BasePair {
    std::function<double(double)> f, fp, g, gp;
    double wronskian = 2.0 / std::numbers::pi;
    int ell = 0;
    double k = 1.0;

    [[nodiscard]] double wronskian_at(double r) const {
        return f(r) * gp(r) - fp(r) * g(r);
    }
};

/// Energy-normalized free pair: f = sqrt(2/(pi k)) S_l(kr),
/// g = sqrt(2/(pi k)) C_l(kr); W(f, g) = 2/pi.
inline BasePair energy_normalized_pair(int ell, double energy) {
    if (ell < 0 || ell > 6) throw UnsupportedEll("energy_normalized_pair: ell must lie in 0..6");
    if (!(energy > 0.0)) throw NonPositiveEnergy("energy_normalized_pair: E must be > 0");
    const double k = std::sqrt(energy);
    const double norm = std::sqrt(2.0 / (std::numbers::pi * k));
    BasePair p;
    p.ell = ell;
    p.k = k;
    p.f = [ell, k, norm](double r) { return norm * riccati_bessel(ell, k * r).S; };
    p.fp = [ell, k, norm](double r) { return norm * k * riccati_bessel(ell, k * r).Sp; };
    p.g = [ell, k, norm](double r) { return norm * riccati_bessel(ell, k * r).C; };
    p.gp = [ell, k, norm](double r) { return norm * k * riccati_bessel(ell, k * r).Cp; };
    return p;
}

/// Closed-form s-wave phase shift of the attractive square well, on the
/// branch that is continuous in E and vanishes as E -> infinity.
inline double square_well_phase_exact(double v0, double a, double energy) {
    if (v0 > 0.0) throw InvalidWell("square_well_phase_exact: needs v0 <= 0");
    if (!(a > 0.0)) throw InvalidWell("square_well_phase_exact: needs a > 0");
    if (!(energy > 0.0) || energy <= v0)
        throw InvalidWell("square_well_phase_exact: needs E > 0 and E > v0");
    if (v0 == 0.0) return 0.0;
    const double k = std::sqrt(energy);
    const double kappa = std::sqrt(energy - v0);
    // tan(delta + k a) = (k/kappa) tan(kappa a); unwrap the arctangent so
    // the branch follows kappa a continuously.
    const double phi_in = kappa * a;
    const double n = std::round(phi_in / std::numbers::pi);
    const double psi = phi_in - n * std::numbers::pi;
    const double matched = n * std::numbers::pi +
                           std::atan2(k * std::sin(psi), kappa * std::cos(psi));
    return matched - k * a;
}

/// First Born approximation for the s-wave phase shift,
/// delta_B = -(1/k) int_0^rmax v_s(r) sin^2(kr) dr.
inline double born_phase(const ScatteringContext& ctx, double r_max,
                         const IntegratorConfig& cfg = {}) {
    if (ctx.ell != 0) throw UnsupportedEll("born_phase: defined for ell = 0 only");
    const double k = ctx.k();
    auto vs = partition(ctx).short_range;
    auto brk = ctx.spec.discontinuities();
    const double integral = quadrature(
        [&](double r) {
            const double s = std::sin(k * r);
            return vs(r) * s * s;
        },
        0.0, r_max, cfg, brk);
    return -integral / k;
}

} // namespace pam
