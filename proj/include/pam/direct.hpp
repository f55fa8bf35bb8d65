#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "pam/errors.hpp"
#include "pam/freepair.hpp"
#include "pam/integrate.hpp"
#include "pam/potentials.hpp"
#include "pam/trace.hpp"

namespace pam {

enum class Method { direct, jwkb, milne, vpa_local, vpa_partitioned, variational };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::direct: return "direct";
        case Method::jwkb: return "jwkb";
        case Method::milne: return "milne";
        case Method::vpa_local: return "vpa_local";
        case Method::vpa_partitioned: return "vpa_partitioned";
        case Method::variational: return "variational";
    }
    return "?";
}

struct PhaseShiftResult {
    double delta_principal = 0.0;  // in (-pi/2, pi/2]
    double delta_continuous = 0.0; // unwrapped across a sweep; equals principal mod pi
    Method method = Method::direct;
    std::map<std::string, double> diagnostics;
};

/// Reduce to the principal branch (-pi/2, pi/2].
inline double wrap_principal(double delta) {
    const double pi = std::numbers::pi;
    double d = std::fmod(delta, pi);
    if (d > pi / 2) d -= pi;
    if (d <= -pi / 2) d += pi;
    return d;
}

/// Unwrap delta_continuous along a sweep ordered by energy: consecutive
/// entries are shifted by multiples of pi so no jump exceeds pi/2.
inline void unwrap_sweep(std::vector<PhaseShiftResult>& sweep) {
    const double pi = std::numbers::pi;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        double d = sweep[i].delta_principal;
        if (i > 0) {
            const double prev = sweep[i - 1].delta_continuous;
            d += pi * std::round((prev - d) / pi);
        }
        sweep[i].delta_continuous = d;
    }
}

/// Series start radius for the outward integration of the regular solution.
inline double regular_start_radius(const ScatteringContext& ctx) {
    return 1e-6 * std::max(1.0, ctx.spec.range);
}

/// Integrate the regular solution of the governing equation outward from the
/// r^(l+1) series start. The overall scale is arbitrary.
inline Trace solve_regular(const ScatteringContext& ctx, double r_max,
                           const IntegratorConfig& cfg = {},
                           std::span<const double> extra_nodes = {}) {
    const double r_min = regular_start_radius(ctx);
    if (!(r_max > r_min)) throw InvalidConfig("solve_regular: r_max too small");
    auto rhs = [&ctx](double r, const State<2>& y, State<2>& dy) {
        dy[0] = y[1];
        dy[1] = -local_wavenumber_sq(ctx, r) * y[0];
    };
    State<2> y0{std::pow(r_min, ctx.ell + 1), (ctx.ell + 1) * std::pow(r_min, ctx.ell)};
    std::vector<double> brk = ctx.spec.discontinuities();
    brk.insert(brk.end(), extra_nodes.begin(), extra_nodes.end());
    auto sol = integrate_ivp<2>(rhs, y0, r_min, r_max, cfg, brk);
    Trace u = sol.component(0);
    // Keep u' as the derivative samples (component 0's derivs are exactly
    // the integrated u' values).
    return u;
}

/// Max of |u'' + w u| / max|u| over interior node samples; self-check of a
/// regular solve. Samples whose stencil would straddle a potential jump are
/// skipped (the equation itself is one-sided there). By default the stencil
/// error estimate is subtracted, answering "is there a defect above the
/// stencil noise"; pass subtract_stencil_error = false for the raw measure.
inline double regular_residual(const Trace& u, const ScatteringContext& ctx,
                               std::size_t n_samples = 25,
                               bool subtract_stencil_error = true) {
    double umax = 0.0;
    for (double v : u.values) umax = std::max(umax, std::abs(v));
    if (umax == 0.0) return 0.0;
    const auto jumps = ctx.spec.discontinuities();
    double worst = 0.0;
    const std::size_t lo = 2, hi = u.size() - 3;
    for (std::size_t s = 0; s < n_samples; ++s) {
        const std::size_t i = lo + s * (hi - lo) / std::max<std::size_t>(1, n_samples - 1);
        const double r = u.nodes[i];
        const double margin = 0.75 * (u.nodes[i + 2] - u.nodes[i - 2]) + 1e-9;
        bool near_jump = false;
        for (double d : jumps) near_jump = near_jump || std::abs(r - d) < margin;
        if (near_jump) continue;
        try {
            auto d2 = second_derivative(u, r);
            const double res = std::abs(d2.value + local_wavenumber_sq(ctx, r) * u.values[i]);
            worst = std::max(worst, subtract_stencil_error ? std::max(0.0, res - d2.error) : res);
        } catch (const OutOfRange&) {
            // stencil does not fit at this boundary-adjacent node
        }
    }
    return worst / umax;
}

/// Log-derivative match of a regular solution against the free pair at
/// r_match. Scale-invariant; retries a shifted radius if the solution and
/// its derivative both vanish at the match point.
inline PhaseShiftResult extract_phase(const Trace& u, const ScatteringContext& ctx,
                                      double r_match) {
    const double k = ctx.k();
    if (std::abs(ctx.spec.total_value(r_match)) >= 1e-12 * ctx.energy)
        throw MatchRadiusTooSmall("extract_phase: potential not negligible at r_match");
    double rm = r_match;
    for (int attempt = 0; attempt < 4; ++attempt) {
        if (rm > u.r_max()) rm = u.r_max();
        if (std::abs(ctx.spec.total_value(rm)) >= 1e-12 * ctx.energy)
            throw MatchRadiusTooSmall("extract_phase: retry radius entered the potential");
        const double uv = u.eval(rm);
        const double up = u.eval_deriv(rm);
        const double amp = std::hypot(uv, up / k);
        auto rb = riccati_bessel(ctx.ell, k * rm);
        const double num = k * rb.Sp * uv - up * rb.S;
        const double den = k * rb.Cp * uv - up * rb.C;
        if (std::hypot(num, den) > 1e-10 * k * amp) {
            PhaseShiftResult out;
            out.method = Method::direct;
            out.delta_principal = wrap_principal(std::atan2(num, den));
            out.delta_continuous = out.delta_principal;
            out.diagnostics["r_match"] = rm;
            return out;
        }
        rm = r_match - (attempt + 1) * std::numbers::pi / (4.0 * k);
        if (rm <= u.r_min()) break;
    }
    throw NodeAtMatch("extract_phase: solution vanished at every match attempt");
}

/// Outward solve plus asymptotic match; the reference oracle method.
inline PhaseShiftResult direct_phase_shift(const ScatteringContext& ctx,
                                           const IntegratorConfig& cfg = {},
                                           double r_max = 0.0,
                                           bool with_residual = true) {
    if (r_max <= 0.0) r_max = default_r_max(ctx);
    Trace u = solve_regular(ctx, r_max, cfg);
    PhaseShiftResult res = extract_phase(u, ctx, r_max);
    res.method = Method::direct;
    res.diagnostics["step_count"] = static_cast<double>(u.size() - 1);
    res.diagnostics["tolerance"] = cfg.abs_tol;
    if (with_residual) res.diagnostics["max_residual"] = regular_residual(u, ctx);
    return res;
}

/// Phase shift of the potential truncated to zero beyond r0.
inline PhaseShiftResult phase_of_truncated(const ScatteringContext& ctx, double r0,
                                           const IntegratorConfig& cfg = {}) {
    if (r0 < 0.0) throw OutOfRange("phase_of_truncated: r0 must be >= 0");
    ScatteringContext tctx{ctx.spec.truncated(r0), ctx.ell, ctx.energy};
    const double r_max = std::max(default_r_max(tctx), r0) + 1.0;
    PhaseShiftResult res = direct_phase_shift(tctx, cfg, r_max);
    res.diagnostics["truncation_radius"] = r0;
    return res;
}

} // namespace pam
