#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "pam/direct.hpp"
#include "pam/errors.hpp"
#include "pam/freepair.hpp"
#include "pam/integrate.hpp"
#include "pam/potentials.hpp"

namespace pam {

/// Solution of the nonlinear amplitude equation alpha'' + w alpha = 1/alpha^3
/// with the phase following from one quadrature of alpha^(-2).
struct MilneSolution {
    Trace alpha;       // values alpha, derivs alpha'
    Trace alpha_prime; // values alpha', derivs alpha'' (dense-output route)
    Trace raw_phase;   // unanchored integral of alpha^(-2), same nodes
    Trace phi;         // filled by milne_phase
    Trace K;           // filled by milne_phase: K = alpha^(-2) = dphi/dr
    double anchor_r = 0.0;
    double anchor_phi = 0.0;
    bool phi_filled = false;
};

/// Integrate the amplitude equation over [r_from, r_to] (either direction).
/// Without an explicit init the amplitude starts on the semiclassical value
/// w^(-1/4) at r_from, which selects the nonoscillatory branch when r_from
/// lies in the asymptotic region.
inline MilneSolution solve_milne(const ScatteringContext& ctx, double r_from, double r_to,
                                 std::optional<std::pair<double, double>> init = std::nullopt,
                                 const IntegratorConfig& cfg = {}, double max_spacing = 0.05) {
    double a0, ap0;
    if (init) {
        a0 = init->first;
        ap0 = init->second;
        if (!(a0 > 0.0)) throw InvalidConfig("solve_milne: init amplitude must be > 0");
    } else {
        const double w = local_wavenumber_sq(ctx, r_from);
        if (!(w > 0.0))
            throw TurningPointInSpan("solve_milne: default init needs w(r_from) > 0");
        a0 = std::pow(w, -0.25);
        ap0 = -0.25 * local_wavenumber_sq_deriv(ctx, r_from) * std::pow(w, -1.25);
    }

    bool collapse_seen = a0 <= 1e-8;
    auto rhs = [&ctx, &collapse_seen](double r, const State<3>& y, State<3>& dy) {
        const double a = y[0];
        if (a <= 1e-8) {
            collapse_seen = true;
            dy[0] = dy[1] = dy[2] = std::nan("");
            return;
        }
        dy[0] = y[1];
        dy[1] = 1.0 / (a * a * a) - local_wavenumber_sq(ctx, r) * a;
        dy[2] = 1.0 / (a * a);
    };

    auto brk = ctx.spec.discontinuities();
    IvpSolution<3> sol;
    try {
        sol = integrate_ivp<3>(rhs, State<3>{a0, ap0, 0.0}, r_from, r_to, cfg, brk, max_spacing);
    } catch (const StepUnderflow&) {
        if (collapse_seen)
            throw AmplitudeCollapse("solve_milne: amplitude fell below 1e-8 (numerics failure)");
        throw;
    } catch (const NonFiniteState&) {
        if (collapse_seen)
            throw AmplitudeCollapse("solve_milne: amplitude fell below 1e-8 (numerics failure)");
        throw;
    }

    MilneSolution out;
    out.alpha = sol.component(0);
    out.alpha_prime = sol.component(1);
    out.raw_phase = sol.component(2);
    for (double a : out.alpha.values)
        if (a <= 1e-8)
            throw AmplitudeCollapse("solve_milne: amplitude fell below 1e-8 (numerics failure)");
    return out;
}

/// Fix the phase anchor so that f = sqrt(2/pi) alpha sin(phi) is the regular
/// solution: cot(phi) at the inner end matches the r^(l+1) log-derivative.
inline MilneSolution& milne_phase(MilneSolution& sol, const ScatteringContext& ctx) {
    const double r0 = sol.alpha.r_min();
    const double a = sol.alpha.values.front();
    const double ap = sol.alpha.derivs.front();
    const double y_reg = (ctx.ell + 1) / r0;
    const double c = a * a * (y_reg - ap / a);
    const double phi0 = std::atan2(1.0, c); // arccot, branch (0, pi)

    sol.anchor_r = r0;
    sol.anchor_phi = phi0;
    const double base = sol.raw_phase.values.front();
    sol.phi = Trace{};
    sol.K = Trace{};
    sol.phi.nodes = sol.alpha.nodes;
    sol.K.nodes = sol.alpha.nodes;
    for (std::size_t i = 0; i < sol.alpha.size(); ++i) {
        const double ai = sol.alpha.values[i];
        const double api = sol.alpha.derivs[i];
        sol.phi.values.push_back(phi0 + (sol.raw_phase.values[i] - base));
        sol.phi.derivs.push_back(1.0 / (ai * ai));
        sol.K.values.push_back(1.0 / (ai * ai));
        sol.K.derivs.push_back(-2.0 * api / (ai * ai * ai));
    }
    sol.phi_filled = true;
    return sol;
}

/// The (f, g) pair generated by a Milne solution; Wronskian 2/pi identically.
inline BasePair build_fg(const MilneSolution& sol, int ell = 0, double k = 1.0) {
    if (!sol.phi_filled) throw InvalidConfig("build_fg: run milne_phase first");
    const double c = std::sqrt(2.0 / std::numbers::pi);
    auto shared = std::make_shared<MilneSolution>(sol);
    BasePair pair;
    pair.ell = ell;
    pair.k = k;
    pair.f = [shared, c](double r) {
        return c * shared->alpha.eval(r) * std::sin(shared->phi.eval(r));
    };
    pair.fp = [shared, c](double r) {
        const double a = shared->alpha.eval(r);
        const double ap = shared->alpha.eval_deriv(r);
        const double p = shared->phi.eval(r);
        return c * (ap * std::sin(p) + std::cos(p) / a);
    };
    pair.g = [shared, c](double r) {
        return -c * shared->alpha.eval(r) * std::cos(shared->phi.eval(r));
    };
    pair.gp = [shared, c](double r) {
        const double a = shared->alpha.eval(r);
        const double ap = shared->alpha.eval_deriv(r);
        const double p = shared->phi.eval(r);
        return -c * (ap * std::cos(p) - std::sin(p) / a);
    };
    return pair;
}

/// Residual of the amplitude equation with alpha'' taken from the dense
/// output of the integrated state, sampled at interval midpoints.
struct MilneResidual {
    double max_residual = 0.0;
    double scale = 0.0;
};

inline MilneResidual milne_residual(const MilneSolution& sol, const ScatteringContext& ctx) {
    MilneResidual out;
    for (std::size_t i = 0; i + 1 < sol.alpha.size(); ++i) {
        const double m = 0.5 * (sol.alpha.nodes[i] + sol.alpha.nodes[i + 1]);
        const double a = sol.alpha.eval(m);
        const double app = sol.alpha_prime.eval_deriv(m);
        const double w = local_wavenumber_sq(ctx, m);
        const double res = std::abs(app + w * a - 1.0 / (a * a * a));
        const double sc = std::max({std::abs(app), std::abs(w * a), 1.0 / (a * a * a)});
        out.max_residual = std::max(out.max_residual, res);
        out.scale = std::max(out.scale, sc);
    }
    return out;
}

/// Reconstruct the regular solution sampled on the Milne nodes.
inline Trace milne_regular_wave(const MilneSolution& sol) {
    if (!sol.phi_filled) throw InvalidConfig("milne_regular_wave: run milne_phase first");
    const double c = std::sqrt(2.0 / std::numbers::pi);
    Trace u;
    u.nodes = sol.alpha.nodes;
    for (std::size_t i = 0; i < sol.alpha.size(); ++i) {
        const double a = sol.alpha.values[i];
        const double ap = sol.alpha.derivs[i];
        const double p = sol.phi.values[i];
        u.values.push_back(c * a * std::sin(p));
        u.derivs.push_back(c * (ap * std::sin(p) + std::cos(p) / a));
    }
    return u;
}

/// Reference pair and phase shift of a declared long-range problem, built
/// from a Milne solve so the partitioned method can run on top of any
/// long-range potential. With the default partition the free pair applies
/// and the long-range phase is zero.
struct LongRangeReference {
    BasePair pair;
    double delta_long = 0.0;
};

inline LongRangeReference long_range_reference(const ScatteringContext& ctx,
                                               const IntegratorConfig& cfg = {},
                                               double r_max = 0.0);

/// Full Milne pipeline: inward amplitude solve from the asymptotic region,
/// phase by quadrature, pair construction, then the standard asymptotic
/// match on the regular member.
inline PhaseShiftResult milne_phase_shift(const ScatteringContext& ctx,
                                          const IntegratorConfig& cfg = {},
                                          double r_max = 0.0, bool with_residual = false) {
    if (r_max <= 0.0) r_max = default_r_max(ctx);
    // The inward start needs w > 0; push past the centrifugal barrier.
    if (ctx.ell > 0) {
        const double barrier_r = std::sqrt(ctx.ell * (ctx.ell + 1.0) / ctx.energy);
        r_max = std::max(r_max, 2.0 * barrier_r + 1.0);
    }
    const double r_min = regular_start_radius(ctx);
    MilneSolution sol = solve_milne(ctx, r_max, r_min, std::nullopt, cfg,
                                    with_residual ? auto_spacing_derivs(cfg.abs_tol) : 0.25);
    milne_phase(sol, ctx);
    Trace f = milne_regular_wave(sol);
    PhaseShiftResult res = extract_phase(f, ctx, r_max);
    res.method = Method::milne;
    res.diagnostics["step_count"] = static_cast<double>(sol.alpha.size() - 1);
    res.diagnostics["tolerance"] = cfg.abs_tol;
    res.diagnostics["alpha_at_origin"] = sol.alpha.values.front();
    if (with_residual) {
        auto mr = milne_residual(sol, ctx);
        res.diagnostics["max_residual"] = mr.max_residual / std::max(mr.scale, 1e-300);
    }
    return res;
}

inline LongRangeReference long_range_reference(const ScatteringContext& ctx,
                                               const IntegratorConfig& cfg, double r_max) {
    if (!ctx.spec.long_range_part)
        return {energy_normalized_pair(ctx.ell, ctx.energy), 0.0};
    ScatteringContext ctx_l{*ctx.spec.long_range_part, ctx.ell, ctx.energy};
    if (r_max <= 0.0) r_max = std::max(default_r_max(ctx), default_r_max(ctx_l));
    if (ctx.ell > 0) {
        const double barrier_r = std::sqrt(ctx.ell * (ctx.ell + 1.0) / ctx.energy);
        r_max = std::max(r_max, 2.0 * barrier_r + 1.0);
    }
    const double r_min =
        std::min(regular_start_radius(ctx), regular_start_radius(ctx_l));
    MilneSolution sol =
        solve_milne(ctx_l, r_max, r_min, std::nullopt, cfg, auto_spacing_values(cfg.abs_tol));
    milne_phase(sol, ctx_l);
    LongRangeReference out{build_fg(sol, ctx.ell, ctx.k()), 0.0};
    out.delta_long = extract_phase(milne_regular_wave(sol), ctx_l, r_max).delta_principal;
    return out;
}

} // namespace pam
