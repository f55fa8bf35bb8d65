#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "pam/direct.hpp"
#include "pam/errors.hpp"
#include "pam/freepair.hpp"
#include "pam/integrate.hpp"
#include "pam/potentials.hpp"

namespace pam {

/// Coefficient convention in front of the partitioned phase/amplitude
/// equations. The constrained-parametrization derivation gives 1/W; the
/// 2/W variant is kept as a documented negative control (it fails the Born
/// calibration by a factor of two).
enum class CouplingConvention { derived_one_over_w, control_two_over_w };

inline double coupling_coefficient(const BasePair& pair, CouplingConvention c) {
    const double w = pair.wronskian;
    return (c == CouplingConvention::derived_one_over_w) ? 1.0 / w : 2.0 / w;
}

/// Phase-equation right-hand side G(delta, r) = -coeff v_s (f cos - g sin)^2.
inline double vpa_phase_rhs(const BasePair& pair, double vs, double r, double delta,
                            double coeff) {
    const double p = pair.f(r) * std::cos(delta) - pair.g(r) * std::sin(delta);
    return -coeff * vs * p * p;
}

/// d/d(delta) of the phase-equation right-hand side.
inline double vpa_phase_rhs_ddelta(const BasePair& pair, double vs, double r, double delta,
                                   double coeff) {
    const double f = pair.f(r), g = pair.g(r);
    const double p = f * std::cos(delta) - g * std::sin(delta);
    const double q = f * std::sin(delta) + g * std::cos(delta);
    return 2.0 * coeff * vs * p * q;
}

/// Amplitude-equation right-hand side; equals -(alpha/2) times the delta
/// derivative of the phase-equation right-hand side.
inline double vpa_amplitude_rhs(const BasePair& pair, double vs, double r, double delta,
                                double alpha, double coeff) {
    const double f = pair.f(r), g = pair.g(r);
    const double p = f * std::cos(delta) - g * std::sin(delta);
    const double q = f * std::sin(delta) + g * std::cos(delta);
    return -coeff * vs * alpha * p * q;
}

/// The phase function delta(r) of the partitioned method, together with the
/// reference pair and the coefficient convention that produced it.
struct PhaseFunctionTrace {
    Trace delta;
    BasePair pair;
    CouplingConvention coupling = CouplingConvention::derived_one_over_w;
    double coeff = 0.0;
    std::size_t steps = 0;
};

/// Companion amplitude with alpha(r_max) = 1.
struct AmplitudeTrace {
    Trace alpha;
    CouplingConvention coupling = CouplingConvention::derived_one_over_w;
};

namespace detail {

inline void check_short_range_regular(const ScatteringContext& ctx, double r_min) {
    auto vs = [&](double r) { return ctx.spec.short_range_value(r); };
    // v_s f^2 must be integrable at the origin; reject potentials growing
    // like r^-2 or worse at the sampled inner radii.
    const double v1 = std::abs(vs(r_min)), v2 = std::abs(vs(4.0 * r_min));
    if (v1 * r_min * r_min > 1e3 * (1.0 + ctx.energy) && v1 > 15.9 * v2)
        throw SingularShortRange("solve_partitioned: short-range part too singular at origin");
}

} // namespace detail

/// Integrate the phase equation d(delta)/dr = -coeff v_s (f cos delta -
/// g sin delta)^2 outward from delta = 0 at the origin-side start. The
/// phase function is self-contained: no amplitude enters.
inline PhaseFunctionTrace solve_partitioned(const ScatteringContext& ctx, BasePair pair,
                                            const IntegratorConfig& cfg = {}, double r_max = 0.0,
                                            CouplingConvention convention =
                                                CouplingConvention::derived_one_over_w,
                                            std::span<const double> extra_nodes = {},
                                            double max_spacing =
                                                std::numeric_limits<double>::infinity()) {
    if (r_max <= 0.0) r_max = default_r_max(ctx);
    const double r_min = regular_start_radius(ctx);
    detail::check_short_range_regular(ctx, r_min);
    const double coeff = coupling_coefficient(pair, convention);
    auto vs = partition(ctx).short_range;

    auto rhs = [&](double r, const State<1>& y, State<1>& dy) {
        dy[0] = vpa_phase_rhs(pair, vs(r), r, y[0], coeff);
    };
    std::vector<double> brk = ctx.spec.discontinuities();
    brk.insert(brk.end(), extra_nodes.begin(), extra_nodes.end());
    auto sol = integrate_ivp<1>(rhs, State<1>{0.0}, r_min, r_max, cfg, brk, max_spacing);

    PhaseFunctionTrace out;
    out.delta = sol.component(0);
    out.pair = std::move(pair);
    out.coupling = convention;
    out.coeff = coeff;
    out.steps = sol.steps_accepted;
    return out;
}

/// One further integration gives the amplitude once the phase is known:
/// d(alpha)/dr = -coeff v_s alpha (f cos d - g sin d)(f sin d + g cos d),
/// inward from alpha = 1 in the asymptotic region. The phase equation is
/// carried along from the stored endpoint (it stays self-contained; this
/// only avoids reading delta through its interpolant at stage points), and
/// the integration lands on every phase node so the pair of traces shares
/// a grid.
inline AmplitudeTrace amplitude_from_phase(const PhaseFunctionTrace& dtrace,
                                           const ScatteringContext& ctx,
                                           const IntegratorConfig& cfg = {}) {
    auto vs = partition(ctx).short_range;
    const double coeff = dtrace.coeff;
    auto rhs = [&](double r, const State<2>& y, State<2>& dy) {
        const double v = vs(r);
        dy[0] = vpa_phase_rhs(dtrace.pair, v, r, y[0], coeff);
        dy[1] = vpa_amplitude_rhs(dtrace.pair, v, r, y[0], y[1], coeff);
    };
    auto sol = integrate_ivp<2>(rhs, State<2>{dtrace.delta.back_value(), 1.0},
                                dtrace.delta.r_max(), dtrace.delta.r_min(), cfg,
                                dtrace.delta.nodes);
    AmplitudeTrace out;
    out.alpha = sol.component(1);
    out.coupling = dtrace.coupling;
    return out;
}

/// The phase function read at a truncation radius equals the full phase
/// shift of the potential truncated there.
inline double truncation_phase(const PhaseFunctionTrace& dtrace, double r0) {
    if (r0 < dtrace.delta.r_min() - 1e-12 || r0 > dtrace.delta.r_max() + 1e-12)
        throw OutOfRange("truncation_phase: r0 outside the solved span");
    return dtrace.delta.eval(std::clamp(r0, dtrace.delta.r_min(), dtrace.delta.r_max()));
}

/// Reconstruct F = alpha (f cos delta - g sin delta) with the constrained
/// derivative F' = alpha (f' cos delta - g' sin delta), sampled on the
/// phase-trace nodes.
inline Trace partitioned_wave(const PhaseFunctionTrace& dtrace, const AmplitudeTrace& atrace) {
    Trace out;
    out.nodes = dtrace.delta.nodes;
    for (std::size_t i = 0; i < dtrace.delta.size(); ++i) {
        const double r = dtrace.delta.nodes[i];
        const double d = dtrace.delta.values[i];
        const double a = atrace.alpha.eval(r);
        const double f = dtrace.pair.f(r), g = dtrace.pair.g(r);
        const double fp = dtrace.pair.fp(r), gp = dtrace.pair.gp(r);
        out.values.push_back(a * (f * std::cos(d) - g * std::sin(d)));
        out.derivs.push_back(a * (fp * std::cos(d) - gp * std::sin(d)));
    }
    return out;
}

/// Phase shift via the partitioned equations with the free reference pair.
inline PhaseShiftResult vpa_phase_shift(const ScatteringContext& ctx,
                                        const IntegratorConfig& cfg = {}, double r_max = 0.0,
                                        CouplingConvention convention =
                                            CouplingConvention::derived_one_over_w) {
    auto dtrace = solve_partitioned(ctx, energy_normalized_pair(ctx.ell, ctx.energy), cfg,
                                    r_max, convention);
    PhaseShiftResult out;
    out.method = Method::vpa_partitioned;
    out.delta_principal = wrap_principal(dtrace.delta.back_value());
    out.delta_continuous = dtrace.delta.back_value();
    out.diagnostics["step_count"] = static_cast<double>(dtrace.steps);
    out.diagnostics["tolerance"] = cfg.abs_tol;
    out.diagnostics["r_match"] = dtrace.delta.r_max();
    return out;
}

/// Local-wavenumber variable-phase solution (s waves, no turning point):
/// d(phi)/dr = k + (k'/2k) sin 2(phi), d(alpha)/dr = -(k'/k) alpha cos^2(phi).
/// Potential steps are crossed by matching u and u' exactly.
struct LocalFormSolution {
    Trace phi;
    Trace alpha;
    double delta = 0.0;
    std::size_t steps = 0;
};

inline LocalFormSolution solve_local_form(const ScatteringContext& ctx, double r_max = 0.0,
                                          const IntegratorConfig& cfg = {},
                                          double max_spacing =
                                              std::numeric_limits<double>::infinity()) {
    if (ctx.ell != 0) throw UnsupportedEll("solve_local_form: ell = 0 only");
    if (r_max <= 0.0) r_max = default_r_max(ctx);
    // The asymptotic phase must be read strictly past the last potential
    // step, after the jump matching has been applied.
    for (double d : ctx.spec.discontinuities())
        r_max = std::max(r_max, d + 0.5);
    const double r_min = 1e-8;

    auto w_of = [&](double r) { return local_wavenumber_sq(ctx, r); };
    {
        const int n_scan = 4096;
        for (int i = 0; i <= n_scan; ++i) {
            const double r = r_min + (r_max - r_min) * i / static_cast<double>(n_scan);
            if (w_of(r) <= 0.0)
                throw TurningPointInSpan("solve_local_form: w(r) <= 0 in span");
        }
    }

    auto rhs = [&](double r, const State<2>& y, State<2>& dy) {
        const double w = w_of(r);
        const double k = std::sqrt(w);
        const double kp = 0.5 * local_wavenumber_sq_deriv(ctx, r) / k;
        dy[0] = k + 0.5 * kp / k * std::sin(2.0 * y[0]);
        dy[1] = -kp / k * y[1] * std::cos(y[0]) * std::cos(y[0]);
    };

    std::vector<double> cuts = ctx.spec.discontinuities();
    std::erase_if(cuts, [&](double d) { return d <= r_min || d >= r_max; });
    cuts.push_back(r_max);

    const double pi = std::numbers::pi;
    LocalFormSolution out;
    double r_from = r_min;
    State<2> y{std::sqrt(w_of(r_min)) * r_min, 1.0};
    for (double r_to : cuts) {
        auto sol = integrate_ivp<2>(rhs, y, r_from, r_to, cfg, {}, max_spacing);
        Trace phi_seg = sol.component(0), alpha_seg = sol.component(1);
        const bool first = out.phi.empty();
        for (std::size_t i = 0; i < phi_seg.size(); ++i) {
            // The state jumps at a potential step; keep both sides as
            // adjacent nodes one ulp apart.
            double node = phi_seg.nodes[i];
            if (!first && i == 0) node = std::nextafter(out.phi.nodes.back(), r_max + 1.0);
            out.phi.nodes.push_back(node);
            out.phi.values.push_back(phi_seg.values[i]);
            out.phi.derivs.push_back(phi_seg.derivs[i]);
            out.alpha.nodes.push_back(node);
            out.alpha.values.push_back(alpha_seg.values[i]);
            out.alpha.derivs.push_back(alpha_seg.derivs[i]);
        }
        out.steps += sol.steps_accepted;
        y = sol.final_state();
        r_from = r_to;
        if (r_to == r_max) break;

        // Match u = alpha sin(phi), u' = alpha k cos(phi) across the step:
        // tan(phi+) = (k+/k-) tan(phi-), on the branch of phi-.
        const double k_in = std::sqrt(w_of(std::nextafter(r_to, r_min)));
        const double k_out = std::sqrt(w_of(std::nextafter(r_to, r_max + 1.0)));
        const double n = std::round(y[0] / pi);
        const double psi = y[0] - n * pi;
        const double phi_plus =
            n * pi + std::atan2(k_out * std::sin(psi), k_in * std::cos(psi));
        double a_plus;
        if (std::abs(std::sin(phi_plus)) >= std::abs(std::cos(phi_plus)))
            a_plus = y[1] * std::sin(y[0]) / std::sin(phi_plus);
        else
            a_plus = y[1] * k_in * std::cos(y[0]) / (k_out * std::cos(phi_plus));
        y[0] = phi_plus;
        y[1] = a_plus;
    }
    out.delta = out.phi.back_value() - ctx.k() * out.phi.r_max();
    return out;
}

/// Reconstruction u = alpha sin(phi), u' = alpha k cos(phi) on the solver
/// nodes (the constrained derivative of the local form).
inline Trace local_form_wave(const LocalFormSolution& sol, const ScatteringContext& ctx) {
    Trace u;
    u.nodes = sol.phi.nodes;
    for (std::size_t i = 0; i < sol.phi.size(); ++i) {
        const double r = std::max(sol.phi.nodes[i], 1e-9);
        const double k = std::sqrt(local_wavenumber_sq(ctx, r));
        u.values.push_back(sol.alpha.values[i] * std::sin(sol.phi.values[i]));
        u.derivs.push_back(sol.alpha.values[i] * k * std::cos(sol.phi.values[i]));
    }
    return u;
}

/// Phase shift via the local-wavenumber form.
inline PhaseShiftResult vpa_local_phase_shift(const ScatteringContext& ctx,
                                              const IntegratorConfig& cfg = {},
                                              double r_max = 0.0) {
    auto sol = solve_local_form(ctx, r_max, cfg);
    PhaseShiftResult out;
    out.method = Method::vpa_local;
    out.delta_principal = wrap_principal(sol.delta);
    out.delta_continuous = sol.delta;
    out.diagnostics["step_count"] = static_cast<double>(sol.steps);
    out.diagnostics["tolerance"] = cfg.abs_tol;
    out.diagnostics["r_match"] = sol.phi.r_max();
    return out;
}

} // namespace pam
