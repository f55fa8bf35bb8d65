#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "pam/errors.hpp"
#include "pam/trace.hpp"

namespace pam {

/// Tolerances and limits shared by every solver in the library.
/// Quadratures are carried as extra integrated states, so one config
/// controls the accuracy of waves, phases and integrals alike.
struct IntegratorConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    std::size_t max_steps = 1'000'000;
    double min_step = 1e-14;

    void validate() const {
        if (!(abs_tol > 0.0 && abs_tol < 1.0))
            throw InvalidConfig("abs_tol must lie in (0, 1)");
        if (!(rel_tol > 0.0 && rel_tol < 1.0))
            throw InvalidConfig("rel_tol must lie in (0, 1)");
        if (max_steps == 0) throw InvalidConfig("max_steps must be positive");
        if (!(min_step > 0.0)) throw InvalidConfig("min_step must be positive");
    }

    [[nodiscard]] IntegratorConfig scaled(double factor) const {
        IntegratorConfig c = *this;
        c.abs_tol = std::min(0.999, abs_tol * factor);
        c.rel_tol = std::min(0.999, rel_tol * factor);
        return c;
    }
};

template <std::size_t N>
using State = std::array<double, N>;

/// Trace node spacing that keeps cubic-Hermite value interpolation at the
/// requested tolerance (error ~ h^4/384 per unit fourth derivative).
inline double auto_spacing_values(double tol) {
    return std::clamp(2.0 * std::pow(tol, 0.25), 1e-3, 0.5);
}

/// Spacing that keeps the interpolated first derivative at tolerance
/// (error ~ h^3/72 per unit fourth derivative).
inline double auto_spacing_derivs(double tol) {
    return std::clamp(std::cbrt(720.0 * tol), 1e-3, 0.5);
}

/// Result of an initial-value integration: the accepted step endpoints in
/// integration order, with state and state-derivative at each.
template <std::size_t N>
struct IvpSolution {
    std::vector<double> nodes;
    std::vector<State<N>> values;
    std::vector<State<N>> derivs;
    std::size_t steps_accepted = 0;
    std::size_t steps_rejected = 0;
    std::size_t rhs_evaluations = 0;

    [[nodiscard]] std::size_t size() const { return nodes.size(); }
    [[nodiscard]] const State<N>& final_state() const { return values.back(); }

    /// One component as a Trace with ascending nodes (reversed if the
    /// integration ran inward).
    [[nodiscard]] Trace component(std::size_t i) const {
        Trace t;
        t.nodes.reserve(size());
        t.values.reserve(size());
        t.derivs.reserve(size());
        const bool reversed = size() >= 2 && nodes.back() < nodes.front();
        if (reversed) {
            for (std::size_t j = size(); j-- > 0;) {
                t.nodes.push_back(nodes[j]);
                t.values.push_back(values[j][i]);
                t.derivs.push_back(derivs[j][i]);
            }
        } else {
            for (std::size_t j = 0; j < size(); ++j) {
                t.nodes.push_back(nodes[j]);
                t.values.push_back(values[j][i]);
                t.derivs.push_back(derivs[j][i]);
            }
        }
        t.validate();
        return t;
    }
};

namespace detail {

// Dormand-Prince 5(4) tableau.
inline constexpr double dp_c2 = 1.0 / 5, dp_c3 = 3.0 / 10, dp_c4 = 4.0 / 5, dp_c5 = 8.0 / 9;
inline constexpr double dp_a21 = 1.0 / 5;
inline constexpr double dp_a31 = 3.0 / 40, dp_a32 = 9.0 / 40;
inline constexpr double dp_a41 = 44.0 / 45, dp_a42 = -56.0 / 15, dp_a43 = 32.0 / 9;
inline constexpr double dp_a51 = 19372.0 / 6561, dp_a52 = -25360.0 / 2187,
                        dp_a53 = 64448.0 / 6561, dp_a54 = -212.0 / 729;
inline constexpr double dp_a61 = 9017.0 / 3168, dp_a62 = -355.0 / 33, dp_a63 = 46732.0 / 5247,
                        dp_a64 = 49.0 / 176, dp_a65 = -5103.0 / 18656;
inline constexpr double dp_b1 = 35.0 / 384, dp_b3 = 500.0 / 1113, dp_b4 = 125.0 / 192,
                        dp_b5 = -2187.0 / 6784, dp_b6 = 11.0 / 84;
inline constexpr double dp_e1 = 71.0 / 57600, dp_e3 = -71.0 / 16695, dp_e4 = 71.0 / 1920,
                        dp_e5 = -17253.0 / 339200, dp_e6 = 22.0 / 525, dp_e7 = -1.0 / 40;

template <std::size_t N>
bool finite(const State<N>& y) {
    for (double v : y)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace detail

/// Adaptive explicit Runge-Kutta 5(4) initial-value integration from r_a to
/// r_b (r_a > r_b integrates inward). Local error per step is held below
/// abs_tol + rel_tol*|state| by a PI step controller. Interior breakpoints
/// are landed on exactly and recorded as nodes; max_step additionally caps
/// the node spacing.
template <std::size_t N, class Rhs>
IvpSolution<N> integrate_ivp(Rhs&& rhs, const State<N>& y0, double r_a, double r_b,
                             const IntegratorConfig& cfg = {},
                             std::span<const double> breakpoints = {},
                             double max_step = std::numeric_limits<double>::infinity()) {
    cfg.validate();
    if (!(r_a != r_b)) throw InvalidConfig("integrate_ivp: empty span");
    if (!(max_step > 0.0)) throw InvalidConfig("integrate_ivp: max_step must be positive");
    const double dir = (r_b > r_a) ? 1.0 : -1.0;
    const double span = std::abs(r_b - r_a);

    // Interior targets in integration order, ending with r_b.
    std::vector<double> targets;
    for (double b : breakpoints) {
        if ((b - r_a) * dir > 1e-14 * span && (r_b - b) * dir > 1e-14 * span)
            targets.push_back(b);
    }
    std::sort(targets.begin(), targets.end());
    if (dir < 0) std::reverse(targets.begin(), targets.end());
    // Twin nodes bracketing an earlier breakpoint sit one ulp apart; treat
    // them as a single target (the crossing re-creates the twin).
    targets.erase(std::unique(targets.begin(), targets.end(),
                              [](double a, double b) {
                                  return std::abs(a - b) <=
                                         8.0 * std::numeric_limits<double>::epsilon() *
                                             std::max(1.0, std::abs(a));
                              }),
                  targets.end());
    targets.push_back(r_b);

    IvpSolution<N> sol;
    State<N> y = y0;
    State<N> k1{}, k2{}, k3{}, k4{}, k5{}, k6{}, k7{}, ytmp{}, ynew{};
    double r = r_a;

    // Endpoints may coincide with rhs discontinuities; derivative
    // evaluations at span ends stay one ulp inside.
    rhs(std::nextafter(r, r_b), y, k1);
    ++sol.rhs_evaluations;
    if (!detail::finite(y) || !detail::finite(k1))
        throw NonFiniteState("integrate_ivp: non-finite initial state or derivative");
    sol.nodes.push_back(r);
    sol.values.push_back(y);
    sol.derivs.push_back(k1);

    auto scale = [&](const State<N>& a, const State<N>& b, std::size_t i) {
        return cfg.abs_tol + cfg.rel_tol * std::max(std::abs(a[i]), std::abs(b[i]));
    };

    // Initial step size from the usual two-derivative heuristic.
    double h;
    {
        double d0 = 0, d1 = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = scale(y, y, i);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1 += (k1[i] / sc) * (k1[i] / sc);
        }
        d0 = std::sqrt(d0 / N);
        d1 = std::sqrt(d1 / N);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min({h0, span, max_step});
        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + dir * h0 * k1[i];
        rhs(r + dir * h0, ytmp, k2);
        ++sol.rhs_evaluations;
        double d2 = 0;
        if (detail::finite(k2)) {
            for (std::size_t i = 0; i < N; ++i) {
                const double sc = scale(y, y, i);
                d2 += ((k2[i] - k1[i]) / sc) * ((k2[i] - k1[i]) / sc);
            }
            d2 = std::sqrt(d2 / N) / h0;
        }
        const double d12 = std::max(d1, d2);
        const double h1 = (d12 > 1e-15) ? std::pow(0.01 / d12, 0.2) : std::max(1e-6, h0 * 1e-3);
        h = std::min({100 * h0, h1, span, max_step});
    }

    std::size_t target_idx = 0;
    double facold = 1e-4;
    bool nonfinite_seen = false;
    constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9;

    while (true) {
        if (sol.steps_accepted + sol.steps_rejected >= cfg.max_steps)
            throw MaxStepsExceeded("integrate_ivp: max_steps exceeded");

        const double target = targets[target_idx];
        const double dist = (target - r) * dir;
        const bool hit_target = h >= dist;
        const double hstep = hit_target ? dist : h;
        if (hstep < cfg.min_step && !hit_target) {
            if (nonfinite_seen)
                throw NonFiniteState("integrate_ivp: rhs returned non-finite values");
            throw StepUnderflow("integrate_ivp: step size underflow");
        }

        const double hs = dir * hstep;
        // The rhs may jump at a breakpoint. Stages of a step that lands on
        // one are kept one ulp inside the current segment, and the new
        // segment's first derivative is taken one ulp past it.
        const double r_end = hit_target ? target : r + hs;
        const double r_end_stage = hit_target ? std::nextafter(target, r) : r_end;
        using namespace detail;
        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + hs * dp_a21 * k1[i];
        rhs(r + dp_c2 * hs, ytmp, k2);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + hs * (dp_a31 * k1[i] + dp_a32 * k2[i]);
        rhs(r + dp_c3 * hs, ytmp, k3);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + hs * (dp_a41 * k1[i] + dp_a42 * k2[i] + dp_a43 * k3[i]);
        rhs(r + dp_c4 * hs, ytmp, k4);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + hs * (dp_a51 * k1[i] + dp_a52 * k2[i] + dp_a53 * k3[i] + dp_a54 * k4[i]);
        rhs(r + dp_c5 * hs, ytmp, k5);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + hs * (dp_a61 * k1[i] + dp_a62 * k2[i] + dp_a63 * k3[i] +
                                   dp_a64 * k4[i] + dp_a65 * k5[i]);
        rhs(r_end_stage, ytmp, k6);
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + hs * (dp_b1 * k1[i] + dp_b3 * k3[i] + dp_b4 * k4[i] +
                                   dp_b5 * k5[i] + dp_b6 * k6[i]);
        const double r_new = r_end;
        rhs(r_end_stage, ynew, k7);
        sol.rhs_evaluations += 6;

        double err = 0.0;
        bool ok = detail::finite(ynew) && detail::finite(k7) && detail::finite(k2) &&
                  detail::finite(k3) && detail::finite(k4) && detail::finite(k5) &&
                  detail::finite(k6);
        if (ok) {
            for (std::size_t i = 0; i < N; ++i) {
                const double e = hs * (dp_e1 * k1[i] + dp_e3 * k3[i] + dp_e4 * k4[i] +
                                       dp_e5 * k5[i] + dp_e6 * k6[i] + dp_e7 * k7[i]);
                const double sc = scale(y, ynew, i);
                err += (e / sc) * (e / sc);
            }
            err = std::sqrt(err / N);
        } else {
            err = 1e10;
            nonfinite_seen = true;
        }

        if (err <= 1.0) {
            ++sol.steps_accepted;
            nonfinite_seen = false;
            const double fac = safe * std::pow(err > 0 ? err : 1e-16, -expo1) * std::pow(facold, beta);
            facold = std::max(err, 1e-4);
            r = r_new;
            y = ynew;
            k1 = k7; // FSAL
            sol.nodes.push_back(r);
            sol.values.push_back(y);
            sol.derivs.push_back(k1);
            if (hit_target) {
                ++target_idx;
                if (target_idx == targets.size()) break;
                // The rhs may jump here. Store the breakpoint twice, one ulp
                // apart, carrying the one-sided derivative on each side so
                // the Hermite interpolant stays valid in both neighboring
                // intervals; integration resumes from the far twin.
                r = std::nextafter(r, targets.back());
                rhs(r, y, k1);
                ++sol.rhs_evaluations;
                if (!detail::finite(k1))
                    throw NonFiniteState("integrate_ivp: rhs returned non-finite values");
                sol.nodes.push_back(r);
                sol.values.push_back(y);
                sol.derivs.push_back(k1);
                // A step clamped to a breakpoint must not shrink the
                // controller's step suggestion for the next segment.
                h = std::min(std::max(h, hstep * std::clamp(fac, 0.2, 10.0)), max_step);
            } else {
                h = std::min(hstep * std::clamp(fac, 0.2, 10.0), max_step);
            }
        } else {
            ++sol.steps_rejected;
            h = hstep * std::clamp(safe * std::pow(err, -0.2), 0.1, 0.9);
        }
    }
    return sol;
}

/// Definite integral of f over [a, b], computed by carrying the integral as
/// an integrated state so the tolerance control matches the ODE solvers.
/// The per-step tolerance is tightened by a fixed factor so that the
/// accumulated result meets the requested end-to-end tolerance.
template <class F>
Trace quadrature_trace(F&& f, double a, double b, const IntegratorConfig& cfg = {},
                       std::span<const double> breakpoints = {},
                       double max_step = std::numeric_limits<double>::infinity()) {
    if (!(a < b)) throw InvalidConfig("quadrature: requires a < b");
    auto rhs = [&](double r, const State<1>&, State<1>& dy) { dy[0] = f(r); };
    auto sol = integrate_ivp<1>(rhs, State<1>{0.0}, a, b, cfg.scaled(0.02), breakpoints, max_step);
    return sol.component(0);
}

template <class F>
double quadrature(F&& f, double a, double b, const IntegratorConfig& cfg = {},
                  std::span<const double> breakpoints = {}) {
    if (a == b) return 0.0;
    if (a > b) throw InvalidConfig("quadrature: requires a <= b");
    return quadrature_trace(f, a, b, cfg, breakpoints).back_value();
}

/// Second-derivative estimate at r from a trace's value+derivative data,
/// with a Richardson-style error estimate.
struct SecondDerivative {
    double value = 0.0;
    double error = 0.0;
};

namespace detail {

// f''(r) from (value, derivative) samples at three nodes: the weights make
// the stencil exact through degree 5, i.e. the second derivative of the
// quintic Hermite interpolant. On a uniform grid centred at r this reduces
// to the classic combination 2*(f+ - 2f0 + f-)/h^2 - (d+ - d-)/(2h).
struct HermiteStencil {
    double value = 0.0;
    double roundoff = 0.0;
};

inline HermiteStencil hermite_quintic_d2(const Trace& t, double r, std::size_t im,
                                         std::size_t i0, std::size_t ip) {
    const double raw[3] = {t.nodes[im] - r, t.nodes[i0] - r, t.nodes[ip] - r};
    const double f[3] = {t.values[im], t.values[i0], t.values[ip]};
    const double d[3] = {t.derivs[im], t.derivs[i0], t.derivs[ip]};
    const double H = std::max({std::abs(raw[0]), std::abs(raw[1]), std::abs(raw[2])});
    const double x[3] = {raw[0] / H, raw[1] / H, raw[2] / H};

    // Moment conditions in scaled offsets: sum a_j x^n / n! + sum b_j
    // x^(n-1) / (n-1)! = [n == 2], n = 0..5; unknowns (a, b) rescale by
    // 1/H^2 and 1/H afterwards.
    double m[6][7] = {};
    for (int n = 0; n < 6; ++n) {
        double fact = 1.0;
        for (int q = 1; q <= n; ++q) fact *= q;
        for (int j = 0; j < 3; ++j) {
            m[n][j] = std::pow(x[j], n) / fact;
            m[n][3 + j] = (n == 0) ? 0.0 : n * std::pow(x[j], n - 1) / fact;
        }
        m[n][6] = (n == 2) ? 1.0 : 0.0;
    }
    // Gauss-Jordan with partial pivoting (row swaps keep the variable
    // order, so the diagonal read-out below stays valid).
    for (int col = 0; col < 6; ++col) {
        int piv = col;
        for (int row = col + 1; row < 6; ++row)
            if (std::abs(m[row][col]) > std::abs(m[piv][col])) piv = row;
        if (m[piv][col] == 0.0) throw OutOfRange("second_derivative: degenerate stencil");
        if (piv != col)
            for (int q = 0; q < 7; ++q) std::swap(m[piv][q], m[col][q]);
        for (int row = 0; row < 6; ++row) {
            if (row == col) continue;
            const double fac = m[row][col] / m[col][col];
            for (int q = col; q < 7; ++q) m[row][q] -= fac * m[col][q];
        }
    }
    HermiteStencil out;
    for (int j = 0; j < 3; ++j) {
        const double aj = m[j][6] / m[j][j] / (H * H);
        const double bj = m[3 + j][6] / m[3 + j][3 + j] / H;
        out.value += aj * f[j] + bj * d[j];
        out.roundoff += std::abs(aj * f[j]) + std::abs(bj * d[j]);
    }
    out.roundoff *= 8.0 * std::numeric_limits<double>::epsilon();
    return out;
}

} // namespace detail

/// Second derivative of the traced function at r, from the quintic Hermite
/// stencil over the three nearest well-separated nodes. Twin nodes bracket
/// breakpoints one ulp apart and are stepped over. The error estimate
/// compares against the double-width stencil.
inline SecondDerivative second_derivative(const Trace& t, double r) {
    if (t.size() < 5) throw OutOfRange("second_derivative: need at least 5 nodes");
    const double gap_tol = 1e-12 * std::max(1.0, t.r_max() - t.r_min());
    auto left_of = [&](std::size_t j) {
        const double x = t.nodes[j];
        std::size_t q = j;
        while (q > 0 && t.nodes[q - 1] > x - gap_tol) --q;
        if (q == 0) throw OutOfRange("second_derivative: point too close to trace boundary");
        return q - 1;
    };
    auto right_of = [&](std::size_t j) {
        const double x = t.nodes[j];
        std::size_t q = j;
        while (q + 1 < t.size() && t.nodes[q + 1] < x + gap_tol) ++q;
        if (q + 1 >= t.size()) throw OutOfRange("second_derivative: point too close to trace boundary");
        return q + 1;
    };

    const std::size_t iv = t.locate(r);
    const std::size_t i = (r - t.nodes[iv] <= t.nodes[iv + 1] - r) ? iv : iv + 1;
    const std::size_t im1 = left_of(i), ip1 = right_of(i);
    const std::size_t im2 = left_of(im1), ip2 = right_of(ip1);

    const auto narrow = detail::hermite_quintic_d2(t, r, im1, i, ip1);
    const auto wide = detail::hermite_quintic_d2(t, r, im2, i, ip2);
    SecondDerivative out;
    out.value = narrow.value;
    out.error = std::abs(narrow.value - wide.value) / 8.0 + narrow.roundoff;
    return out;
}

} // namespace pam
