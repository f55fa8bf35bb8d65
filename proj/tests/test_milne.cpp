#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "pam/milne.hpp"
#include "pam/vpa.hpp"

using namespace pam;

TEST_CASE("constant wavenumber amplitude is stationary", "[milne]") {
    ScatteringContext free4{PotentialSpec::zero_potential(), 0, 4.0};
    auto sol = solve_milne(free4, 1e-3, 10.0, std::pair{std::pow(2.0, -0.5), 0.0});
    for (double a : sol.alpha.values) CHECK(std::abs(a - std::pow(2.0, -0.5)) < 1e-10);
}

TEST_CASE("oscillating amplitude stays positive and accurate", "[milne]") {
    ScatteringContext free1{PotentialSpec::zero_potential(), 0, 1.0};
    auto sol = solve_milne(free1, 1e-3, 15.0, std::pair{2.0, 0.0}, {}, 0.002);
    // Exact envelope: alpha^2 = 4 cos^2 r + (1/4) sin^2 r.
    double amin = 1e9;
    for (std::size_t i = 0; i < sol.alpha.size(); i += 13) {
        const double r = sol.alpha.nodes[i] - 1e-3;
        const double exact =
            std::sqrt(4.0 * std::cos(r) * std::cos(r) + 0.25 * std::sin(r) * std::sin(r));
        CHECK(std::abs(sol.alpha.values[i] - exact) < 1e-8);
    }
    for (double a : sol.alpha.values) amin = std::min(amin, a);
    CHECK(amin >= 0.5 - 1e-8);

    // Dense-output residual within 10x the integrator tolerance.
    auto res = milne_residual(sol, free1);
    CHECK(res.max_residual <= 10.0 * 1e-10 * res.scale);
}

TEST_CASE("inward milne amplitude is semiclassical outside the well", "[milne]") {
    ScatteringContext well{PotentialSpec::square_well(-2.0, 1.0), 0, 1.0};
    auto sol = solve_milne(well, 6.0, 1e-6);
    for (std::size_t i = 0; i < sol.alpha.size(); ++i) {
        if (sol.alpha.nodes[i] >= 1.0)
            CHECK(std::abs(sol.alpha.values[i] - 1.0) < 1e-10); // w = E = 1 out there
    }
    for (double a : sol.alpha.values) CHECK(a > 0.0);
}

TEST_CASE("phase is anchored and strictly increasing", "[milne]") {
    ScatteringContext free1{PotentialSpec::zero_potential(), 0, 1.0};
    auto sol = solve_milne(free1, 12.0, 1e-6);
    milne_phase(sol, free1);
    // Constant k: phi = r + arctan-corrections at the tiny anchor radius.
    for (std::size_t i = 0; i < sol.phi.size(); ++i)
        CHECK(std::abs(sol.phi.values[i] - sol.phi.nodes[i]) < 1e-9);
    for (std::size_t i = 1; i < sol.phi.size(); ++i)
        CHECK(sol.phi.values[i] > sol.phi.values[i - 1]);
}

TEST_CASE("reconstructed wave solves the radial equation", "[milne]") {
    ScatteringContext well{PotentialSpec::square_well(-2.0, 1.0), 0, 1.0};
    auto sol = solve_milne(well, 4.0, 1e-6, std::nullopt, {}, 0.02);
    milne_phase(sol, well);
    Trace u = milne_regular_wave(sol);
    CHECK(regular_residual(u, well, 40) < 1e-7);

    // The irregular member is an independent solution of the same equation.
    const double c = std::sqrt(2.0 / std::numbers::pi);
    Trace g;
    g.nodes = sol.alpha.nodes;
    for (std::size_t i = 0; i < sol.alpha.size(); ++i) {
        const double a = sol.alpha.values[i];
        const double ap = sol.alpha.derivs[i];
        const double p = sol.phi.values[i];
        g.values.push_back(-c * a * std::cos(p));
        g.derivs.push_back(-c * (ap * std::cos(p) - std::sin(p) / a));
    }
    CHECK(regular_residual(g, well, 40) < 1e-7);
}

TEST_CASE("milne pair carries the fixed wronskian", "[milne]") {
    ScatteringContext well{PotentialSpec::square_well(-2.0, 1.0), 0, 1.0};
    auto sol = solve_milne(well, 5.0, 1e-6);
    milne_phase(sol, well);
    auto pair = build_fg(sol, well.ell, well.k());
    const double w0 = 2.0 / std::numbers::pi;
    for (int i = 0; i < 20; ++i) {
        const double r = 0.1 + 0.23 * i;
        CHECK(std::abs(pair.wronskian_at(r) - w0) < 1e-10 * w0 + 1e-12);
    }

    // Free field at E = 1: alpha = 1, phi = r, so f, g reduce to the
    // energy-normalized free pair.
    ScatteringContext free1{PotentialSpec::zero_potential(), 0, 1.0};
    auto fsol = solve_milne(free1, 9.0, 1e-6);
    milne_phase(fsol, free1);
    auto fpair = build_fg(fsol, 0, 1.0);
    const double c = std::sqrt(w0);
    for (double r : {0.5, 1.5, 4.0, 8.0}) {
        CHECK(std::abs(fpair.f(r) - c * std::sin(r)) < 1e-9);
        CHECK(std::abs(fpair.g(r) + c * std::cos(r)) < 1e-9);
    }
}

TEST_CASE("milne phase shifts", "[milne]") {
    for (int ell : {0, 1, 2}) {
        ScatteringContext free_ctx{PotentialSpec::zero_potential(), ell, 1.0};
        auto res = milne_phase_shift(free_ctx);
        CHECK(std::abs(res.delta_principal) < 1e-9);
    }

    ScatteringContext well{PotentialSpec::square_well(-2.0, 1.0), 0, 1.0};
    auto res = milne_phase_shift(well);
    const double oracle = wrap_principal(square_well_phase_exact(-2.0, 1.0, 1.0));
    CHECK(std::abs(res.delta_principal - oracle) < 1e-6);

    for (double e : {0.1, 0.7, 2.8, 10.0}) {
        ScatteringContext c{PotentialSpec::square_well(-2.0, 1.0), 0, e};
        const double dm = milne_phase_shift(c).delta_principal;
        const double dd = direct_phase_shift(c).delta_principal;
        CHECK(std::abs(dm - dd) < 1e-6);
    }
}

TEST_CASE("initialization does not move the physics", "[milne]") {
    ScatteringContext well{PotentialSpec::square_well(-2.0, 1.0), 0, 2.0};
    const double r_max = 5.0;
    auto s1 = solve_milne(well, r_max, 1e-6);
    auto s2 = solve_milne(well, r_max, 1e-6, std::pair{1.3, 0.2});
    milne_phase(s1, well);
    milne_phase(s2, well);
    bool differs = false;
    for (double r : {0.5, 2.0, 4.0})
        differs = differs || std::abs(s1.alpha.eval(r) - s2.alpha.eval(r)) > 1e-3;
    CHECK(differs); // genuinely different amplitude traces
    auto d1 = extract_phase(milne_regular_wave(s1), well, r_max);
    auto d2 = extract_phase(milne_regular_wave(s2), well, r_max);
    CHECK(std::abs(d1.delta_principal - d2.delta_principal) < 1e-8);
}

TEST_CASE("milne pair carries a declared long-range problem", "[milne]") {
    // Short-range phase on top of a Milne-built long-range pair must add up
    // to the full phase shift of the summed potential.
    auto spec = PotentialSpec::exponential(-0.5, 0.7)
                    .with_long_range(PotentialSpec::gaussian(-1.0, 1.2));
    for (int ell : {0, 1}) {
        ScatteringContext ctx{spec, ell, 1.0};
        auto ref = long_range_reference(ctx);
        auto dtrace = solve_partitioned(ctx, ref.pair);
        const double total = ref.delta_long + dtrace.delta.back_value();
        const double expect = direct_phase_shift(ctx).delta_principal;
        CHECK(std::abs(wrap_principal(total) - expect) < 1e-6);
    }

    // Default partition: the reference reduces to the free pair.
    ScatteringContext plain{PotentialSpec::gaussian(-1.0, 1.0), 0, 2.0};
    auto free_ref = long_range_reference(plain);
    CHECK(free_ref.delta_long == 0.0);
    CHECK(std::abs(free_ref.pair.f(1.3) -
                   energy_normalized_pair(0, 2.0).f(1.3)) < 1e-14);
}

TEST_CASE("amplitude collapse is reported as such", "[milne]") {
    ScatteringContext free1{PotentialSpec::zero_potential(), 0, 1.0};
    CHECK_THROWS_AS(solve_milne(free1, 1e-3, 5.0, std::pair{1e-9, 0.0}), AmplitudeCollapse);
    CHECK_THROWS_AS(solve_milne(free1, 1e-3, 5.0, std::pair{-1.0, 0.0}), InvalidConfig);
}
