#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "pam/direct.hpp"

using namespace pam;

TEST_CASE("regular solution of the free field", "[direct]") {
    const double pi = std::numbers::pi;
    ScatteringContext free0{PotentialSpec::zero_potential(), 0, 1.0};
    std::vector<double> want_pi{pi};
    Trace u = solve_regular(free0, 4.0, {}, want_pi);
    // u is proportional to sin r; node at pi.
    double umax = 0.0;
    for (double v : u.values) umax = std::max(umax, std::abs(v));
    CHECK(std::abs(u.eval(pi)) < 1e-8 * umax);

    ScatteringContext free1{PotentialSpec::zero_potential(), 1, 1.0};
    Trace u1 = solve_regular(free1, 4.0);
    const double a3 = u1.eval(2e-6) / std::pow(2e-6, 2);
    const double a4 = u1.eval(4e-6) / std::pow(4e-6, 2);
    CHECK(std::abs(a3) > 0.0);
    CHECK(std::abs(a4 / a3 - 1.0) < 1e-4);
}

TEST_CASE("regular solve residual self-check", "[direct]") {
    ScatteringContext well{PotentialSpec::square_well(-2.0, 1.0), 0, 1.0};
    Trace u = solve_regular(well, 3.0);
    CHECK(regular_residual(u, well, 50) < 1e-8);
}

TEST_CASE("phase extraction basics", "[direct]") {
    for (int ell : {0, 1, 2}) {
        ScatteringContext free_ctx{PotentialSpec::zero_potential(), ell, 1.0};
        auto res = direct_phase_shift(free_ctx, {}, 8.0);
        CHECK(std::abs(res.delta_principal) < 1e-10);
    }
}

TEST_CASE("square well phase matches the closed form", "[direct]") {
    // Validates the closed-form oracle against direct integration at spot
    // energies before it is used as an oracle anywhere else.
    for (double e : {0.5, 1.0, 7.0}) {
        ScatteringContext well{PotentialSpec::square_well(-2.0, 1.0), 0, e};
        auto res = direct_phase_shift(well);
        const double oracle = square_well_phase_exact(-2.0, 1.0, e);
        CHECK(std::abs(res.delta_principal - wrap_principal(oracle)) < 1e-6);
    }
}

TEST_CASE("hard-sphere limit of a strong barrier", "[direct]") {
    ScatteringContext barrier{PotentialSpec::square_well(1e4, 1.0), 0, 1.0};
    auto res = direct_phase_shift(barrier, {}, 3.0);
    // The leading finite-height correction is arctan(k/kappa) ~ 1e-2 here.
    CHECK(std::abs(wrap_principal(res.delta_principal - (-1.0))) < 1.05e-2);
}

TEST_CASE("extraction is scale invariant", "[direct]") {
    ScatteringContext well{PotentialSpec::square_well(-2.0, 1.0), 0, 2.0};
    Trace u = solve_regular(well, 3.0);
    auto base = extract_phase(u, well, 3.0);
    Trace scaled = u;
    for (auto& v : scaled.values) v *= 137.0;
    for (auto& d : scaled.derivs) d *= 137.0;
    auto res = extract_phase(scaled, well, 3.0);
    CHECK(std::abs(res.delta_principal - base.delta_principal) < 1e-12);
}

TEST_CASE("match radius stability", "[direct]") {
    ScatteringContext gauss{PotentialSpec::gaussian(-1.0, 1.0), 0, 1.0};
    std::vector<double> marks{8.0};
    Trace u = solve_regular(gauss, 16.0, {}, marks);
    auto d1 = extract_phase(u, gauss, 8.0);
    auto d2 = extract_phase(u, gauss, 16.0);
    CHECK(std::abs(d1.delta_principal - d2.delta_principal) < 1e-8);

    CHECK_THROWS_AS(extract_phase(u, gauss, 1.0), MatchRadiusTooSmall);
}

TEST_CASE("truncated potentials", "[direct]") {
    ScatteringContext well{PotentialSpec::square_well(-2.0, 1.0), 0, 1.0};

    auto none = phase_of_truncated(well, 0.0);
    CHECK(std::abs(none.delta_principal) < 1e-10);

    auto full = phase_of_truncated(well, 5.0);
    auto ref = direct_phase_shift(well, {}, 6.0); // same span as the truncated run
    CHECK(std::abs(full.delta_principal - ref.delta_principal) < 1e-10);

    auto half = phase_of_truncated(well, 0.5);
    const double oracle = square_well_phase_exact(-2.0, 0.5, 1.0);
    CHECK(std::abs(half.delta_principal - wrap_principal(oracle)) < 1e-6);
}

TEST_CASE("truncation phase is continuous and saturates", "[direct]") {
    ScatteringContext gauss{PotentialSpec::gaussian(-1.0, 1.0), 0, 1.0};
    double prev = 0.0;
    for (double r0 : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 6.0, 8.0}) {
        const double d = phase_of_truncated(gauss, r0).delta_principal;
        CHECK(std::abs(d - prev) < 0.5);
        prev = d;
    }
    const double d8 = phase_of_truncated(gauss, 8.0).delta_principal;
    const double d12 = phase_of_truncated(gauss, 12.0).delta_principal;
    CHECK(std::abs(d8 - d12) < 1e-9);
}

TEST_CASE("sweep unwrapping", "[direct]") {
    std::vector<PhaseShiftResult> sweep(3);
    sweep[0].delta_principal = 1.5;
    sweep[1].delta_principal = -1.5; // principal wrap of ~1.64
    sweep[2].delta_principal = -1.3;
    unwrap_sweep(sweep);
    CHECK(sweep[0].delta_continuous == 1.5);
    CHECK(std::abs(sweep[1].delta_continuous - (-1.5 + std::numbers::pi)) < 1e-12);
    CHECK(std::abs(sweep[2].delta_continuous - (-1.3 + std::numbers::pi)) < 1e-12);
}
