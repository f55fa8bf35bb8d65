#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "pam/freepair.hpp"
#include "pam/integrate.hpp"

using namespace pam;

namespace {

// Independent series oracle: S_l = x j_l(x) summed term by term from the
// ascending series, trustworthy for moderate x.
double series_S(int ell, double x) {
    long double dfact = 1.0L;
    for (int j = 1; j <= 2 * ell + 1; j += 2) dfact *= j;
    long double term = std::pow((long double)x, ell + 1) / dfact;
    long double sum = 0.0L;
    for (int m = 0; m < 120; ++m) {
        sum += term;
        term *= -0.5L * x * x / ((m + 1.0L) * (2.0L * (ell + m + 1) + 1.0L));
        if (std::abs((double)term) < 1e-20 * std::abs((double)sum)) break;
    }
    return (double)sum;
}

} // namespace

TEST_CASE("riccati-bessel closed forms at low ell", "[freepair]") {
    const double pi = std::numbers::pi;
    auto r0 = riccati_bessel(0, pi / 2);
    CHECK(std::abs(r0.S - 1.0) < 1e-12);
    CHECK(std::abs(r0.C) < 1e-12);

    auto r1 = riccati_bessel(1, 1.0);
    CHECK(std::abs(r1.S - (std::sin(1.0) - std::cos(1.0))) < 1e-14);

    CHECK_THROWS_AS(riccati_bessel(7, 1.0), UnsupportedEll);
    CHECK_THROWS_AS(riccati_bessel(-1, 1.0), UnsupportedEll);
    CHECK_THROWS_AS(riccati_bessel(2, 0.0), NonPositiveArgument);
}

TEST_CASE("riccati-bessel matches independent oracles", "[freepair]") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> xs(0.1, 50.0);
    for (int ell = 2; ell <= 6; ++ell) {
        for (int i = 0; i < 50; ++i) {
            const double x = xs(rng);
            auto rb = riccati_bessel(ell, x);
            const double S_std = x * std::sph_bessel(unsigned(ell), x);
            const double C_std = x * std::sph_neumann(unsigned(ell), x);
            CHECK(std::abs(rb.S - S_std) < 1e-10);
            CHECK(std::abs(rb.C - C_std) < 1e-10 * std::max(1.0, std::abs(C_std)));
            if (x < 8.0) CHECK(std::abs(rb.S - series_S(ell, x)) < 1e-10);
        }
    }
}

TEST_CASE("riccati-bessel wronskian is unity", "[freepair]") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> xs(0.1, 40.0);
    for (int ell = 0; ell <= 6; ++ell)
        for (int i = 0; i < 20; ++i) {
            const double x = xs(rng);
            auto rb = riccati_bessel(ell, x);
            CHECK(std::abs(rb.S * rb.Cp - rb.Sp * rb.C - 1.0) < 1e-11);
        }
}

TEST_CASE("energy-normalized pair", "[freepair]") {
    const double pi = std::numbers::pi;
    auto p = energy_normalized_pair(0, 1.0);
    for (double r : {0.5, 1.0, 5.0, 20.0})
        CHECK(std::abs(p.wronskian_at(r) - 2.0 / pi) < 1e-12);

    auto p4 = energy_normalized_pair(0, 4.0);
    CHECK(std::abs(p4.f(pi / 4) - std::sqrt(1.0 / pi)) < 1e-13);

    auto p1 = energy_normalized_pair(1, 1.0);
    const double c3 = p1.f(1e-3) / std::pow(1e-3, 2);
    const double c4 = p1.f(1e-4) / std::pow(1e-4, 2);
    CHECK(std::abs(c3) > 0.0);
    CHECK(std::abs(c4 / c3 - 1.0) < 1e-5);

    CHECK_THROWS_AS(energy_normalized_pair(0, 0.0), NonPositiveEnergy);
    CHECK_THROWS_AS(energy_normalized_pair(0, -1.0), NonPositiveEnergy);
}

TEST_CASE("pair satisfies the free equation", "[freepair]") {
    for (int ell : {0, 2, 5}) {
        const double energy = 2.0;
        auto p = energy_normalized_pair(ell, energy);
        Trace tf, tg;
        const double a = 0.8, b = 12.0;
        const int n = 1601;
        for (int i = 0; i < n; ++i) {
            const double r = a + (b - a) * i / (n - 1.0);
            tf.nodes.push_back(r);
            tf.values.push_back(p.f(r));
            tf.derivs.push_back(p.fp(r));
            tg.nodes.push_back(r);
            tg.values.push_back(p.g(r));
            tg.derivs.push_back(p.gp(r));
        }
        const double h = (b - a) / (n - 1.0);
        for (int i = 0; i < 20; ++i) {
            // Sample on grid nodes, where the stencil is cleanly 4th order.
            const double r = a + std::round((1.0 + 0.5 * i - a) / h) * h;
            const double w = energy - ell * (ell + 1.0) / (r * r);
            auto d2f = second_derivative(tf, r);
            CHECK(std::abs(d2f.value + w * tf.eval(r)) <= 10 * d2f.error + 1e-10);
            auto d2g = second_derivative(tg, r);
            CHECK(std::abs(d2g.value + w * tg.eval(r)) <= 10 * d2g.error + 1e-10);
        }
    }
}

TEST_CASE("irregular lags regular by pi/2", "[freepair]") {
    const double pi = std::numbers::pi;
    auto p = energy_normalized_pair(0, 4.0); // k = 2
    for (double r : {0.3, 1.0, 2.7, 8.0})
        CHECK(std::abs(p.g(r) + p.f(r + pi / 4.0)) < 1e-12);

    auto p2 = energy_normalized_pair(2, 1.0);
    for (double r : {60.0, 75.0})
        CHECK(std::abs(p2.g(r) + p2.f(r + pi / 2.0)) < 1e-2);
}

TEST_CASE("square well phase oracle branch and limits", "[freepair]") {
    CHECK(square_well_phase_exact(0.0, 1.0, 3.0) == 0.0);
    CHECK_THROWS_AS(square_well_phase_exact(1.0, 1.0, 1.0), InvalidWell);
    CHECK_THROWS_AS(square_well_phase_exact(-2.0, 0.0, 1.0), InvalidWell);
    CHECK_THROWS_AS(square_well_phase_exact(-2.0, 1.0, 0.0), InvalidWell);

    // Continuous in E from the high-energy end, decaying there.
    double prev = square_well_phase_exact(-2.0, 1.0, 1e4);
    CHECK(std::abs(prev) < 0.1);
    for (double e = 1e4; e > 0.1; e /= 1.05) {
        const double d = square_well_phase_exact(-2.0, 1.0, e);
        CHECK(std::abs(d - prev) < 0.2);
        prev = d;
    }

    // Deep well: continuity across interior tan poles.
    prev = square_well_phase_exact(-40.0, 1.0, 50.0);
    for (double e = 50.0; e > 0.2; e /= 1.02) {
        const double d = square_well_phase_exact(-40.0, 1.0, e);
        CHECK(std::abs(d - prev) < 0.2);
        prev = d;
    }

    // High-energy magnitude bound from the acceptance examples.
    const double d4 = square_well_phase_exact(-2.0, 1.0, 1e4);
    const double d5 = square_well_phase_exact(-2.0, 1.0, 1e5);
    CHECK(std::abs(d4) < 0.1);
    CHECK(std::abs(d5) < std::abs(d4));
}

TEST_CASE("born phase basics", "[freepair]") {
    ScatteringContext none{PotentialSpec::zero_potential(), 0, 1.0};
    CHECK(born_phase(none, 10.0) == 0.0);

    // Exact linearity in the coupling.
    const double lam = 1e-3;
    ScatteringContext full{PotentialSpec::square_well(-2.0, 1.0), 0, 1.0};
    ScatteringContext scaled{PotentialSpec::square_well(-2.0 * lam, 1.0), 0, 1.0};
    const double b_full = born_phase(full, 2.0);
    const double b_scaled = born_phase(scaled, 2.0);
    CHECK(std::abs(b_scaled - lam * b_full) < 1e-12 * std::abs(b_full));

    // Closed form of the Born integral for the square well at k = 1:
    // delta_B = -v0 (a/2 - sin(2a)/4).
    const double expect = 2.0 * (0.5 - std::sin(2.0) / 4.0);
    CHECK(std::abs(b_full - expect) < 1e-10);

    ScatteringContext ell1{PotentialSpec::square_well(-2.0, 1.0), 1, 1.0};
    CHECK_THROWS_AS(born_phase(ell1, 2.0), UnsupportedEll);
}
