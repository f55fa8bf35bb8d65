#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pam/integrate.hpp"

using namespace pam;

namespace {

Trace sampled(double a, double b, std::size_t n, double (*f)(double), double (*df)(double)) {
    Trace t;
    for (std::size_t i = 0; i < n; ++i) {
        double r = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
        t.nodes.push_back(r);
        t.values.push_back(f(r));
        t.derivs.push_back(df(r));
    }
    return t;
}

} // namespace

TEST_CASE("exponential growth reproduces e", "[integrate]") {
    auto rhs = [](double, const State<1>& y, State<1>& dy) { dy[0] = y[0]; };
    auto sol = integrate_ivp<1>(rhs, {1.0}, 0.0, 1.0);
    CHECK(std::abs(sol.final_state()[0] - std::exp(1.0)) < 1e-9);
}

TEST_CASE("gaussian decay y' = -2ry", "[integrate]") {
    auto rhs = [](double r, const State<1>& y, State<1>& dy) { dy[0] = -2.0 * r * y[0]; };
    auto sol = integrate_ivp<1>(rhs, {1.0}, 0.0, 2.0);
    CHECK(std::abs(sol.final_state()[0] - std::exp(-4.0)) < 1e-9);
}

TEST_CASE("harmonic oscillator hits the node at pi", "[integrate]") {
    auto rhs = [](double, const State<2>& y, State<2>& dy) {
        dy[0] = y[1];
        dy[1] = -y[0];
    };
    auto sol = integrate_ivp<2>(rhs, {0.0, 1.0}, 0.0, std::acos(-1.0));
    CHECK(std::abs(sol.final_state()[0]) < 1e-9);
}

TEST_CASE("quadrature basics", "[integrate]") {
    const double pi = std::acos(-1.0);
    CHECK(std::abs(quadrature([](double r) { return std::sin(r); }, 0.0, pi) - 2.0) < 1e-10);
    CHECK(std::abs(quadrature([](double) { return 1.0; }, 0.0, 1.0) - 1.0) < 1e-14);
    CHECK(std::abs(quadrature([](double r) { return std::exp(-r); }, 0.0, 40.0) - 1.0) < 1e-10);
    CHECK(quadrature([](double r) { return r; }, 2.0, 2.0) == 0.0);
    CHECK_THROWS_AS(quadrature([](double r) { return r; }, 1.0, 0.0), InvalidConfig);
}

TEST_CASE("second derivative from value+derivative data", "[integrate]") {
    auto tsin = sampled(0.0, 2.0, 201, +[](double r) { return std::sin(r); },
                        +[](double r) { return std::cos(r); });
    auto d = second_derivative(tsin, 1.0);
    CHECK(std::abs(d.value + std::sin(1.0)) <= std::max(d.error, 1e-12));

    auto tsq = sampled(0.0, 2.0, 101, +[](double r) { return r * r; },
                       +[](double r) { return 2.0 * r; });
    auto d2 = second_derivative(tsq, 0.7);
    CHECK(std::abs(d2.value - 2.0) < 1e-9);

    auto tg = sampled(-1.0, 1.0, 201, +[](double r) { return std::exp(-r * r); },
                      +[](double r) { return -2.0 * r * std::exp(-r * r); });
    auto d3 = second_derivative(tg, 0.0);
    CHECK(std::abs(d3.value + 2.0) <= std::max(d3.error, 1e-10));

    CHECK_THROWS_AS(second_derivative(tsin, 3.5), OutOfRange);
}

TEST_CASE("forced step halving shows fifth-order convergence", "[integrate]") {
    auto rhs = [](double, const State<2>& y, State<2>& dy) {
        dy[0] = y[1];
        dy[1] = -y[0];
    };
    IntegratorConfig loose;
    loose.abs_tol = loose.rel_tol = 0.5; // step bound comes from max_step
    const double pi = std::acos(-1.0);
    auto err_at = [&](double h) {
        auto sol = integrate_ivp<2>(rhs, {0.0, 1.0}, 0.0, pi, loose, {}, h);
        return std::abs(sol.final_state()[0]);
    };
    const double e1 = err_at(0.2);
    const double e2 = err_at(0.1);
    CHECK(e1 / e2 > std::pow(2.0, 4.5));
}

TEST_CASE("tighter tolerance gives smaller error", "[integrate]") {
    auto rhs = [](double, const State<1>& y, State<1>& dy) { dy[0] = y[0]; };
    double prev = 1.0;
    for (double tol : {1e-6, 1e-8, 1e-10}) {
        IntegratorConfig cfg;
        cfg.abs_tol = cfg.rel_tol = tol;
        auto sol = integrate_ivp<1>(rhs, {1.0}, 0.0, 1.0, cfg);
        double err = std::abs(sol.final_state()[0] - std::exp(1.0));
        CHECK(err < 200.0 * tol);
        CHECK(err <= prev);
        prev = err;
    }
}

TEST_CASE("reversibility", "[integrate]") {
    auto rhs = [](double r, const State<2>& y, State<2>& dy) {
        dy[0] = y[1];
        dy[1] = -(1.0 + 0.3 * std::sin(r)) * y[0];
    };
    auto fwd = integrate_ivp<2>(rhs, {0.3, 1.0}, 0.0, 5.0);
    auto back = integrate_ivp<2>(rhs, fwd.final_state(), 5.0, 0.0);
    CHECK(std::abs(back.final_state()[0] - 0.3) < 1e-9);
    CHECK(std::abs(back.final_state()[1] - 1.0) < 1e-9);
}

TEST_CASE("dense output matches stored samples at nodes", "[integrate]") {
    auto rhs = [](double r, const State<1>& y, State<1>& dy) { dy[0] = std::cos(r) * y[0]; };
    auto sol = integrate_ivp<1>(rhs, {1.0}, 0.0, 3.0);
    Trace t = sol.component(0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(t.eval(t.nodes[i]) == t.values[i]);
        CHECK(t.eval_deriv(t.nodes[i]) == t.derivs[i]);
    }
}

TEST_CASE("inward integration yields ascending trace", "[integrate]") {
    auto rhs = [](double, const State<1>& y, State<1>& dy) { dy[0] = -y[0]; };
    auto sol = integrate_ivp<1>(rhs, {1.0}, 4.0, 1.0);
    Trace t = sol.component(0);
    REQUIRE(t.size() >= 2);
    CHECK(t.nodes.front() == 1.0);
    CHECK(t.nodes.back() == 4.0);
    CHECK(std::abs(t.front_value() - std::exp(3.0)) < 1e-7);
}

TEST_CASE("breakpoints are landed on exactly", "[integrate]") {
    auto rhs = [](double r, const State<1>&, State<1>& dy) { dy[0] = (r < 0.7) ? 1.0 : -1.0; };
    const std::vector<double> brk{0.7};
    auto sol = integrate_ivp<1>(rhs, {0.0}, 0.0, 2.0, {}, brk);
    bool hit = false;
    for (double n : sol.nodes) hit = hit || (n == 0.7);
    CHECK(hit);
    CHECK(std::abs(sol.final_state()[0] - (0.7 - 1.3)) < 1e-12);
}

TEST_CASE("max_step caps node spacing", "[integrate]") {
    auto rhs = [](double, const State<1>& y, State<1>& dy) { dy[0] = y[0] * 0.1; };
    auto sol = integrate_ivp<1>(rhs, {1.0}, 0.0, 1.0, {}, {}, 0.05);
    for (std::size_t i = 1; i < sol.nodes.size(); ++i)
        CHECK(sol.nodes[i] - sol.nodes[i - 1] <= 0.05 + 1e-12);
}

TEST_CASE("integrator error taxonomy", "[integrate]") {
    auto singular = [](double r, const State<1>&, State<1>& dy) { dy[0] = 1.0 / (r - 0.5); };
    CHECK_THROWS_AS(integrate_ivp<1>(singular, {0.0}, 0.0, 1.0), StepUnderflow);

    auto nan_region = [](double r, const State<1>&, State<1>& dy) {
        dy[0] = (r > 0.5) ? std::nan("") : 1.0;
    };
    CHECK_THROWS_AS(integrate_ivp<1>(nan_region, {0.0}, 0.0, 1.0), NonFiniteState);

    auto nan_start = [](double, const State<1>&, State<1>& dy) { dy[0] = std::nan(""); };
    CHECK_THROWS_AS(integrate_ivp<1>(nan_start, {0.0}, 0.0, 1.0), NonFiniteState);

    auto osc = [](double r, const State<1>&, State<1>& dy) { dy[0] = std::sin(100.0 * r); };
    IntegratorConfig few;
    few.max_steps = 5;
    CHECK_THROWS_AS(integrate_ivp<1>(osc, {0.0}, 0.0, 50.0, few), MaxStepsExceeded);

    IntegratorConfig bad;
    bad.abs_tol = 0.0;
    auto ok = [](double, const State<1>&, State<1>& dy) { dy[0] = 0.0; };
    CHECK_THROWS_AS(integrate_ivp<1>(ok, {0.0}, 0.0, 1.0, bad), InvalidConfig);
    CHECK_THROWS_AS(integrate_ivp<1>(ok, {0.0}, 1.0, 1.0), InvalidConfig);
}

TEST_CASE("trace resampling and node union", "[trace]") {
    auto t = sampled(0.0, 3.0, 61, +[](double r) { return std::sin(r); },
                     +[](double r) { return std::cos(r); });
    std::vector<double> grid;
    for (int i = 0; i <= 30; ++i) grid.push_back(0.05 + i * 0.095);
    Trace rs = t.resampled(grid);
    for (std::size_t i = 0; i < rs.size(); ++i)
        CHECK(std::abs(rs.values[i] - std::sin(rs.nodes[i])) < 1e-6);

    auto u = sampled(0.5, 2.5, 11, +[](double r) { return r; }, +[](double) { return 1.0; });
    auto un = union_nodes(t, u);
    CHECK(un.front() >= 0.5);
    CHECK(un.back() <= 2.5);
    for (std::size_t i = 1; i < un.size(); ++i) CHECK(un[i] > un[i - 1]);
}
