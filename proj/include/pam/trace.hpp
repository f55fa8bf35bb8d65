#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "pam/errors.hpp"

namespace pam {

/// A sampled function of r: values and first derivatives on a strictly
/// increasing node grid. Evaluation between nodes uses the cubic Hermite
/// interpolant built from (value, derivative) at the bracketing nodes;
/// at the nodes themselves the stored samples are returned exactly.
struct Trace {
    std::vector<double> nodes;
    std::vector<double> values;
    std::vector<double> derivs;

    Trace() = default;
    Trace(std::vector<double> n, std::vector<double> v, std::vector<double> d)
        : nodes(std::move(n)), values(std::move(v)), derivs(std::move(d)) {
        validate();
    }

    [[nodiscard]] std::size_t size() const { return nodes.size(); }
    [[nodiscard]] bool empty() const { return nodes.empty(); }
    [[nodiscard]] double r_min() const { return nodes.front(); }
    [[nodiscard]] double r_max() const { return nodes.back(); }
    [[nodiscard]] double front_value() const { return values.front(); }
    [[nodiscard]] double back_value() const { return values.back(); }

    void validate() const {
        if (nodes.size() != values.size() || nodes.size() != derivs.size())
            throw InvalidConfig("trace: nodes/values/derivs lengths differ");
        for (std::size_t i = 1; i < nodes.size(); ++i)
            if (!(nodes[i] > nodes[i - 1]))
                throw InvalidConfig("trace: nodes must be strictly increasing");
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (!std::isfinite(nodes[i]) || !std::isfinite(values[i]) || !std::isfinite(derivs[i]))
                throw NonFiniteState("trace: non-finite sample");
    }

    /// Index i of the interval [nodes[i], nodes[i+1]] containing r.
    [[nodiscard]] std::size_t locate(double r) const {
        if (size() < 2) throw OutOfRange("trace: too few nodes to interpolate");
        const double grace = 1e-9 * (r_max() - r_min());
        if (r < r_min() - grace || r > r_max() + grace)
            throw OutOfRange("trace: evaluation point outside node span");
        auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
        std::size_t i = static_cast<std::size_t>(it - nodes.begin());
        if (i == 0) return 0;
        if (i >= size()) return size() - 2;
        return i - 1;
    }

    [[nodiscard]] double eval(double r) const {
        const std::size_t i = locate(r);
        if (r == nodes[i]) return values[i];
        if (r == nodes[i + 1]) return values[i + 1];
        const double h = nodes[i + 1] - nodes[i];
        const double t = (r - nodes[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        return values[i] * (2 * t3 - 3 * t2 + 1) + derivs[i] * h * (t3 - 2 * t2 + t)
             + values[i + 1] * (-2 * t3 + 3 * t2) + derivs[i + 1] * h * (t3 - t2);
    }

    /// First derivative of the interpolant (equals the stored derivative
    /// at nodes).
    [[nodiscard]] double eval_deriv(double r) const {
        const std::size_t i = locate(r);
        if (r == nodes[i]) return derivs[i];
        if (r == nodes[i + 1]) return derivs[i + 1];
        const double h = nodes[i + 1] - nodes[i];
        const double t = (r - nodes[i]) / h;
        const double t2 = t * t;
        return values[i] * (6 * t2 - 6 * t) / h + derivs[i] * (3 * t2 - 4 * t + 1)
             + values[i + 1] * (6 * t - 6 * t2) / h + derivs[i + 1] * (3 * t2 - 2 * t);
    }

    /// Resample onto a new grid; derivatives come from the interpolant.
    [[nodiscard]] Trace resampled(std::span<const double> new_nodes) const {
        Trace out;
        out.nodes.assign(new_nodes.begin(), new_nodes.end());
        out.values.reserve(new_nodes.size());
        out.derivs.reserve(new_nodes.size());
        for (double r : new_nodes) {
            out.values.push_back(eval(r));
            out.derivs.push_back(eval_deriv(r));
        }
        out.validate();
        return out;
    }
};

/// Sorted union of two node sets (duplicates within round-off merged).
inline std::vector<double> union_nodes(const Trace& a, const Trace& b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    std::merge(a.nodes.begin(), a.nodes.end(), b.nodes.begin(), b.nodes.end(),
               std::back_inserter(out));
    const double lo = std::max(a.r_min(), b.r_min());
    const double hi = std::min(a.r_max(), b.r_max());
    std::erase_if(out, [&](double r) { return r < lo || r > hi; });
    const double tol = 1e-14 * (hi - lo);
    out.erase(std::unique(out.begin(), out.end(),
                          [&](double x, double y) { return std::abs(x - y) <= tol; }),
              out.end());
    return out;
}

} // namespace pam
