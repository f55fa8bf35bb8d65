#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pam/errors.hpp"
#include "pam/trace.hpp"

namespace pam {

enum class PotentialModel { zero, square_well, exponential, gaussian, tabulated };

/// A potential model, optionally carrying a second spec that plays the role
/// of the long-range component in the partitioned solvers. The model itself
/// is always the short-range part; the total potential is their sum.
/// An optional truncation radius zeroes the short-range part beyond it.
struct PotentialSpec {
    PotentialModel model = PotentialModel::zero;
    double strength = 0.0; // V0
    double range = 1.0;    // a
    Trace table;           // tabulated model only
    std::shared_ptr<const PotentialSpec> long_range_part;
    double truncation_radius = std::numeric_limits<double>::infinity();

    static PotentialSpec zero_potential() { return {}; }

    static PotentialSpec square_well(double v0, double a) {
        check_range(a);
        PotentialSpec s;
        s.model = PotentialModel::square_well;
        s.strength = v0;
        s.range = a;
        return s;
    }

    static PotentialSpec exponential(double v0, double a) {
        check_range(a);
        PotentialSpec s;
        s.model = PotentialModel::exponential;
        s.strength = v0;
        s.range = a;
        return s;
    }

    static PotentialSpec gaussian(double v0, double a) {
        check_range(a);
        PotentialSpec s;
        s.model = PotentialModel::gaussian;
        s.strength = v0;
        s.range = a;
        return s;
    }

    /// Tabulated values on a strictly increasing grid starting at r = 0,
    /// cubic-Hermite interpolated and clamped to zero beyond the last node.
    static PotentialSpec tabulated(std::vector<double> nodes, std::vector<double> values) {
        if (nodes.size() < 2 || nodes.size() != values.size())
            throw InvalidPotential("tabulated potential needs >= 2 (r, V) samples");
        if (nodes.front() != 0.0)
            throw InvalidPotential("tabulated potential must start at r = 0");
        PotentialSpec s;
        s.model = PotentialModel::tabulated;
        s.range = nodes.back();
        std::vector<double> derivs(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (i == 0)
                derivs[i] = (values[1] - values[0]) / (nodes[1] - nodes[0]);
            else if (i + 1 == nodes.size())
                derivs[i] = (values[i] - values[i - 1]) / (nodes[i] - nodes[i - 1]);
            else
                derivs[i] = (values[i + 1] - values[i - 1]) / (nodes[i + 1] - nodes[i - 1]);
        }
        s.table = Trace(std::move(nodes), std::move(values), std::move(derivs));
        return s;
    }

    /// Two-column text file (r, V), '#' comments, radii strictly increasing.
    static PotentialSpec tabulated_from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InvalidPotential("cannot open potential file: " + path);
        std::vector<double> r, v;
        std::string line;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::istringstream ss(line);
            double a, b;
            if (ss >> a >> b) {
                r.push_back(a);
                v.push_back(b);
            }
        }
        return tabulated(std::move(r), std::move(v));
    }

    [[nodiscard]] PotentialSpec with_long_range(PotentialSpec lr) const {
        PotentialSpec s = *this;
        s.long_range_part = std::make_shared<const PotentialSpec>(std::move(lr));
        return s;
    }

    [[nodiscard]] PotentialSpec truncated(double r0) const {
        if (r0 < 0.0) throw InvalidPotential("truncation radius must be >= 0");
        PotentialSpec s = *this;
        s.truncation_radius = r0;
        return s;
    }

    /// Short-range part v_s(r).
    [[nodiscard]] double short_range_value(double r) const {
        if (r > truncation_radius) return 0.0;
        switch (model) {
            case PotentialModel::zero: return 0.0;
            case PotentialModel::square_well: return (r < range) ? strength : 0.0;
            case PotentialModel::exponential: return strength * std::exp(-r / range);
            case PotentialModel::gaussian: return strength * std::exp(-(r / range) * (r / range));
            case PotentialModel::tabulated: return (r >= table.r_max()) ? 0.0 : table.eval(r);
        }
        return 0.0;
    }

    [[nodiscard]] double short_range_derivative(double r) const {
        if (r > truncation_radius) return 0.0;
        switch (model) {
            case PotentialModel::zero: return 0.0;
            case PotentialModel::square_well: return 0.0;
            case PotentialModel::exponential: return -strength / range * std::exp(-r / range);
            case PotentialModel::gaussian:
                return -2.0 * strength * r / (range * range) * std::exp(-(r / range) * (r / range));
            case PotentialModel::tabulated:
                return (r >= table.r_max()) ? 0.0 : table.eval_deriv(r);
        }
        return 0.0;
    }

    /// Long-range part V_L(r) (zero unless declared).
    [[nodiscard]] double long_range_value(double r) const {
        return long_range_part ? long_range_part->total_value(r) : 0.0;
    }

    [[nodiscard]] double long_range_derivative(double r) const {
        return long_range_part ? long_range_part->total_derivative(r) : 0.0;
    }

    /// V(r) of the governing equation (barrier not included).
    [[nodiscard]] double total_value(double r) const {
        return short_range_value(r) + long_range_value(r);
    }

    [[nodiscard]] double total_derivative(double r) const {
        return short_range_derivative(r) + long_range_derivative(r);
    }

    /// Radii where the potential value jumps; solvers restart there.
    [[nodiscard]] std::vector<double> discontinuities() const {
        std::vector<double> out;
        if (model == PotentialModel::square_well && strength != 0.0 &&
            range <= truncation_radius)
            out.push_back(range);
        if (model == PotentialModel::tabulated && table.back_value() != 0.0 &&
            table.r_max() <= truncation_radius)
            out.push_back(table.r_max());
        if (std::isfinite(truncation_radius) &&
            std::abs(short_range_value_untruncated(truncation_radius)) > 0.0)
            out.push_back(truncation_radius);
        if (long_range_part) {
            auto lr = long_range_part->discontinuities();
            out.insert(out.end(), lr.begin(), lr.end());
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    /// Smallest radius beyond which the whole potential stays under `tiny`
    /// (log-grid scan, capped at 1e3).
    [[nodiscard]] double support_radius(double tiny) const {
        double r0 = std::max(range, 1e-3);
        if (long_range_part) r0 = std::max(r0, long_range_part->range);
        double r = r0;
        while (r < 1e3) {
            bool quiet = true;
            for (double rr = r; rr <= 1.25 * r; rr += 0.05 * r)
                if (std::abs(total_value(rr)) >= tiny) {
                    quiet = false;
                    break;
                }
            if (quiet) return r;
            r *= 1.25;
        }
        return 1e3;
    }

private:
    [[nodiscard]] double short_range_value_untruncated(double r) const {
        PotentialSpec s = *this;
        s.truncation_radius = std::numeric_limits<double>::infinity();
        return s.short_range_value(r);
    }

    static void check_range(double a) {
        if (!(a > 0.0)) throw InvalidPotential("potential range must be > 0");
    }
};

/// Potential model, angular momentum and energy in the units of the
/// governing equation (k = sqrt(E) asymptotically).
struct ScatteringContext {
    PotentialSpec spec;
    int ell = 0;
    double energy = 1.0;

    ScatteringContext(PotentialSpec s, int l, double e)
        : spec(std::move(s)), ell(l), energy(e) {
        if (ell < 0 || ell > 6) throw UnsupportedEll("ell must lie in 0..6");
        if (!(energy > 0.0)) throw NonPositiveEnergy("scattering requires E > 0");
    }

    [[nodiscard]] double k() const { return std::sqrt(energy); }
};

/// V(r) + l(l+1)/r^2.
inline double effective_potential(const ScatteringContext& ctx, double r) {
    if (!(r > 0.0)) throw NonPositiveRadius("effective_potential: r must be > 0");
    const double barrier = static_cast<double>(ctx.ell) * (ctx.ell + 1) / (r * r);
    return ctx.spec.total_value(r) + barrier;
}

/// w(r) = E - V_eff(r); negative in classically forbidden regions.
inline double local_wavenumber_sq(const ScatteringContext& ctx, double r) {
    if (!(r > 0.0)) throw NonPositiveRadius("local_wavenumber_sq: r must be > 0");
    return ctx.energy - effective_potential(ctx, r);
}

/// d/dr of w(r).
inline double local_wavenumber_sq_deriv(const ScatteringContext& ctx, double r) {
    if (!(r > 0.0)) throw NonPositiveRadius("local_wavenumber_sq_deriv: r must be > 0");
    const double barrier_deriv = -2.0 * static_cast<double>(ctx.ell) * (ctx.ell + 1) / (r * r * r);
    return -(ctx.spec.total_derivative(r) + barrier_deriv);
}

struct Partition {
    std::function<double(double)> long_range;  // V_L(r)
    std::function<double(double)> short_range; // v_s(r)
};

/// Split V_eff(r) = V_L(r) + l(l+1)/r^2 + v_s(r).
inline Partition partition(const ScatteringContext& ctx) {
    const PotentialSpec spec = ctx.spec;
    return Partition{
        [spec](double r) { return spec.long_range_value(r); },
        [spec](double r) { return spec.short_range_value(r); },
    };
}

/// Default outer radius: smallest r with |v_s(r)| < 1e-12 * E, capped at 1e3.
inline double default_r_max(const ScatteringContext& ctx) {
    return ctx.spec.support_radius(1e-12 * ctx.energy);
}

} // namespace pam
