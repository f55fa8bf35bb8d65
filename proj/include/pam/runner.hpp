#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pam/direct.hpp"
#include "pam/errors.hpp"
#include "pam/gauge.hpp"
#include "pam/jwkb.hpp"
#include "pam/milne.hpp"
#include "pam/potentials.hpp"
#include "pam/variational.hpp"
#include "pam/vpa.hpp"

namespace pam {

/// One run request: potential, angular momentum, energies, method selection,
/// tolerances and output routing. Flags override file values which override
/// defaults.
struct RunConfig {
    PotentialSpec potential;
    std::string potential_desc = "zero";
    int ell = 0;
    std::vector<double> energies{1.0};
    std::string method = "all";
    double r_max = 0.0; // 0: choose from the potential decay
    IntegratorConfig tolerances;
    std::string output;          // empty: stdout
    std::string format = "csv";  // csv | json
    int threads = 1;

    void validate() const {
        tolerances.validate();
        if (ell < 0 || ell > 6) throw InvalidConfig("config field 'ell' must lie in 0..6");
        if (energies.empty()) throw InvalidConfig("config field 'energies' must be non-empty");
        for (double e : energies)
            if (!(e > 0.0)) throw InvalidConfig("config field 'energies' requires E > 0");
        if (format != "csv" && format != "json")
            throw InvalidConfig("config field 'format' must be csv or json");
        static const char* tags[] = {"all",       "direct",          "jwkb",       "milne",
                                     "vpa_local", "vpa_partitioned", "variational"};
        if (std::find_if(std::begin(tags), std::end(tags),
                         [&](const char* t) { return method == t; }) == std::end(tags))
            throw InvalidConfig("config field 'method' has unknown tag: " + method);
        if (threads < 1 || threads > 256)
            throw InvalidConfig("config field 'threads' must lie in 1..256");
        if (r_max < 0.0) throw InvalidConfig("config field 'r_max' must be positive");
    }
};

struct ResultRecord {
    std::string method;
    int ell = 0;
    double energy = 0.0;
    double delta_principal = 0.0;
    double delta_continuous = 0.0;
    double alpha_at_origin = std::numeric_limits<double>::quiet_NaN();
    std::map<std::string, double> diagnostics;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw InvalidConfig("unknown config key '" + it.key() + "' in " + where);
    }
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Parse "name:params" potential descriptions used by the CLI:
/// zero | square_well:V0,a | exponential:V0,a | gaussian:V0,a | file:path
inline PotentialSpec parse_potential(const std::string& desc) {
    const auto colon = desc.find(':');
    const std::string name = desc.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : desc.substr(colon + 1);
    auto two_params = [&]() {
        double v0, a;
        char comma;
        std::istringstream ss(args);
        if (!(ss >> v0 >> comma >> a) || comma != ',')
            throw InvalidConfig("potential '" + name + "' needs parameters V0,a");
        return std::pair{v0, a};
    };
    if (name == "zero") return PotentialSpec::zero_potential();
    if (name == "square_well") {
        auto [v0, a] = two_params();
        return PotentialSpec::square_well(v0, a);
    }
    if (name == "exponential") {
        auto [v0, a] = two_params();
        return PotentialSpec::exponential(v0, a);
    }
    if (name == "gaussian") {
        auto [v0, a] = two_params();
        return PotentialSpec::gaussian(v0, a);
    }
    if (name == "file") return PotentialSpec::tabulated_from_file(args);
    throw InvalidConfig("unknown potential model: " + name);
}

inline PotentialSpec potential_from_json(const nlohmann::json& j, std::string& desc);

inline PotentialSpec potential_from_json(const nlohmann::json& j, std::string& desc) {
    detail::reject_unknown_keys(j, {"model", "strength", "range", "file", "long_range"},
                                "potential");
    if (!j.contains("model")) throw InvalidConfig("potential needs a 'model' key");
    const std::string model = j.at("model").get<std::string>();
    PotentialSpec spec;
    if (model == "zero") {
        spec = PotentialSpec::zero_potential();
    } else if (model == "file") {
        spec = PotentialSpec::tabulated_from_file(j.at("file").get<std::string>());
    } else {
        const double v0 = j.value("strength", 0.0);
        const double a = j.value("range", 1.0);
        if (model == "square_well")
            spec = PotentialSpec::square_well(v0, a);
        else if (model == "exponential")
            spec = PotentialSpec::exponential(v0, a);
        else if (model == "gaussian")
            spec = PotentialSpec::gaussian(v0, a);
        else
            throw InvalidConfig("unknown potential model: " + model);
    }
    desc = model;
    if (j.contains("long_range")) {
        std::string lr_desc;
        spec = spec.with_long_range(potential_from_json(j.at("long_range"), lr_desc));
        desc += "+long_range:" + lr_desc;
    }
    return spec;
}

/// Parse a config JSON document with strict key checking.
inline RunConfig parse_config(const nlohmann::json& j) {
    detail::reject_unknown_keys(j,
                                {"potential", "ell", "energies", "method", "r_max",
                                 "tolerances", "output", "format", "threads"},
                                "config root");
    RunConfig cfg;
    if (j.contains("potential"))
        cfg.potential = potential_from_json(j.at("potential"), cfg.potential_desc);
    if (j.contains("ell")) {
        if (!j.at("ell").is_number_integer())
            throw InvalidConfig("config field 'ell' must be an integer");
        cfg.ell = j.at("ell").get<int>();
    }
    if (j.contains("energies")) {
        const auto& je = j.at("energies");
        cfg.energies.clear();
        if (je.is_array()) {
            for (const auto& e : je) cfg.energies.push_back(e.get<double>());
        } else if (je.is_object()) {
            detail::reject_unknown_keys(je, {"min", "max", "count", "spacing"}, "energies");
            const double lo = je.at("min").get<double>();
            const double hi = je.at("max").get<double>();
            const int count = je.at("count").get<int>();
            const std::string spacing = je.value("spacing", "linear");
            if (count < 1) throw InvalidConfig("config field 'energies.count' must be >= 1");
            if (!(lo > 0.0) || hi < lo)
                throw InvalidConfig("config field 'energies' needs 0 < min <= max");
            if (spacing != "linear" && spacing != "log")
                throw InvalidConfig("config field 'energies.spacing' must be linear or log");
            for (int i = 0; i < count; ++i) {
                const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
                cfg.energies.push_back(spacing == "log"
                                           ? lo * std::pow(hi / lo, t)
                                           : lo + (hi - lo) * t);
            }
        } else {
            throw InvalidConfig("config field 'energies' must be a list or a range object");
        }
    }
    if (j.contains("method")) cfg.method = j.at("method").get<std::string>();
    if (j.contains("r_max")) cfg.r_max = j.at("r_max").get<double>();
    if (j.contains("tolerances")) {
        const auto& jt = j.at("tolerances");
        detail::reject_unknown_keys(jt, {"abs_tol", "rel_tol", "max_steps", "min_step"},
                                    "tolerances");
        cfg.tolerances.abs_tol = jt.value("abs_tol", cfg.tolerances.abs_tol);
        cfg.tolerances.rel_tol = jt.value("rel_tol", cfg.tolerances.rel_tol);
        cfg.tolerances.max_steps = jt.value("max_steps", cfg.tolerances.max_steps);
        cfg.tolerances.min_step = jt.value("min_step", cfg.tolerances.min_step);
    }
    if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
    if (j.contains("format")) cfg.format = j.at("format").get<std::string>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    cfg.validate();
    return cfg;
}

inline nlohmann::json config_echo(const RunConfig& cfg) {
    nlohmann::json j;
    j["potential"] = cfg.potential_desc;
    j["ell"] = cfg.ell;
    j["energies"] = cfg.energies;
    j["method"] = cfg.method;
    j["r_max"] = cfg.r_max;
    j["tolerances"] = {{"abs_tol", cfg.tolerances.abs_tol},
                       {"rel_tol", cfg.tolerances.rel_tol},
                       {"max_steps", cfg.tolerances.max_steps},
                       {"min_step", cfg.tolerances.min_step}};
    j["format"] = cfg.format;
    j["threads"] = cfg.threads;
    return j;
}

/// Which methods run under method=all for this context: the approximate
/// s-wave methods need a turning-point-free span.
inline std::vector<Method> applicable_methods(const RunConfig& cfg, double energy) {
    std::vector<Method> out{Method::direct, Method::milne, Method::vpa_partitioned};
    if (cfg.ell != 0) return out;
    ScatteringContext ctx{cfg.potential, cfg.ell, energy};
    const double r_hi = cfg.r_max > 0.0 ? cfg.r_max : default_r_max(ctx);
    bool allowed = true;
    for (int i = 1; i <= 512; ++i)
        if (local_wavenumber_sq(ctx, r_hi * i / 512.0) <= 0.0) allowed = false;
    if (allowed) {
        out.push_back(Method::vpa_local);
        out.push_back(Method::jwkb);
        if (!cfg.potential.long_range_part) out.push_back(Method::variational);
    }
    return out;
}

/// Run one (method, energy) solve. Every record carries a finite
/// max_residual diagnostic: the defect of the method's own reconstruction
/// above stencil noise, the discretization residual of the JWKB identity,
/// or the variational defect integral.
inline ResultRecord solve_one(const RunConfig& cfg, Method m, double energy) {
    ScatteringContext ctx{cfg.potential, cfg.ell, energy};
    PhaseShiftResult r;
    switch (m) {
        case Method::direct: r = direct_phase_shift(ctx, cfg.tolerances, cfg.r_max); break;
        case Method::jwkb: {
            r = jwkb_phase_estimate(ctx, cfg.r_max, cfg.tolerances);
            const double hi = cfg.r_max > 0.0 ? cfg.r_max : default_r_max(ctx);
            auto wave = jwkb_wave(ctx, 1e-6, hi, cfg.tolerances);
            r.diagnostics["max_residual"] = jwkb_residual_check(wave, ctx, 1.0);
            break;
        }
        case Method::milne: r = milne_phase_shift(ctx, cfg.tolerances, cfg.r_max, true); break;
        case Method::vpa_local: {
            auto sol = solve_local_form(ctx, cfg.r_max, cfg.tolerances);
            r.method = Method::vpa_local;
            r.delta_continuous = sol.delta;
            r.delta_principal = wrap_principal(sol.delta);
            r.diagnostics["step_count"] = static_cast<double>(sol.steps);
            r.diagnostics["tolerance"] = cfg.tolerances.abs_tol;
            r.diagnostics["r_match"] = sol.phi.r_max();
            r.diagnostics["max_residual"] = regular_residual(local_form_wave(sol, ctx), ctx);
            break;
        }
        case Method::vpa_partitioned: {
            // With a declared long-range part the reference pair comes from
            // a Milne solve of that problem and the reported phase is the
            // long-range phase plus the short-range phase function.
            auto ref = long_range_reference(ctx, cfg.tolerances, cfg.r_max);
            auto dtrace = solve_partitioned(ctx, ref.pair, cfg.tolerances, cfg.r_max);
            auto amp = amplitude_from_phase(dtrace, ctx, cfg.tolerances);
            r.method = Method::vpa_partitioned;
            r.delta_continuous = ref.delta_long + dtrace.delta.back_value();
            r.delta_principal = wrap_principal(r.delta_continuous);
            r.diagnostics["step_count"] = static_cast<double>(dtrace.steps);
            r.diagnostics["tolerance"] = cfg.tolerances.abs_tol;
            r.diagnostics["r_match"] = dtrace.delta.r_max();
            r.diagnostics["alpha_at_origin"] = amp.alpha.front_value();
            r.diagnostics["max_residual"] =
                regular_residual(partitioned_wave(dtrace, amp), ctx);
            if (ctx.spec.long_range_part) {
                r.diagnostics["delta_long_range"] = ref.delta_long;
                r.diagnostics["delta_short_range"] = dtrace.delta.back_value();
            }
            break;
        }
        case Method::variational:
            r = variational_phase_shift(ctx, cfg.tolerances, cfg.r_max);
            r.diagnostics["max_residual"] = std::abs(r.diagnostics["correction"]);
            break;
    }
    ResultRecord rec;
    rec.method = method_name(m);
    rec.ell = cfg.ell;
    rec.energy = energy;
    rec.delta_principal = r.delta_principal;
    rec.delta_continuous = r.delta_continuous;
    rec.diagnostics = r.diagnostics;
    if (auto it = r.diagnostics.find("alpha_at_origin"); it != r.diagnostics.end())
        rec.alpha_at_origin = it->second;
    return rec;
}

/// Full sweep: one record per (method, energy), ordered by energy then
/// method, with per-method branch unwrapping across the sweep. Energies may
/// fan out over threads; records are assembled in deterministic order.
inline std::vector<ResultRecord> run_phaseshift(const RunConfig& cfg) {
    cfg.validate();
    std::vector<double> energies = cfg.energies;

    std::vector<std::vector<ResultRecord>> per_energy(energies.size());
    auto work = [&](std::size_t i) {
        std::vector<ResultRecord> recs;
        if (cfg.method == "all") {
            for (Method m : applicable_methods(cfg, energies[i]))
                recs.push_back(solve_one(cfg, m, energies[i]));
        } else {
            for (Method m : {Method::direct, Method::jwkb, Method::milne, Method::vpa_local,
                             Method::vpa_partitioned, Method::variational})
                if (cfg.method == method_name(m))
                    recs.push_back(solve_one(cfg, m, energies[i]));
        }
        return recs;
    };

    if (cfg.threads <= 1) {
        for (std::size_t i = 0; i < energies.size(); ++i) per_energy[i] = work(i);
    } else {
        std::vector<std::future<std::vector<ResultRecord>>> futs;
        futs.reserve(energies.size());
        for (std::size_t i = 0; i < energies.size(); ++i)
            futs.push_back(std::async(std::launch::async, work, i));
        for (std::size_t i = 0; i < energies.size(); ++i) per_energy[i] = futs[i].get();
    }

    // Per-method unwrapping along the energy ordering.
    std::map<std::string, std::vector<PhaseShiftResult>> sweeps;
    for (auto& recs : per_energy)
        for (auto& rec : recs) {
            PhaseShiftResult p;
            p.delta_principal = rec.delta_principal;
            sweeps[rec.method].push_back(p);
        }
    for (auto& [name, sweep] : sweeps) unwrap_sweep(sweep);
    std::map<std::string, std::size_t> cursor;
    std::vector<ResultRecord> out;
    for (auto& recs : per_energy)
        for (auto& rec : recs) {
            rec.delta_continuous = sweeps[rec.method][cursor[rec.method]++].delta_continuous;
            out.push_back(std::move(rec));
        }
    return out;
}

inline const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{
        "method",          "ell",        "energy",   "delta_principal", "delta_continuous",
        "alpha_at_origin", "max_residual", "step_count", "r_match",     "tolerance"};
    return cols;
}

inline std::string results_to_csv(const RunConfig& cfg, const std::vector<ResultRecord>& recs,
                                  const std::string& timestamp) {
    std::ostringstream os;
    os << "# schema_version: 1\n";
    os << "# generated_at: " << timestamp << "\n";
    os << "# config: " << config_echo(cfg).dump() << "\n";
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << cols[i] << (i + 1 < cols.size() ? "," : "\n");
    auto diag = [](const ResultRecord& r, const char* key) {
        auto it = r.diagnostics.find(key);
        return it == r.diagnostics.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
    };
    for (const auto& r : recs) {
        os << r.method << ',' << r.ell << ',' << detail::format_double(r.energy) << ','
           << detail::format_double(r.delta_principal) << ','
           << detail::format_double(r.delta_continuous) << ','
           << detail::format_double(r.alpha_at_origin) << ','
           << detail::format_double(diag(r, "max_residual")) << ','
           << detail::format_double(diag(r, "step_count")) << ','
           << detail::format_double(diag(r, "r_match")) << ','
           << detail::format_double(diag(r, "tolerance")) << "\n";
    }
    return os.str();
}

inline std::string results_to_json(const RunConfig& cfg, const std::vector<ResultRecord>& recs,
                                   const std::string& timestamp) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["generated_at"] = timestamp;
    j["config"] = config_echo(cfg);
    j["results"] = nlohmann::json::array();
    for (const auto& r : recs) {
        nlohmann::json one;
        one["method"] = r.method;
        one["ell"] = r.ell;
        one["energy"] = r.energy;
        one["delta_principal"] = r.delta_principal;
        one["delta_continuous"] = r.delta_continuous;
        if (std::isnan(r.alpha_at_origin))
            one["alpha_at_origin"] = nullptr;
        else
            one["alpha_at_origin"] = r.alpha_at_origin;
        one["diagnostics"] = r.diagnostics;
        j["results"].push_back(std::move(one));
    }
    return j.dump(2) + "\n";
}

inline std::string current_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

/// Cross-method comparison row; deviations are taken on the principal
/// branch. max_dev_exact covers the exact methods only (direct, milne and
/// both variable-phase forms); jwkb and the variational estimate are
/// approximations reported alongside.
struct CompareRow {
    double energy = 0.0;
    std::map<std::string, double> delta; // method -> principal value
    double oracle = std::numeric_limits<double>::quiet_NaN();
    double max_dev_exact = 0.0;
};

inline std::vector<CompareRow> run_compare(const RunConfig& cfg) {
    RunConfig all = cfg;
    all.method = "all";
    auto recs = run_phaseshift(all);
    std::map<double, CompareRow> rows;
    for (const auto& r : recs) {
        auto& row = rows[r.energy];
        row.energy = r.energy;
        row.delta[r.method] = r.delta_principal;
    }
    const bool has_oracle = cfg.potential.model == PotentialModel::square_well &&
                            cfg.potential.strength < 0.0 && cfg.ell == 0 &&
                            !std::isfinite(cfg.potential.truncation_radius);
    static const char* exact[] = {"direct", "milne", "vpa_partitioned", "vpa_local"};
    std::vector<CompareRow> out;
    for (auto& [e, row] : rows) {
        if (has_oracle)
            row.oracle = wrap_principal(
                square_well_phase_exact(cfg.potential.strength, cfg.potential.range, e));
        for (const char* a : exact)
            for (const char* b : exact) {
                auto ia = row.delta.find(a), ib = row.delta.find(b);
                if (ia != row.delta.end() && ib != row.delta.end())
                    row.max_dev_exact = std::max(
                        row.max_dev_exact,
                        std::abs(wrap_principal(ia->second - ib->second)));
            }
        out.push_back(row);
    }
    return out;
}

inline std::string compare_to_csv(const RunConfig& cfg, const std::vector<CompareRow>& rows,
                                  const std::string& timestamp) {
    std::ostringstream os;
    os << "# schema_version: 1\n";
    os << "# generated_at: " << timestamp << "\n";
    os << "# config: " << config_echo(cfg).dump() << "\n";
    os << "energy,delta_direct,delta_milne,delta_vpa_partitioned,delta_vpa_local,delta_jwkb,"
          "delta_variational,delta_oracle,max_dev_exact\n";
    auto cell = [](const CompareRow& row, const char* m) {
        auto it = row.delta.find(m);
        return detail::format_double(
            it == row.delta.end() ? std::numeric_limits<double>::quiet_NaN() : it->second);
    };
    double worst = 0.0;
    for (const auto& row : rows) {
        worst = std::max(worst, row.max_dev_exact);
        os << detail::format_double(row.energy) << ',' << cell(row, "direct") << ','
           << cell(row, "milne") << ',' << cell(row, "vpa_partitioned") << ','
           << cell(row, "vpa_local") << ',' << cell(row, "jwkb") << ','
           << cell(row, "variational") << ',' << detail::format_double(row.oracle) << ','
           << detail::format_double(row.max_dev_exact) << "\n";
    }
    os << "# worst_max_dev_exact: " << detail::format_double(worst) << "\n";
    return os.str();
}

/// Benchmark: median wall time over `reps` runs per applicable method.
struct BenchRow {
    std::string method;
    double median_ms = 0.0;
    double steps = 0.0;
    double residual = std::numeric_limits<double>::quiet_NaN();
    int reps = 0;
};

inline std::vector<BenchRow> run_bench(const RunConfig& cfg, int reps = 5) {
    cfg.validate();
    if (reps < 5) reps = 5;
    const double energy = cfg.energies.front();
    std::vector<BenchRow> out;
    for (Method m : applicable_methods(cfg, energy)) {
        BenchRow row;
        row.method = method_name(m);
        row.reps = reps;
        std::vector<double> times;
        ResultRecord rec;
        for (int i = 0; i < reps; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            rec = solve_one(cfg, m, energy);
            const auto t1 = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        std::sort(times.begin(), times.end());
        row.median_ms = times[times.size() / 2];
        row.steps = rec.diagnostics.count("step_count") ? rec.diagnostics["step_count"]
                                                        : std::numeric_limits<double>::quiet_NaN();
        // Residual measures: genuine reconstruction residuals where defined.
        ScatteringContext ctx{cfg.potential, cfg.ell, energy};
        switch (m) {
            case Method::direct: {
                Trace u = solve_regular(ctx, cfg.r_max > 0 ? cfg.r_max : default_r_max(ctx),
                                        cfg.tolerances);
                row.residual = regular_residual(u, ctx, 25, false);
                break;
            }
            case Method::milne:
                row.residual = rec.diagnostics.count("max_residual")
                                   ? rec.diagnostics["max_residual"]
                                   : std::numeric_limits<double>::quiet_NaN();
                break;
            case Method::vpa_partitioned: {
                auto d = solve_partitioned(ctx, energy_normalized_pair(ctx.ell, energy),
                                           cfg.tolerances, cfg.r_max);
                auto a = amplitude_from_phase(d, ctx, cfg.tolerances);
                row.residual = regular_residual(partitioned_wave(d, a), ctx, 25, false);
                break;
            }
            case Method::vpa_local: {
                auto sol = solve_local_form(ctx, cfg.r_max, cfg.tolerances);
                row.residual = regular_residual(local_form_wave(sol, ctx), ctx, 25, false);
                break;
            }
            default: break; // no reconstruction residual for jwkb/variational
        }
        out.push_back(row);
    }
    return out;
}

inline std::string bench_to_csv(const RunConfig& cfg, const std::vector<BenchRow>& rows,
                                const std::string& timestamp) {
    std::ostringstream os;
    os << "# schema_version: 1\n";
    os << "# generated_at: " << timestamp << "\n";
    os << "# config: " << config_echo(cfg).dump() << "\n";
    os << "method,median_ms,steps,residual,reps\n";
    for (const auto& r : rows)
        os << r.method << ',' << detail::format_double(r.median_ms) << ','
           << detail::format_double(r.steps) << ',' << detail::format_double(r.residual) << ','
           << r.reps << "\n";
    return os.str();
}

/// Write to the configured output (stdout when empty).
inline void write_output(const RunConfig& cfg, const std::string& text) {
    if (cfg.output.empty()) {
        std::fputs(text.c_str(), stdout);
        return;
    }
    std::ofstream out(cfg.output, std::ios::binary);
    if (!out) throw InvalidConfig("cannot open output file: " + cfg.output);
    out << text;
}

} // namespace pam
