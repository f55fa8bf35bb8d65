// pamscat: scattering phase shifts and phase-amplitude diagnostics for the
// radial equation. Subcommands: phaseshift, compare, milne, vpa, variational,
// gauge-check, bench. Exit codes: 0 ok, 2 config error, 3 solver failure.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pam/runner.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string potential;
    int ell = std::numeric_limits<int>::min(); // sentinel: not provided
    double energy = std::numeric_limits<double>::quiet_NaN();
    std::string energy_range;
    std::string method;
    double r_max = std::numeric_limits<double>::quiet_NaN();
    std::string tol;
    std::string output;
    std::string format;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON config file (flags override it)");
    cmd->add_option("--potential", o.potential,
                    "model:params, e.g. square_well:-2,1 gaussian:-1,1 file:table.txt");
    cmd->add_option("--ell", o.ell, "angular momentum (0..6)");
    cmd->add_option("--energy", o.energy, "single energy E > 0");
    cmd->add_option("--energy-range", o.energy_range, "min:max:count[:log]");
    cmd->add_option("--method", o.method, "direct|jwkb|milne|vpa_local|vpa_partitioned|variational|all");
    cmd->add_option("--rmax", o.r_max, "outer radius (default: potential decay radius)");
    cmd->add_option("--tol", o.tol, "abs[,rel] integrator tolerances");
    cmd->add_option("--output", o.output, "output path (default: stdout)");
    cmd->add_option("--format", o.format, "csv|json");
    cmd->add_option("--threads", o.threads, "energy-sweep fan-out");
}

pam::RunConfig build_config(const CommonOpts& o) {
    pam::RunConfig cfg;
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw pam::InvalidConfig("cannot open config file: " + o.config_path);
        nlohmann::json j;
        in >> j;
        cfg = pam::parse_config(j);
    }
    if (!o.potential.empty()) {
        cfg.potential = pam::parse_potential(o.potential);
        cfg.potential_desc = o.potential;
    }
    if (o.ell != std::numeric_limits<int>::min()) cfg.ell = o.ell;
    if (!std::isnan(o.energy)) cfg.energies = {o.energy};
    if (!o.energy_range.empty()) {
        double lo, hi;
        int count;
        char c1, c2, c3;
        std::string spacing = "linear";
        std::istringstream ss(o.energy_range);
        if (!(ss >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':')
            throw pam::InvalidConfig("--energy-range expects min:max:count[:log]");
        if (ss >> c3) {
            std::string tail;
            ss >> tail;
            if (c3 != ':' || tail != "log")
                throw pam::InvalidConfig("--energy-range expects min:max:count[:log]");
            spacing = "log";
        }
        nlohmann::json je{{"min", lo}, {"max", hi}, {"count", count}, {"spacing", spacing}};
        nlohmann::json j{{"energies", je}};
        cfg.energies = pam::parse_config(j).energies;
    }
    if (!o.method.empty()) cfg.method = o.method;
    if (!std::isnan(o.r_max)) cfg.r_max = o.r_max;
    if (!o.tol.empty()) {
        double a, r;
        char comma;
        std::istringstream ss(o.tol);
        if (!(ss >> a)) throw pam::InvalidConfig("--tol expects abs[,rel]");
        r = (ss >> comma >> r && comma == ',') ? r : a;
        cfg.tolerances.abs_tol = a;
        cfg.tolerances.rel_tol = r;
    }
    if (!o.output.empty()) cfg.output = o.output;
    if (!o.format.empty()) cfg.format = o.format;
    if (o.threads > 0) cfg.threads = o.threads;
    cfg.validate();
    return cfg;
}

std::string table_csv(const pam::RunConfig& cfg, const std::string& columns,
                      const std::vector<std::vector<double>>& rows,
                      const std::string& timestamp) {
    std::ostringstream os;
    os << "# schema_version: 1\n# generated_at: " << timestamp
       << "\n# config: " << pam::config_echo(cfg).dump() << "\n" << columns << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << pam::detail::format_double(row[i]) << (i + 1 < row.size() ? "," : "\n");
    }
    return os.str();
}

std::string table_json(const pam::RunConfig& cfg, const std::string& columns,
                       const std::vector<std::vector<double>>& rows,
                       const std::string& timestamp) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["generated_at"] = timestamp;
    j["config"] = pam::config_echo(cfg);
    std::vector<std::string> names;
    std::istringstream ss(columns);
    std::string col;
    while (std::getline(ss, col, ',')) names.push_back(col);
    j["rows"] = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json one;
        for (std::size_t i = 0; i < row.size() && i < names.size(); ++i)
            one[names[i]] = std::isnan(row[i]) ? nlohmann::json() : nlohmann::json(row[i]);
        j["rows"].push_back(std::move(one));
    }
    return j.dump(2) + "\n";
}

void emit_table(const pam::RunConfig& cfg, const std::string& columns,
                const std::vector<std::vector<double>>& rows) {
    const std::string ts = pam::current_timestamp();
    pam::write_output(cfg, cfg.format == "json" ? table_json(cfg, columns, rows, ts)
                                                : table_csv(cfg, columns, rows, ts));
}

int cmd_phaseshift(const pam::RunConfig& cfg) {
    auto recs = pam::run_phaseshift(cfg);
    const std::string ts = pam::current_timestamp();
    pam::write_output(cfg, cfg.format == "json" ? pam::results_to_json(cfg, recs, ts)
                                                : pam::results_to_csv(cfg, recs, ts));
    return 0;
}

int cmd_compare(const pam::RunConfig& cfg) {
    auto rows = pam::run_compare(cfg);
    if (cfg.format == "json") {
        std::vector<std::vector<double>> data;
        for (const auto& r : rows) {
            auto get = [&](const char* m) {
                auto it = r.delta.find(m);
                return it == r.delta.end() ? std::numeric_limits<double>::quiet_NaN()
                                           : it->second;
            };
            data.push_back({r.energy, get("direct"), get("milne"), get("vpa_partitioned"),
                            get("vpa_local"), get("jwkb"), get("variational"), r.oracle,
                            r.max_dev_exact});
        }
        emit_table(cfg,
                   "energy,delta_direct,delta_milne,delta_vpa_partitioned,delta_vpa_local,"
                   "delta_jwkb,delta_variational,delta_oracle,max_dev_exact",
                   data);
    } else {
        pam::write_output(cfg, pam::compare_to_csv(cfg, rows, pam::current_timestamp()));
    }
    return 0;
}

int cmd_milne(const pam::RunConfig& cfg) {
    pam::ScatteringContext ctx{cfg.potential, cfg.ell, cfg.energies.front()};
    const double r_max = cfg.r_max > 0 ? cfg.r_max : pam::default_r_max(ctx);
    auto sol = pam::solve_milne(ctx, r_max, pam::regular_start_radius(ctx), std::nullopt,
                                cfg.tolerances, 0.02);
    pam::milne_phase(sol, ctx);
    const double c = std::sqrt(2.0 / std::numbers::pi);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < sol.alpha.size(); ++i) {
        const double r = sol.alpha.nodes[i];
        const double a = sol.alpha.values[i];
        const double phi = sol.phi.values[i];
        double residual = std::numeric_limits<double>::quiet_NaN();
        try {
            auto d2 = pam::second_derivative(sol.alpha, r);
            residual = std::abs(d2.value + pam::local_wavenumber_sq(ctx, r) * a -
                                1.0 / (a * a * a));
        } catch (const pam::OutOfRange&) {
        }
        rows.push_back({r, a, phi, c * a * std::sin(phi), -c * a * std::cos(phi), residual});
    }
    emit_table(cfg, "r,alpha,phi,f,g,residual", rows);
    return 0;
}

int cmd_vpa(const pam::RunConfig& cfg) {
    pam::ScatteringContext ctx{cfg.potential, cfg.ell, cfg.energies.front()};
    auto pair = pam::energy_normalized_pair(ctx.ell, ctx.energy);
    auto d = pam::solve_partitioned(ctx, pair, cfg.tolerances, cfg.r_max,
                                    pam::CouplingConvention::derived_one_over_w, {}, 0.02);
    auto a = pam::amplitude_from_phase(d, ctx, cfg.tolerances);
    pam::Trace F = pam::partitioned_wave(d, a);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < d.delta.size(); ++i) {
        const double r = d.delta.nodes[i];
        double residual = std::numeric_limits<double>::quiet_NaN();
        try {
            auto d2 = pam::second_derivative(F, r);
            residual = std::abs(d2.value + pam::local_wavenumber_sq(ctx, r) * F.values[i]);
        } catch (const pam::OutOfRange&) {
        }
        rows.push_back({r, d.delta.values[i], a.alpha.eval(r), residual});
    }
    emit_table(cfg, "r,delta,alpha,F_residual", rows);
    return 0;
}

int cmd_variational(const pam::RunConfig& cfg, const std::string& trial,
                    const std::string& shapes_csv, const std::string& eps_csv) {
    pam::ScatteringContext ctx{cfg.potential, cfg.ell, cfg.energies.front()};
    const double r_max = cfg.r_max > 0 ? cfg.r_max : pam::default_r_max(ctx);

    if (trial == "jwkb" || trial.rfind("file:", 0) == 0) {
        pam::PhaseFunctionTrace t =
            trial == "jwkb"
                ? pam::jwkb_trial(ctx, r_max, cfg.tolerances)
                : [&] {
                      auto table = pam::PotentialSpec::tabulated_from_file(trial.substr(5));
                      return pam::trial_from_trace(
                          table.table, pam::energy_normalized_pair(ctx.ell, ctx.energy));
                  }();
        auto adj = pam::solve_adjoint(t, ctx, cfg.tolerances);
        auto rep = pam::variational_estimate(t, adj, ctx, cfg.tolerances, trial);
        emit_table(cfg, "delta_trial_inf,correction,delta_variational",
                   {{rep.delta_trial_inf, rep.correction, rep.delta_variational}});
        return 0;
    }
    if (trial != "perturbed")
        throw pam::InvalidConfig("--trial must be jwkb, perturbed, or file:<path>");

    std::vector<double> eps;
    {
        std::istringstream ss(eps_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) eps.push_back(std::stod(tok));
    }
    auto pair = pam::energy_normalized_pair(ctx.ell, ctx.energy);
    std::vector<std::vector<double>> rows;
    std::istringstream ss(shapes_csv);
    std::string shape;
    int shape_idx = 0;
    while (std::getline(ss, shape, ',')) {
        auto diag = pam::error_order_diagnostic(ctx, pair, pam::make_perturbation(shape, r_max),
                                                eps, cfg.tolerances, false, r_max);
        for (std::size_t i = 0; i < diag.samples.size(); ++i)
            rows.push_back({static_cast<double>(shape_idx), diag.samples[i].first,
                            diag.trial_errors[i], diag.samples[i].second,
                            diag.degenerate ? std::numeric_limits<double>::quiet_NaN()
                                            : diag.slope});
        ++shape_idx;
    }
    emit_table(cfg, "shape_index,eps,trial_error,variational_error,slope", rows);
    return 0;
}

int cmd_gauge(const pam::RunConfig& cfg, const std::string& beta) {
    pam::ScatteringContext ctx{cfg.potential, cfg.ell, cfg.energies.front()};
    const double r_max = cfg.r_max > 0 ? cfg.r_max : pam::default_r_max(ctx);
    auto sol = pam::solve_milne(ctx, r_max, pam::regular_start_radius(ctx), std::nullopt,
                                cfg.tolerances, 0.005);
    pam::milne_phase(sol, ctx);

    std::vector<pam::GaugeFunction> gfs;
    auto add_named = [&](const std::string& name) {
        if (name == "zero")
            gfs.push_back(pam::gauge_zero());
        else if (name == "milne-inverse-square")
            gfs.push_back(pam::gauge_scaled_connection(sol, 1.0));
        else if (name.rfind("scaled:", 0) == 0)
            gfs.push_back(pam::gauge_scaled_connection(sol, std::stod(name.substr(7))));
        else if (name == "damped-sine")
            gfs.push_back(pam::gauge_damped_sine());
        else
            throw pam::InvalidConfig("unknown gauge family member: " + name);
    };
    if (beta == "all") {
        add_named("zero");
        add_named("milne-inverse-square");
        add_named("scaled:0.5");
        add_named("damped-sine");
    } else {
        add_named(beta);
    }

    std::ostringstream os;
    os << "# schema_version: 1\n# generated_at: " << pam::current_timestamp()
       << "\n# config: " << pam::config_echo(cfg).dump() << "\n";
    os << "beta,max_abs_residual,max_imag_residual,scale,relative\n";
    for (const auto& gf : gfs) {
        auto rep = pam::gauge_residual(sol, gf, ctx);
        os << rep.beta_tag << ',' << pam::detail::format_double(rep.max_abs_residual) << ','
           << pam::detail::format_double(rep.max_imag_residual) << ','
           << pam::detail::format_double(rep.scale) << ','
           << pam::detail::format_double(rep.max_abs_residual / rep.scale) << "\n";
    }
    os << "# imaginary cancellation (relative): c=1 "
       << pam::detail::format_double(pam::imaginary_cancellation_check(sol, 1.0)) << ", c=2.5 "
       << pam::detail::format_double(pam::imaginary_cancellation_check(sol, 2.5))
       << ", control 1/alpha "
       << pam::detail::format_double(pam::imaginary_cancellation_check(sol, 1.0, 1)) << "\n";
    pam::write_output(cfg, os.str());
    return 0;
}

int cmd_bench(const pam::RunConfig& cfg) {
    auto rows = pam::run_bench(cfg);
    if (cfg.format == "json") {
        std::vector<std::vector<double>> data;
        for (const auto& r : rows)
            data.push_back({r.median_ms, r.steps, r.residual, static_cast<double>(r.reps)});
        emit_table(cfg, "median_ms,steps,residual,reps", data);
    } else {
        pam::write_output(cfg, pam::bench_to_csv(cfg, rows, pam::current_timestamp()));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"phase-amplitude methods for radial scattering"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string trial = "jwkb";
    std::string shapes = "sine,quad,bump";
    std::string eps = "1e-1,3e-2,1e-2,3e-3,1e-3";
    std::string beta = "all";

    auto* c_phase = app.add_subcommand("phaseshift", "phase shifts per (method, energy)");
    add_common(c_phase, opts);
    auto* c_compare = app.add_subcommand("compare", "cross-method comparison table");
    add_common(c_compare, opts);
    auto* c_milne = app.add_subcommand("milne", "amplitude/phase trace of the Milne solve");
    add_common(c_milne, opts);
    auto* c_vpa = app.add_subcommand("vpa", "phase-function and amplitude trace");
    add_common(c_vpa, opts);
    auto* c_var = app.add_subcommand("variational", "adjoint-corrected estimates");
    add_common(c_var, opts);
    c_var->add_option("--trial", trial, "jwkb | perturbed | file:<path>");
    c_var->add_option("--shapes", shapes, "perturbation shapes (perturbed trial)");
    c_var->add_option("--eps", eps, "epsilon list (perturbed trial)");
    auto* c_gauge = app.add_subcommand("gauge-check", "gauge-family residual report");
    add_common(c_gauge, opts);
    c_gauge->add_option("--beta", beta,
                        "zero | milne-inverse-square | scaled:<c> | damped-sine | all");
    auto* c_bench = app.add_subcommand("bench", "timing and residual report");
    add_common(c_bench, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const pam::RunConfig cfg = build_config(opts);
        if (c_phase->parsed()) return cmd_phaseshift(cfg);
        if (c_compare->parsed()) return cmd_compare(cfg);
        if (c_milne->parsed()) return cmd_milne(cfg);
        if (c_vpa->parsed()) return cmd_vpa(cfg);
        if (c_var->parsed()) return cmd_variational(cfg, trial, shapes, eps);
        if (c_gauge->parsed()) return cmd_gauge(cfg, beta);
        if (c_bench->parsed()) return cmd_bench(cfg);
    } catch (const pam::InvalidConfig& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const pam::InvalidPotential& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const pam::Error& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 3;
    }
    return 0;
}
