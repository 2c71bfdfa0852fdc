#pragma once

// Command-line front end. `run` is the whole program; the executable in
// tools/ only forwards argv and the standard streams.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or config error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "stochar/characteristics.hpp"
#include "stochar/closedform.hpp"
#include "stochar/csv.hpp"
#include "stochar/error.hpp"
#include "stochar/model.hpp"
#include "stochar/process.hpp"
#include "stochar/verify.hpp"

namespace stochar::cli {

enum ExitCode : int { ok = 0, verification_failed = 1, usage_error = 2 };

struct RunConfig {
    std::string command;
    std::string scenario;
    std::string id;
    std::string ic;
    std::string perturbation;
    std::string noise;
    std::uint64_t seed = 1;
    double dt = 1e-3;
    std::size_t nx = 101;
    std::optional<double> horizon;
    std::string out;
    std::string config;
    bool all = false;
    bool frozen = false;
    std::size_t probes = 1000;
    std::size_t fan_refine = 8;
    std::size_t stride = 1;
};

inline void validate(const RunConfig& c) {
    if (!(c.dt > 0.0) || !std::isfinite(c.dt))
        throw ArgumentError("dt must be positive");
    if (c.nx < 2)
        throw ArgumentError("nx must be at least 2");
    if (c.horizon && !(*c.horizon > 0.0 && std::isfinite(*c.horizon)))
        throw ArgumentError("T must be positive and finite");
    if (c.fan_refine < 1)
        throw ArgumentError("fan-refine must be at least 1");
    if (c.stride < 1)
        throw ArgumentError("stride must be at least 1");
}

/// Named scenario, or one assembled from --ic/--perturbation/--noise.
inline Scenario resolve_scenario(const RunConfig& c) {
    if (!c.scenario.empty()) {
        if (!c.ic.empty() || !c.perturbation.empty() || !c.noise.empty())
            throw ArgumentError("--scenario cannot be combined with --ic/--perturbation/--noise");
        return scenario_by_name(c.scenario, c.horizon);
    }
    if (c.ic.empty())
        throw ArgumentError("a scenario is required (--scenario, or --ic with --perturbation and --noise)");
    const std::string pert = c.perturbation.empty() ? "none" : c.perturbation;
    const NoiseKind noise = c.noise.empty() ? NoiseKind::zero : noise_kind_from_string(c.noise);
    Scenario s;
    s.name = "custom";
    s.ic = InitialCondition::from_name(c.ic);
    s.perturbation = PerturbationSpec::from_name(pert, noise);
    s.horizon = c.horizon.value_or(1.0);
    const auto report = validate_scenario(s);
    if (!report.ok())
        throw ArgumentError("invalid scenario: " + report.violations.front());
    return s;
}

/// Catalog entry whose scenario is `name`, if there is one.
inline const ClosedFormSolution* entry_for(const std::string& name) {
    for (const auto& c : catalog())
        if (c.scenario == name)
            return &c;
    return nullptr;
}

/// Writes `content` to <out>/<file>, or to `stdout` when no directory was given.
inline void emit(const RunConfig& c, const std::string& file, const std::string& content, std::ostream& stdout_) {
    if (c.out.empty())
        stdout_ << content;
    else
        csv::write_atomic(std::filesystem::path(c.out) / file, content);
}

inline int cmd_simulate(const RunConfig& c, std::ostream& out) {
    if (c.out.empty())
        throw ArgumentError("simulate needs --out");
    const Scenario s = resolve_scenario(c);
    const TimeGrid grid = TimeGrid::uniform(s.horizon, c.dt);
    const NoisePath path = make_path(s.noise(), c.seed, grid, c.frozen);
    const auto x0 = linspace(s.fan_lo, s.fan_hi, (c.nx - 1) * c.fan_refine + 1);
    const auto fan = integrate_fan(s, path, x0);
    const auto xs = linspace(0.0, 1.0, c.nx);
    const auto surf = build_surface(fan, xs, s.ic);

    std::ostringstream surface_csv, fan_csv, sigma_csv;
    write_surface(surface_csv, surf, c.stride);
    write_fan(fan_csv, fan, c.stride, c.fan_refine);
    write_sigma(sigma_csv, xs, surf.sigma());
    emit(c, "surface.csv", surface_csv.str(), out);
    emit(c, "fan.csv", fan_csv.str(), out);
    emit(c, "sigma.csv", sigma_csv.str(), out);
    return ok;
}

inline int cmd_closed_form(const RunConfig& c, std::ostream& out) {
    const std::string id = c.id.empty() ? c.scenario : c.id;
    if (id.empty())
        throw ArgumentError("closed-form needs --id");
    const auto& entry = lookup(id);
    const Scenario s = scenario_for(entry, c.horizon);
    const TimeGrid grid = TimeGrid::uniform(s.horizon, c.dt);
    const NoisePath path = make_path(entry.noise, c.seed, grid, c.frozen);
    const auto functional = functional_for(entry, path);
    const auto xs = linspace(0.0, 1.0, c.nx);

    std::ostringstream csv_out;
    csv_out << "x,t,u,valid";
    if (functional)
        csv_out << ",I";
    csv_out << '\n';
    for (std::size_t n = 0; n < grid.size(); n += c.stride) {
        PathState st;
        st.m = entry.noise == NoiseKind::zero ? 0.0 : path[n];
        if (functional)
            st.functional = (*functional)[n];
        for (double x : xs) {
            const bool valid = entry.valid(x, grid[n], st);
            csv_out << csv::number(x) << ',' << csv::number(grid[n]) << ',';
            if (valid)
                csv_out << csv::number(entry.evaluate(x, grid[n], st));
            csv_out << ',' << (valid ? 1 : 0);
            if (functional)
                csv_out << ',' << csv::number(st.functional);
            csv_out << '\n';
        }
    }
    emit(c, "closed_form.csv", csv_out.str(), out);
    return ok;
}

inline int cmd_stopping_time(const RunConfig& c, std::ostream& out) {
    const Scenario s = resolve_scenario(c);
    const TimeGrid grid = TimeGrid::uniform(s.horizon, c.dt);
    const NoisePath path = make_path(s.noise(), c.seed, grid, c.frozen);
    const auto x0 = linspace(s.fan_lo, s.fan_hi, (c.nx - 1) * c.fan_refine + 1);
    const auto fan = integrate_fan(s, path, x0);
    const auto xs = linspace(0.0, 1.0, c.nx);
    const auto st = stopping_times(fan, xs);

    const ClosedFormSolution* entry = s.name == "custom" ? nullptr : entry_for(s.name);
    std::optional<PathFunctional> functional;
    if (entry)
        functional = functional_for(*entry, path);

    std::ostringstream csv_out;
    csv_out << "x,sigma_numeric,sigma_formula\n";
    for (std::size_t j = 0; j < xs.size(); ++j) {
        csv_out << csv::number(xs[j]) << ',' << csv::number(st.sigma[j]) << ',';
        if (entry)
            csv_out << csv::number(closed_form_sigma(*entry, xs[j], path, functional ? &*functional : nullptr));
        csv_out << '\n';
    }
    emit(c, "stopping_time.csv", csv_out.str(), out);
    return ok;
}

inline int cmd_paths(const RunConfig& c, std::ostream& out) {
    NoiseKind kind = NoiseKind::brownian;
    if (!c.noise.empty())
        kind = noise_kind_from_string(c.noise);
    else if (!c.scenario.empty())
        kind = scenario_by_name(c.scenario).noise();
    const TimeGrid grid = TimeGrid::uniform(c.horizon.value_or(1.0), c.dt);
    std::ostringstream csv_out;
    csv::write_path(csv_out, make_path(kind, c.seed, grid, c.frozen));
    emit(c, "path.csv", csv_out.str(), out);
    return ok;
}

/// Residual sweep plus a comparison against the characteristics: sup error
/// for node-exact entries, a convergence study for the others.
inline int cmd_verify(const RunConfig& c, std::ostream& out, std::ostream& err) {
    std::vector<const ClosedFormSolution*> entries;
    if (c.all) {
        if (!c.id.empty())
            throw ArgumentError("--all cannot be combined with --id");
        for (const auto& e : catalog())
            entries.push_back(&e);
    } else {
        const std::string id = c.id.empty() ? c.scenario : c.id;
        if (id.empty())
            throw ArgumentError("verify needs --id or --all");
        entries.push_back(&lookup(id));
    }
    if (c.probes == 0)
        throw ArgumentError("probes must be positive");

    bool all_passed = true;
    for (const auto* e : entries) {
        const auto rep = sweep_residuals(*e, c.probes, c.seed);
        bool pass = rep.passed();
        if (!rep.passed())
            err << e->id << ": residual " << csv::number(rep.max_residual) << " exceeds "
                << csv::number(rep.tolerance) << (rep.note.empty() ? "" : " (" + rep.note + ")") << '\n';
        if (!c.out.empty()) {
            std::ostringstream res;
            write_residuals(res, rep);
            csv::write_atomic(std::filesystem::path(c.out) / ("residuals_" + e->id + ".csv"), res.str());
        }

        CrossValidationOptions xo;
        xo.horizon = c.horizon;
        xo.frozen = c.frozen;
        if (is_node_exact(*e)) {
            const auto xv = cross_validate(*e, c.seed, c.dt, c.nx, xo);
            if (!xv.passed()) {
                pass = false;
                err << e->id << ": cross-validation sup error " << csv::number(xv.sup_error) << " exceeds "
                    << csv::number(xv.tolerance) << '\n';
            }
        } else {
            ConvergenceOptions co;
            co.horizon = c.horizon;
            const auto table = convergence_study(*e, c.seed, {4e-3, 2e-3, 1e-3}, co);
            if (!table.passed()) {
                pass = false;
                err << e->id << ": convergence ratio " << csv::number(table.min_ratio()) << " below "
                    << csv::number(min_convergence_ratio) << '\n';
            }
        }
        out << summary_line(e->id, rep.max_residual, pass) << '\n';
        all_passed = all_passed && pass;
    }
    return all_passed ? ok : verification_failed;
}

inline int dispatch(const RunConfig& c, std::ostream& out, std::ostream& err) {
    validate(c);
    if (c.command == "simulate")
        return cmd_simulate(c, out);
    if (c.command == "closed-form")
        return cmd_closed_form(c, out);
    if (c.command == "verify")
        return cmd_verify(c, out, err);
    if (c.command == "stopping-time")
        return cmd_stopping_time(c, out);
    if (c.command == "paths")
        return cmd_paths(c, out);
    throw ArgumentError("a command is required");
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig c;
    CLI::App app{"Stochastic characteristics for the LWR traffic equation", "stochar"};
    app.require_subcommand(1);
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.set_config("--config", "", "flat key=value file (ic, perturbation, noise, T, seed, dt, nx)");

    // Shared options live on the top-level app so the config file can set them.
    app.add_option("--seed", c.seed, "random seed");
    app.add_option("--dt", c.dt, "time step");
    app.add_option("--nx", c.nx, "number of x points");
    app.add_option("--T", c.horizon, "time horizon");
    app.add_option("--ic", c.ic, "initial condition");
    app.add_option("--perturbation", c.perturbation, "perturbation");
    app.add_option("--noise", c.noise, "noise kind");
    app.add_option("--out", c.out, "output directory")->configurable(false);

    auto* simulate = app.add_subcommand("simulate", "integrate characteristics; write surface, fan and sigma CSVs");
    auto* closed = app.add_subcommand("closed-form", "evaluate a catalog entry on a grid");
    auto* verify = app.add_subcommand("verify", "residual and cross-validation checks");
    auto* stopping = app.add_subcommand("stopping-time", "numerical and closed-form sigma(x)");
    auto* paths = app.add_subcommand("paths", "dump a driving path as t,W,S");
    for (auto* sub : {simulate, closed, verify, stopping, paths})
        sub->fallthrough();

    for (auto* sub : {simulate, stopping, paths})
        sub->add_option("--scenario", c.scenario, "scenario name (d1..d4, s1, s2, b1..b3, g1..g3)");
    for (auto* sub : {closed, verify})
        sub->add_option("--id", c.id, "catalog id (D1..D4, S1, S2, B1..B3, G1..G3)");
    for (auto* sub : {simulate, closed, verify, stopping, paths})
        sub->add_flag("--frozen", c.frozen, "use W = 0 on every node");
    for (auto* sub : {simulate, stopping})
        sub->add_option("--fan-refine", c.fan_refine, "initial points per x cell");
    for (auto* sub : {simulate, closed})
        sub->add_option("--stride", c.stride, "write every n-th time row");
    verify->add_flag("--all", c.all, "verify every catalog entry");
    verify->add_option("--probes", c.probes, "residual probes per entry");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    }
    c.command = app.get_subcommands().front()->get_name();

    try {
        return dispatch(c, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    }
}

} // namespace stochar::cli
