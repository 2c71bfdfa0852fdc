#pragma once

// Verification of the closed-form catalog.
//
// residual / sweep_residuals check the PDE identity
//     u_t + (1 - 2u) u_x - h(x, u, u_x, t) * dM/dt = 0
// with analytic partials and dM/dt as a free probe value.
// cross_validate / convergence_study compare the closed forms with the
// numerical characteristics pipeline on sampled paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "stochar/characteristics.hpp"
#include "stochar/closedform.hpp"
#include "stochar/csv.hpp"
#include "stochar/error.hpp"
#include "stochar/model.hpp"
#include "stochar/process.hpp"

namespace stochar {

inline constexpr double residual_tolerance = 1e-9;
inline constexpr double crossval_tolerance = 1e-4;
inline constexpr double min_convergence_ratio = 1.5;

struct ResidualProbe {
    double x = 0.0;
    double t = 0.0;
    PathState state;
    double m_dot = 0.0;
};

/// Left-hand side of the PDE at a probe; DomainError if the probe is invalid for the entry.
inline double residual(const ClosedFormSolution& c, const ResidualProbe& probe) {
    const Partials d = partials(c, probe.x, probe.t, probe.state, probe.m_dot);
    const double u = c.evaluate(probe.x, probe.t, probe.state);
    const PerturbationSpec h = PerturbationSpec::make(c.perturbation, c.noise);
    return d.u_t + (1.0 - 2.0 * u) * d.u_x - h.h(probe.x, u, d.u_x, probe.t) * probe.m_dot;
}

/// Copy of an entry whose evaluator is shifted by a constant (fault injection).
inline ClosedFormSolution with_offset(const ClosedFormSolution& c, double delta) {
    ClosedFormSolution out = c;
    out.evaluate = [inner = c.evaluate, delta](double x, double t, const PathState& s) {
        return inner(x, t, s) + delta;
    };
    return out;
}

struct ProbeRecord {
    ResidualProbe probe;
    double residual = 0.0;
};

struct VerificationReport {
    std::string id;
    std::string check; // "residual" or "cross-validation"
    std::size_t probes = 0;
    double max_residual = 0.0;
    double tolerance = 0.0;
    std::vector<std::size_t> failures;
    std::vector<ProbeRecord> records;

    // cross-validation
    double sup_error = 0.0;
    double dt = 0.0;
    std::size_t nx = 0;
    std::size_t compared = 0;

    std::string note;

    bool passed() const noexcept {
        if (check == "cross-validation")
            return compared > 0 && sup_error <= tolerance;
        return probes > 0 && failures.empty() && max_residual <= tolerance;
    }
};

/// n_probes random valid probes per entry: (x, t) uniform in the entry's
/// probe box, M and I uniform over broad ranges, dM/dt uniform in [-10, 10].
inline VerificationReport sweep_residuals(const ClosedFormSolution& c, std::size_t n_probes, std::uint64_t seed,
                                          double tolerance = residual_tolerance) {
    VerificationReport rep;
    rep.id = c.id;
    rep.check = "residual";
    rep.tolerance = tolerance;

    std::mt19937_64 rng(seed ^ detail::splitmix64(std::hash<std::string>{}(c.id)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    const auto& box = c.probes;

    const std::size_t max_attempts = 1000 * std::max<std::size_t>(n_probes, 1);
    for (std::size_t attempt = 0; attempt < max_attempts && rep.records.size() < n_probes; ++attempt) {
        ResidualProbe p;
        p.x = unit(rng);
        p.t = box.t_lo + (box.t_hi - box.t_lo) * (1.0 - unit(rng)); // (t_lo, t_hi]
        p.state.m = draw(box.m_lo, box.m_hi);
        if (c.needs_functional != FunctionalNeed::none)
            p.state.functional = draw(box.i_lo, box.i_hi);
        p.m_dot = draw(-10.0, 10.0);
        if (!c.valid(p.x, p.t, p.state) || !c.well_conditioned(p.x, p.t, p.state))
            continue;
        const double r = residual(c, p);
        if (!(std::abs(r) <= tolerance))
            rep.failures.push_back(rep.records.size());
        rep.max_residual = std::max(rep.max_residual, std::isfinite(r) ? std::abs(r) : infinity);
        rep.records.push_back({p, r});
    }
    rep.probes = rep.records.size();
    if (rep.probes < n_probes)
        rep.note = "only " + std::to_string(rep.probes) + " valid probes found";
    return rep;
}

/// Driving path for a noise kind; `frozen` sets W = 0 on every node.
inline NoisePath make_path(NoiseKind kind, std::uint64_t seed, const TimeGrid& grid, bool frozen = false,
                           std::uint64_t stream = 0) {
    if (kind == NoiseKind::zero)
        return zero_path(grid);
    NoisePath w = frozen ? brownian_from_values(grid, std::vector<double>(grid.size(), 0.0))
                         : sample_brownian(seed, grid, stream);
    return kind == NoiseKind::geometric_brownian ? to_geometric(w) : w;
}

/// Entries whose characteristic increments are constant along each
/// trajectory, so the Heun scheme reproduces the flow exactly at the nodes.
inline bool is_node_exact(const ClosedFormSolution& c) noexcept {
    return c.perturbation != PerturbationId::multiplicative;
}

struct CrossValidationOptions {
    std::optional<double> horizon;
    std::size_t fan_refine = 32; // initial points per surface cell
    bool frozen = false;         // W = 0 on every node
    double tolerance = crossval_tolerance;
};

/// Sup-norm distance between the numerical surface and the closed form on
/// the region where both are valid.
inline VerificationReport cross_validate(const ClosedFormSolution& c, std::uint64_t seed, double dt, std::size_t nx,
                                         const CrossValidationOptions& opt = {}) {
    if (nx < 2)
        throw ArgumentError("nx must be at least 2");
    const Scenario scen = scenario_for(c, opt.horizon);
    const TimeGrid grid = TimeGrid::uniform(scen.horizon, dt);
    const NoisePath path = make_path(c.noise, seed, grid, opt.frozen);
    const auto functional = functional_for(c, path);

    const auto x0 = linspace(scen.fan_lo, scen.fan_hi, (nx - 1) * std::max<std::size_t>(opt.fan_refine, 1) + 1);
    const auto fan = integrate_fan(scen, path, x0);
    const auto xs = linspace(0.0, 1.0, nx);
    const auto surf = build_surface(fan, xs, scen.ic);

    VerificationReport rep;
    rep.id = c.id;
    rep.check = "cross-validation";
    rep.tolerance = opt.tolerance;
    rep.dt = grid.max_step();
    rep.nx = nx;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        PathState s;
        s.m = c.noise == NoiseKind::zero ? 0.0 : path[n];
        if (functional)
            s.functional = (*functional)[n];
        for (std::size_t j = 0; j < nx; ++j) {
            if (!surf.valid(n, j) || !c.valid(xs[j], grid[n], s))
                continue;
            const double err = std::abs(surf.u(n, j) - c.evaluate(xs[j], grid[n], s));
            rep.sup_error = std::max(rep.sup_error, std::isfinite(err) ? err : infinity);
            ++rep.compared;
        }
    }
    return rep;
}

struct ConvergenceRow {
    double dt = 0.0;
    double error = 0.0;
};

struct ConvergenceTable {
    std::string id;
    std::vector<ConvergenceRow> rows; // coarsest first
    std::vector<double> ratios;       // error[k] / error[k+1]

    double min_ratio() const noexcept {
        double r = infinity;
        for (double v : ratios)
            r = std::min(r, v);
        return r;
    }
    bool passed(double threshold = min_convergence_ratio) const noexcept {
        return !ratios.empty() && min_ratio() >= threshold;
    }
};

struct ConvergenceOptions {
    std::optional<double> horizon;
    std::size_t nx = 21;              // initial points in the fan
    std::size_t paths = 512;          // sup errors are averaged over this many paths
    std::size_t reference_refine = 16; // extra bridge refinement for the functional
    double min_spacing_ratio = 0.25;   // skip trajectories this close to a fold
};

namespace detail {
// Smallest spacing ratio of trajectory i to its live neighbours at node n.
inline double compression(const CharacteristicFan& fan, std::size_t n, std::size_t i) {
    double r = infinity;
    const auto& x0 = fan.x0();
    for (std::size_t k : {i, i + 1}) {
        if (k == 0 || k >= fan.points() || !fan.alive(n, k - 1) || !fan.alive(n, k))
            continue;
        r = std::min(r, (fan.xi(n, k) - fan.xi(n, k - 1)) / (x0[k] - x0[k - 1]));
    }
    return r;
}
} // namespace detail

/// Pathwise error of the characteristics against the closed form under Δt
/// halving on one bridge-refined path (or the mean over several paths).
///
/// The error at a node is |eta - u(xi, t)| for every live trajectory before
/// the fan's stopping time: zero for the exact flow, independent of any
/// interpolation in x. The closed form reads M from the common path and the
/// functional from a further-refined reference path.
inline ConvergenceTable convergence_study(const ClosedFormSolution& c, std::uint64_t seed,
                                          std::vector<double> dt_list, const ConvergenceOptions& opt = {}) {
    if (dt_list.empty())
        throw ArgumentError("dt list is empty");
    std::sort(dt_list.begin(), dt_list.end(), std::greater<>());
    for (std::size_t k = 0; k + 1 < dt_list.size(); ++k)
        if (std::abs(dt_list[k] / dt_list[k + 1] - 2.0) > 1e-6)
            throw ArgumentError("dt list must be nested by a factor of 2");
    if (opt.reference_refine < 2)
        throw ArgumentError("reference refinement must be at least 2");

    const Scenario scen = scenario_for(c, opt.horizon);
    const TimeGrid coarse = TimeGrid::uniform(scen.horizon, dt_list.front());
    const auto x0 = linspace(scen.fan_lo, scen.fan_hi, std::max<std::size_t>(opt.nx, 2));
    const std::size_t levels = dt_list.size();

    ConvergenceTable table;
    table.id = c.id;
    table.rows.resize(levels);
    for (std::size_t L = 0; L < levels; ++L)
        table.rows[L].dt = coarse.horizon() / static_cast<double>(coarse.steps() << L);

    const std::size_t paths = std::max<std::size_t>(opt.paths, 1);
    for (std::size_t p = 0; p < paths; ++p) {
        std::vector<NoisePath> w;
        w.push_back(c.noise == NoiseKind::zero ? brownian_from_values(coarse, std::vector<double>(coarse.size(), 0.0))
                                               : sample_brownian(seed, coarse, p));
        for (std::size_t L = 1; L < levels; ++L)
            w.push_back(bridge_refine(w.back(), 2));
        const NoisePath w_ref = bridge_refine(w.back(), opt.reference_refine);
        auto drive = [&](const NoisePath& b) {
            switch (c.noise) {
            case NoiseKind::zero: return zero_path(b.grid());
            case NoiseKind::geometric_brownian: return to_geometric(b);
            default: return b;
            }
        };
        const NoisePath ref = drive(w_ref);
        const auto functional = functional_for(c, ref);
        const std::size_t ref_steps = ref.grid().steps();

        for (std::size_t L = 0; L < levels; ++L) {
            const NoisePath path = drive(w[L]);
            const auto fan = integrate_fan(scen, path, x0);
            const std::size_t stride = ref_steps / path.grid().steps();
            double sup = 0.0;
            for (std::size_t n = 0; n < fan.times(); ++n) {
                const double t = fan.grid()[n];
                if (t >= fan.tau())
                    break;
                PathState s;
                s.m = c.noise == NoiseKind::zero ? 0.0 : ref[n * stride];
                if (functional)
                    s.functional = (*functional)[n * stride];
                for (std::size_t i = 0; i < fan.points(); ++i) {
                    if (!fan.alive(n, i) || detail::compression(fan, n, i) < opt.min_spacing_ratio)
                        continue;
                    const double y = fan.xi(n, i);
                    if (!c.valid(y, t, s) || !c.well_conditioned(y, t, s))
                        continue;
                    sup = std::max(sup, std::abs(fan.eta(n, i) - c.evaluate(y, t, s)));
                }
            }
            table.rows[L].error += sup / static_cast<double>(paths);
        }
    }
    for (std::size_t L = 0; L + 1 < levels; ++L)
        table.ratios.push_back(table.rows[L].error / table.rows[L + 1].error);
    return table;
}

// ---------------------------------------------------------------------------
// CSV

/// `probe,x,t,M,m_dot,residual`
inline void write_residuals(std::ostream& out, const VerificationReport& rep) {
    out << "probe,x,t,M,m_dot,residual\n";
    for (std::size_t k = 0; k < rep.records.size(); ++k) {
        const auto& r = rep.records[k];
        out << k << ',' << csv::number(r.probe.x) << ',' << csv::number(r.probe.t) << ','
            << csv::number(r.probe.state.m) << ',' << csv::number(r.probe.m_dot) << ',' << csv::number(r.residual)
            << '\n';
    }
}

/// One-line summary `id,max_residual,pass`.
inline std::string summary_line(const std::string& id, double max_residual, bool pass) {
    return id + ',' + csv::number(max_residual) + ',' + (pass ? "PASS" : "FAIL");
}

} // namespace stochar
