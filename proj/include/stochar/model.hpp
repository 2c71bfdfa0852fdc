#pragma once

// The perturbed LWR equation
//
//     du = -(1 - 2u) u_x dt + h(x, u, u_x, t) o dM_t,     u(x, 0) = g(x),
//
// and the right-hand side of its stochastic characteristic system for the
// state (xi, eta, chi) = (position, value, slope) along a characteristic.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stochar/error.hpp"
#include "stochar/process.hpp"

namespace stochar {

// ---------------------------------------------------------------------------
// Initial conditions

enum class InitialConditionId { one_minus_x, x, one_minus_x_squared, x_minus_x_squared, custom };

struct InitialCondition {
    InitialConditionId id = InitialConditionId::custom;
    std::string name;
    std::function<double(double)> eval;
    std::function<double(double)> deriv;

    double operator()(double x) const { return eval(x); }

    static InitialCondition make(InitialConditionId id) {
        switch (id) {
        case InitialConditionId::one_minus_x:
            return {id, "one-minus-x", [](double x) { return 1.0 - x; }, [](double) { return -1.0; }};
        case InitialConditionId::x:
            return {id, "x", [](double x) { return x; }, [](double) { return 1.0; }};
        case InitialConditionId::one_minus_x_squared:
            return {id, "one-minus-x-squared", [](double x) { return 1.0 - x * x; },
                    [](double x) { return -2.0 * x; }};
        case InitialConditionId::x_minus_x_squared:
            return {id, "x-minus-x-squared", [](double x) { return x - x * x; },
                    [](double x) { return 1.0 - 2.0 * x; }};
        case InitialConditionId::custom:
            break;
        }
        throw ArgumentError("custom initial conditions need explicit g and g'");
    }

    /// User-supplied g with its exact derivative.
    static InitialCondition custom(std::string name, std::function<double(double)> g,
                                   std::function<double(double)> dg) {
        return {InitialConditionId::custom, std::move(name), std::move(g), std::move(dg)};
    }

    static InitialCondition from_name(std::string_view name) {
        for (auto id : {InitialConditionId::one_minus_x, InitialConditionId::x,
                        InitialConditionId::one_minus_x_squared, InitialConditionId::x_minus_x_squared})
            if (make(id).name == name)
                return make(id);
        throw ArgumentError("unknown initial condition: " + std::string(name));
    }
};

// ---------------------------------------------------------------------------
// Perturbations

enum class PerturbationId { none, conservation_lwr, advective, multiplicative, sqrt_conservation };

/// Lower clamp on u - u^2 where the square-root perturbation's u-derivative blows up.
inline constexpr double sqrt_boundary_eps = 1e-9;

/// The noise coefficient h(x, u, p, t) and its partial derivatives.
struct PerturbationSpec {
    using Fn = std::function<double(double x, double u, double p, double t)>;

    PerturbationId id = PerturbationId::none;
    std::string name;
    Fn h, h_x, h_u, h_p;
    NoiseKind noise_kind = NoiseKind::zero;

    static PerturbationSpec make(PerturbationId id, NoiseKind noise) {
        const Fn zero = [](double, double, double, double) { return 0.0; };
        PerturbationSpec s{id, "", zero, zero, zero, zero, noise};
        switch (id) {
        case PerturbationId::none:
            s.name = "none";
            break;
        case PerturbationId::conservation_lwr:
            // H(u) = u - u^2 in conservation form: h = -(1 - 2u) p
            s.name = "conservation-lwr";
            s.h = [](double, double u, double p, double) { return -(1.0 - 2.0 * u) * p; };
            s.h_u = [](double, double, double p, double) { return 2.0 * p; };
            s.h_p = [](double, double u, double, double) { return -(1.0 - 2.0 * u); };
            break;
        case PerturbationId::advective:
            s.name = "advective";
            s.h = [](double, double, double p, double) { return p; };
            s.h_p = [](double, double, double, double) { return 1.0; };
            break;
        case PerturbationId::multiplicative:
            s.name = "multiplicative";
            s.h = [](double, double u, double, double) { return u; };
            s.h_u = [](double, double, double, double) { return 1.0; };
            break;
        case PerturbationId::sqrt_conservation:
            s.name = "sqrt-conservation";
            s.h = [](double, double u, double p, double) { return std::sqrt(std::max(u - u * u, 0.0)) * p; };
            s.h_u = [](double, double u, double p, double) {
                const double v = std::clamp(u, sqrt_boundary_eps, 1.0 - sqrt_boundary_eps);
                return (1.0 - 2.0 * v) / (2.0 * std::sqrt(v - v * v)) * p;
            };
            s.h_p = [](double, double u, double, double) { return std::sqrt(std::max(u - u * u, 0.0)); };
            break;
        }
        return s;
    }

    static PerturbationSpec from_name(std::string_view name, NoiseKind noise) {
        for (auto id : {PerturbationId::none, PerturbationId::conservation_lwr, PerturbationId::advective,
                        PerturbationId::multiplicative, PerturbationId::sqrt_conservation})
            if (make(id, noise).name == name)
                return make(id, noise);
        throw ArgumentError("unknown perturbation: " + std::string(name));
    }
};

// ---------------------------------------------------------------------------
// Scenario

struct Scenario {
    std::string name;
    InitialCondition ic;
    PerturbationSpec perturbation;
    double horizon = 1.0;
    /// Interval of initial points launched by default.
    double fan_lo = 0.0;
    double fan_hi = 1.0;

    NoiseKind noise() const noexcept { return perturbation.noise_kind; }
};

namespace detail {
inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}
} // namespace detail

/// Names of the catalog scenarios, in catalog order.
inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {"d1", "d2", "d3", "d4", "s1", "s2",
                                                   "b1", "b2", "b3", "g1", "g2", "g3"};
    return names;
}

/// Catalog scenario by (case-insensitive) name, e.g. "s1" or "G3".
inline Scenario scenario_by_name(std::string_view name, std::optional<double> horizon = std::nullopt) {
    using IC = InitialConditionId;
    using P = PerturbationId;
    using N = NoiseKind;
    struct Row {
        const char* name;
        IC ic;
        P pert;
        N noise;
        double horizon;
        double lo, hi;
    };
    static const Row rows[] = {
        {"d1", IC::one_minus_x, P::none, N::zero, 1.0, 0.0, 1.0},
        {"d2", IC::one_minus_x_squared, P::none, N::zero, 1.0, 0.0, 1.0},
        {"d3", IC::x, P::none, N::zero, 0.45, 0.0, 1.0},
        {"d4", IC::x_minus_x_squared, P::none, N::zero, 0.45, 0.0, 1.0},
        {"s1", IC::one_minus_x, P::conservation_lwr, N::brownian, 1.0, 0.0, 1.0},
        {"s2", IC::one_minus_x_squared, P::conservation_lwr, N::geometric_brownian, 1.0, 0.0, 1.0},
        {"b1", IC::one_minus_x_squared, P::advective, N::brownian, 1.0, 0.0, 1.0},
        {"b2", IC::x, P::multiplicative, N::brownian, 0.4, 0.0, 1.0},
        {"b3", IC::x, P::sqrt_conservation, N::brownian, 0.25, 0.1, 0.9},
        {"g1", IC::x, P::advective, N::geometric_brownian, 0.45, 0.0, 1.0},
        {"g2", IC::x, P::multiplicative, N::geometric_brownian, 0.4, 0.0, 1.0},
        {"g3", IC::x, P::sqrt_conservation, N::geometric_brownian, 0.25, 0.1, 0.9},
    };
    const std::string key = detail::lower(name);
    for (const auto& r : rows) {
        if (key == r.name) {
            Scenario s{r.name, InitialCondition::make(r.ic), PerturbationSpec::make(r.pert, r.noise),
                       horizon.value_or(r.horizon), r.lo, r.hi};
            return s;
        }
    }
    throw UnknownIdError(std::string(name));
}

// ---------------------------------------------------------------------------
// Flux and characteristic right-hand side

/// Drift part of F: -(1 - 2u) p.
inline constexpr double f_drift(double u, double p) noexcept { return -(1.0 - 2.0 * u) * p; }

struct CharState {
    double xi = 0.0;
    double eta = 0.0;
    double chi = 0.0;

    bool finite() const noexcept { return std::isfinite(xi) && std::isfinite(eta) && std::isfinite(chi); }
};

/// Increments of (xi, eta, chi) for one step with increments (dt, dM):
///
///     d xi  = (1 - 2 eta) dt - h_p dM
///     d eta = (h - chi h_p) dM
///     d chi = 2 chi^2 dt + (h_x + h_u chi) dM
///
/// Returns nullopt when the state is not finite (explosion).
inline std::optional<CharState> sce_rhs(const PerturbationSpec& spec, const CharState& s, double t, double dt,
                                        double dm) {
    if (!s.finite())
        return std::nullopt;
    const double x = s.xi, u = s.eta, p = s.chi;
    CharState d;
    d.xi = (1.0 - 2.0 * u) * dt;
    d.eta = 0.0;
    d.chi = 2.0 * p * p * dt;
    if (spec.id != PerturbationId::none && dm != 0.0) {
        const double hp = spec.h_p(x, u, p, t);
        d.xi -= hp * dm;
        d.eta += (spec.h(x, u, p, t) - p * hp) * dm;
        d.chi += (spec.h_x(x, u, p, t) + spec.h_u(x, u, p, t) * p) * dm;
    }
    return d;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const noexcept { return violations.empty(); }
};

inline ValidationReport validate_scenario(const Scenario& s, double fd_tol = 1e-6) {
    ValidationReport report;
    auto flag = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

    if (!(s.horizon > 0.0) || !std::isfinite(s.horizon))
        flag("horizon must be positive and finite");
    if (!(s.fan_lo >= 0.0 && s.fan_hi <= 1.0 && s.fan_lo < s.fan_hi))
        flag("initial-point interval must be a nonempty subinterval of [0,1]");

    if (!s.ic.eval || !s.ic.deriv) {
        flag("initial condition lacks g or g'");
    } else {
        constexpr int n = 1000;
        constexpr double step = 1e-6;
        bool range_ok = true, deriv_ok = true;
        for (int i = 0; i <= n; ++i) {
            const double x = static_cast<double>(i) / n;
            const double g = s.ic(x);
            if (!(g >= 0.0 && g <= 1.0))
                range_ok = false;
            if (x >= step && x <= 1.0 - step) {
                const double fd = (s.ic(x + step) - s.ic(x - step)) / (2.0 * step);
                if (std::abs(fd - s.ic.deriv(x)) > fd_tol)
                    deriv_ok = false;
            }
        }
        if (!range_ok)
            flag("initial condition leaves [0,1]");
        if (!deriv_ok)
            flag("initial condition derivative disagrees with central differences");
    }

    const auto& h = s.perturbation;
    if (h.id != PerturbationId::none && s.noise() == NoiseKind::zero)
        flag("perturbation " + h.name + " needs a brownian or geometric-brownian driver");

    if (h.h && h.h_x && h.h_u && h.h_p) {
        std::mt19937_64 rng(0x5eed);
        std::uniform_real_distribution<double> ux(0.0, 1.0), uu(0.05, 0.95), up(-2.0, 2.0), ut(0.0, 1.0);
        constexpr double step = 1e-6;
        bool hx = true, hu = true, hp = true;
        for (int k = 0; k < 200; ++k) {
            const double x = ux(rng), u = uu(rng), p = up(rng), t = ut(rng) * s.horizon;
            const double fx = (h.h(x + step, u, p, t) - h.h(x - step, u, p, t)) / (2 * step);
            const double fu = (h.h(x, u + step, p, t) - h.h(x, u - step, p, t)) / (2 * step);
            const double fp = (h.h(x, u, p + step, t) - h.h(x, u, p - step, t)) / (2 * step);
            hx = hx && std::abs(fx - h.h_x(x, u, p, t)) <= fd_tol;
            hu = hu && std::abs(fu - h.h_u(x, u, p, t)) <= fd_tol;
            hp = hp && std::abs(fp - h.h_p(x, u, p, t)) <= fd_tol;
        }
        if (!hx) flag("h_x disagrees with central differences");
        if (!hu) flag("h_u disagrees with central differences");
        if (!hp) flag("h_p disagrees with central differences");
    } else {
        flag("perturbation lacks h or one of its partials");
    }
    return report;
}

} // namespace stochar
