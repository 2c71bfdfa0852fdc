#pragma once

// Catalog of explicit solutions u(x, t) of the perturbed LWR equation.
//
// Each entry is written as a function of (x, t, M_t, I_t) where M is the
// driving process and I an optional path functional. Partial derivatives are
// hand-derived with M and I treated as independent variables; the total time
// derivative then picks up dM/dt through a free probe value m_dot and, for
// the functional, dI/dt = exp(M_t).
//
// Quadratic-root formulas are evaluated in rationalised form, e.g.
// (sqrt(1 + 8az) - 1) / (4a) as 2z / (1 + sqrt(1 + 8az)), which agrees
// algebraically and stays accurate as a -> 0.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stochar/characteristics.hpp"
#include "stochar/error.hpp"
#include "stochar/model.hpp"
#include "stochar/process.hpp"

namespace stochar {

enum class FunctionalNeed { none, exp_of_path, exp_of_exp_path };

/// Driving-process value M_t and, when needed, the functional value I_t.
struct PathState {
    double m = 0.0;
    double functional = std::numeric_limits<double>::quiet_NaN();
};

struct Partials {
    double u_t = 0.0;
    double u_x = 0.0;
};

/// Sampling box for residual probes.
struct ProbeBox {
    double t_lo = 0.0, t_hi = 1.0;
    double m_lo = 0.0, m_hi = 0.0;
    double i_lo = 0.0, i_hi = 0.0;
};

struct ClosedFormSolution {
    using Eval = std::function<double(double x, double t, const PathState&)>;
    using Pred = std::function<bool(double x, double t, const PathState&)>;
    using Diff = std::function<Partials(double x, double t, const PathState&, double m_dot)>;

    std::string id;
    std::string scenario; // lower-case scenario name
    InitialConditionId ic = InitialConditionId::custom;
    PerturbationId perturbation = PerturbationId::none;
    NoiseKind noise = NoiseKind::zero;
    FunctionalNeed needs_functional = FunctionalNeed::none;
    /// The entry carries an explicit stopping-time formula (foot leaves [0,1]).
    bool has_stopping_formula = false;

    Eval evaluate;            // raw formula; no validity check
    Diff partials;            // (u_t, u_x) with total time derivative
    Pred valid;               // formula defined and characteristics not yet folded
    Eval foot;                // xi_t^{-1}(x)
    Pred well_conditioned;    // away from singular sets, for residual probes
    ProbeBox probes;

    double g(double x) const { return InitialCondition::make(ic)(x); }
};

namespace closedform_detail {

inline constexpr double e = std::numbers::e;

// Linear-rational flows with g = 1 - x: xi = x + (2x - 1) k, k = t + M.
inline void linear_one_minus_x(ClosedFormSolution& c, bool noisy) {
    auto k_of = [noisy](double t, const PathState& s) { return t + (noisy ? s.m : 0.0); };
    c.evaluate = [=](double x, double t, const PathState& s) {
        if (t == 0.0)
            return 1.0 - x;
        const double k = k_of(t, s);
        return (1.0 - x + k) / (1.0 + 2.0 * k);
    };
    c.partials = [=](double x, double t, const PathState& s, double m_dot) {
        const double den = 1.0 + 2.0 * k_of(t, s);
        const double dk = 1.0 + (noisy ? m_dot : 0.0);
        return Partials{(2.0 * x - 1.0) / (den * den) * dk, -1.0 / den};
    };
    c.valid = [=](double, double t, const PathState& s) { return 1.0 + 2.0 * k_of(t, s) > 0.0; };
    c.foot = [=](double x, double t, const PathState& s) {
        const double k = k_of(t, s);
        return (x + k) / (1.0 + 2.0 * k);
    };
    c.well_conditioned = [=](double, double t, const PathState& s) { return 1.0 + 2.0 * k_of(t, s) >= 0.05; };
}

// g = 1 - x^2: the foot X solves 2 a X^2 + X - z = 0, u = 1 - X^2.
struct QuadraticParams {
    double a, z, a_dot, z_dot;
};

template <class Params>
void quadratic_one_minus_x2(ClosedFormSolution& c, Params params) {
    auto root = [](double a, double z, double& R) {
        R = std::sqrt(1.0 + 8.0 * a * z);
        return 2.0 * z / (1.0 + R);
    };
    c.evaluate = [=](double x, double t, const PathState& s) {
        if (t == 0.0)
            return 1.0 - x * x;
        const QuadraticParams q = params(x, t, s, 0.0);
        double R;
        const double X = root(q.a, q.z, R);
        return 1.0 - X * X;
    };
    c.partials = [=](double x, double t, const PathState& s, double m_dot) {
        const QuadraticParams q = params(x, t, s, m_dot);
        double R;
        const double X = root(q.a, q.z, R);
        // X_z = 1/R, X_a = -2 X^2 / R
        return Partials{-2.0 * X * (q.z_dot - 2.0 * X * X * q.a_dot) / R, -2.0 * X / R};
    };
    c.valid = [=](double x, double t, const PathState& s) {
        const QuadraticParams q = params(x, t, s, 0.0);
        return 1.0 + 8.0 * q.a * q.z >= 0.0;
    };
    c.foot = [=](double x, double t, const PathState& s) {
        const QuadraticParams q = params(x, t, s, 0.0);
        double R;
        return root(q.a, q.z, R);
    };
    c.well_conditioned = [=](double x, double t, const PathState& s) {
        const QuadraticParams q = params(x, t, s, 0.0);
        return 1.0 + 8.0 * q.a * q.z >= 0.0025;
    };
}

// g = x with a time-only denominator: u = (x - t + c) / (1 - 2t), c = 0 or S - 1.
inline void linear_x(ClosedFormSolution& c, bool noisy) {
    auto c_of = [noisy](const PathState& s) { return noisy ? s.m - 1.0 : 0.0; };
    auto value = [=](double x, double t, const PathState& s) { return (x - t + c_of(s)) / (1.0 - 2.0 * t); };
    c.evaluate = [=](double x, double t, const PathState& s) { return t == 0.0 ? x : value(x, t, s); };
    c.partials = [=](double x, double t, const PathState& s, double m_dot) {
        const double den = 1.0 - 2.0 * t;
        const double u = value(x, t, s);
        return Partials{(-1.0 + 2.0 * u + (noisy ? m_dot : 0.0)) / den, 1.0 / den};
    };
    c.valid = [](double, double t, const PathState&) { return 1.0 - 2.0 * t > 0.0; };
    c.foot = value;
    c.well_conditioned = [](double, double t, const PathState&) { return std::abs(t - 0.5) >= 0.05; };
}

// Multiplicative noise with g = x: u = exp(M) (x - t) / (d0 - 2 I).
inline void multiplicative_x(ClosedFormSolution& c, double d0) {
    c.evaluate = [=](double x, double t, const PathState& s) {
        if (t == 0.0)
            return x;
        return std::exp(s.m) * (x - t) / (d0 - 2.0 * s.functional);
    };
    c.partials = [=](double x, double t, const PathState& s, double m_dot) {
        const double E = std::exp(s.m);
        const double den = d0 - 2.0 * s.functional;
        const double u = E * (x - t) / den;
        // dI/dt = exp(M_t)
        return Partials{u * m_dot + (-E + 2.0 * u * E) / den, E / den};
    };
    c.valid = [=](double, double, const PathState& s) {
        return std::isfinite(s.functional) && d0 - 2.0 * s.functional > 0.0;
    };
    c.foot = [=](double x, double t, const PathState& s) { return d0 * (x - t) / (d0 - 2.0 * s.functional); };
    c.well_conditioned = [=](double, double, const PathState& s) { return d0 - 2.0 * s.functional >= 0.05; };
}

// Square-root conservation noise with g = x. With a = 1 - 2t, b = x - t and
// mu the driver offset, the foot X satisfies b - a X + mu sqrt(X - X^2) = 0:
//     X = (2ab + mu^2 + mu sqrt(D)) / (2 (a^2 + mu^2)),  D = mu^2 + 4 b (a - b).
inline void sqrt_conservation_x(ClosedFormSolution& c, double offset) {
    struct Parts {
        double a, b, mu, D, sqD, Q, N, X;
    };
    auto parts = [=](double x, double t, const PathState& s) {
        Parts p;
        p.a = 1.0 - 2.0 * t;
        p.b = x - t;
        p.mu = s.m - offset;
        p.D = p.mu * p.mu + 4.0 * p.b * (p.a - p.b);
        p.sqD = std::sqrt(p.D);
        p.Q = p.a * p.a + p.mu * p.mu;
        p.N = 2.0 * p.a * p.b + p.mu * p.mu + p.mu * p.sqD;
        p.X = p.N / (2.0 * p.Q);
        return p;
    };
    c.evaluate = [=](double x, double t, const PathState& s) { return t == 0.0 ? x : parts(x, t, s).X; };
    c.partials = [=](double x, double t, const PathState& s, double m_dot) {
        const Parts p = parts(x, t, s);
        const double N_x = 2.0 * p.a + 2.0 * p.mu * (p.a - 2.0 * p.b) / p.sqD;
        const double N_t = -2.0 * p.a - 4.0 * p.b - 2.0 * p.a * p.mu / p.sqD;
        const double N_mu = 2.0 * p.mu + p.sqD + p.mu * p.mu / p.sqD;
        const double Q_t = -4.0 * p.a;
        const double Q_mu = 2.0 * p.mu;
        const double N_dot = N_t + N_mu * m_dot;
        const double Q_dot = Q_t + Q_mu * m_dot;
        return Partials{(N_dot * p.Q - p.N * Q_dot) / (2.0 * p.Q * p.Q), N_x / (2.0 * p.Q)};
    };
    // The printed root solves the squared relation; it is the foot only where
    // the unsquared relation holds, i.e. where x is covered by the flow.
    c.valid = [=](double x, double t, const PathState& s) {
        if (t == 0.0)
            return true;
        const Parts p = parts(x, t, s);
        if (!(p.D >= 0.0) || !(p.Q > 0.0))
            return false;
        const double r = p.X - p.X * p.X;
        if (!(r >= 0.0))
            return false;
        const double G = p.b - p.a * p.X + p.mu * std::sqrt(r);
        return std::abs(G) <= 1e-9 * (1.0 + std::abs(p.a) + std::abs(p.b) + std::abs(p.mu));
    };
    c.foot = [=](double x, double t, const PathState& s) { return t == 0.0 ? x : parts(x, t, s).X; };
    c.well_conditioned = [=](double x, double t, const PathState& s) {
        const Parts p = parts(x, t, s);
        return p.D >= 1e-6 && p.Q >= 0.01;
    };
}

inline std::vector<ClosedFormSolution> build_catalog() {
    using IC = InitialConditionId;
    using P = PerturbationId;
    using N = NoiseKind;
    std::vector<ClosedFormSolution> cat;

    auto entry = [&](const char* id, const char* scen, IC ic, P pert, N noise) -> ClosedFormSolution& {
        ClosedFormSolution c;
        c.id = id;
        c.scenario = scen;
        c.ic = ic;
        c.perturbation = pert;
        c.noise = noise;
        cat.push_back(std::move(c));
        return cat.back();
    };

    {
        auto& c = entry("D1", "d1", IC::one_minus_x, P::none, N::zero);
        linear_one_minus_x(c, false);
        c.probes = {0.0, 1.0};
    }
    {
        auto& c = entry("D2", "d2", IC::one_minus_x_squared, P::none, N::zero);
        quadratic_one_minus_x2(c, [](double x, double t, const PathState&, double) {
            return QuadraticParams{t, x + t, 1.0, 1.0};
        });
        c.probes = {0.0, 1.0};
    }
    {
        auto& c = entry("D3", "d3", IC::x, P::none, N::zero);
        linear_x(c, false);
        c.probes = {0.0, 0.45};
    }
    {
        // g = x - x^2: 2t X^2 + (1 - 2t) X + t - x = 0, u = X - X^2
        auto& c = entry("D4", "d4", IC::x_minus_x_squared, P::none, N::zero);
        auto disc = [](double x, double t) { return 1.0 - 4.0 * t - 4.0 * t * t + 8.0 * t * x; };
        auto root = [=](double x, double t) { return 2.0 * (x - t) / (1.0 - 2.0 * t + std::sqrt(disc(x, t))); };
        c.evaluate = [=](double x, double t, const PathState&) {
            if (t == 0.0)
                return x - x * x;
            const double X = root(x, t);
            return X - X * X;
        };
        c.partials = [=](double x, double t, const PathState&, double) {
            const double X = root(x, t);
            const double sq = std::sqrt(disc(x, t));
            return Partials{-(1.0 - 2.0 * X) * (2.0 * X * X - 2.0 * X + 1.0) / sq, (1.0 - 2.0 * X) / sq};
        };
        c.valid = [=](double x, double t, const PathState&) { return disc(x, t) > 0.0 && 1.0 - 2.0 * t > 0.0; };
        c.foot = [=](double x, double t, const PathState&) { return t == 0.0 ? x : root(x, t); };
        c.well_conditioned = [=](double x, double t, const PathState&) {
            return disc(x, t) >= 0.0025 && 1.0 - 2.0 * t >= 0.1;
        };
        c.probes = {0.0, 0.45};
    }
    {
        auto& c = entry("S1", "s1", IC::one_minus_x, P::conservation_lwr, N::brownian);
        linear_one_minus_x(c, true);
        c.has_stopping_formula = true;
        c.probes = {0.0, 1.0, -1.0, 1.0};
    }
    {
        // tau = t + S - 1 replaces t in the deterministic formula
        auto& c = entry("S2", "s2", IC::one_minus_x_squared, P::conservation_lwr, N::geometric_brownian);
        quadratic_one_minus_x2(c, [](double x, double t, const PathState& s, double m_dot) {
            const double tau = t + s.m - 1.0;
            return QuadraticParams{tau, x + tau, 1.0 + m_dot, 1.0 + m_dot};
        });
        c.has_stopping_formula = true;
        c.probes = {0.0, 1.0, 0.2, 3.0};
    }
    {
        auto& c = entry("B1", "b1", IC::one_minus_x_squared, P::advective, N::brownian);
        quadratic_one_minus_x2(c, [](double x, double t, const PathState& s, double m_dot) {
            return QuadraticParams{t, x + t + s.m, 1.0, 1.0 + m_dot};
        });
        c.probes = {0.0, 1.0, -1.0, 1.0};
    }
    {
        auto& c = entry("B2", "b2", IC::x, P::multiplicative, N::brownian);
        c.needs_functional = FunctionalNeed::exp_of_path;
        multiplicative_x(c, 1.0);
        c.probes = {0.0, 1.0, -1.0, 1.0, 0.0, 1.5};
    }
    {
        auto& c = entry("B3", "b3", IC::x, P::sqrt_conservation, N::brownian);
        sqrt_conservation_x(c, 0.0);
        c.probes = {0.0, 0.45, -1.0, 1.0};
    }
    {
        auto& c = entry("G1", "g1", IC::x, P::advective, N::geometric_brownian);
        linear_x(c, true);
        c.probes = {0.0, 0.45, 0.2, 3.0};
    }
    {
        auto& c = entry("G2", "g2", IC::x, P::multiplicative, N::geometric_brownian);
        c.needs_functional = FunctionalNeed::exp_of_exp_path;
        multiplicative_x(c, e);
        c.probes = {0.0, 1.0, 0.2, 3.0, 0.0, 2.5};
    }
    {
        auto& c = entry("G3", "g3", IC::x, P::sqrt_conservation, N::geometric_brownian);
        sqrt_conservation_x(c, 1.0);
        c.probes = {0.0, 0.45, 0.2, 3.0};
    }
    return cat;
}

} // namespace closedform_detail

/// All twelve entries, in catalog order D1..D4, S1, S2, B1..B3, G1..G3.
inline std::span<const ClosedFormSolution> catalog() {
    static const std::vector<ClosedFormSolution> cat = closedform_detail::build_catalog();
    return cat;
}

/// Entry by id, case-insensitive ("s1" and "S1" both work).
inline const ClosedFormSolution& lookup(std::string_view id) {
    std::string key(id);
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::toupper(ch); });
    for (const auto& c : catalog())
        if (c.id == key)
            return c;
    throw UnknownIdError(std::string(id));
}

/// The scenario an entry solves, with its default horizon unless overridden.
inline Scenario scenario_for(const ClosedFormSolution& c, std::optional<double> horizon = std::nullopt) {
    return scenario_by_name(c.scenario, horizon);
}

namespace closedform_detail {

inline void check_inputs(const ClosedFormSolution& c, const NoisePath& path, const PathFunctional* functional) {
    if (c.noise != NoiseKind::zero && path.kind() != c.noise)
        throw KindError(c.id + " needs a " + std::string(to_string(c.noise)) + " path");
    if (c.needs_functional == FunctionalNeed::none)
        return;
    if (!functional)
        throw ArgumentError(c.id + " needs a path functional");
    const auto want = c.needs_functional == FunctionalNeed::exp_of_path ? FunctionalKind::exp_of_path
                                                                        : FunctionalKind::exp_of_exp_path;
    if (functional->kind() != want)
        throw ArgumentError(c.id + " got the wrong kind of path functional");
}

} // namespace closedform_detail

/// Path state at time t, by linear interpolation between nodes.
inline PathState path_state(const ClosedFormSolution& c, const NoisePath& path, const PathFunctional* functional,
                            double t) {
    closedform_detail::check_inputs(c, path, functional);
    PathState s;
    s.m = c.noise == NoiseKind::zero ? 0.0 : path.value_at(t);
    if (functional)
        s.functional = functional->value_at(t);
    return s;
}

/// u(x, t) for the given path; DomainError outside the validity region.
inline double evaluate(const ClosedFormSolution& c, double x, double t, const NoisePath& path,
                       const PathFunctional* functional = nullptr) {
    const PathState s = path_state(c, path, functional, t);
    if (!c.valid(x, t, s))
        throw DomainError(c.id + " is not valid at this point");
    return c.evaluate(x, t, s);
}

inline Partials partials(const ClosedFormSolution& c, double x, double t, const PathState& s, double m_dot) {
    if (!c.valid(x, t, s))
        throw DomainError(c.id + " is not valid at this point");
    return c.partials(x, t, s, m_dot);
}

/// First grid time at which the entry stops being a solution at x: the foot
/// leaves [0,1] (entries with a stopping formula) or the validity predicate
/// fails. +inf if neither happens on the path's grid.
inline double closed_form_sigma(const ClosedFormSolution& c, double x, const NoisePath& path,
                                const PathFunctional* functional = nullptr) {
    closedform_detail::check_inputs(c, path, functional);
    const auto& grid = path.grid();
    if (functional && functional->grid().size() != grid.size())
        throw GridError("functional and path grids differ");
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const double t = grid[n];
        PathState s;
        s.m = c.noise == NoiseKind::zero ? 0.0 : path[n];
        if (functional)
            s.functional = (*functional)[n];
        if (!c.valid(x, t, s))
            return t;
        if (c.has_stopping_formula) {
            const double foot = c.foot(x, t, s);
            if (!(foot >= 0.0 && foot <= 1.0))
                return t;
        }
    }
    return infinity;
}

/// The functional an entry needs, computed on the path (nullopt if none).
inline std::optional<PathFunctional> functional_for(const ClosedFormSolution& c, const NoisePath& path) {
    switch (c.needs_functional) {
    case FunctionalNeed::none: return std::nullopt;
    case FunctionalNeed::exp_of_path: return path_integral_exp(path, false);
    case FunctionalNeed::exp_of_exp_path: return path_integral_exp(path, true);
    }
    return std::nullopt;
}

} // namespace stochar
