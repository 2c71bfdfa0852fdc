#pragma once

// Stochastic characteristics: integration of (xi, eta, chi) along one noise
// path, crossing and explosion detection, inversion of the flow, and the
// solution surface u(x, t) = eta_t(xi_t^{-1}(x)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "stochar/csv.hpp"
#include "stochar/error.hpp"
#include "stochar/model.hpp"
#include "stochar/process.hpp"

namespace stochar {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// |xi| beyond this marks a trajectory as exploded.
inline constexpr double explosion_bound = 1e3;

/// Relative threshold on d xi / d x below which the flow counts as folded.
inline constexpr double default_eps_det = 1e-8;

/// Evenly spaced points on [lo, hi].
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n < 2)
        return {lo};
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    v.back() = hi;
    return v;
}

struct Trajectory {
    double x0 = 0.0;
    std::vector<double> xi, eta, chi;
    /// First node at which the state is non-finite or |xi| > explosion_bound; size() if never.
    std::size_t death = 0;
    /// eta came within the clamp band of {0, 1} under the square-root perturbation.
    bool boundary_contact = false;

    std::size_t size() const noexcept { return xi.size(); }
    bool alive(std::size_t n) const noexcept { return n < death; }
};

namespace detail {

inline void check_path(const Scenario& s, const NoisePath& path) {
    const double tol = 1e-12 * std::max(1.0, s.horizon);
    if (std::abs(path.grid().horizon() - s.horizon) > tol)
        throw GridError("noise path horizon does not match the scenario horizon");
}

inline CharState heun_step(const PerturbationSpec& spec, const CharState& s, double t, double dt, double dm,
                           bool& ok) {
    const auto k1 = sce_rhs(spec, s, t, dt, dm);
    if (!k1) {
        ok = false;
        return s;
    }
    const CharState pred{s.xi + k1->xi, s.eta + k1->eta, s.chi + k1->chi};
    const auto k2 = sce_rhs(spec, pred, t + dt, dt, dm);
    if (!k2) {
        ok = false;
        return pred;
    }
    ok = true;
    return {s.xi + 0.5 * (k1->xi + k2->xi), s.eta + 0.5 * (k1->eta + k2->eta),
            s.chi + 0.5 * (k1->chi + k2->chi)};
}

} // namespace detail

/// One characteristic from x0 along the path, by the Stratonovich Heun scheme
/// (left-point predictor, trapezoidal corrector against (dt, dM)).
inline Trajectory integrate_sce(const Scenario& scenario, const NoisePath& path, double x0) {
    detail::check_path(scenario, path);
    if (!(x0 >= 0.0 && x0 <= 1.0))
        throw ArgumentError("initial point must lie in [0,1]");

    const auto& grid = path.grid();
    const auto& spec = scenario.perturbation;
    const std::size_t n = grid.size();
    const bool sqrt_form = spec.id == PerturbationId::sqrt_conservation;

    Trajectory tr;
    tr.x0 = x0;
    tr.xi.assign(n, std::numeric_limits<double>::quiet_NaN());
    tr.eta = tr.xi;
    tr.chi = tr.xi;
    tr.death = n;

    CharState s{x0, scenario.ic(x0), scenario.ic.deriv(x0)};
    auto touches = [&](double u) { return sqrt_form && (u < sqrt_boundary_eps || u > 1.0 - sqrt_boundary_eps); };
    if (!s.finite() || std::abs(s.xi) > explosion_bound) {
        tr.death = 0;
        return tr;
    }
    tr.xi[0] = s.xi;
    tr.eta[0] = s.eta;
    tr.chi[0] = s.chi;
    tr.boundary_contact = touches(s.eta);

    for (std::size_t i = 0; i + 1 < n; ++i) {
        bool ok = false;
        const CharState next = detail::heun_step(spec, s, grid[i], grid.step(i), path[i + 1] - path[i], ok);
        if (!ok || !next.finite() || std::abs(next.xi) > explosion_bound) {
            tr.death = i + 1;
            break;
        }
        s = next;
        tr.xi[i + 1] = s.xi;
        tr.eta[i + 1] = s.eta;
        tr.chi[i + 1] = s.chi;
        tr.boundary_contact = tr.boundary_contact || touches(s.eta);
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Fan

/// Characteristics from a sorted set of initial points under one noise path.
/// Values are stored time-major: row n holds every trajectory at t_n.
class CharacteristicFan {
public:
    CharacteristicFan(std::vector<double> x0, TimeGrid grid)
        : x0_(std::move(x0)), grid_(std::move(grid)) {
        const std::size_t cells = x0_.size() * grid_.size();
        xi_.assign(cells, std::numeric_limits<double>::quiet_NaN());
        eta_ = xi_;
        chi_ = xi_;
        alive_.assign(cells, 0);
        death_.assign(x0_.size(), grid_.size());
        boundary_contact_.assign(x0_.size(), 0);
    }

    std::size_t points() const noexcept { return x0_.size(); }
    std::size_t times() const noexcept { return grid_.size(); }
    const TimeGrid& grid() const noexcept { return grid_; }
    std::span<const double> x0() const noexcept { return x0_; }

    double xi(std::size_t n, std::size_t i) const noexcept { return xi_[n * points() + i]; }
    double eta(std::size_t n, std::size_t i) const noexcept { return eta_[n * points() + i]; }
    double chi(std::size_t n, std::size_t i) const noexcept { return chi_[n * points() + i]; }
    bool alive(std::size_t n, std::size_t i) const noexcept { return alive_[n * points() + i] != 0; }
    std::size_t death(std::size_t i) const noexcept { return death_[i]; }
    bool boundary_contact(std::size_t i) const noexcept { return boundary_contact_[i] != 0; }

    std::span<const double> xi_row(std::size_t n) const noexcept { return {xi_.data() + n * points(), points()}; }
    std::span<const double> eta_row(std::size_t n) const noexcept { return {eta_.data() + n * points(), points()}; }

    /// First grid time with a fold between adjacent characteristics (+inf if none).
    double tau_inv() const noexcept { return tau_inv_; }
    /// First grid time at which any trajectory exploded (+inf if none).
    double explosion_time() const noexcept { return explosion_; }
    double tau() const noexcept { return std::min(tau_inv_, explosion_); }

    void store(std::size_t i, const Trajectory& tr) {
        for (std::size_t n = 0; n < times(); ++n) {
            const std::size_t k = n * points() + i;
            xi_[k] = tr.xi[n];
            eta_[k] = tr.eta[n];
            chi_[k] = tr.chi[n];
            alive_[k] = tr.alive(n) ? 1 : 0;
        }
        death_[i] = tr.death;
        boundary_contact_[i] = tr.boundary_contact ? 1 : 0;
    }

    void set_stopping(double tau_inv, double explosion) noexcept {
        tau_inv_ = tau_inv;
        explosion_ = explosion;
    }

private:
    std::vector<double> x0_;
    TimeGrid grid_;
    std::vector<double> xi_, eta_, chi_;
    std::vector<char> alive_;
    std::vector<std::size_t> death_;
    std::vector<char> boundary_contact_;
    double tau_inv_ = infinity;
    double explosion_ = infinity;
};

/// First grid time at which some adjacent pair of live characteristics has
/// (xi_{i+1} - xi_i) / (x_{i+1} - x_i) <= eps_det.
inline double detect_tau_inv(const CharacteristicFan& fan, double eps_det = default_eps_det) {
    const auto x0 = fan.x0();
    for (std::size_t n = 0; n < fan.times(); ++n) {
        for (std::size_t i = 0; i + 1 < fan.points(); ++i) {
            const double dx = x0[i + 1] - x0[i];
            if (!(dx > 0.0) || !fan.alive(n, i) || !fan.alive(n, i + 1))
                continue;
            if ((fan.xi(n, i + 1) - fan.xi(n, i)) / dx <= eps_det)
                return fan.grid()[n];
        }
    }
    return infinity;
}

inline double detect_explosion(const CharacteristicFan& fan) {
    std::size_t first = fan.times();
    for (std::size_t i = 0; i < fan.points(); ++i)
        first = std::min(first, fan.death(i));
    return first < fan.times() ? fan.grid()[first] : infinity;
}

inline CharacteristicFan integrate_fan(const Scenario& scenario, const NoisePath& path,
                                       std::span<const double> x0_grid) {
    if (x0_grid.empty())
        throw ArgumentError("fan needs at least one initial point");
    if (!std::is_sorted(x0_grid.begin(), x0_grid.end()))
        throw ArgumentError("initial points must be sorted");
    if (x0_grid.front() < 0.0 || x0_grid.back() > 1.0)
        throw ArgumentError("initial points must lie in [0,1]");
    detail::check_path(scenario, path);

    CharacteristicFan fan(std::vector<double>(x0_grid.begin(), x0_grid.end()), path.grid());
    for (std::size_t i = 0; i < x0_grid.size(); ++i)
        fan.store(i, integrate_sce(scenario, path, x0_grid[i]));
    fan.set_stopping(detect_tau_inv(fan), detect_explosion(fan));
    return fan;
}

// ---------------------------------------------------------------------------
// Jacobian

struct JacobianField {
    std::size_t points = 0;
    std::vector<double> values; // time-major, NaN where undefined
    bool degenerate = false;    // some pair of initial points coincides

    double at(std::size_t n, std::size_t i) const noexcept { return values[n * points + i]; }
};

/// d xi / d x0 by centered differences across neighbouring rows (one-sided at the ends).
inline JacobianField jacobian(const CharacteristicFan& fan) {
    if (fan.points() < 2)
        throw ArgumentError("jacobian needs at least two initial points");
    const auto x0 = fan.x0();
    const std::size_t np = fan.points();
    JacobianField J{np, std::vector<double>(np * fan.times(), std::numeric_limits<double>::quiet_NaN()), false};
    for (std::size_t n = 0; n < fan.times(); ++n) {
        for (std::size_t i = 0; i < np; ++i) {
            const std::size_t lo = i == 0 ? 0 : i - 1;
            const std::size_t hi = i + 1 == np ? i : i + 1;
            const double dx = x0[hi] - x0[lo];
            if (!(dx > 0.0)) {
                J.degenerate = true;
                continue;
            }
            J.values[n * np + i] = (fan.xi(n, hi) - fan.xi(n, lo)) / dx;
        }
    }
    return J;
}

// ---------------------------------------------------------------------------
// Inversion, stopping times, surface

struct Foot {
    double x0;  // xi_t^{-1}(y)
    double eta; // eta_t at the foot
};

/// Inverse of the flow at node n by bracketing and linear interpolation in x0.
/// nullopt when y lies outside the fan's image at t_n.
inline std::optional<Foot> invert_at(const CharacteristicFan& fan, std::size_t n, double y) {
    const auto row = fan.xi_row(n);
    const auto eta = fan.eta_row(n);
    const auto x0 = fan.x0();
    const std::size_t np = fan.points();
    if (!(y >= row.front() && y <= row.back()))
        return std::nullopt;
    if (np == 1)
        return Foot{x0[0], eta[0]};
    auto it = std::upper_bound(row.begin(), row.end(), y);
    std::size_t i = it == row.begin() ? 0 : static_cast<std::size_t>(it - row.begin()) - 1;
    i = std::min(i, np - 2);
    const double span = row[i + 1] - row[i];
    const double w = span > 0.0 ? (y - row[i]) / span : 0.0;
    return Foot{x0[i] + w * (x0[i + 1] - x0[i]), eta[i] + w * (eta[i + 1] - eta[i])};
}

/// xi_t^{-1}(y). Throws InversionError at or after the fan's stopping time,
/// GridError if t is not a grid node; nullopt if y is not covered.
inline std::optional<double> invert_xi(const CharacteristicFan& fan, double y, double t) {
    const std::size_t n = fan.grid().node_index(t);
    if (n == fan.grid().size())
        throw GridError("inversion time is not a grid node");
    if (fan.grid()[n] >= fan.tau())
        throw InversionError("flow is not invertible at or after the first crossing");
    const auto foot = invert_at(fan, n, y);
    if (!foot)
        return std::nullopt;
    return foot->x0;
}

/// First grid time at which y loses its preimage, the preimage leaves [0,1],
/// or the fan's stopping time tau is reached; +inf if none.
inline double estimate_sigma(const CharacteristicFan& fan, double y) {
    const double tau = fan.tau();
    for (std::size_t n = 0; n < fan.times(); ++n) {
        const double t = fan.grid()[n];
        if (t >= tau)
            return t;
        const auto foot = invert_at(fan, n, y);
        if (!foot || foot->x0 < 0.0 || foot->x0 > 1.0)
            return t;
    }
    return infinity;
}

struct StoppingTimeEstimate {
    double tau_inv = infinity;
    double explosion_T = infinity;
    double tau = infinity;
    std::vector<double> sigma;
};

inline StoppingTimeEstimate stopping_times(const CharacteristicFan& fan, std::span<const double> queries) {
    StoppingTimeEstimate st{fan.tau_inv(), fan.explosion_time(), fan.tau(), {}};
    st.sigma.reserve(queries.size());
    for (double y : queries)
        st.sigma.push_back(estimate_sigma(fan, y));
    return st;
}

/// u(x, t) on a space-time grid with a validity mask.
class SolutionSurface {
public:
    SolutionSurface(std::vector<double> x, TimeGrid t)
        : x_(std::move(x)), t_(std::move(t)),
          u_(x_.size() * t_.size(), std::numeric_limits<double>::quiet_NaN()),
          valid_(x_.size() * t_.size(), 0), sigma_(x_.size(), infinity) {}

    std::span<const double> x() const noexcept { return x_; }
    const TimeGrid& t() const noexcept { return t_; }
    double u(std::size_t n, std::size_t j) const noexcept { return u_[n * x_.size() + j]; }
    bool valid(std::size_t n, std::size_t j) const noexcept { return valid_[n * x_.size() + j] != 0; }
    double sigma(std::size_t j) const noexcept { return sigma_[j]; }
    std::span<const double> sigma() const noexcept { return sigma_; }

    void set(std::size_t n, std::size_t j, double u, bool valid) noexcept {
        u_[n * x_.size() + j] = u;
        valid_[n * x_.size() + j] = valid ? 1 : 0;
    }
    void set_sigma(std::size_t j, double s) noexcept { sigma_[j] = s; }

private:
    std::vector<double> x_;
    TimeGrid t_;
    std::vector<double> u_;
    std::vector<char> valid_;
    std::vector<double> sigma_;
};

/// u = eta interpolated at xi_t^{-1}(x) while t < sigma(x); the t = 0 row is g.
inline SolutionSurface build_surface(const CharacteristicFan& fan, std::span<const double> x_grid,
                                     const InitialCondition& ic) {
    SolutionSurface surf(std::vector<double>(x_grid.begin(), x_grid.end()), fan.grid());
    const double tau = fan.tau();
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
        const double y = x_grid[j];
        surf.set(0, j, ic(y), true);
        double sigma = infinity;
        for (std::size_t n = 0; n < fan.times(); ++n) {
            const double t = fan.grid()[n];
            const auto foot = t < tau ? invert_at(fan, n, y) : std::nullopt;
            if (!foot || foot->x0 < 0.0 || foot->x0 > 1.0) {
                sigma = t;
                break;
            }
            if (n > 0)
                surf.set(n, j, foot->eta, true);
        }
        surf.set_sigma(j, sigma);
    }
    return surf;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_fan(std::ostream& out, const CharacteristicFan& fan, std::size_t time_stride = 1,
                      std::size_t point_stride = 1) {
    time_stride = std::max<std::size_t>(time_stride, 1);
    point_stride = std::max<std::size_t>(point_stride, 1);
    out << "t,x0,xi,eta,chi,alive\n";
    for (std::size_t n = 0; n < fan.times(); n += time_stride) {
        for (std::size_t i = 0; i < fan.points(); i += point_stride) {
            out << csv::number(fan.grid()[n]) << ',' << csv::number(fan.x0()[i]) << ','
                << csv::number(fan.xi(n, i)) << ',' << csv::number(fan.eta(n, i)) << ','
                << csv::number(fan.chi(n, i)) << ',' << (fan.alive(n, i) ? 1 : 0) << '\n';
        }
    }
}

inline void write_surface(std::ostream& out, const SolutionSurface& s, std::size_t time_stride = 1) {
    time_stride = std::max<std::size_t>(time_stride, 1);
    out << "x,t,u,valid\n";
    for (std::size_t n = 0; n < s.t().size(); n += time_stride)
        for (std::size_t j = 0; j < s.x().size(); ++j)
            out << csv::number(s.x()[j]) << ',' << csv::number(s.t()[n]) << ',' << csv::number(s.u(n, j)) << ','
                << (s.valid(n, j) ? 1 : 0) << '\n';
}

inline void write_sigma(std::ostream& out, std::span<const double> x, std::span<const double> sigma) {
    out << "x,sigma\n";
    for (std::size_t j = 0; j < x.size(); ++j)
        out << csv::number(x[j]) << ',' << csv::number(sigma[j]) << '\n';
}

} // namespace stochar
