#pragma once

// Driving-noise paths on discrete time grids.
//
// A path is a list of node values; between nodes it is piecewise linear.
// Every random draw comes from a counter-based generator keyed by
// (seed, stream, counter), so an ensemble member depends only on its own
// stream index and never on generation order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stochar/error.hpp"

namespace stochar {

// ---------------------------------------------------------------------------
// Counter-based normal generator

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// Stateless standard-normal source: normal(i) is a pure function of the key and i.
class CounterNormal {
public:
    constexpr CounterNormal(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(detail::splitmix64(seed ^ detail::splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

    double operator()(std::uint64_t counter) const noexcept {
        const std::uint64_t a = detail::splitmix64(key_ ^ detail::splitmix64(2 * counter));
        const std::uint64_t b = detail::splitmix64(key_ ^ detail::splitmix64(2 * counter + 1));
        // u1 in (0,1], u2 in [0,1)
        const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t key_;
};

// ---------------------------------------------------------------------------
// TimeGrid

class TimeGrid {
public:
    /// Strictly increasing nodes starting at 0; the last node is the horizon.
    explicit TimeGrid(std::vector<double> points) : points_(std::move(points)) {
        if (points_.size() < 2)
            throw GridError("time grid needs at least two nodes");
        if (points_.front() != 0.0)
            throw GridError("time grid must start at t = 0");
        for (std::size_t i = 1; i < points_.size(); ++i)
            if (!(points_[i] > points_[i - 1]))
                throw GridError("time grid must be strictly increasing");
        if (!std::isfinite(points_.back()))
            throw GridError("time horizon must be finite");
    }

    /// n equal steps on [0, horizon].
    static TimeGrid uniform_steps(double horizon, std::size_t steps) {
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw GridError("time horizon must be positive and finite");
        if (steps == 0)
            throw GridError("time grid needs at least one step");
        std::vector<double> pts(steps + 1);
        for (std::size_t i = 0; i <= steps; ++i)
            pts[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
        pts.back() = horizon;
        return TimeGrid(std::move(pts));
    }

    /// Uniform grid whose step is the largest value <= dt that divides the horizon.
    static TimeGrid uniform(double horizon, double dt) {
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw GridError("dt must be positive");
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw GridError("time horizon must be positive and finite");
        const double ratio = horizon / dt;
        auto steps = static_cast<std::size_t>(std::ceil(ratio - 1e-9 * std::max(1.0, ratio)));
        return uniform_steps(horizon, std::max<std::size_t>(steps, 1));
    }

    std::size_t size() const noexcept { return points_.size(); }
    std::size_t steps() const noexcept { return points_.size() - 1; }
    double operator[](std::size_t i) const noexcept { return points_[i]; }
    double horizon() const noexcept { return points_.back(); }
    double step(std::size_t i) const noexcept { return points_[i + 1] - points_[i]; }
    std::span<const double> points() const noexcept { return points_; }

    double max_step() const noexcept {
        double h = 0.0;
        for (std::size_t i = 0; i + 1 < points_.size(); ++i)
            h = std::max(h, step(i));
        return h;
    }

    bool is_uniform(double rel_tol = 1e-9) const noexcept {
        const double h = horizon() / static_cast<double>(steps());
        for (std::size_t i = 0; i + 1 < points_.size(); ++i)
            if (std::abs(step(i) - h) > rel_tol * h)
                return false;
        return true;
    }

    /// Index of the node equal to t (within a relative tolerance), or size() if none.
    std::size_t node_index(double t, double rel_tol = 1e-9) const noexcept {
        const double tol = rel_tol * std::max(1.0, horizon());
        auto it = std::lower_bound(points_.begin(), points_.end(), t - tol);
        if (it != points_.end() && std::abs(*it - t) <= tol)
            return static_cast<std::size_t>(it - points_.begin());
        return points_.size();
    }

    /// Interval [i, i+1] containing t, clamped to the grid.
    std::size_t interval(double t) const noexcept {
        if (t <= points_.front())
            return 0;
        if (t >= points_.back())
            return points_.size() - 2;
        auto it = std::upper_bound(points_.begin(), points_.end(), t);
        return static_cast<std::size_t>(it - points_.begin()) - 1;
    }

    bool same_as(const TimeGrid& other) const noexcept { return points_ == other.points_; }

private:
    std::vector<double> points_;
};

/// Piecewise-linear interpolation of node values on a grid, clamped at the ends.
inline double interpolate(const TimeGrid& grid, std::span<const double> values, double t) noexcept {
    if (t <= 0.0)
        return values.front();
    if (t >= grid.horizon())
        return values.back();
    const std::size_t i = grid.interval(t);
    const double w = (t - grid[i]) / grid.step(i);
    return values[i] + w * (values[i + 1] - values[i]);
}

// ---------------------------------------------------------------------------
// NoisePath

enum class NoiseKind { zero, brownian, geometric_brownian };

inline std::string_view to_string(NoiseKind kind) noexcept {
    switch (kind) {
    case NoiseKind::zero: return "zero";
    case NoiseKind::brownian: return "brownian";
    case NoiseKind::geometric_brownian: return "geometric-brownian";
    }
    return "?";
}

inline NoiseKind noise_kind_from_string(std::string_view name) {
    if (name == "zero") return NoiseKind::zero;
    if (name == "brownian") return NoiseKind::brownian;
    if (name == "geometric-brownian") return NoiseKind::geometric_brownian;
    throw ArgumentError("unknown noise kind: " + std::string(name));
}

/// The driving process M on a grid: zero, a Brownian path W, or S = exp(-t/2 + W).
class NoisePath {
public:
    NoisePath(TimeGrid grid, NoiseKind kind, std::vector<double> values,
              std::vector<double> underlying = {}, std::uint64_t seed = 0, std::uint64_t stream = 0)
        : grid_(std::move(grid)), kind_(kind), values_(std::move(values)),
          underlying_(std::move(underlying)), seed_(seed), stream_(stream) {
        if (values_.size() != grid_.size())
            throw GridError("path values do not match the grid");
        switch (kind_) {
        case NoiseKind::zero:
            if (std::any_of(values_.begin(), values_.end(), [](double v) { return v != 0.0; }))
                throw KindError("zero path with nonzero values");
            break;
        case NoiseKind::brownian:
            if (values_.front() != 0.0)
                throw KindError("brownian path must start at 0");
            break;
        case NoiseKind::geometric_brownian:
            if (underlying_.size() != grid_.size())
                throw KindError("geometric path needs its underlying brownian path");
            if (values_.front() != 1.0)
                throw KindError("geometric path must start at 1");
            break;
        }
    }

    const TimeGrid& grid() const noexcept { return grid_; }
    NoiseKind kind() const noexcept { return kind_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> underlying() const noexcept { return underlying_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    /// M(t), piecewise linear between nodes.
    double value_at(double t) const noexcept { return interpolate(grid_, values_, t); }

    /// The Brownian component W at node i (the values themselves unless geometric).
    double brownian(std::size_t i) const noexcept {
        return kind_ == NoiseKind::geometric_brownian ? underlying_[i] : values_[i];
    }

private:
    TimeGrid grid_;
    NoiseKind kind_;
    std::vector<double> values_;
    std::vector<double> underlying_;
    std::uint64_t seed_;
    std::uint64_t stream_;
};

inline NoisePath zero_path(const TimeGrid& grid) {
    return NoisePath(grid, NoiseKind::zero, std::vector<double>(grid.size(), 0.0));
}

/// A Brownian-kind path with prescribed node values (W(0) must be 0).
inline NoisePath brownian_from_values(const TimeGrid& grid, std::vector<double> values) {
    return NoisePath(grid, NoiseKind::brownian, std::move(values));
}

/// Standard Brownian path; independent N(0, dt_i) increments keyed by (seed, stream).
inline NoisePath sample_brownian(std::uint64_t seed, const TimeGrid& grid, std::uint64_t stream = 0) {
    const CounterNormal normal(seed, stream);
    std::vector<double> w(grid.size());
    w[0] = 0.0;
    for (std::size_t i = 0; i < grid.steps(); ++i)
        w[i + 1] = w[i] + std::sqrt(grid.step(i)) * normal(i);
    return NoisePath(grid, NoiseKind::brownian, std::move(w), {}, seed, stream);
}

/// S_t = exp(-t/2 + W_t), keeping W as the underlying path.
inline NoisePath to_geometric(const NoisePath& path) {
    if (path.kind() != NoiseKind::brownian)
        throw KindError("to_geometric expects a brownian path");
    const auto& grid = path.grid();
    std::vector<double> s(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        s[i] = std::exp(-0.5 * grid[i] + path[i]);
    s[0] = 1.0;
    std::vector<double> w(path.values().begin(), path.values().end());
    return NoisePath(grid, NoiseKind::geometric_brownian, std::move(s), std::move(w), path.seed(),
                     path.stream());
}

/// Brownian-bridge refinement onto a grid `factor` times finer.
///
/// Coarse nodes are copied bit for bit. Interior nodes are drawn sequentially,
/// each conditioned on the previous fine node and the next coarse node.
inline NoisePath bridge_refine(const NoisePath& path, std::size_t factor) {
    if (path.kind() != NoiseKind::brownian)
        throw KindError("bridge_refine expects a brownian path");
    if (factor < 2)
        throw ArgumentError("refinement factor must be at least 2");
    const auto& coarse = path.grid();
    if (!coarse.is_uniform())
        throw GridError("bridge_refine needs a uniform grid");

    const std::size_t fine_steps = coarse.steps() * factor;
    TimeGrid fine = TimeGrid::uniform_steps(coarse.horizon(), fine_steps);
    const CounterNormal normal(path.seed() ^ detail::splitmix64(0xb1d9e5ULL + fine_steps), path.stream());

    std::vector<double> w(fine.size());
    for (std::size_t i = 0; i < coarse.steps(); ++i) {
        const std::size_t base = i * factor;
        const double t_end = fine[base + factor];
        const double w_end = path[i + 1];
        w[base] = path[i];
        for (std::size_t k = 1; k < factor; ++k) {
            const std::size_t j = base + k;
            const double s_prev = fine[j - 1];
            const double s = fine[j];
            const double span = t_end - s_prev;
            const double mean = w[j - 1] + (s - s_prev) / span * (w_end - w[j - 1]);
            const double var = (s - s_prev) * (t_end - s) / span;
            w[j] = mean + std::sqrt(var) * normal(j);
        }
    }
    w.back() = path.values().back();
    return NoisePath(std::move(fine), NoiseKind::brownian, std::move(w), {}, path.seed(), path.stream());
}

// ---------------------------------------------------------------------------
// Path functionals

enum class FunctionalKind { exp_of_path, exp_of_exp_path };

/// Cumulative integral I(t_i) of a positive integrand along a path.
class PathFunctional {
public:
    PathFunctional(TimeGrid grid, FunctionalKind kind, std::vector<double> cumulative)
        : grid_(std::move(grid)), kind_(kind), cumulative_(std::move(cumulative)) {
        if (cumulative_.size() != grid_.size())
            throw GridError("functional values do not match the grid");
    }

    const TimeGrid& grid() const noexcept { return grid_; }
    FunctionalKind kind() const noexcept { return kind_; }
    std::span<const double> cumulative() const noexcept { return cumulative_; }
    double operator[](std::size_t i) const noexcept { return cumulative_[i]; }
    double value_at(double t) const noexcept { return interpolate(grid_, cumulative_, t); }

private:
    TimeGrid grid_;
    FunctionalKind kind_;
    std::vector<double> cumulative_;
};

/// Trapezoidal running integral of exp(W_s) (nested = false) or exp(S_s) with
/// S = exp(-s/2 + W_s) (nested = true).
///
/// For geometric paths the brownian component is used when nested is false;
/// for brownian or zero paths the geometric transform is applied when nested is true.
inline PathFunctional path_integral_exp(const NoisePath& path, bool nested) {
    const auto& grid = path.grid();
    std::vector<double> integrand(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!nested)
            integrand[i] = std::exp(path.brownian(i));
        else if (path.kind() == NoiseKind::geometric_brownian)
            integrand[i] = std::exp(path[i]);
        else
            integrand[i] = std::exp(std::exp(-0.5 * grid[i] + path[i]));
    }
    std::vector<double> cumulative(grid.size());
    cumulative[0] = 0.0;
    for (std::size_t i = 0; i < grid.steps(); ++i)
        cumulative[i + 1] = cumulative[i] + 0.5 * grid.step(i) * (integrand[i] + integrand[i + 1]);
    return PathFunctional(grid, nested ? FunctionalKind::exp_of_exp_path : FunctionalKind::exp_of_path,
                          std::move(cumulative));
}

} // namespace stochar
