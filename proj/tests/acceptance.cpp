// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "stochar/stochar.hpp"

using namespace stochar;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. zero-path surfaces against the deterministic closed forms
Outcome deterministic_reduction() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    bool ok = true;
    for (auto [id, T] : {std::pair{"D1", 1.0}, {"D2", 1.0}, {"D3", 0.45}, {"D4", 0.45}}) {
        CrossValidationOptions opt;
        opt.horizon = T;
        opt.tolerance = 1e-6;
        const auto rep = cross_validate(lookup(id), 1, 1e-3, 101, opt);
        ok = ok && rep.passed();
        worst = std::max(worst, rep.sup_error);
    }
    const double secs = seconds_since(t0);
    return {ok && secs < 5.0, "max sup error " + fmt(worst) + " (<= 1e-6), " + fmt(secs) + " s (< 5 s)"};
}

// 2. catalog-wide residual identity and fault sensitivity
Outcome residual_identity() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    bool ok = true;
    for (const auto& c : catalog()) {
        const auto rep = sweep_residuals(c, 1000, 1);
        ok = ok && rep.passed() && rep.probes == 1000;
        worst = std::max(worst, rep.max_residual);
    }
    const double secs = seconds_since(t0);
    double weakest = infinity;
    for (const auto& c : catalog()) {
        const auto rep = sweep_residuals(with_offset(c, 1e-6), 1000, 1);
        weakest = std::min(weakest, rep.max_residual);
    }
    ok = ok && weakest > 1e-8 && secs < 5.0;
    return {ok, "max residual " + fmt(worst) + " (<= 1e-9) in " + fmt(secs) + " s; weakest fault signal " +
                    fmt(weakest) + " (> 1e-8)"};
}

// 3. node-exact flow for the Brownian conservation case
Outcome node_exact_flow() {
    const auto s = scenario_by_name("s1");
    const auto x0 = linspace(0.0, 1.0, 101);
    double flow_err = 0.0, sup = 0.0;
    std::size_t checked = 0, past_explosion = 0;
    bool ok = true;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto w = sample_brownian(seed, TimeGrid::uniform(s.horizon, 1e-3));
        const auto fan = integrate_fan(s, w, x0);
        for (std::size_t n = 0; n < fan.times(); ++n)
            for (std::size_t i = 0; i < fan.points(); ++i) {
                // the slope chi passes through a pole only after the fan folds
                if (!fan.alive(n, i)) {
                    ok = ok && fan.grid()[n] > fan.tau_inv();
                    ++past_explosion;
                    continue;
                }
                ++checked;
                const double x = x0[i];
                const double exact = x + (1 - 2 * s.ic(x)) * (w.grid()[n] + w[n]);
                flow_err = std::max(flow_err, std::abs(fan.xi(n, i) - exact));
            }
        const auto rep = cross_validate(lookup("S1"), seed, 1e-3, 101);
        ok = ok && rep.passed();
        sup = std::max(sup, rep.sup_error);
    }
    ok = ok && flow_err <= 1e-12;
    return {ok, "node error " + fmt(flow_err) + " (<= 1e-12) at " + std::to_string(checked) + " live nodes (" +
                    std::to_string(past_explosion) + " after post-fold explosion); surface sup error " + fmt(sup) +
                    " (<= 1e-4)"};
}

// 4. geometric driver with W = 0
Outcome geometric_frozen() {
    CrossValidationOptions opt;
    opt.frozen = true;
    const auto rep = cross_validate(lookup("S2"), 1, 1e-3, 101, opt);
    const auto path = to_geometric(sample_brownian(1, TimeGrid::uniform(1.0, 1e-3)));
    bool exact = true;
    for (double x : linspace(0.0, 1.0, 101))
        exact = exact && evaluate(lookup("S2"), x, 0.0, path) == 1.0 - x * x;
    return {rep.passed() && rep.compared > 0 && exact,
            "sup error " + fmt(rep.sup_error) + " (<= 1e-4) over " + std::to_string(rep.compared) +
                " points; t = 0 branch exact: " + (exact ? "yes" : "no")};
}

// 5. stopping times
Outcome stopping_times_match() {
    const double dt = 1e-3;
    const auto d3 = scenario_by_name("d3", 1.0);
    const auto fan3 = integrate_fan(d3, zero_path(TimeGrid::uniform(1.0, dt)), linspace(0.0, 1.0, 101));
    const double tau = detect_tau_inv(fan3);
    bool ok = std::abs(tau - 0.5) <= 2 * dt;

    const auto s1 = scenario_by_name("s1");
    double worst = 0.0;
    int finite = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto w = sample_brownian(seed, TimeGrid::uniform(s1.horizon, dt));
        const auto fan = integrate_fan(s1, w, linspace(0.0, 1.0, 201));
        for (double y : linspace(0.0, 1.0, 11)) {
            const double a = estimate_sigma(fan, y), b = closed_form_sigma(lookup("S1"), y, w);
            if (std::isinf(a) || std::isinf(b)) {
                ok = ok && a == b;
                continue;
            }
            ++finite;
            worst = std::max(worst, std::abs(a - b));
        }
    }
    ok = ok && worst <= 2 * dt;
    return {ok, "tau_inv(d3) = " + fmt(tau) + "; sigma disagreement " + fmt(worst) + " (<= 2 dt) over " +
                    std::to_string(finite) + " finite pairs"};
}

// 6. zero-noise algebraic reductions
Outcome zero_noise_reductions() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    int n1 = 0, n2 = 0;
    const PathState zero{};
    for (int k = 0; k < 1000; ++k) {
        const double x = unit(rng), t = unit(rng);
        if (lookup("S1").valid(x, t, zero) && lookup("D1").valid(x, t, zero)) {
            worst = std::max(worst, std::abs(lookup("S1").evaluate(x, t, zero) - lookup("D1").evaluate(x, t, zero)));
            ++n1;
        }
        const PathState frozen{0.0, t}; // W = 0: integral of exp(W) is t
        if (lookup("B2").valid(x, t, frozen) && lookup("D3").valid(x, t, zero)) {
            worst = std::max(worst, std::abs(lookup("B2").evaluate(x, t, frozen) - lookup("D3").evaluate(x, t, zero)));
            ++n2;
        }
    }
    return {worst <= 1e-12 && n1 > 0 && n2 > 0, "max difference " + fmt(worst) + " (<= 1e-12) over " +
                                                     std::to_string(n1) + " + " + std::to_string(n2) + " points"};
}

// 7. first-order pathwise convergence for multiplicative noise
Outcome convergence() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto table = convergence_study(lookup("B2"), 1, {4e-3, 2e-3, 1e-3});
    const double secs = seconds_since(t0);
    std::string errors;
    for (const auto& row : table.rows)
        errors += (errors.empty() ? "" : "/") + fmt(row.error);
    return {table.passed() && secs < 30.0, "errors " + errors + ", ratios " + fmt(table.ratios[0]) + " " +
                                               fmt(table.ratios[1]) + " (>= 1.5), " + fmt(secs) + " s (< 30 s)"};
}

// 8. eta constant under conservation-form noise
Outcome conservation_constancy() {
    double worst = 0.0;
    for (const char* name : {"s1", "s2", "b3", "g3"}) {
        const auto s = scenario_by_name(name);
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto w = sample_brownian(seed, TimeGrid::uniform(s.horizon, 1e-3));
            const auto path = s.noise() == NoiseKind::geometric_brownian ? to_geometric(w) : w;
            const auto fan = integrate_fan(s, path, linspace(s.fan_lo, s.fan_hi, 101));
            for (std::size_t i = 0; i < fan.points(); ++i)
                for (std::size_t n = 0; n < fan.death(i); ++n)
                    worst = std::max(worst, std::abs(fan.eta(n, i) - s.ic(fan.x0()[i])));
        }
    }
    return {worst <= 1e-12, "max |eta - g| " + fmt(worst) + " (<= 1e-12)"};
}

// 9. Brownian increment variance
Outcome increment_variance() {
    const auto t0 = std::chrono::steady_clock::now();
    const double dt = 0.01;
    const auto grid = TimeGrid::uniform(1.0, dt);
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (std::uint64_t p = 0; p < 100000; ++p) {
        const auto w = sample_brownian(9, grid, p);
        const double d = w[1] - w[0];
        sum += d;
        sum2 += d * d;
        ++n;
    }
    const double mean = sum / n;
    const double var = (sum2 - n * mean * mean) / (n - 1);
    const double secs = seconds_since(t0);
    const double rel = std::abs(var / dt - 1);
    return {rel <= 0.05 && secs < 10.0,
            "variance " + fmt(var) + " vs dt " + fmt(dt) + " (rel " + fmt(rel) + " <= 5%), " + fmt(secs) + " s"};
}

} // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"deterministic reduction", deterministic_reduction},
        {"residual identity, catalog-wide", residual_identity},
        {"node-exact stochastic flow", node_exact_flow},
        {"geometric driver with W = 0", geometric_frozen},
        {"stopping times", stopping_times_match},
        {"zero-noise reductions", zero_noise_reductions},
        {"pathwise convergence", convergence},
        {"conservation-form constancy", conservation_constancy},
        {"increment variance", increment_variance},
    };
    int failed = 0;
    int k = 0;
    for (const auto& [name, check] : criteria) {
        ++k;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d [%s]: %s - %s\n", k, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d/%d criteria passed\n", k - failed, k);
    return failed == 0 ? 0 : 1;
}
