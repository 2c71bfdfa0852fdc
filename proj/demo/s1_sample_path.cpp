// One Brownian sample path for the perturbed LWR problem with g(x) = 1 - x:
// integrate the characteristics, rebuild u(x, t), and compare a few columns
// against the explicit solution.

#include <algorithm>
#include <cstdio>

#include "stochar/stochar.hpp"

int main() {
    using namespace stochar;
    const Scenario s = scenario_by_name("s1");
    const TimeGrid grid = TimeGrid::uniform(s.horizon, 1e-3);
    const NoisePath w = sample_brownian(7, grid);
    const auto fan = integrate_fan(s, w, linspace(0.0, 1.0, 801));
    const auto xs = linspace(0.0, 1.0, 11);
    const auto surf = build_surface(fan, xs, s.ic);
    const auto& entry = lookup("S1");

    std::printf("tau_inv = %g\n", fan.tau_inv());
    const double t_show = std::min(fan.tau(), s.horizon) / 2;
    const std::size_t mid = grid.interval(t_show);
    std::printf("t = %g\n%6s %8s %12s %12s %12s\n", grid[mid], "x", "sigma", "u(x,t)", "exact", "sigma exact");
    for (std::size_t j = 0; j < xs.size(); ++j) {
        if (!surf.valid(mid, j)) {
            std::printf("%6.2f %8.3f %12s\n", xs[j], surf.sigma(j), "-");
            continue;
        }
        const double exact = evaluate(entry, xs[j], grid[mid], w);
        std::printf("%6.2f %8.3f %12.6f %12.6f %12.3f\n", xs[j], surf.sigma(j), surf.u(mid, j), exact,
                    closed_form_sigma(entry, xs[j], w));
    }
}
