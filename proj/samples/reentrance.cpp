// Reentrant parity at 2 eps/pi = 4 Gamma, pi T = 10 Gamma/2: start at g(t_r) and watch
// the parity come back at t_r, while the Markov-only approximation relaxes monotonically.
#include <cstdio>

#include "reslevel/diagnostics.hpp"
#include "reslevel/figures.hpp"

int main()
{
    using namespace reslevel;
    const ModelParams p = figure_params(4.0, 10.0);
    const double p0 = g_of_t(p, 2.0);
    DensityMatrix rho0;
    rho0.parity = p0;

    std::printf("initial parity %.10f, g(inf) %.10f\n", p0, g_stationary(p));
    if (const auto tr = reentrance_time(p, p0)) {
        std::printf("first reentrance at t = %.10f\n", *tr);
    }
    for (double te : extrema_times(p, p0, 2.0)) {
        std::printf("extremum at t = %.6f (parity crosses h), curvature %.3e\n", te, extremum_curvature(p, te));
    }
    std::printf("%6s %14s %14s %14s\n", "t", "parity", "markov_only", "h");
    for (int i = 0; i <= 16; ++i) {
        const double t = 0.25 * i;
        std::printf("%6.2f %14.10f %14.10f %14.10f\n", t, evolve_state(p, rho0, t).parity,
                    markov_only(p, rho0, t).parity, t == 0.0 ? 0.0 : h_of_t(p, t));
    }
}
