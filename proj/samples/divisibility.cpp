// CP-divisibility of the three regimes, with the Choi spectrum of a short divisor
// inside the first |h| > 1 window.
#include <cstdio>

#include "reslevel/choi_kraus.hpp"
#include "reslevel/diagnostics.hpp"
#include "reslevel/figures.hpp"

int main()
{
    using namespace reslevel;
    struct Case {
        const char* label;
        ModelParams p;
    };
    const Case cases[] = {{"eps = 0", figure_params(0.0, 1.0)},
                          {"2eps/pi = 4, piT = 20 Gamma/2", figure_params(4.0, 20.0)},
                          {"2eps/pi = 20, piT = 1e-3 Gamma/2", figure_params(20.0, 1e-3)}};
    for (const Case& c : cases) {
        const KernelCache cache(c.p, 10.0);
        const DivisibilityReport r = classify_divisibility(cache);
        std::printf("%-34s %-15s sup|h| = %.6f\n", c.label, std::string(to_string(r.regime)).c_str(), r.h_max);
        for (const Interval& w : r.forbidden_windows()) {
            std::printf("    |h| > 1 on [%.6f, %.6f]\n", w.lo, w.hi);
        }
        if (r.regime == Regime::non_cp_divisible) {
            const double t = r.witnesses.front();
            const double m = cp_minimum(choi_of(divisor(c.p, t, t - 1e-6, cache)));
            std::printf("    min Choi eigenvalue of Pi(t, t - 1e-6) at t = %.6f: %.3e\n", t, m);
            std::printf("    min Choi eigenvalue of Pi(t) there: %.3e\n",
                        cp_minimum(choi_of(propagator_closed(c.p, t, cache.g(t)))));
        }
    }
}
