// System and effective-environment entropies for three initial parities; the mismatch
// approaches 2 S(rho(0)) once the environment factorizes into rho(inf) x rho(0).
#include <cstdio>

#include "reslevel/env_info.hpp"
#include "reslevel/figures.hpp"

int main()
{
    using namespace reslevel;
    const ModelParams p = figure_params(4.0, 1e-3);
    for (double p0 : {-0.5, 0.0, 0.4}) {
        DensityMatrix rho0;
        rho0.parity = p0;
        const double s0 = entropy(rho0.eigenvalues());
        std::printf("parity(0) = %+.1f, S(rho(0)) = %.6f bits\n", p0, s0);
        std::printf("%6s %10s %10s %10s %10s %10s\n", "t", "S_sys", "S_env+", "S_env-", "I_c", "mismatch");
        for (double t : {0.0, 0.25, 0.5, 1.0, 2.0, 5.0, 40.0}) {
            const InfoMeasures m = info_measures(p, t, rho0);
            std::printf("%6.2f %10.6f %10.6f %10.6f %10.6f %10.6f\n", t, m.s_sys, m.s_env_plus, m.s_env_minus,
                        m.coherent_information, m.mismatch);
        }
    }
}
