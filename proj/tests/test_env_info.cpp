#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "reslevel/env_info.hpp"

using namespace reslevel;

namespace {

ModelParams figure(double two_eps_over_pi, double pi_t_over_half_gamma, double mu = 0.0)
{
    ModelParams p;
    p.gamma_coupling = 1.0;
    p.mu = mu;
    p.epsilon_level = mu + two_eps_over_pi * pi / 2.0;
    p.temperature = pi_t_over_half_gamma * 0.5 / pi;
    return p;
}

std::vector<ModelParams> param_sets()
{
    return {figure(20.0, 1e-3), figure(4.0, 10.0), figure(4.0, 1e-3, 0.3), figure(-2.0, 1.0),
            figure(0.5, 20.0)};
}

// rho^E'_{mm'} = Tr K_m rho K_m'^dagger for any Kraus set, straight from the definition.
Mat4 env_direct(const std::array<Mat2, 4>& ks, const Mat2& rho)
{
    Mat4 m;
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) {
            m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                (ks[a] * rho * ks[b].adjoint()).trace();
        }
    }
    return m;
}

Eigen::Vector4d spectrum(const Mat4& m)
{
    return Eigen::SelfAdjointEigenSolver<Mat4>(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly)
        .eigenvalues();
}

double lam(double parity, int eta) { return 0.5 * (1.0 + eta * parity); }

}  // namespace

TEST(Entropy, ReferenceValues)
{
    EXPECT_EQ(binary_entropy(1.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(binary_entropy(0.5, 0.5), 1.0);
    EXPECT_NEAR(binary_entropy(0.25, 0.75), 0.8112781244591328, 1e-15);
    const std::array<double, 4> quarter{0.25, 0.25, 0.25, 0.25};
    EXPECT_DOUBLE_EQ(entropy(quarter), 2.0);
}

TEST(Entropy, ClampsRoundingDustAndRejectsNegativity)
{
    EXPECT_EQ(binary_entropy(1.0, -5e-13), 0.0);
    EXPECT_THROW((void)binary_entropy(1.1, -0.1), CpViolationError);
    const std::array<double, 2> bad{std::nan(""), 1.0};
    EXPECT_THROW((void)entropy(bad), CpViolationError);
}

TEST(EnvState, PureAtInitialTime)
{
    const DensityMatrix rho0{0.4, {}};
    const EnvState env = env_state(figure(4.0, 1.0), 0.0, rho0);
    Mat4 want = Mat4::Zero();
    want(0, 0) = 1.0;
    EXPECT_LT(max_norm(env.matrix - want), 1e-15);
}

TEST(EnvState, ClosedBlocksMatchDirectTrace)
{
    for (const ModelParams& p : param_sets()) {
        for (double t : {0.05, 0.8, 3.0, 15.0}) {
            const double g = g_of_t(p, t);
            const KrausSet k = kraus_closed_form(p, t, g);
            for (double p0 : {-1.0, -0.3, 0.0, 0.6, 1.0}) {
                const DensityMatrix rho0{p0, {}};
                const Mat4 direct = env_direct(k.operators, rho0.matrix());
                EXPECT_LT(max_norm(env_state(p, t, rho0, g).matrix - direct), 1e-14) << t << " " << p0;
            }
        }
    }
}

TEST(EnvState, SpinModeMatchesDirectTrace)
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const ModelParams& p : param_sets()) {
        for (double t : {0.3, 2.0}) {
            const double g = g_of_t(p, t);
            const KrausSet k = kraus_closed_form(p, t, g);
            for (int i = 0; i < 5; ++i) {
                DensityMatrix rho0{u(rng), complex{0.5 * u(rng), 0.5 * u(rng)}};
                const double b = std::sqrt(rho0.bloch_norm_squared());
                if (b > 1.0) {
                    rho0.parity /= b;
                    rho0.field /= b;
                }
                const Mat4 direct = env_direct(k.operators, rho0.matrix());
                const EnvState env = env_state(p, t, rho0, g, Mode::spin);
                EXPECT_LT(max_norm(env.matrix - direct), 1e-14);
                EXPECT_NEAR(std::abs(env.matrix.trace() - 1.0), 0.0, 1e-14);
            }
        }
    }
}

TEST(EnvState, SpectrumIsKrausGaugeInvariant)
{
    const ModelParams p = figure(4.0, 1e-3);
    const DensityMatrix rho0{0.2, complex{0.1, 0.3}};
    for (double t : {0.5, 4.0}) {
        const KrausSet num = kraus_from_choi(choi_of(propagator_closed(p, t)));
        const Eigen::Vector4d a = spectrum(env_direct(num.operators, rho0.matrix()));
        const Eigen::Vector4d b = env_state(p, t, rho0, Mode::spin).eigenvalues();
        EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(EnvState, FermionModeHasZeroOffBlocks)
{
    const EnvState env = env_state(figure(20.0, 1e-3), 1.1, DensityMatrix{0.5, {}});
    EXPECT_EQ((env.matrix.topRightCorner<2, 2>().cwiseAbs().maxCoeff()), 0.0);
    EXPECT_EQ((env.matrix.bottomLeftCorner<2, 2>().cwiseAbs().maxCoeff()), 0.0);
    EXPECT_EQ(env.matrix(2, 3), complex{});
    EXPECT_THROW((void)env_state(figure(4.0, 1.0), 1.0, DensityMatrix{0.0, complex{0.1, 0.0}}),
                 DomainError);
    EXPECT_THROW((void)env_state(figure(4.0, 1.0), 1.0, DensityMatrix{1.2, {}}), DomainError);
}

TEST(EnvState, StationaryLimitFactorizes)
{
    for (const ModelParams& p : {figure(4.0, 1.0), figure(-4.0, 1e-3), figure(20.0, 1e-3)}) {
        for (double p0 : {-0.8, 0.0, 0.5}) {
            const DensityMatrix rho0{p0, {}};
            const Mat4 prod = env_stationary_product(p, rho0);
            EXPECT_LT(max_norm(env_state(p, 40.0, rho0).matrix - prod), 1e-3);
            // the products are rho(inf) (x) rho(0) eigenvalue pairs
            std::vector<double> want;
            const double ginf = g_stationary(p);
            for (int a : {+1, -1}) {
                for (int b : {+1, -1}) {
                    want.push_back(lam(p0, a) * lam(ginf, b));
                }
            }
            std::vector<double> got{prod(0, 0).real(), prod(1, 1).real(), prod(2, 2).real(),
                                    prod(3, 3).real()};
            std::sort(want.begin(), want.end());
            std::sort(got.begin(), got.end());
            for (std::size_t i = 0; i < 4; ++i) {
                EXPECT_NEAR(got[i], want[i], 1e-15);
            }
        }
    }
    EXPECT_THROW((void)env_stationary_product(figure(0.0, 1.0), DensityMatrix{}), DomainError);
}

TEST(ModeSpectra, ProductsReproduceBlockEigenvalues)
{
    for (const ModelParams& p : param_sets()) {
        for (double t : {0.05, 1.0, 6.0, 40.0}) {
            for (double p0 : {-1.0, -0.4, 0.0, 0.7, 1.0}) {
                const DensityMatrix rho0{p0, {}};
                const double g = g_of_t(p, t);
                const ModeSpectra f = env_mode_spectra(p, t, rho0, g);
                const EnvState env = env_state(p, t, rho0, g);
                const Mat2 even = env.matrix.topLeftCorner<2, 2>();
                const Eigen::Vector2d ev =
                    Eigen::SelfAdjointEigenSolver<Mat2>(even, Eigen::EigenvaluesOnly).eigenvalues();
                EXPECT_NEAR(f.even(+1), ev(1), 1e-12);
                EXPECT_NEAR(f.even(-1), ev(0), 1e-12);
                EXPECT_NEAR(f.odd(+1), env.matrix(2, 2).real(), 1e-12);
                EXPECT_NEAR(f.odd(-1), env.matrix(3, 3).real(), 1e-12);
                EXPECT_NEAR(f.even(+1) * f.even(-1), f.odd(+1) * f.odd(-1), 1e-12);
                // eta labels come from the formula; they are ordered only while
                // 1 - tau + 2 p g tau >= 0 (always true for p g >= 0)
                const double tau = std::tanh(0.5 * t);
                const bool ordered = 1.0 - tau + 2.0 * p0 * g * tau >= 0.0;
                for (int l : {+1, -1}) {
                    EXPECT_NEAR(f.at(l, +1) + f.at(l, -1), 1.0, 1e-15);
                    if (ordered) {
                        EXPECT_GE(f.at(l, +1), f.at(l, -1) - 1e-15);
                    }
                }
            }
        }
    }
}

TEST(ModeSpectra, PureAtInitialTime)
{
    const ModeSpectra f = env_mode_spectra(figure(4.0, 1.0), 0.0, DensityMatrix{0.3, {}});
    for (int l : {+1, -1}) {
        EXPECT_EQ(f.at(l, +1), 1.0);
        EXPECT_EQ(f.at(l, -1), 0.0);
    }
}

TEST(ModeSpectra, PureInitialStateLocksOneMode)
{
    const ModelParams p = figure(4.0, 1e-3);
    for (double sigma : {+1.0, -1.0}) {
        const DensityMatrix rho0{sigma, {}};
        const int s = sigma > 0 ? 1 : -1;
        for (double t : {0.3, 2.0, 9.0}) {
            const ModeSpectra f = env_mode_spectra(p, t, rho0);
            const double pt = evolve_state(p, rho0, t).parity;
            for (int eta : {+1, -1}) {
                EXPECT_NEAR(f.at(s, eta), lam(sigma, s * eta), 1e-14);
                EXPECT_NEAR(f.at(-s, eta), lam(pt, s * eta), 1e-12);
            }
        }
    }
}

TEST(ModeSpectra, CrossedBoundsOnSystemSpectrum)
{
    for (const ModelParams& p : param_sets()) {
        for (double t : {0.1, 1.0, 4.0, 20.0}) {
            for (double p0 : {-0.9, -0.2, 0.0, 0.5, 1.0}) {
                const DensityMatrix rho0{p0, {}};
                const ModeSpectra f = env_mode_spectra(p, t, rho0);
                const double pt = evolve_state(p, rho0, t).parity;
                for (int l : {+1, -1}) {
                    EXPECT_LE(f.at(l, -1), lam(pt, l) + 1e-14);
                    EXPECT_LE(lam(pt, l), f.at(-l, +1) + 1e-14);
                }
            }
        }
    }
}

TEST(ModeSpectra, PositiveIffGBounded)
{
    const ModelParams p = figure(4.0, 1.0);
    for (double g : {-1.3, -1.0, -0.5, 0.0, 0.8, 1.0, 1.1}) {
        for (double p0 : {-0.5, 0.3}) {
            const ModeSpectra f = env_mode_spectra(p, 1.5, DensityMatrix{p0, {}}, g);
            double worst = 1.0;
            for (int eta : {+1, -1}) {
                worst = std::min({worst, f.even(eta), f.odd(eta)});
            }
            EXPECT_EQ(worst >= -1e-14, std::abs(g) <= 1.0) << g << " " << p0;
        }
    }
}

TEST(ModeSpectra, OffResonantLimitPinsOneModeToStationarySpectrum)
{
    ModelParams p;
    p.epsilon_level = 1e5;
    p.temperature = 0.1;
    const DensityMatrix rho0{-0.3, {}};
    const double ginf = g_stationary(p);
    ASSERT_GT(ginf, 0.9999);
    for (double t : {0.2, 1.0}) {
        const ModeSpectra f = env_mode_spectra(p, t, rho0);
        // sigma = +: mode - carries rho(inf) at once
        EXPECT_NEAR(f.at(-1, +1), lam(ginf, +1), 1e-4) << t;
    }
    const ModeSpectra late = env_mode_spectra(p, 40.0, rho0);
    EXPECT_NEAR(late.at(+1, +1), lam(rho0.parity, +1), 1e-4);
    EXPECT_NEAR(late.at(+1, -1), lam(rho0.parity, -1), 1e-4);
}

TEST(ModeSpectra, SpinModeUnsupported)
{
    EXPECT_THROW((void)env_mode_spectra(figure(4.0, 1.0), 1.0, DensityMatrix{}, Mode::spin),
                 UnsupportedModeError);
}

TEST(InfoMeasures, PureStatesCarryNoCoherentInformation)
{
    for (const ModelParams& p : param_sets()) {
        for (double p0 : {-1.0, 1.0}) {
            for (double t : {0.0, 0.1, 1.0, 5.0, 40.0}) {
                const InfoMeasures m = info_measures(p, t, DensityMatrix{p0, {}});
                EXPECT_LT(std::abs(m.coherent_information), 1e-10) << t;
            }
        }
    }
}

TEST(InfoMeasures, MismatchBoundsAndStationaryValue)
{
    for (const ModelParams& p : param_sets()) {
        for (double p0 : {-0.8, -0.1, 0.0, 0.45, 0.9}) {
            const DensityMatrix rho0{p0, {}};
            const double s0 = entropy(rho0.eigenvalues());
            for (double t : {0.0, 0.05, 0.5, 2.0, 8.0, 40.0}) {
                const InfoMeasures m = info_measures(p, t, rho0);
                EXPECT_GE(m.mismatch, -1e-12);
                EXPECT_LE(m.mismatch, 2.0 * s0 + 1e-12);
                EXPECT_NEAR(m.s_env, m.s_env_plus + m.s_env_minus, 1e-15);
            }
            EXPECT_NEAR(info_measures(p, 40.0, rho0).mismatch, 2.0 * s0, 1e-3);
        }
    }
}

TEST(InfoMeasures, SpinModeAgreesWithFermionModeWithoutField)
{
    const ModelParams p = figure(4.0, 1.0);
    const DensityMatrix rho0{0.35, {}};
    for (double t : {0.4, 3.0}) {
        const InfoMeasures a = info_measures(p, t, rho0);
        const InfoMeasures b = info_measures(p, t, rho0, Mode::spin);
        EXPECT_NEAR(a.s_env, b.s_env, 1e-12);
        EXPECT_NEAR(a.coherent_information, b.coherent_information, 1e-12);
    }
    const InfoMeasures c = info_measures(p, 1.0, DensityMatrix{0.1, complex{0.2, 0.1}}, Mode::spin);
    EXPECT_TRUE(std::isfinite(c.s_env));
    EXPECT_TRUE(std::isnan(c.s_env_plus));
}

TEST(SpinMode, SchurComplementMatchesEigenvalues)
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> scale(0.0, 3.0);
    const ModelParams p = figure(4.0, 1e-3);
    int negative = 0;
    for (int i = 0; i < 300; ++i) {
        DensityMatrix rho0{u(rng), complex{0.5 * u(rng), 0.5 * u(rng)}};
        const double b = std::sqrt(rho0.bloch_norm_squared());
        if (b > 1.0) {
            rho0.parity /= b;
            rho0.field /= b;
        }
        EnvState env = env_state(p, 0.2 + 3.0 * (i % 7) / 7.0, rho0, Mode::spin);
        EXPECT_TRUE(env_positive_by_schur(env));
        // inflate the off-diagonal blocks to produce some non-positive matrices
        const double s = scale(rng);
        env.matrix.topRightCorner<2, 2>() *= s;
        env.matrix.bottomLeftCorner<2, 2>() *= s;
        const bool eig_positive = env.eigenvalues().minCoeff() >= -1e-12;
        EXPECT_EQ(env_positive_by_schur(env), eig_positive) << i;
        negative += eig_positive ? 0 : 1;
    }
    EXPECT_GT(negative, 10);
}
