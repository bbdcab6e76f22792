#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "reslevel/kernels.hpp"
#include "reslevel/liouville.hpp"

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

std::vector<ModelParams> parameter_grid()
{
    std::vector<ModelParams> out;
    for (double eps : {0.0, 0.5, 2.0 * pi, 10.0 * pi}) {
        for (double piT : {1e-3, 1.0, 10.0, 20.0}) {
            ModelParams p;
            p.mu = 0.3;
            p.epsilon_level = p.mu + eps;
            p.temperature = piT * 0.5 / pi;
            out.push_back(p);
        }
    }
    return out;
}

// Hand expansion of L_+ and L_- on {1/sqrt2, d^dagger, d, (-1)^n/sqrt2}.
Mat4 l_plus_expected()
{
    Mat4 m = Mat4::Zero();
    m(1, 1) = m(2, 2) = -0.5;
    m(3, 0) = -1.0;
    m(3, 3) = -1.0;
    return m;
}

Mat4 l_minus_expected()
{
    Mat4 m = Mat4::Zero();
    m(1, 1) = m(2, 2) = -0.5;
    m(3, 0) = 1.0;
    m(3, 3) = -1.0;
    return m;
}

// Test-side -iL with L = [eps n, .] acting on d^dagger (coefficient -i eps) and d (+i eps).
Mat4 liouvillian_expected(double eps)
{
    Mat4 m = Mat4::Zero();
    m(1, 1) = complex{0.0, -eps};
    m(2, 2) = complex{0.0, eps};
    return m;
}

Mat4 expm_reference(const Mat4& x)
{
    return x.exp();
}

Mat2 random_operator(std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Mat2 x;
    for (int i = 0; i < 4; ++i) {
        x(i / 2, i % 2) = complex{n(rng), n(rng)};
    }
    return x;
}

double gamma_direct(const ModelParams& p, double s)
{
    const double eps = p.detuning();
    if (p.temperature == 0.0) {
        return 2.0 * std::sin(eps * s) / (pi * s);
    }
    return 2.0 * p.temperature * std::sin(eps * s) / std::sinh(pi * p.temperature * s);
}

}  // namespace

TEST(OperatorBasis, GramMatrixIsIdentity)
{
    const auto basis = operator_basis();
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const complex ip = (basis[static_cast<std::size_t>(i)].adjoint() *
                                basis[static_cast<std::size_t>(j)])
                                   .trace();
            EXPECT_NEAR(std::abs(ip - (i == j ? 1.0 : 0.0)), 0.0, 1e-15);
        }
    }
}

TEST(OperatorBasis, CoordinatesRoundTrip)
{
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const Mat2 x = random_operator(rng);
        EXPECT_LT((from_coords(to_coords(x)) - x).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Dissipator, MatchesHandExpansion)
{
    EXPECT_LT(max_norm(dissipator(+1).matrix - l_plus_expected()), 1e-15);
    EXPECT_LT(max_norm(dissipator(-1).matrix - l_minus_expected()), 1e-15);
}

TEST(Dissipator, NilpotentCombination)
{
    const Mat4 n = dissipator(+1).matrix - dissipator(-1).matrix;
    EXPECT_GT(max_norm(n), 0.5);
    EXPECT_LT(max_norm(n * n), 1e-15);
    EXPECT_LT(max_norm(nilpotent_direction() - n), 1e-15);
}

TEST(Dissipator, TraceRowAnnihilated)
{
    for (int eta : {+1, -1}) {
        EXPECT_LT((trace_row() * dissipator(eta).matrix).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Liouvillian, MatchesCommutator)
{
    const ModelParams p = figure(3.0, 1.0, 0.4);
    EXPECT_LT(max_norm(minus_i_liouvillian(p) - liouvillian_expected(p.epsilon_level)), 1e-15);
    const Mat2 n = ops::number();
    const Mat4 direct = superop_matrix([&](const Mat2& x) -> Mat2 {
        return complex{0.0, -p.epsilon_level} * (n * x - x * n);
    });
    EXPECT_LT(max_norm(minus_i_liouvillian(p) - direct), 1e-14);
}

TEST(Propagator, IdentityAtZero)
{
    const ModelParams p = figure(4.0, 10.0);
    EXPECT_LT(max_norm(propagator_closed(p, 0.0).matrix - Mat4::Identity()), 1e-15);
    EXPECT_LT(max_norm(propagator_exponential(p, 0.0).matrix - Mat4::Identity()), 1e-15);
}

TEST(Propagator, TracePreservingOnRandomOperators)
{
    std::mt19937_64 rng(11);
    for (const ModelParams& p : parameter_grid()) {
        for (double t : {0.1, 1.0, 7.0}) {
            const SuperOp pi_t = propagator_closed(p, t);
            for (int k = 0; k < 3; ++k) {
                const Mat2 x = random_operator(rng);
                EXPECT_NEAR(std::abs(pi_t.apply(x).trace() - x.trace()), 0.0, 1e-12);
            }
        }
    }
}

TEST(Propagator, LongTimeRankOneOntoStationaryState)
{
    const ModelParams p = figure(4.0, 1.0, -0.2);
    const double t = 60.0;
    DensityMatrix inf;
    inf.parity = g_stationary(p);
    const Mat4 want = to_coords(inf.matrix()) * trace_row();
    EXPECT_LT(max_norm(propagator_closed(p, t).matrix - want), 1e-9);
}

TEST(Propagator, ExponentialAgreesWithClosedForm)
{
    double worst = 0.0;
    for (const ModelParams& p : parameter_grid()) {
        for (int i = 0; i <= 12; ++i) {
            const double t = 30.0 * i / 12.0;
            const double g = t == 0.0 ? 0.0 : g_of_t(p, t);
            worst = std::max(worst, max_norm(propagator_exponential(p, t, g).matrix -
                                             propagator_closed(p, t, g).matrix));
        }
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(Propagator, ExponentialMatchesIndependentExpm)
{
    const ModelParams p = figure(2.0, 1.0, 0.7);
    for (double t : {0.3, 2.0, 9.0}) {
        const double g = g_of_t(p, t);
        const Mat4 x = (liouvillian_expected(p.epsilon_level) +
                        0.5 * p.gamma_coupling *
                            ((1.0 - g) * l_plus_expected() + (1.0 + g) * l_minus_expected())) *
                       t;
        EXPECT_LT(max_norm(propagator_exponential(p, t, g).matrix - expm_reference(x)), 1e-12) << t;
    }
}

TEST(Propagator, InfiniteTemperatureIsGkslSemigroup)
{
    ModelParams p = figure(4.0, 1.0);
    p.temperature = 1e6;
    const Mat4 gen = liouvillian_expected(p.epsilon_level) +
                     0.5 * p.gamma_coupling * (l_plus_expected() + l_minus_expected());
    for (double t : {0.5, 3.0}) {
        EXPECT_LT(max_norm(propagator_exponential(p, t).matrix - expm_reference(gen * t)), 1e-5);
    }
}

TEST(Divisor, FactorizesPropagator)
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    for (const ModelParams& p : {figure(20.0, 1e-3), figure(4.0, 10.0), figure(2.0, 1.0, 0.5)}) {
        const KernelCache cache(p, 20.0);
        double worst = 0.0;
        for (int i = 0; i < 30; ++i) {
            double a = u(rng);
            double b = u(rng);
            if (a < b) {
                std::swap(a, b);
            }
            const Mat4 lhs = propagator_closed(p, a, cache.g(a)).matrix;
            const Mat4 rhs = divisor(p, a, b, cache).matrix * propagator_closed(p, b, cache.g(b)).matrix;
            worst = std::max(worst, max_norm(lhs - rhs));
        }
        EXPECT_LT(worst, 1e-10);
    }
}

TEST(Divisor, ExponentialFormAgrees)
{
    const ModelParams p = figure(20.0, 1e-3);
    const KernelCache cache(p, 10.0);
    for (auto [t, tp] : {std::pair{5.0, 1.0}, std::pair{2.0, 1.95}, std::pair{9.0, 0.0}}) {
        EXPECT_LT(max_norm(divisor(p, t, tp, cache).matrix -
                           divisor_exponential(p, t, tp, cache).matrix),
                  1e-10);
    }
}

TEST(Divisor, TracePreservingAndLimits)
{
    const ModelParams p = figure(4.0, 1e-3);
    const KernelCache cache(p, 10.0);
    EXPECT_LT(max_norm(divisor(p, 6.0, 0.0, cache).matrix - propagator_closed(p, 6.0).matrix),
              1e-10);
    EXPECT_LT(max_norm(divisor(p, 4.0, 4.0, cache).matrix - Mat4::Identity()), 1e-15);
    for (auto [t, tp] : {std::pair{3.0, 1.0}, std::pair{8.0, 7.5}}) {
        const Eigen::RowVector4cd row = trace_row() * divisor(p, t, tp, cache).matrix;
        EXPECT_LT((row - trace_row()).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_THROW((void)divisor(p, 1.0, 2.0, cache), DomainError);
}

TEST(Divisor, SemigroupLimits)
{
    // eps = 0: g = h = 0 identically
    {
        ModelParams p = figure(0.0, 1.0, 0.5);
        const KernelCache cache(p, 10.0);
        EXPECT_LT(max_norm(divisor(p, 7.0, 3.0, cache).matrix - propagator_closed(p, 4.0).matrix),
                  1e-14);
    }
    // |eps|/T -> infinity: h and g jump to sign(eps)
    {
        ModelParams p;
        p.epsilon_level = 1e5;
        p.temperature = 0.1;
        const KernelCache cache(p, 3.0, 0.01);
        const double gap = max_norm(divisor(p, 3.0, 1.0, cache).matrix -
                                    propagator_closed(p, 2.0, g_of_t(p, 2.0)).matrix);
        EXPECT_LT(gap, 1e-5);
    }
}

TEST(Spectral, ReconstructsPropagatorAndGenerator)
{
    const ModelParams p = figure(4.0, 1e-3, 0.3);
    for (double t : {0.2, 1.5, 8.0}) {
        const double g = g_of_t(p, t);
        EXPECT_LT(max_norm(spectral_decomposition(p, t).reconstruct() -
                           propagator_closed(p, t, g).matrix),
                  1e-14);
        const double h = h_of_t(p, t);
        EXPECT_LT(max_norm(spectral_decomposition_tcl(p, h).reconstruct() -
                           tcl_generator_from_h(p, h).matrix),
                  1e-14);
    }
    EXPECT_THROW((void)spectral_decomposition(p, 0.0), DomainError);
}

TEST(Spectral, BiorthogonalAndComplete)
{
    const ModelParams p = figure(4.0, 10.0);
    for (double x : {-0.7, 0.0, 0.4, 1.3}) {
        const SpectralDecomposition sd = spectral_decomposition(p, 1.0, x);
        Mat4 completeness = Mat4::Zero();
        for (int k = 0; k < 4; ++k) {
            for (int l = 0; l < 4; ++l) {
                const complex ip = (sd.terms[static_cast<std::size_t>(k)].amplitude.adjoint() *
                                    sd.terms[static_cast<std::size_t>(l)].mode)
                                       .trace();
                EXPECT_NEAR(std::abs(ip - (k == l ? 1.0 : 0.0)), 0.0, 1e-15);
            }
            completeness += to_coords(sd.terms[static_cast<std::size_t>(k)].mode) *
                            to_coords(sd.terms[static_cast<std::size_t>(k)].amplitude).adjoint();
        }
        EXPECT_LT(max_norm(completeness - Mat4::Identity()), 1e-15);
    }
}

TEST(Spectral, EvolutionEigenvaluesExponentiateTclEigenvalues)
{
    const ModelParams p = figure(4.0, 1.0, -0.4);
    for (double t : {0.3, 2.0, 11.0}) {
        const auto sd = spectral_decomposition(p, t);
        const auto tcl = spectral_decomposition_tcl(p, h_of_t(p, t));
        for (std::size_t k = 0; k < 4; ++k) {
            EXPECT_LT(std::abs(sd.terms[k].eigenvalue - std::exp(tcl.terms[k].eigenvalue * t)),
                      1e-12);
        }
    }
}

TEST(Spectral, FixedPointIsInvariant)
{
    const ModelParams p = figure(20.0, 1e-3);
    for (double t : {0.5, 3.0, 12.0}) {
        const auto sd = spectral_decomposition(p, t);
        const Mat2 m1 = sd.terms[0].mode;
        const Mat2 out = propagator_closed(p, t).apply(m1);
        EXPECT_LT((out - m1).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Spectral, FixedPointPositiveIffGBounded)
{
    const ModelParams p = figure(4.0, 1.0);
    for (double g : {-1.2, -1.0, -0.3, 0.0, 0.9, 1.0, 1.01}) {
        const Mat2 m1 = spectral_decomposition(p, 1.0, g).terms[0].mode;
        const Eigen::SelfAdjointEigenSolver<Mat2> es(m1);
        EXPECT_EQ(es.eigenvalues().minCoeff() >= -1e-15, std::abs(g) <= 1.0) << g;
    }
}

TEST(Inverse, UndoesPropagator)
{
    const ModelParams p = figure(4.0, 1.0);
    for (double t : {0.1, 5.0, 20.0}) {
        const double g = g_of_t(p, t);
        const Mat4 prod = propagator_inverse(p, t, g).matrix * propagator_closed(p, t, g).matrix;
        EXPECT_LT(max_norm(prod - Mat4::Identity()), 1e-12 * std::exp(p.gamma_coupling * t));
    }
    EXPECT_THROW((void)propagator_inverse(p, 61.0, 0.5), DomainError);
}

TEST(EvolveState, MatchesPropagatorAction)
{
    const ModelParams p = figure(4.0, 1e-3, 0.25);
    DensityMatrix rho0{0.3, complex{0.2, -0.1}};
    for (double t : {0.0, 0.7, 4.0}) {
        const DensityMatrix got = evolve_state(p, rho0, t);
        const Mat2 want = propagator_closed(p, t).apply(rho0.matrix());
        EXPECT_LT((got.matrix() - want).cwiseAbs().maxCoeff(), 1e-14) << t;
    }
}

TEST(EvolveState, StationaryInitialStateInSemigroupLimit)
{
    const ModelParams p = figure(0.0, 1.0);
    const DensityMatrix rho0{g_stationary(p), {}};
    for (double t : {0.5, 5.0}) {
        EXPECT_NEAR(evolve_state(p, rho0, t).parity, rho0.parity, 1e-15);
    }
}

TEST(EvolveState, ReentrantParityRevisitsInitialValue)
{
    const ModelParams p = figure(4.0, 10.0);
    const double t_r = 2.0;
    const DensityMatrix rho0{g_of_t(p, t_r), {}};
    EXPECT_GE(rho0.parity, 0.0);
    EXPECT_LT(rho0.parity, g_stationary(p));
    EXPECT_NEAR(evolve_state(p, rho0, t_r).parity, rho0.parity, 1e-12);
    EXPECT_GT(std::abs(evolve_state(p, rho0, 0.5 * t_r).parity - rho0.parity), 1e-3);
    EXPECT_GT(std::abs(evolve_state(p, rho0, 10.0).parity - rho0.parity), 1e-3);
}

TEST(EvolveState, SuperselectionPreserved)
{
    const ModelParams p = figure(4.0, 1e-3);
    const DensityMatrix rho0{-0.6, {}};
    for (double t : {0.5, 3.0}) {
        const Mat2 out = propagator_closed(p, t).apply(rho0.matrix());
        EXPECT_EQ(out(0, 1), complex{});
        EXPECT_EQ(out(1, 0), complex{});
        EXPECT_EQ(evolve_state(p, rho0, t).field, complex{});
    }
}

TEST(EvolveState, SpectrumNonnegativeAndErrors)
{
    const ModelParams p = figure(20.0, 1e-3);
    for (double t : {0.2, 1.0, 6.0}) {
        for (double p0 : {-1.0, 0.0, 1.0}) {
            const auto lam = evolve_state(p, DensityMatrix{p0, {}}, t).parity_spectrum();
            EXPECT_GE(lam[0], 0.0);
            EXPECT_GE(lam[1], 0.0);
        }
    }
    EXPECT_THROW((void)evolve_state(p, DensityMatrix{0.9, complex{0.3, 0.0}}, 1.0), DomainError);
}

// 1 - |b(t)|^2 minimized over a dense sample of the Bloch ball boundary; interior points
// are never smaller because the map is affine.
TEST(PositivityPreservation, EquivalentToGBounded)
{
    const ModelParams p = figure(4.0, 1.0);
    for (double t : {0.3, 2.0}) {
        for (double g : {-1.4, -1.0, -0.5, 0.2, 0.99, 1.05}) {
            double worst = 1.0;
            for (int i = 0; i <= 4000; ++i) {
                const double p0 = -1.0 + 2.0 * i / 4000.0;
                const DensityMatrix rho0{p0, 0.5 * std::sqrt(std::max(0.0, 1.0 - p0 * p0))};
                const DensityMatrix out = evolve_state(p, rho0, t, g);
                worst = std::min(worst, 1.0 - out.bloch_norm_squared());
            }
            EXPECT_EQ(worst >= -1e-12, std::abs(g) <= 1.0) << t << " " << g << " " << worst;
        }
    }
}

TEST(TclGenerator, EqualsIntegratedMemoryKernel)
{
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    for (const ModelParams& p : {figure(20.0, 1e-3), figure(4.0, 10.0), figure(2.0, 1.0)}) {
        for (double t : {0.7, 3.0}) {
            // regular part is a scalar times the nilpotent direction; integrate the (3,0) entry
            auto entry = [&](double s) { return nz_kernel(p, s).regular_part.matrix(3, 0).real(); };
            double acc = 0.0;
            const int panels = 200;
            for (int k = 0; k < panels; ++k) {
                acc += GK::integrate(entry, t * k / panels, t * (k + 1) / panels, 0, 0.0);
            }
            const Mat4 integral = nz_kernel(p, t).delta_part.matrix +
                                  acc / nilpotent_direction()(3, 0).real() * nilpotent_direction();
            EXPECT_LT(max_norm(integral - tcl_kernel(p, t).matrix), 1e-6) << t;
        }
    }
}

TEST(TclGenerator, IncludesLiouvillian)
{
    const ModelParams p = figure(4.0, 1.0, 0.3);
    const double t = 1.2;
    EXPECT_LT(max_norm(tcl_generator(p, t).matrix - tcl_kernel(p, t).matrix -
                       liouvillian_expected(p.epsilon_level)),
              1e-15);
}

TEST(TclGenerator, GeneratesPropagator)
{
    // d Pi/dt = G(t) Pi(t) by central differences
    const ModelParams p = figure(4.0, 1e-3);
    for (double t : {0.4, 2.5}) {
        const double dt = 1e-4;
        const Mat4 deriv =
            (propagator_closed(p, t + dt).matrix - propagator_closed(p, t - dt).matrix) / (2.0 * dt);
        EXPECT_LT(max_norm(deriv - tcl_generator(p, t).matrix * propagator_closed(p, t).matrix), 1e-6);
    }
}

TEST(TclGenerator, NotCommutingAtDifferentTimes)
{
    const ModelParams p = figure(20.0, 1e-3);
    const Mat4 a = tcl_generator(p, 0.05).matrix;
    const Mat4 b = tcl_generator(p, 0.3).matrix;
    EXPECT_GT(max_norm(a * b - b * a), 1e-3);
}

TEST(NzKernel, GeneratorIdentity)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.05, 10.0);
    const ModelParams p = figure(4.0, 1e-3);
    for (int i = 0; i < 10; ++i) {
        double t = u(rng);
        double tp = u(rng);
        if (t < tp) {
            std::swap(t, tp);
        }
        const Mat4 sigma = nz_kernel(p, t - tp + 1e-3).regular_part.matrix;
        const Mat4 lhs = sigma * propagator_closed(p, tp).matrix *
                         propagator_inverse(p, t, g_of_t(p, t)).matrix;
        EXPECT_LT(max_norm(lhs - sigma), 1e-12 * std::exp(t));
    }
}

TEST(NzKernel, StructureAndZeros)
{
    const ModelParams p = figure(4.0, 1.0);
    const double eps = p.detuning();
    const NzKernel k = nz_kernel(p, 0.37);
    const double c = k.regular_part.matrix(3, 0).real() / nilpotent_direction()(3, 0).real();
    EXPECT_LT(max_norm(k.regular_part.matrix - c * nilpotent_direction()), 1e-15);
    const double expected = -0.5 * std::exp(-0.5 * 0.37) * gamma_direct(p, 0.37);
    EXPECT_NEAR(c, expected, 1e-14);
    for (int l = 1; l <= 3; ++l) {
        EXPECT_LT(max_norm(nz_kernel(p, l * pi / eps).regular_part.matrix), 1e-14) << l;
    }
    EXPECT_LT(max_norm(nz_kernel(figure(0.0, 1.0), 0.37).regular_part.matrix), 1e-300);
    EXPECT_LT(max_norm(k.delta_part.matrix - 0.5 * (l_plus_expected() + l_minus_expected())), 1e-15);
}

TEST(NzKernelLaplace, ZeroFrequencyIsStationaryTclKernel)
{
    for (const ModelParams& p : {figure(20.0, 1e-3), figure(4.0, 10.0), figure(2.0, 1.0, 0.3)}) {
        const SuperOp got = nz_kernel_laplace(p, complex{0.0, 0.0});
        EXPECT_LT(max_norm(got.matrix - tcl_kernel_from_h(p, g_stationary(p)).matrix), 1e-8);
        EXPECT_LT(max_norm(got.matrix - tcl_kernel(p, 80.0).matrix), 1e-8);
    }
}

TEST(NzKernelLaplace, MatchesNumericalTransform)
{
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    for (const ModelParams& p : {figure(4.0, 1.0), figure(2.0, 10.0)}) {
        const double G = p.gamma_coupling;
        const complex z{0.0, G};
        // int_0^inf e^{izs} Sigma(s) ds: delta part enters with full weight
        auto integrand = [&](double s) {
            return std::exp(-G * s) * nz_kernel(p, s).regular_part.matrix(3, 0).real();
        };
        double acc = 0.0;
        for (int k = 0; k < 400; ++k) {
            acc += GK::integrate(integrand, 0.1 * k, 0.1 * (k + 1), 0, 0.0);
        }
        const Mat4 want = nz_kernel(p, 1.0).delta_part.matrix +
                          acc / nilpotent_direction()(3, 0).real() * nilpotent_direction();
        EXPECT_LT(max_norm(nz_kernel_laplace(p, z).matrix - want), 1e-6);
    }
}

TEST(NzKernelLaplace, VanishingNilpotentPartAtZeroDetuning)
{
    const ModelParams p = figure(0.0, 1.0);
    const Mat4 m = nz_kernel_laplace(p, complex{0.3, 0.8}).matrix;
    EXPECT_LT(std::abs(m(3, 0)), 1e-14);
    EXPECT_THROW((void)nz_kernel_laplace(figure(2.0, 0.0), complex{0.0, 1.0}), DomainError);
}
