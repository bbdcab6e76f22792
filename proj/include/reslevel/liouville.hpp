#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "reslevel/errors.hpp"
#include "reslevel/kernels.hpp"
#include "reslevel/special_functions.hpp"

namespace reslevel {

using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;

// Hilbert space ordering: index 0 = |+> (occupied), index 1 = |-> (empty).
// d = |-><+|, n = |+><+|, (-1)^n = diag(-1, 1).

namespace ops {

[[nodiscard]] inline Mat2 identity() { return Mat2::Identity(); }

[[nodiscard]] inline Mat2 annihilator()
{
    Mat2 d = Mat2::Zero();
    d(1, 0) = 1.0;
    return d;
}

[[nodiscard]] inline Mat2 creator() { return annihilator().adjoint(); }

[[nodiscard]] inline Mat2 number()
{
    Mat2 n = Mat2::Zero();
    n(0, 0) = 1.0;
    return n;
}

[[nodiscard]] inline Mat2 parity()
{
    Mat2 p = Mat2::Zero();
    p(0, 0) = -1.0;
    p(1, 1) = 1.0;
    return p;
}

/// d_eta: d_+ = d^dagger, d_- = d.
[[nodiscard]] inline Mat2 d_eta(int eta) { return eta > 0 ? creator() : annihilator(); }

/// Projector on the occupied (|+>) or empty (|->) level.
[[nodiscard]] inline Mat2 projector(int eta)
{
    Mat2 p = Mat2::Zero();
    p(eta > 0 ? 0 : 1, eta > 0 ? 0 : 1) = 1.0;
    return p;
}

}  // namespace ops

/// Orthonormal operator basis {1/sqrt2, d^dagger, d, (-1)^n/sqrt2}.
[[nodiscard]] inline std::array<Mat2, 4> operator_basis()
{
    const double s = 1.0 / std::sqrt(2.0);
    return {ops::identity() * s, ops::creator(), ops::annihilator(), ops::parity() * s};
}

/// Coordinates c_k = Tr(e_k^dagger X).
[[nodiscard]] inline Vec4 to_coords(const Mat2& x)
{
    const auto basis = operator_basis();
    Vec4 c;
    for (int k = 0; k < 4; ++k) {
        c(k) = (basis[static_cast<std::size_t>(k)].adjoint() * x).trace();
    }
    return c;
}

[[nodiscard]] inline Mat2 from_coords(const Vec4& c)
{
    const auto basis = operator_basis();
    Mat2 x = Mat2::Zero();
    for (int k = 0; k < 4; ++k) {
        x += c(k) * basis[static_cast<std::size_t>(k)];
    }
    return x;
}

enum class SuperOpKind { propagator, divisor, generator, kernel };

/// 4x4 matrix acting on operator coordinates, plus what it represents.
struct SuperOp {
    Mat4 matrix = Mat4::Zero();
    SuperOpKind kind = SuperOpKind::propagator;

    [[nodiscard]] Mat2 apply(const Mat2& x) const { return from_coords(matrix * to_coords(x)); }
};

/// Matrix of a linear map on 2x2 operators in the operator basis.
[[nodiscard]] inline Mat4 superop_matrix(const std::function<Mat2(const Mat2&)>& map)
{
    const auto basis = operator_basis();
    Mat4 m;
    for (int l = 0; l < 4; ++l) {
        m.col(l) = to_coords(map(basis[static_cast<std::size_t>(l)]));
    }
    return m;
}

[[nodiscard]] inline double max_norm(const Mat4& m) { return m.cwiseAbs().maxCoeff(); }

/// Coordinates of the trace functional: Tr X = sqrt2 c_0.
[[nodiscard]] inline Eigen::RowVector4cd trace_row()
{
    Eigen::RowVector4cd r = Eigen::RowVector4cd::Zero();
    r(0) = std::sqrt(2.0);
    return r;
}

/// System state 1/2 [1 + parity (-1)^n] + <d> d^dagger + <d>^* d.
/// The field <d> vanishes under fermion-parity superselection.
struct DensityMatrix {
    double parity = 0.0;
    complex field{};

    [[nodiscard]] double bloch_norm_squared() const
    {
        return parity * parity + 4.0 * std::norm(field);
    }

    [[nodiscard]] bool is_positive(double tol = 1e-12) const
    {
        return std::isfinite(parity) && std::isfinite(field.real()) &&
               std::isfinite(field.imag()) && bloch_norm_squared() <= 1.0 + tol;
    }

    void validate() const
    {
        if (!is_positive()) {
            throw DomainError("DensityMatrix: not positive (|parity|^2 + |2<d>|^2 > 1)");
        }
    }

    [[nodiscard]] Mat2 matrix() const
    {
        return 0.5 * (ops::identity() + parity * ops::parity()) + field * ops::creator() +
               std::conj(field) * ops::annihilator();
    }

    [[nodiscard]] static DensityMatrix from_matrix(const Mat2& rho)
    {
        return {(ops::parity() * rho).trace().real(), (ops::annihilator() * rho).trace()};
    }

    /// Eigenvalues (1 + |b|)/2 and (1 - |b|)/2 of the 2x2 matrix.
    [[nodiscard]] std::array<double, 2> eigenvalues() const
    {
        const double b = std::sqrt(bloch_norm_squared());
        return {0.5 * (1.0 + b), 0.5 * (1.0 - b)};
    }

    /// Lambda_eta = (1 + eta parity)/2 for eta = +, -; the spectrum when field = 0.
    [[nodiscard]] std::array<double, 2> parity_spectrum() const
    {
        return {0.5 * (1.0 + parity), 0.5 * (1.0 - parity)};
    }
};

/// L_eta = d_eta . d_{-eta} - 1/2 {d_{-eta} d_eta, .}
[[nodiscard]] inline SuperOp dissipator(int eta)
{
    const Mat2 a = ops::d_eta(eta);
    const Mat2 b = ops::d_eta(-eta);
    const Mat2 ba = b * a;
    return {superop_matrix([&](const Mat2& x) -> Mat2 {
                return a * x * b - 0.5 * (ba * x + x * ba);
            }),
            SuperOpKind::generator};
}

/// -iL with L = [eps d^dagger d, .]
[[nodiscard]] inline Mat4 minus_i_liouvillian(const ModelParams& p)
{
    Mat4 m = Mat4::Zero();
    m(1, 1) = complex{0.0, -p.epsilon_level};
    m(2, 2) = complex{0.0, p.epsilon_level};
    return m;
}

/// (Gamma/2) sum_eta [1 - eta x] L_eta
[[nodiscard]] inline Mat4 gksl_part(double gamma, double x)
{
    return 0.5 * gamma * ((1.0 - x) * dissipator(+1).matrix + (1.0 + x) * dissipator(-1).matrix);
}

namespace detail {

inline void require_time(double t, const char* what)
{
    if (!(t >= 0.0)) {
        throw DomainError(std::string(what) + ": requires t >= 0");
    }
}

/// Closed form with a given interval length and alpha = (1 - e^{-Gamma dt}) g.
[[nodiscard]] inline Mat4 closed_matrix(const ModelParams& p, double dt, double alpha)
{
    const double G = p.gamma_coupling;
    Mat4 m = Mat4::Zero();
    m(0, 0) = 1.0;
    m(1, 1) = std::exp(complex{-0.5 * G * dt, -p.epsilon_level * dt});
    m(2, 2) = std::exp(complex{-0.5 * G * dt, p.epsilon_level * dt});
    m(3, 3) = std::exp(-G * dt);
    m(3, 0) = alpha;
    return m;
}

/// e^X for a diagonalizable 4x4 X via its eigendecomposition.
[[nodiscard]] inline Mat4 expm_diagonalizable(const Mat4& x)
{
    if (x.isZero(0.0)) {
        return Mat4::Identity();
    }
    const Eigen::ComplexEigenSolver<Mat4> es(x);
    if (es.info() != Eigen::Success) {
        throw IntegrationError("matrix exponential: eigendecomposition failed");
    }
    const Mat4& v = es.eigenvectors();
    const Vec4 ev = es.eigenvalues().array().exp();
    return v * ev.asDiagonal() * v.inverse();
}

}  // namespace detail

/// Pi(t) in closed form for a supplied value of g(t).
[[nodiscard]] inline SuperOp propagator_closed(const ModelParams& p, double t, double g)
{
    detail::require_time(t, "propagator_closed");
    return {detail::closed_matrix(p, t, detail::one_minus_exp(p.gamma_coupling * t) * g),
            SuperOpKind::propagator};
}

/// Pi(t): field sector e^{(i eta eps - Gamma/2) t}, parity sector e^{-Gamma t} and
/// (1 - e^{-Gamma t}) g(t).
[[nodiscard]] inline SuperOp propagator_closed(const ModelParams& p, double t)
{
    detail::require_time(t, "propagator_closed");
    return propagator_closed(p, t, t == 0.0 ? 0.0 : g_of_t(p, t));
}

/// exp(-iL t + (Gamma/2) t sum_eta [1 - eta g] L_eta) for a supplied g.
[[nodiscard]] inline SuperOp propagator_exponential(const ModelParams& p, double t, double g)
{
    detail::require_time(t, "propagator_exponential");
    const Mat4 x = (minus_i_liouvillian(p) + gksl_part(p.gamma_coupling, g)) * t;
    return {detail::expm_diagonalizable(x), SuperOpKind::propagator};
}

[[nodiscard]] inline SuperOp propagator_exponential(const ModelParams& p, double t)
{
    detail::require_time(t, "propagator_exponential");
    return propagator_exponential(p, t, t == 0.0 ? 0.0 : g_of_t(p, t));
}

/// Pi(t, t') = closed form over [t', t] with alpha(t, t') = (1 - e^{-Gamma(t-t')}) g(t, t').
[[nodiscard]] inline SuperOp divisor(const ModelParams& p, double t, double t_prime,
                                     const KernelCache& cache)
{
    if (t < t_prime) {
        throw DomainError("divisor: requires t >= t'");
    }
    if (!cache.built_for(p)) {
        throw DomainError("divisor: cache was built for different parameters");
    }
    return {detail::closed_matrix(p, t - t_prime, cache.alpha_divisor(t, t_prime)),
            SuperOpKind::divisor};
}

/// Divisor in exponential form, exp(-iL(t-t') + (Gamma/2)(t-t') sum_eta [1 - eta g(t,t')] L_eta).
[[nodiscard]] inline SuperOp divisor_exponential(const ModelParams& p, double t, double t_prime,
                                                 const KernelCache& cache)
{
    if (t < t_prime) {
        throw DomainError("divisor_exponential: requires t >= t'");
    }
    const double g = g_divisor(p, t, t_prime, cache);
    const double dt = t - t_prime;
    const Mat4 x = (minus_i_liouvillian(p) + gksl_part(p.gamma_coupling, g)) * dt;
    return {detail::expm_diagonalizable(x), SuperOpKind::divisor};
}

/// Eigenvalue, right eigenvector (mode) and left eigenvector (amplitude) as operators,
/// so that Pi = sum_k lambda_k |m_k><a_k| with <a|m> = Tr a^dagger m.
struct SpectralTerm {
    complex eigenvalue;
    Mat2 mode;
    Mat2 amplitude;
};

struct SpectralDecomposition {
    std::array<SpectralTerm, 4> terms;

    /// sum_k lambda_k |m_k><a_k| in the operator basis.
    [[nodiscard]] Mat4 reconstruct() const
    {
        Mat4 m = Mat4::Zero();
        for (const SpectralTerm& term : terms) {
            m += term.eigenvalue * to_coords(term.mode) * to_coords(term.amplitude).adjoint();
        }
        return m;
    }
};

namespace detail {

[[nodiscard]] inline SpectralDecomposition spectral_table(double x, complex l1, complex l2,
                                                          complex l3, complex l4)
{
    const Mat2 one = ops::identity();
    const Mat2 par = ops::parity();
    SpectralDecomposition sd;
    sd.terms[0] = {l1, 0.5 * (one + x * par), one};
    // k = 2, 3: eta = +, -, mode and amplitude d_eta^dagger
    sd.terms[1] = {l2, ops::d_eta(+1).adjoint(), ops::d_eta(+1).adjoint()};
    sd.terms[2] = {l3, ops::d_eta(-1).adjoint(), ops::d_eta(-1).adjoint()};
    sd.terms[3] = {l4, par, 0.5 * (par - x * one)};
    return sd;
}

}  // namespace detail

/// Eigen-decomposition of Pi(t) for a supplied g(t).
[[nodiscard]] inline SpectralDecomposition spectral_decomposition(const ModelParams& p, double t,
                                                                  double g)
{
    detail::require_time(t, "spectral_decomposition");
    const double G = p.gamma_coupling;
    const double eps = p.epsilon_level;
    return detail::spectral_table(g, 1.0, std::exp(complex{-0.5 * G * t, eps * t}),
                                  std::exp(complex{-0.5 * G * t, -eps * t}), std::exp(-G * t));
}

[[nodiscard]] inline SpectralDecomposition spectral_decomposition(const ModelParams& p, double t)
{
    if (!(t > 0.0)) {
        throw DomainError("spectral_decomposition: requires t > 0");
    }
    return spectral_decomposition(p, t, g_of_t(p, t));
}

/// Eigen-decomposition of the time-local generator -iL + Sigma^TCL(t) (uses h(t)).
[[nodiscard]] inline SpectralDecomposition spectral_decomposition_tcl(const ModelParams& p,
                                                                      double h)
{
    const double G = p.gamma_coupling;
    const double eps = p.epsilon_level;
    return detail::spectral_table(h, 0.0, complex{-0.5 * G, eps}, complex{-0.5 * G, -eps},
                                  -G);
}

inline constexpr double kMaxInverseGammaT = 60.0;

/// Pi(t)^{-1} from the spectral form; refused for Gamma t > 60 where e^{Gamma t} loses
/// all precision.
[[nodiscard]] inline SuperOp propagator_inverse(const ModelParams& p, double t, double g)
{
    detail::require_time(t, "propagator_inverse");
    if (p.gamma_coupling * t > kMaxInverseGammaT) {
        throw DomainError("propagator_inverse: refused for Gamma t > 60");
    }
    SpectralDecomposition sd = spectral_decomposition(p, t, g);
    for (SpectralTerm& term : sd.terms) {
        term.eigenvalue = 1.0 / term.eigenvalue;
    }
    return {sd.reconstruct(), SuperOpKind::propagator};
}

/// rho(t) = Pi(t) rho(0) for a supplied g(t).
[[nodiscard]] inline DensityMatrix evolve_state(const ModelParams& p, const DensityMatrix& rho0,
                                                double t, double g)
{
    rho0.validate();
    detail::require_time(t, "evolve_state");
    const double G = p.gamma_coupling;
    DensityMatrix out;
    out.parity = std::exp(-G * t) * rho0.parity + detail::one_minus_exp(G * t) * g;
    out.field = rho0.field == complex{} ? complex{}
                                        : std::exp(complex{-0.5 * G * t, -p.epsilon_level * t}) *
                                              rho0.field;
    return out;
}

[[nodiscard]] inline DensityMatrix evolve_state(const ModelParams& p, const DensityMatrix& rho0,
                                                double t)
{
    detail::require_time(t, "evolve_state");
    return evolve_state(p, rho0, t, t == 0.0 ? 0.0 : g_of_t(p, t));
}

/// Sigma^TCL = (Gamma/2) sum_eta [1 - eta h] L_eta for a supplied h(t).
[[nodiscard]] inline SuperOp tcl_kernel_from_h(const ModelParams& p, double h)
{
    return {gksl_part(p.gamma_coupling, h), SuperOpKind::kernel};
}

[[nodiscard]] inline SuperOp tcl_kernel(const ModelParams& p, double t)
{
    detail::require_time(t, "tcl_kernel");
    return tcl_kernel_from_h(p, h_of_t(p, t));
}

/// Full time-local generator -iL + Sigma^TCL(t).
[[nodiscard]] inline SuperOp tcl_generator_from_h(const ModelParams& p, double h)
{
    return {minus_i_liouvillian(p) + gksl_part(p.gamma_coupling, h), SuperOpKind::generator};
}

[[nodiscard]] inline SuperOp tcl_generator(const ModelParams& p, double t)
{
    detail::require_time(t, "tcl_generator");
    return tcl_generator_from_h(p, h_of_t(p, t));
}

/// Memory kernel Sigma(s) = delta(s) (Gamma/2) sum L_eta - (Gamma/2) sum_eta eta e^{-Gamma s/2}
/// gamma(s) L_eta. The delta part is a weight for a one-sided delta (full weight in int_0^t).
struct NzKernel {
    SuperOp delta_part;
    SuperOp regular_part;
};

/// Superoperator sum_eta eta L_eta (nilpotent).
[[nodiscard]] inline Mat4 nilpotent_direction()
{
    return dissipator(+1).matrix - dissipator(-1).matrix;
}

[[nodiscard]] inline NzKernel nz_kernel(const ModelParams& p, double s)
{
    if (!(s > 0.0)) {
        throw DomainError("nz_kernel: requires s > 0");
    }
    const double G = p.gamma_coupling;
    const Mat4 delta = 0.5 * G * (dissipator(+1).matrix + dissipator(-1).matrix);
    const double w = -0.5 * G * std::exp(-0.5 * G * s) * correlation_gamma(p, s);
    return {{delta, SuperOpKind::kernel}, {w * nilpotent_direction(), SuperOpKind::kernel}};
}

/// Sigma(z) = (Gamma/2) sum_eta [1 + i (eta/pi) sum_chi chi psi(1/2 + (Gamma/2 - i(z - chi eps))
/// /(2 pi T))] L_eta, for Im z >= 0 and T > 0.
[[nodiscard]] inline SuperOp nz_kernel_laplace(const ModelParams& p, complex z)
{
    if (!(p.temperature > 0.0)) {
        throw DomainError("nz_kernel_laplace: requires T > 0");
    }
    if (z.imag() < 0.0) {
        throw DomainError("nz_kernel_laplace: requires Im z >= 0");
    }
    const double G = p.gamma_coupling;
    const double eps = p.detuning();
    const double two_pi_t = 2.0 * pi * p.temperature;
    complex chi_sum{};
    for (int chi : {+1, -1}) {
        const complex arg = 0.5 + (0.5 * G - complex{0.0, 1.0} * (z - chi * eps)) / two_pi_t;
        chi_sum += static_cast<double>(chi) * digamma(arg);
    }
    Mat4 m = Mat4::Zero();
    for (int eta : {+1, -1}) {
        const complex coeff = 1.0 + complex{0.0, eta / pi} * chi_sum;
        m += 0.5 * G * coeff * dissipator(eta).matrix;
    }
    return {m, SuperOpKind::kernel};
}

}  // namespace reslevel
