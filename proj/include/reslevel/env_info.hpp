#pragma once

#include <array>
#include <cmath>
#include <span>

#include <Eigen/Dense>

#include "reslevel/choi_kraus.hpp"
#include "reslevel/errors.hpp"
#include "reslevel/kernels.hpp"
#include "reslevel/liouville.hpp"

namespace reslevel {

/// fermion: parity superselection, <d> = 0. spin: pseudo-spin reading without superselection.
enum class Mode { fermion, spin };

/// Effective environment state rho^E'_{mm'} = Tr K_m rho(0) K_m'^dagger, labels
/// m = (k, eta) ordered (0,+), (0,-), (1,+), (1,-).
struct EnvState {
    Mat4 matrix = Mat4::Zero();
    Mode mode = Mode::fermion;

    [[nodiscard]] Eigen::Vector4d eigenvalues() const
    {
        const Mat4 herm = 0.5 * (matrix + matrix.adjoint());
        return Eigen::SelfAdjointEigenSolver<Mat4>(herm, Eigen::EigenvaluesOnly).eigenvalues();
    }
};

/// Two-mode factor spectra Lambda^{E' lambda}_eta; index [lambda][eta], + before -.
struct ModeSpectra {
    std::array<std::array<double, 2>, 2> lambda{};

    [[nodiscard]] double at(int mode, int eta) const
    {
        return lambda[mode > 0 ? 0 : 1][eta > 0 ? 0 : 1];
    }
    /// Lambda^{E'0}_eta = Lambda^+_eta Lambda^-_eta
    [[nodiscard]] double even(int eta) const { return at(+1, eta) * at(-1, eta); }
    /// Lambda^{E'1}_eta = Lambda^+_eta Lambda^-_{-eta}
    [[nodiscard]] double odd(int eta) const { return at(+1, eta) * at(-1, -eta); }
};

struct InfoMeasures {
    double s_sys = 0.0;
    double s_env = 0.0;
    double s_env_plus = 0.0;   // mode lambda = + (fermion mode only)
    double s_env_minus = 0.0;  // mode lambda = - (fermion mode only)
    double coherent_information = 0.0;
    double mismatch = 0.0;
};

inline constexpr double kEntropyNegativeTolerance = 1e-12;

/// Entropy in bits with 0 log 0 = 0. Entries down to -1e-12 are treated as 0.
[[nodiscard]] inline double entropy(std::span<const double> spectrum)
{
    double s = 0.0;
    for (double x : spectrum) {
        if (x < -kEntropyNegativeTolerance || !std::isfinite(x)) {
            throw CpViolationError("entropy: negative probability " + std::to_string(x));
        }
        if (x > 0.0) {
            s -= x * std::log2(std::min(x, 1.0));
        }
    }
    return s;
}

[[nodiscard]] inline double binary_entropy(double p0, double p1)
{
    const std::array<double, 2> v{p0, p1};
    return entropy(v);
}

namespace detail {

inline void require_mode(const DensityMatrix& rho0, Mode mode)
{
    rho0.validate();
    if (mode == Mode::fermion && rho0.field != complex{}) {
        throw DomainError("fermion mode requires <d(0)> = 0");
    }
}

}  // namespace detail

/// rho^E'(t) for a supplied g(t). Diagonal blocks from the closed forms, spin-mode
/// off-diagonal blocks from Tr K_m rho(0) K_m'^dagger.
[[nodiscard]] inline EnvState env_state(const ModelParams& p, double t, const DensityMatrix& rho0,
                                        double g, Mode mode = Mode::fermion)
{
    detail::require_mode(rho0, mode);
    const KrausSet k = kraus_closed_form(p, t, g);
    const double p0 = rho0.parity;
    const double log_r =
        detail::log_mixing(p.gamma_coupling * t, 0.5 * detail::one_minus_exp(p.gamma_coupling * t) * g);
    const double q = std::tanh(log_r);         // (r - 1/r)/(r + 1/r)
    const double w = 1.0 / std::cosh(log_r);   // 2/(r + 1/r)

    EnvState env;
    env.mode = mode;
    for (int e = 0; e < 2; ++e) {
        const double eta = e == 0 ? 1.0 : -1.0;
        env.matrix(e, e) = 0.5 * k.eigenvalues[static_cast<std::size_t>(e)] * (1.0 + eta * p0 * q);
        env.matrix(2 + e, 2 + e) =
            0.5 * k.eigenvalues[static_cast<std::size_t>(2 + e)] * (1.0 + eta * p0);
    }
    const double off = -0.5 * p0 * std::sqrt(k.eigenvalues[0] * k.eigenvalues[1]) * w;
    env.matrix(0, 1) = off;
    env.matrix(1, 0) = off;
    if (mode == Mode::spin) {
        const Mat2 rho = rho0.matrix();
        for (int a = 0; a < 2; ++a) {
            for (int b = 2; b < 4; ++b) {
                const complex v = (k.operators[static_cast<std::size_t>(a)] * rho *
                                   k.operators[static_cast<std::size_t>(b)].adjoint())
                                      .trace();
                env.matrix(a, b) = v;
                env.matrix(b, a) = std::conj(v);
            }
        }
    }
    return env;
}

[[nodiscard]] inline EnvState env_state(const ModelParams& p, double t, const DensityMatrix& rho0,
                                        Mode mode = Mode::fermion)
{
    if (!(t >= 0.0)) {
        throw DomainError("env_state: requires t >= 0");
    }
    return env_state(p, t, rho0, t == 0.0 ? 0.0 : g_of_t(p, t), mode);
}

/// Stationary limit rho(inf) (x) rho(0) written in the Kraus labels; needs g(inf) != 0
/// so that the even block becomes diagonal.
[[nodiscard]] inline Mat4 env_stationary_product(const ModelParams& p, const DensityMatrix& rho0)
{
    const double ginf = g_stationary(p);
    if (ginf == 0.0) {
        throw DomainError("env_stationary_product: requires g(inf) != 0");
    }
    const int sigma = ginf > 0.0 ? 1 : -1;
    auto lam0 = [&](int eta) { return 0.5 * (1.0 + eta * rho0.parity); };
    auto laminf = [&](int eta) { return 0.5 * (1.0 + eta * ginf); };
    Mat4 m = Mat4::Zero();
    for (int e = 0; e < 2; ++e) {
        const int eta = e == 0 ? 1 : -1;
        m(e, e) = lam0(sigma * eta) * laminf(sigma * eta);
        m(2 + e, 2 + e) = lam0(eta) * laminf(-eta);
    }
    return m;
}

/// Factor spectra with tau = tanh(Gamma t/2):
/// Lambda^lambda_eta = 1/2 [1 + eta (sqrt((1 + p g tau)^2 - tau^2 (1-g^2)(1-p^2))
///                                   + lambda tau (p - g)) / (1 + tau)].
[[nodiscard]] inline ModeSpectra env_mode_spectra(const ModelParams& p, double t,
                                                  const DensityMatrix& rho0, double g,
                                                  Mode mode = Mode::fermion)
{
    if (mode == Mode::spin) {
        throw UnsupportedModeError("env_mode_spectra: factorization needs parity superselection");
    }
    detail::require_mode(rho0, mode);
    if (!(t >= 0.0)) {
        throw DomainError("env_mode_spectra: requires t >= 0");
    }
    const double tau = std::tanh(0.5 * p.gamma_coupling * t);
    const double p0 = rho0.parity;
    const double a = 1.0 + p0 * g * tau;
    const double root =
        std::sqrt(std::max(0.0, a * a - tau * tau * (1.0 - g * g) * (1.0 - p0 * p0)));
    ModeSpectra out;
    for (int l = 0; l < 2; ++l) {
        const double lambda = l == 0 ? 1.0 : -1.0;
        const double x = (root + lambda * tau * (p0 - g)) / (1.0 + tau);
        out.lambda[static_cast<std::size_t>(l)] = {0.5 * (1.0 + x), 0.5 * (1.0 - x)};
    }
    return out;
}

[[nodiscard]] inline ModeSpectra env_mode_spectra(const ModelParams& p, double t,
                                                  const DensityMatrix& rho0,
                                                  Mode mode = Mode::fermion)
{
    if (mode == Mode::spin) {
        throw UnsupportedModeError("env_mode_spectra: factorization needs parity superselection");
    }
    if (!(t >= 0.0)) {
        throw DomainError("env_mode_spectra: requires t >= 0");
    }
    return env_mode_spectra(p, t, rho0, t == 0.0 ? 0.0 : g_of_t(p, t), mode);
}

/// Entropies and coherent information for a supplied g(t).
[[nodiscard]] inline InfoMeasures info_measures(const ModelParams& p, double t,
                                                const DensityMatrix& rho0, double g,
                                                Mode mode = Mode::fermion)
{
    detail::require_mode(rho0, mode);
    const DensityMatrix rho_t = evolve_state(p, rho0, t, g);
    InfoMeasures m;
    const auto sys = rho_t.eigenvalues();
    m.s_sys = entropy(sys);
    const auto initial = rho0.eigenvalues();
    const double s0 = entropy(initial);
    if (mode == Mode::fermion) {
        const ModeSpectra f = env_mode_spectra(p, t, rho0, g);
        m.s_env_plus = entropy(f.lambda[0]);
        m.s_env_minus = entropy(f.lambda[1]);
        m.s_env = m.s_env_plus + m.s_env_minus;
    } else {
        const Eigen::Vector4d ev = env_state(p, t, rho0, g, mode).eigenvalues();
        m.s_env = entropy(std::span<const double>(ev.data(), 4));
        m.s_env_plus = m.s_env_minus = std::numeric_limits<double>::quiet_NaN();
    }
    m.coherent_information = m.s_sys - m.s_env;
    m.mismatch = s0 - m.coherent_information;
    return m;
}

[[nodiscard]] inline InfoMeasures info_measures(const ModelParams& p, double t,
                                                const DensityMatrix& rho0,
                                                Mode mode = Mode::fermion)
{
    if (!(t >= 0.0)) {
        throw DomainError("info_measures: requires t >= 0");
    }
    return info_measures(p, t, rho0, t == 0.0 ? 0.0 : g_of_t(p, t), mode);
}

/// Positivity of a full (spin-mode) state via rho^11 >= 0 and the Schur complement
/// rho^00 - rho^01 (rho^11)^{-1} rho^10 >= 0. Singular rho^11 uses the pseudo-inverse.
[[nodiscard]] inline bool env_positive_by_schur(const EnvState& env, double tol = 1e-12)
{
    const Mat2 a = env.matrix.topLeftCorner<2, 2>();
    const Mat2 b = env.matrix.topRightCorner<2, 2>();
    const Mat2 d = env.matrix.bottomRightCorner<2, 2>();
    const Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (d + d.adjoint()));
    if (es.eigenvalues().minCoeff() < -tol) {
        return false;
    }
    Eigen::Vector2d inv = Eigen::Vector2d::Zero();
    for (int i = 0; i < 2; ++i) {
        const double v = es.eigenvalues()(i);
        if (v > tol) {
            inv(i) = 1.0 / v;
        } else if ((b * es.eigenvectors().col(i)).norm() > std::sqrt(tol)) {
            return false;  // range condition violated
        }
    }
    const Mat2 d_pinv = es.eigenvectors() * inv.cast<complex>().asDiagonal() *
                        es.eigenvectors().adjoint();
    const Mat2 schur = a - b * d_pinv * b.adjoint();
    const Eigen::SelfAdjointEigenSolver<Mat2> ss(0.5 * (schur + schur.adjoint()),
                                                 Eigen::EigenvaluesOnly);
    return ss.eigenvalues().minCoeff() >= -tol;
}

}  // namespace reslevel
