#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "reslevel/errors.hpp"
#include "reslevel/kernels.hpp"
#include "reslevel/liouville.hpp"

namespace reslevel {

/// Choi matrix C = sum_ij S(|i><j|) (x) |i><j| on the doubled space, row index 2a + i
/// for output index a and input index i: {|++>, |+->, |-+>, |-->}.
struct ChoiOperator {
    Mat4 matrix = Mat4::Zero();
};

/// Four Kraus operators with their Choi eigenvalues.
///
/// The closed form orders them (k, eta) = (0,+), (0,-), (1,+), (1,-) and sets r to the
/// mixing function r(t); sets from numerical diagonalization are ordered by descending
/// eigenvalue and leave r as NaN.
struct KrausSet {
    std::array<Mat2, 4> operators{};
    std::array<double, 4> eigenvalues{};
    double r = std::numeric_limits<double>::quiet_NaN();

    [[nodiscard]] const Mat2& k(int parity_index, int eta) const
    {
        return operators[static_cast<std::size_t>(2 * parity_index + (eta > 0 ? 0 : 1))];
    }
    [[nodiscard]] double lambda(int parity_index, int eta) const
    {
        return eigenvalues[static_cast<std::size_t>(2 * parity_index + (eta > 0 ? 0 : 1))];
    }
};

inline constexpr double kCpTolerance = 1e-10;

namespace detail {

/// log r(t) with r = e^{Gamma t/2} (alpha/2 + s), s = sqrt(e^{-Gamma t} + (alpha/2)^2).
/// For alpha < 0, r = 1/r(|alpha|). Worked in logs so e^{-Gamma t} may underflow.
[[nodiscard]] inline double log_mixing(double gamma_t, double half_alpha)
{
    const double log_e = -0.5 * gamma_t;
    const double a = std::abs(half_alpha);
    double log_sum = log_e;  // log(|alpha|/2 + s) at alpha = 0
    if (a > 0.0) {
        const double la = std::log(a);
        const double m = std::max(la, log_e);
        const double x = std::exp(la - m);
        const double y = std::exp(log_e - m);
        log_sum = m + std::log(x + std::hypot(x, y));
    }
    const double log_r = 0.5 * gamma_t + log_sum;
    return half_alpha >= 0.0 ? log_r : -log_r;
}

}  // namespace detail

[[nodiscard]] inline ChoiOperator choi_of(const SuperOp& map)
{
    ChoiOperator c;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            Mat2 unit = Mat2::Zero();
            unit(i, j) = 1.0;
            const Mat2 out = map.apply(unit);
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    c.matrix(2 * a + i, 2 * b + j) = out(a, b);
                }
            }
        }
    }
    return c;
}

/// Smallest eigenvalue of the (Hermitian part of the) Choi matrix.
[[nodiscard]] inline double cp_minimum(const ChoiOperator& choi)
{
    const Mat4 herm = 0.5 * (choi.matrix + choi.matrix.adjoint());
    const Eigen::SelfAdjointEigenSolver<Mat4> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Superoperator X -> sum_m K_m X K_m^dagger.
[[nodiscard]] inline SuperOp map_from_kraus(const std::array<Mat2, 4>& ops,
                                            SuperOpKind kind = SuperOpKind::propagator)
{
    return {superop_matrix([&](const Mat2& x) -> Mat2 {
                Mat2 out = Mat2::Zero();
                for (const Mat2& k : ops) {
                    out += k * x * k.adjoint();
                }
                return out;
            }),
            kind};
}

/// Closed-form Kraus operators for a supplied g(t).
///
/// K^0_eta = sqrt(lambda^0_eta) [eta sqrt(r)^eta d d^dagger + sqrt(r)^{-eta} e^{-i eps t} d^dagger d]
///           / sqrt(r + 1/r),  K^1_eta = sqrt(lambda^1_eta) d_eta.
[[nodiscard]] inline KrausSet kraus_closed_form(const ModelParams& p, double t, double g)
{
    if (!(t >= 0.0)) {
        throw DomainError("kraus_closed_form: requires t >= 0");
    }
    if (std::abs(g) > 1.0) {
        throw CpViolationError("kraus_closed_form: |g(t)| > 1 gives negative Choi eigenvalues");
    }
    const double G = p.gamma_coupling;
    const double decay = std::exp(-G * t);
    const double one_minus = detail::one_minus_exp(G * t);
    const double half_alpha = 0.5 * one_minus * g;
    const double s = std::sqrt(decay + half_alpha * half_alpha);

    KrausSet out;
    const double lp = 0.5 * (1.0 + decay) + s;
    // lambda^0_+ lambda^0_- = (1 - e^{-Gamma t})^2 (1 - g^2) / 4, free of cancellation
    const double lm = 0.25 * one_minus * one_minus * (1.0 - g * g) / lp;
    const double log_r = detail::log_mixing(G * t, half_alpha);
    // 1/sqrt(1 + r^{-2}) and 1/sqrt(1 + r^2) without overflow
    const double big = 1.0 / std::hypot(1.0, std::exp(-log_r));
    const double small = 1.0 / std::hypot(1.0, std::exp(log_r));
    const complex phase = std::exp(complex{0.0, -p.epsilon_level * t});
    const Mat2 empty = ops::projector(-1);
    const Mat2 occupied = ops::projector(+1);

    out.r = std::exp(log_r);
    out.eigenvalues = {lp, lm, 0.5 * one_minus * (1.0 - g), 0.5 * one_minus * (1.0 + g)};
    out.operators[0] = std::sqrt(lp) * (big * empty + small * phase * occupied);
    out.operators[1] = std::sqrt(lm) * (-small * empty + big * phase * occupied);
    out.operators[2] = std::sqrt(out.eigenvalues[2]) * ops::d_eta(+1);
    out.operators[3] = std::sqrt(out.eigenvalues[3]) * ops::d_eta(-1);
    return out;
}

[[nodiscard]] inline KrausSet kraus_closed_form(const ModelParams& p, double t)
{
    if (!(t >= 0.0)) {
        throw DomainError("kraus_closed_form: requires t >= 0");
    }
    return kraus_closed_form(p, t, t == 0.0 ? 0.0 : g_of_t(p, t));
}

/// Kraus operators from the eigenvectors of the Choi matrix, |K> = sqrt(lambda) v with
/// K_ab = sqrt(lambda) v_{2a+b}.
[[nodiscard]] inline KrausSet kraus_from_choi(const ChoiOperator& choi)
{
    const Mat4 herm = 0.5 * (choi.matrix + choi.matrix.adjoint());
    const Eigen::SelfAdjointEigenSolver<Mat4> es(herm);
    const double trace = std::abs(herm.trace().real());
    KrausSet out;
    for (int m = 0; m < 4; ++m) {
        const int idx = 3 - m;  // descending
        double lam = es.eigenvalues()(idx);
        if (lam < -kCpTolerance * trace) {
            throw CpViolationError("kraus_from_choi: negative Choi eigenvalue " +
                                   std::to_string(lam));
        }
        lam = std::max(lam, 0.0);
        const Vec4 v = es.eigenvectors().col(idx);
        Mat2 k;
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                k(a, b) = std::sqrt(lam) * v(2 * a + b);
            }
        }
        out.operators[static_cast<std::size_t>(m)] = k;
        out.eigenvalues[static_cast<std::size_t>(m)] = lam;
    }
    return out;
}

}  // namespace reslevel
