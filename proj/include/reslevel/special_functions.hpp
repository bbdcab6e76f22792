#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>

#include "reslevel/errors.hpp"

namespace reslevel {

using complex = std::complex<double>;

namespace detail {

inline constexpr double kDigammaShift = 12.0;

// B_{2k} / (2k) for k = 1..8.
inline constexpr double kDigammaAsymptotic[8] = {
    1.0 / 12.0,           -1.0 / 120.0,      1.0 / 252.0,   -1.0 / 240.0,
    5.0 / 660.0,          -691.0 / 32760.0,  7.0 / 84.0,    -3617.0 / 8160.0,
};

inline constexpr std::size_t kLerchMaxTerms = 20'000'000;

/// Sum_{n >= 0, n != skip} x^n / (n + a). Pass skip < 0 to keep every term.
[[nodiscard]] inline complex lerch_sum(double x, complex a, long skip)
{
    if (x == 0.0) {
        return skip == 0 ? complex{} : 1.0 / a;
    }
    // |x^{n+1}/(n+1+a)| <= x |x^n/(n+a)| once n + Re a > 0, so the remainder
    // after term n is bounded by |term_n| x / (1 - x).
    const double tail_factor = x / (1.0 - x);
    complex sum{};
    complex prev_term{};
    complex term{};
    double xn = 1.0;
    std::size_t n = 0;
    for (; n < kLerchMaxTerms; ++n) {
        prev_term = term;
        term = xn / (static_cast<double>(n) + a);
        if (static_cast<long>(n) != skip) {
            sum += term;
        }
        if (static_cast<long>(n) > skip && n > 2 && static_cast<double>(n) + a.real() > 0.0 &&
            std::abs(term) * tail_factor <= 1e-16 * std::abs(sum)) {
            break;
        }
        xn *= x;
    }
    if (x > 0.9 && n > 2) {
        // Aitken delta-squared on the last partial sums estimates the tail.
        const complex denom = term - prev_term;
        if (std::abs(denom) > 0.0) {
            sum -= term * term / denom;
        }
    }
    return sum;
}

}  // namespace detail

/// Complex digamma function psi(z).
///
/// Shifts upward with psi(z+1) = psi(z) + 1/z until Re z > 12, then sums the
/// Bernoulli asymptotic series (8 terms).
[[nodiscard]] inline complex digamma(complex z)
{
    if (z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real())) {
        throw DomainError("digamma: pole at z = " + std::to_string(z.real()));
    }
    complex shift{};
    while (z.real() < detail::kDigammaShift) {
        shift -= 1.0 / z;
        z += 1.0;
    }
    const complex inv = 1.0 / z;
    const complex inv2 = inv * inv;
    complex series{};
    complex power = inv2;
    for (double c : detail::kDigammaAsymptotic) {
        series += c * power;
        power *= inv2;
    }
    return shift + std::log(z) - 0.5 * inv - series;
}

/// Lerch transcendent Phi(x; 1; a) = sum_{n>=0} x^n / (n + a) for 0 <= x < 1, Re a > 0.
[[nodiscard]] inline complex lerch_phi(double x, complex a)
{
    if (!(x >= 0.0 && x < 1.0)) {
        throw DomainError("lerch_phi: series diverges for x = " + std::to_string(x));
    }
    if (!(a.real() > 0.0)) {
        throw DomainError("lerch_phi: requires Re a > 0");
    }
    return detail::lerch_sum(x, a, -1);
}

/// Sine integral Si(x) = int_0^x sin(u)/u du for x >= 0.
///
/// Power series below x = 4; above, the auxiliary functions f and g come from
/// the continued fraction of E1(ix), Si = pi/2 + Im E1(ix).
[[nodiscard]] inline double sine_integral(double x)
{
    if (x < 0.0) {
        return -sine_integral(-x);
    }
    if (x == 0.0) {
        return 0.0;
    }
    if (x <= 4.0) {
        const double x2 = x * x;
        double sum = 0.0;
        double power = x;  // x^{2k+1} / (2k+1)!
        for (int k = 0; k < 60; ++k) {
            const double term = power / (2 * k + 1);
            sum += (k % 2 == 0) ? term : -term;
            if (term < 1e-18 * std::abs(sum)) {
                break;
            }
            power *= x2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
        }
        return sum;
    }
    if (!std::isfinite(x)) {
        return std::numbers::pi / 2.0;
    }
    // Modified Lentz evaluation.
    constexpr double tiny = 1e-300;
    complex b{1.0, x};
    complex c = 1.0 / tiny;
    complex d = 1.0 / b;
    complex h = d;
    for (int i = 2; i < 100000; ++i) {
        const double a = -static_cast<double>(i - 1) * (i - 1);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const complex del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) {
            break;
        }
    }
    h *= complex{std::cos(x), -std::sin(x)};
    return std::numbers::pi / 2.0 + h.imag();
}

/// Fermi function 1/(e^x + 1), overflow safe.
[[nodiscard]] inline double fermi(double x) noexcept
{
    if (x > 0.0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}

/// exp(z) - 1 without cancellation for small |z|.
[[nodiscard]] inline complex expm1(complex z) noexcept
{
    const double re = std::expm1(z.real());
    const double half_sin = std::sin(0.5 * z.imag());
    return {re * std::cos(z.imag()) - 2.0 * half_sin * half_sin,
            std::exp(z.real()) * std::sin(z.imag())};
}

}  // namespace reslevel
