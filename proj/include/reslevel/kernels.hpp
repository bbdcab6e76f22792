#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "reslevel/errors.hpp"
#include "reslevel/special_functions.hpp"

namespace reslevel {

inline constexpr double pi = std::numbers::pi;

/// Level position, chemical potential, coupling rate and temperature.
/// Units: hbar = k_B = 1.
struct ModelParams {
    double epsilon_level = 0.0;
    double mu = 0.0;
    double gamma_coupling = 1.0;
    double temperature = 0.0;

    /// epsilon - mu
    [[nodiscard]] double detuning() const noexcept { return epsilon_level - mu; }

    void validate() const
    {
        if (!std::isfinite(epsilon_level) || !std::isfinite(mu) ||
            !std::isfinite(gamma_coupling) || !std::isfinite(temperature)) {
            throw DomainError("ModelParams: parameters must be finite");
        }
        if (!(gamma_coupling > 0.0)) {
            throw DomainError("ModelParams: gamma_coupling must be > 0");
        }
        if (temperature < 0.0) {
            throw DomainError("ModelParams: temperature must be >= 0");
        }
    }
};

namespace detail {

inline constexpr double kPanelRelTolerance = 1e-13;
inline constexpr double kPanelAbsTolerance = 1e-17;
inline constexpr int kPanelDepth = 12;
inline constexpr double kMaxPanels = 2.0e5;

/// Gauss-Kronrod (15/31) with bisection until the Kronrod error estimate is
/// below a relative or an absolute floor. The absolute floor matters for the
/// exponentially small late-time panels.
template <class F>
[[nodiscard]] double gauss_kronrod_adaptive(F& f, double a, double b, int depth)
{
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double err = 0.0;
    double l1 = 0.0;
    const double value = GK::integrate(f, a, b, 0, 0.0, &err, &l1);
    // Boost reports the non-adaptive error on the reference interval [-1, 1].
    err *= 0.5 * (b - a);
    if (depth == 0 || err <= std::max(kPanelRelTolerance * l1, kPanelAbsTolerance)) {
        return value;
    }
    const double mid = 0.5 * (a + b);
    return gauss_kronrod_adaptive(f, a, mid, depth - 1) +
           gauss_kronrod_adaptive(f, mid, b, depth - 1);
}

/// Integrates f over [a, b] panel by panel, breaking at the zeros l*pi/|eps|
/// of the correlation function. Very long ranges group several half periods
/// into one adaptive panel.
template <class F>
[[nodiscard]] double integrate_panels(F&& f, double a, double b, double eps)
{
    if (!(b > a)) {
        return 0.0;
    }
    auto panel = [&f](double lo, double hi) {
        return hi > lo ? gauss_kronrod_adaptive(f, lo, hi, kPanelDepth) : 0.0;
    };
    const double w = std::abs(eps);
    if (w == 0.0) {
        return panel(a, b);
    }
    const double period = pi / w;
    const double first = std::floor(a / period) + 1.0;
    const double last = std::ceil(b / period) - 1.0;
    const double count = last - first + 1.0;
    const double stride = count > kMaxPanels ? std::ceil(count / kMaxPanels) : 1.0;
    long double acc = 0.0L;
    double lo = a;
    for (double k = first; k <= last; k += stride) {
        const double hi = k * period;
        acc += panel(lo, hi);
        lo = hi;
    }
    acc += panel(lo, b);
    return static_cast<double>(acc);
}

/// gamma(s) without the s > 0 check; s = 0 returns the limit 2 eps / pi.
[[nodiscard]] inline double gamma_unchecked(const ModelParams& p, double s) noexcept
{
    const double eps = p.detuning();
    if (s == 0.0) {
        return 2.0 * eps / pi;
    }
    if (p.temperature == 0.0) {
        return 2.0 * std::sin(eps * s) / (pi * s);
    }
    // 2T sin / sinh(x) = 4T sin e^{-x} / (1 - e^{-2x})
    const double x = pi * p.temperature * s;
    return -4.0 * p.temperature * std::sin(eps * s) * std::exp(-x) / std::expm1(-2.0 * x);
}

/// Upper bound of e^{-Gamma s/2} |gamma(s)| with the oscillation removed.
[[nodiscard]] inline double kernel_envelope(const ModelParams& p, double s) noexcept
{
    const double decay = std::exp(-0.5 * p.gamma_coupling * s);
    const double eps = std::abs(p.detuning());
    if (s == 0.0) {
        return 2.0 * eps / pi;
    }
    const double cap = 2.0 * eps / pi;
    if (p.temperature == 0.0) {
        return decay * std::min(cap, 2.0 / (pi * s));
    }
    const double x = pi * p.temperature * s;
    return decay * std::min(cap, -4.0 * p.temperature * std::exp(-x) / std::expm1(-2.0 * x));
}

/// 1 - e^{-x}
[[nodiscard]] inline double one_minus_exp(double x) noexcept { return -std::expm1(-x); }

}  // namespace detail

/// Keldysh correlation function gamma(s) = 2T sin(eps s) / sinh(pi T s).
[[nodiscard]] inline double correlation_gamma(const ModelParams& p, double s)
{
    if (!(s > 0.0)) {
        throw DomainError("correlation_gamma: requires s > 0");
    }
    return detail::gamma_unchecked(p, s);
}

/// h(t) = int_0^t e^{-Gamma s/2} gamma(s) ds by panel quadrature.
[[nodiscard]] inline double h_of_t(const ModelParams& p, double t)
{
    if (t < 0.0) {
        throw DomainError("h_of_t: requires t >= 0");
    }
    const double gam = p.gamma_coupling;
    return detail::integrate_panels(
        [&](double s) { return std::exp(-0.5 * gam * s) * detail::gamma_unchecked(p, s); },
        0.0, t, p.detuning());
}

/// g(t) as the weighted single integral
/// int_0^t e^{-Gamma s/2} (1 - e^{-Gamma(t-s)}) / (1 - e^{-Gamma t}) gamma(s) ds.
[[nodiscard]] inline double g_of_t(const ModelParams& p, double t)
{
    if (t < 0.0) {
        throw DomainError("g_of_t: requires t >= 0");
    }
    if (t == 0.0) {
        return 0.0;
    }
    const double gam = p.gamma_coupling;
    const double norm = detail::one_minus_exp(gam * t);
    return detail::integrate_panels(
        [&](double s) {
            return std::exp(-0.5 * gam * s) * detail::one_minus_exp(gam * (t - s)) / norm *
                   detail::gamma_unchecked(p, s);
        },
        0.0, t, p.detuning());
}

/// g(infinity) = (2/pi) Im psi(1/2 + (Gamma/2 + i eps)/(2 pi T)); at T = 0
/// the limit (2/pi) arctan(2 eps / Gamma).
[[nodiscard]] inline double g_stationary(const ModelParams& p)
{
    const double eps = p.detuning();
    if (p.temperature == 0.0) {
        return 2.0 / pi * std::atan(2.0 * eps / p.gamma_coupling);
    }
    const complex alpha =
        0.5 + complex{0.5 * p.gamma_coupling, eps} / (2.0 * pi * p.temperature);
    return 2.0 / pi * digamma(alpha).imag();
}

/// h(t) from the digamma / Lerch series; requires T > 0.
[[nodiscard]] inline double h_lerch(const ModelParams& p, double t)
{
    if (!(p.temperature > 0.0)) {
        throw DomainError("h_lerch: requires T > 0");
    }
    if (t < 0.0) {
        throw DomainError("h_lerch: requires t >= 0");
    }
    if (t == 0.0) {
        return 0.0;
    }
    const double T = p.temperature;
    const double eps = p.detuning();
    const double gam = p.gamma_coupling;
    const complex alpha = 0.5 + complex{0.5 * gam, eps} / (2.0 * pi * T);
    const double x = std::exp(-2.0 * pi * T * t);
    const complex phase = std::exp(-complex{pi * T + 0.5 * gam, eps} * t);
    return 2.0 / pi * (digamma(alpha) + phase * detail::lerch_sum(x, alpha, -1)).imag();
}

/// g(t) from the digamma / Lerch series; requires T > 0 and t > 0.
///
/// The eta = - branch has a pole of psi(alpha_-) when pi T (2n+1) = Gamma/2 and
/// eps = 0, cancelled by the n-th Lerch term. Near it both are combined
/// analytically: psi(a) + 1/w = psi(a + n + 1) - sum_{k<n} 1/(k + a) and the
/// leftover difference of exponentials becomes expm1(-2 pi T w t) / w.
[[nodiscard]] inline double g_lerch(const ModelParams& p, double t)
{
    if (!(p.temperature > 0.0)) {
        throw DomainError("g_lerch: requires T > 0");
    }
    if (!(t > 0.0)) {
        throw DomainError("g_lerch: requires t > 0");
    }
    const double T = p.temperature;
    const double eps = p.detuning();
    const double gam = p.gamma_coupling;
    const double x = std::exp(-2.0 * pi * T * t);
    const complex phase = std::exp(-complex{pi * T, eps} * t);
    double acc = 0.0;
    for (int eta : {+1, -1}) {
        const complex alpha = 0.5 + complex{0.5 * eta * gam, eps} / (2.0 * pi * T);
        complex term;
        const long n0 = std::lround(-alpha.real());
        const complex w = static_cast<double>(n0) + alpha;
        if (eta < 0 && n0 >= 0 && std::abs(w) < 0.5) {
            complex regular = digamma(alpha + static_cast<double>(n0 + 1));
            for (long k = 0; k < n0; ++k) {
                regular -= 1.0 / (static_cast<double>(k) + alpha);
            }
            // expm1(z) / w with z = -2 pi T w t, finite at w = 0
            const complex z = -2.0 * pi * T * t * w;
            const complex ratio = std::abs(z) < 1e-8 ? 1.0 + 0.5 * z : expm1(z) / z;
            term = std::exp(-0.5 * gam * t) * (regular - 2.0 * pi * T * t * ratio) +
                   phase * detail::lerch_sum(x, alpha, n0);
        } else {
            term = std::exp(0.5 * eta * gam * t) * digamma(alpha) +
                   phase * detail::lerch_sum(x, alpha, -1);
        }
        acc += eta * term.imag();
    }
    return acc / (pi * std::sinh(0.5 * gam * t));
}

/// Precomputed h(t) and alpha(t) = (1 - e^{-Gamma t}) g(t) on a uniform grid.
///
/// Off-grid values are integrated from the nearest grid point below, so every
/// accessor carries full quadrature accuracy. Immutable after construction.
class KernelCache {
public:
    KernelCache(const ModelParams& p, double t_max, double dt = 0.0) : params_(p)
    {
        p.validate();
        if (!(t_max > 0.0)) {
            throw DomainError("KernelCache: requires t_max > 0");
        }
        const double eps = std::abs(p.detuning());
        if (dt <= 0.0) {
            dt = 0.01 / p.gamma_coupling;
            if (eps > 0.0) {
                dt = std::min(dt, 0.1 * pi / eps);
            }
        }
        constexpr double max_intervals = 2.0e6;
        const auto n = static_cast<std::size_t>(std::min(std::ceil(t_max / dt), max_intervals));
        step_ = t_max / static_cast<double>(n);
        grid_.resize(n + 1);
        h_.resize(n + 1);
        alpha_.resize(n + 1);
        jhat_.resize(n + 1);
        grid_[0] = h_[0] = alpha_[0] = jhat_[0] = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            grid_[i] = i == n ? t_max : static_cast<double>(i) * step_;
            h_[i] = h_[i - 1] + h_increment(grid_[i - 1], grid_[i]);
            jhat_[i] = std::exp(-p.gamma_coupling * (grid_[i] - grid_[i - 1])) * jhat_[i - 1] +
                       jhat_increment(grid_[i - 1], grid_[i]);
            alpha_[i] = h_[i] - jhat_[i];
        }
    }

    [[nodiscard]] const ModelParams& params() const noexcept { return params_; }

    /// True when p has the same detuning, coupling and temperature as the cache.
    [[nodiscard]] bool built_for(const ModelParams& p) const noexcept
    {
        return p.detuning() == params_.detuning() &&
               p.gamma_coupling == params_.gamma_coupling &&
               p.temperature == params_.temperature;
    }
    [[nodiscard]] const std::vector<double>& grid() const noexcept { return grid_; }
    [[nodiscard]] const std::vector<double>& h_values() const noexcept { return h_; }
    [[nodiscard]] const std::vector<double>& alpha_values() const noexcept { return alpha_; }
    [[nodiscard]] double t_max() const noexcept { return grid_.back(); }
    [[nodiscard]] double step() const noexcept { return step_; }

    [[nodiscard]] double h(double t) const
    {
        const std::size_t i = index_below(t);
        return h_[i] + h_increment(grid_[i], t);
    }

    [[nodiscard]] double alpha(double t) const
    {
        const std::size_t i = index_below(t);
        const double jhat = std::exp(-params_.gamma_coupling * (t - grid_[i])) * jhat_[i] +
                            jhat_increment(grid_[i], t);
        return h_[i] + h_increment(grid_[i], t) - jhat;
    }

    [[nodiscard]] double g(double t) const { return g_divisor(t, 0.0); }

    /// g(t, t') for t >= t'; g(t, 0) = g(t) and g(t, t) = h(t).
    [[nodiscard]] double g_divisor(double t, double t_prime) const
    {
        check_pair(t, t_prime);
        const double gam = params_.gamma_coupling;
        const double delta = t - t_prime;
        if (delta == 0.0) {
            return h(t);
        }
        if (gam * delta >= kDirectThreshold) {
            return alpha_divisor(t, t_prime) / detail::one_minus_exp(gam * delta);
        }
        // g(t,t') = h(t') + int_{t'}^t e^{-Gamma s/2} gamma(s)
        //           (1 - e^{-Gamma(t-s)}) / (1 - e^{-Gamma(t-t')}) ds
        const double norm = detail::one_minus_exp(gam * delta);
        const double rest = detail::integrate_panels(
            [&](double s) {
                return std::exp(-0.5 * gam * s) * detail::one_minus_exp(gam * (t - s)) / norm *
                       detail::gamma_unchecked(params_, s);
            },
            t_prime, t, params_.detuning());
        return h(t_prime) + rest;
    }

    /// alpha(t, t') = alpha(t) - e^{-Gamma(t-t')} alpha(t') = (1 - e^{-Gamma(t-t')}) g(t,t').
    [[nodiscard]] double alpha_divisor(double t, double t_prime) const
    {
        check_pair(t, t_prime);
        const double gam = params_.gamma_coupling;
        const double delta = t - t_prime;
        if (gam * delta >= kDirectThreshold) {
            return alpha(t) - std::exp(-gam * delta) * alpha(t_prime);
        }
        return detail::one_minus_exp(gam * delta) * g_divisor(t, t_prime);
    }

private:
    static constexpr double kDirectThreshold = 0.1;

    void check_pair(double t, double t_prime) const
    {
        if (t < t_prime) {
            throw DomainError("g_divisor: requires t >= t'");
        }
        if (t_prime < 0.0) {
            throw DomainError("g_divisor: requires t' >= 0");
        }
    }

    [[nodiscard]] std::size_t index_below(double t) const
    {
        if (t < 0.0) {
            throw DomainError("KernelCache: requires t >= 0");
        }
        const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
        return static_cast<std::size_t>(std::distance(grid_.begin(), it)) - 1;
    }

    [[nodiscard]] double h_increment(double a, double b) const
    {
        const double gam = params_.gamma_coupling;
        return detail::integrate_panels(
            [&](double s) { return std::exp(-0.5 * gam * s) * detail::gamma_unchecked(params_, s); },
            a, b, params_.detuning());
    }

    // int_a^b e^{-Gamma(b-s)} e^{-Gamma s/2} gamma(s) ds
    [[nodiscard]] double jhat_increment(double a, double b) const
    {
        const double gam = params_.gamma_coupling;
        return detail::integrate_panels(
            [&](double s) {
                return std::exp(-gam * (b - s) - 0.5 * gam * s) * detail::gamma_unchecked(params_, s);
            },
            a, b, params_.detuning());
    }

    ModelParams params_;
    double step_ = 0.0;
    std::vector<double> grid_;
    std::vector<double> h_;
    std::vector<double> alpha_;
    std::vector<double> jhat_;
};

/// g(t, t') through the cache; see KernelCache::g_divisor.
[[nodiscard]] inline double g_divisor(const ModelParams& p, double t, double t_prime,
                                      const KernelCache& cache)
{
    if (!cache.built_for(p)) {
        throw DomainError("g_divisor: cache was built for different parameters");
    }
    return cache.g_divisor(t, t_prime);
}

}  // namespace reslevel
