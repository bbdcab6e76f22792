#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "reslevel/env_info.hpp"
#include "reslevel/errors.hpp"
#include "reslevel/kernels.hpp"
#include "reslevel/liouville.hpp"
#include "reslevel/solvers.hpp"

namespace reslevel {

inline constexpr double kRootTolerance = 1e-8;
inline constexpr double kSemigroupTolerance = 1e-8;
inline constexpr double kCpDivisibilityTolerance = 1e-9;
inline constexpr double kMinTimeScaled = 1e-6;  // t_min = kMinTimeScaled / Gamma
inline constexpr int kFamilySize = 41;
inline constexpr double kDefaultHorizonScaled = 40.0;  // search horizon in units of 1/Gamma

enum class Regime { semigroup, cp_divisible, non_cp_divisible };

[[nodiscard]] inline std::string_view to_string(Regime r)
{
    switch (r) {
    case Regime::semigroup:
        return "Semigroup";
    case Regime::cp_divisible:
        return "CPDivisible";
    case Regime::non_cp_divisible:
        return "NonCPDivisible";
    }
    return "?";
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] bool contains(double t) const { return t >= lo && t <= hi; }
    [[nodiscard]] double width() const { return hi - lo; }
};

struct DivisibilityReport {
    Regime regime = Regime::semigroup;
    std::vector<Interval> cp_windows;  // |h| <= 1
    double h_max = 0.0;                // sup |h| on the scan
    std::vector<double> witnesses;     // argmax |h| inside each forbidden window
    double t_max = 0.0;

    /// Complement of cp_windows in [0, t_max]: the |h| > 1 intervals.
    [[nodiscard]] std::vector<Interval> forbidden_windows() const
    {
        std::vector<Interval> out;
        double start = 0.0;
        for (const Interval& w : cp_windows) {
            if (w.lo > start) {
                out.push_back({start, w.lo});
            }
            start = w.hi;
        }
        if (start < t_max) {
            out.push_back({start, t_max});
        }
        return out;
    }
};

struct TraceRecord {
    double time = 0.0;
    double parity = 0.0;
    double occupation = 0.0;
    double current = 0.0;
    double g = 0.0;
    double h = 0.0;
    double s_sys = 0.0;
    double s_env = 0.0;
    double coherent_information = 0.0;
    double mismatch = 0.0;
};

namespace detail {

/// Bisection on a sign change of f in [lo, hi] (f(lo) f(hi) <= 0) down to double
/// resolution or max_iter halvings.
template <class F>
[[nodiscard]] double bisect_root(F&& f, double lo, double hi, double f_lo, int max_iter = 200)
{
    for (int i = 0; i < max_iter; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        const double fm = f(mid);
        if (fm == 0.0) {
            return mid;
        }
        if ((fm > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// All sign changes of f on the scan points, each refined by bisection. Exact zeros at
/// scan points are reported as they are.
template <class F>
[[nodiscard]] std::vector<double> scan_roots(F&& f, const std::vector<double>& t,
                                             const std::vector<double>& values)
{
    std::vector<double> roots;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        const double a = values[i];
        const double b = values[i + 1];
        if (a == 0.0) {
            roots.push_back(t[i]);
        } else if ((a > 0.0) != (b > 0.0) && b != 0.0) {
            roots.push_back(bisect_root(f, t[i], t[i + 1], a));
        }
    }
    if (!values.empty() && values.back() == 0.0) {
        roots.push_back(t.back());
    }
    return roots;
}

/// Scan points: t_min followed by the cache grid points above it.
[[nodiscard]] inline std::vector<double> scan_times(const KernelCache& cache, double t_min)
{
    std::vector<double> out{t_min};
    for (double t : cache.grid()) {
        if (t > t_min) {
            out.push_back(t);
        }
    }
    return out;
}

[[nodiscard]] inline double g_from_cache(const KernelCache& cache, double t)
{
    return t == 0.0 ? 0.0 : cache.alpha(t) / one_minus_exp(cache.params().gamma_coupling * t);
}

[[nodiscard]] inline double min_time(const ModelParams& p) { return kMinTimeScaled / p.gamma_coupling; }

inline void require_parity(double parity0, const char* where)
{
    if (!(std::abs(parity0) <= 1.0)) {
        throw DomainError(std::string(where) + ": requires |parity0| <= 1");
    }
}

}  // namespace detail

[[nodiscard]] inline DivisibilityReport classify_divisibility(const KernelCache& cache)
{
    DivisibilityReport out;
    out.t_max = cache.t_max();
    const std::vector<double>& t = cache.grid();
    const std::vector<double>& h = cache.h_values();
    double spread = 0.0;
    for (std::size_t i = 1; i < h.size(); ++i) {
        spread = std::max(spread, std::abs(h[i] - h[1]));
        out.h_max = std::max(out.h_max, std::abs(h[i]));
    }
    if (spread <= kSemigroupTolerance) {
        out.regime = Regime::semigroup;
        out.cp_windows = {{0.0, out.t_max}};
        return out;
    }
    if (out.h_max <= 1.0 + kCpDivisibilityTolerance) {
        out.regime = Regime::cp_divisible;
        out.cp_windows = {{0.0, out.t_max}};
        return out;
    }
    out.regime = Regime::non_cp_divisible;
    std::vector<double> slack(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        slack[i] = 1.0 - std::abs(h[i]);
    }
    const std::vector<double> edges =
        detail::scan_roots([&](double s) { return 1.0 - std::abs(cache.h(s)); }, t, slack);
    // h(0) = 0, so the first window starts inside |h| <= 1
    double start = 0.0;
    bool inside = true;
    for (double e : edges) {
        if (inside) {
            out.cp_windows.push_back({start, e});
        } else {
            start = e;
        }
        inside = !inside;
    }
    if (inside) {
        out.cp_windows.push_back({start, out.t_max});
    }
    for (const Interval& w : out.forbidden_windows()) {
        double best = w.lo;
        double best_h = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (w.contains(t[i]) && std::abs(h[i]) > best_h) {
                best_h = std::abs(h[i]);
                best = t[i];
            }
        }
        out.witnesses.push_back(best);
    }
    return out;
}

[[nodiscard]] inline DivisibilityReport classify_divisibility(const ModelParams& p, double t_max)
{
    if (!(t_max > 0.0)) {
        throw DomainError("classify_divisibility: requires t_max > 0");
    }
    return classify_divisibility(KernelCache(p, t_max));
}

/// Smallest t_r in (t_min, t_max] with g(t_r) = parity0.
[[nodiscard]] inline std::optional<double> reentrance_time(const KernelCache& cache, double parity0)
{
    detail::require_parity(parity0, "reentrance_time");
    const double t_min = detail::min_time(cache.params());
    if (!(cache.t_max() > t_min)) {
        return std::nullopt;
    }
    const double G = cache.params().gamma_coupling;
    const std::vector<double> t = detail::scan_times(cache, t_min);
    std::vector<double> r(t.size());
    r[0] = detail::g_from_cache(cache, t_min) - parity0;
    const std::vector<double>& grid = cache.grid();
    const std::vector<double>& alpha = cache.alpha_values();
    const std::size_t offset = grid.size() - (t.size() - 1);
    for (std::size_t i = 1; i < t.size(); ++i) {
        r[i] = alpha[offset + i - 1] / detail::one_minus_exp(G * t[i]) - parity0;
    }
    const std::vector<double> roots = detail::scan_roots(
        [&](double s) { return detail::g_from_cache(cache, s) - parity0; }, t, r);
    if (roots.empty()) {
        return std::nullopt;
    }
    return roots.front();
}

[[nodiscard]] inline std::optional<double> reentrance_time(const ModelParams& p, double parity0)
{
    return reentrance_time(KernelCache(p, kDefaultHorizonScaled / p.gamma_coupling), parity0);
}

/// Parity extrema: roots of parity(t) - h(t) in (t_min, t_max].
[[nodiscard]] inline std::vector<double> extrema_times(const KernelCache& cache, double parity0)
{
    detail::require_parity(parity0, "extrema_times");
    const double G = cache.params().gamma_coupling;
    const double t_min = detail::min_time(cache.params());
    if (!(cache.t_max() > t_min)) {
        return {};
    }
    auto residual = [&](double s) { return std::exp(-G * s) * parity0 + cache.alpha(s) - cache.h(s); };
    const std::vector<double> t = detail::scan_times(cache, t_min);
    std::vector<double> r(t.size());
    r[0] = residual(t_min);
    const std::vector<double>& grid = cache.grid();
    const std::size_t offset = grid.size() - (t.size() - 1);
    for (std::size_t i = 1; i < t.size(); ++i) {
        const std::size_t k = offset + i - 1;
        r[i] = std::exp(-G * t[i]) * parity0 + cache.alpha_values()[k] - cache.h_values()[k];
    }
    return detail::scan_roots(residual, t, r);
}

[[nodiscard]] inline std::vector<double> extrema_times(const ModelParams& p, double parity0, double t_max)
{
    if (!(t_max > 0.0)) {
        throw DomainError("extrema_times: requires t_max > 0");
    }
    return extrema_times(KernelCache(p, t_max), parity0);
}

/// Zeros t_p = l pi / |eps| <= t_max of the correlation function.
[[nodiscard]] inline std::vector<double> plateau_points(const ModelParams& p, double t_max)
{
    std::vector<double> out;
    const double eps = std::abs(p.detuning());
    if (eps == 0.0) {
        return out;
    }
    for (int l = 1; l * pi / eps <= t_max; ++l) {
        out.push_back(l * pi / eps);
    }
    return out;
}

/// Second derivative of the parity at an extremum t_e: the parity component of
/// Sigma(t_e) rho(t_e), which equals Gamma e^{-Gamma t_e/2} gamma(t_e).
[[nodiscard]] inline double extremum_curvature(const ModelParams& p, double t_e)
{
    const Mat4 sigma = nz_kernel(p, t_e).regular_part.matrix;
    // only the trace coordinate of rho(t_e) enters: sigma maps it into the parity one
    Vec4 rho = Vec4::Zero();
    rho(0) = 1.0 / std::sqrt(2.0);
    return std::sqrt(2.0) * (sigma * rho)(3).real();
}

struct PlateauCurvature {
    double t_p = 0.0;
    double t_e = 0.0;
    double curvature = 0.0;
};

/// For each plateau point, the extremum of the parity0 trajectory nearest to it and the
/// curvature there. Plateau points without any extremum in (0, t_max] are skipped.
[[nodiscard]] inline std::vector<PlateauCurvature> plateau_curvatures(const ModelParams& p, double parity0,
                                                                      double t_max)
{
    std::vector<PlateauCurvature> out;
    const std::vector<double> tp = plateau_points(p, t_max);
    if (tp.empty()) {
        return out;
    }
    const std::vector<double> te = extrema_times(p, parity0, t_max);
    if (te.empty()) {
        return out;
    }
    for (double t : tp) {
        const auto near = std::min_element(te.begin(), te.end(), [t](double a, double b) {
            return std::abs(a - t) < std::abs(b - t);
        });
        out.push_back({t, *near, extremum_curvature(p, *near)});
    }
    return out;
}

/// Initial parity that puts a parity extremum at t_e: g + e^{Gamma t}(h - g), with the
/// second term evaluated as (1 - e^{-Gamma t})^{-1} int_0^t 2 sinh(Gamma s/2) gamma(s) ds.
[[nodiscard]] inline double extremum_initial_condition(const ModelParams& p, double t_e)
{
    p.validate();
    if (!(t_e > 0.0)) {
        throw DomainError("extremum_initial_condition: requires t_e > 0");
    }
    const double G = p.gamma_coupling;
    const double lifted = detail::integrate_panels(
        [&](double s) { return 2.0 * std::sinh(0.5 * G * s) * detail::gamma_unchecked(p, s); }, 0.0, t_e,
        p.detuning());
    return g_of_t(p, t_e) + lifted / detail::one_minus_exp(G * t_e);
}

/// Minimum of 1 - |b(t)|^2 over initial states, for a given g(t).
[[nodiscard]] inline double pp_minimum_from_g(double gamma_t, double g)
{
    const double e = std::exp(-gamma_t);
    const double one_minus_e = detail::one_minus_exp(gamma_t);
    if (std::abs(g) <= 1.0) {
        return one_minus_e * (1.0 - g * g);
    }
    return one_minus_e * (1.0 - std::abs(g)) * (1.0 + e + one_minus_e * std::abs(g));
}

[[nodiscard]] inline double pp_minimum(const ModelParams& p, double t)
{
    p.validate();
    if (!(t >= 0.0)) {
        throw DomainError("pp_minimum: requires t >= 0");
    }
    return pp_minimum_from_g(p.gamma_coupling * t, t == 0.0 ? 0.0 : g_of_t(p, t));
}

/// Parity, current and information measures along a grid for a fermion-mode
/// initial state. Current I = d<n>/dt = (Gamma/2)(parity - h), positive when filling.
[[nodiscard]] inline std::vector<TraceRecord> current_trace(const ModelParams& p, double parity0,
                                                            const TimeGrid& grid)
{
    detail::require_parity(parity0, "current_trace");
    grid.validate();
    const KernelCache cache(p, grid.t_end);
    DensityMatrix rho0;
    rho0.parity = parity0;
    const double G = p.gamma_coupling;
    std::vector<TraceRecord> out;
    out.reserve(static_cast<std::size_t>(grid.n_steps) + 1);
    for (double t : grid.times()) {
        TraceRecord r;
        r.time = t;
        r.g = detail::g_from_cache(cache, t);
        r.h = t == 0.0 ? 0.0 : cache.h(t);
        r.parity = std::exp(-G * t) * parity0 + (t == 0.0 ? 0.0 : cache.alpha(t));
        r.occupation = 0.5 * (1.0 - r.parity);
        r.current = 0.5 * G * (r.parity - r.h);
        const InfoMeasures m = info_measures(p, t, rho0, r.g);
        r.s_sys = m.s_sys;
        r.s_env = m.s_env;
        r.coherent_information = m.coherent_information;
        r.mismatch = m.mismatch;
        out.push_back(r);
    }
    return out;
}

/// Initial parities of a family scan: n equally spaced values in [-1, 1].
[[nodiscard]] inline std::vector<double> family_parities(int n = kFamilySize)
{
    if (n < 2) {
        throw DomainError("family_parities: requires n >= 2");
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / (n - 1);
    }
    return out;
}

/// Currents (Gamma/2)(parity - h) of the family members at time t.
[[nodiscard]] inline std::vector<double> family_currents(const KernelCache& cache,
                                                         const std::vector<double>& parities, double t)
{
    const double G = cache.params().gamma_coupling;
    const double a = t == 0.0 ? 0.0 : cache.alpha(t);
    const double h = t == 0.0 ? 0.0 : cache.h(t);
    std::vector<double> out;
    out.reserve(parities.size());
    for (double p0 : parities) {
        out.push_back(0.5 * G * (std::exp(-G * t) * p0 + a - h));
    }
    return out;
}

/// True when the family currents at t straddle zero, i.e. the initial parity that
/// reverses the current exactly at t lies inside the scanned range.
[[nodiscard]] inline bool family_reverses_at(const KernelCache& cache, const std::vector<double>& parities,
                                             double t)
{
    const std::vector<double> c = family_currents(cache, parities, t);
    const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
    return *lo <= 0.0 && *hi >= 0.0;
}

/// Current zero-crossings (= parity extrema) of every family member.
struct FamilyCrossings {
    std::vector<double> parities;
    std::vector<std::vector<double>> crossings;

    [[nodiscard]] std::vector<double> all_times() const
    {
        std::vector<double> out;
        for (const auto& c : crossings) {
            out.insert(out.end(), c.begin(), c.end());
        }
        std::sort(out.begin(), out.end());
        return out;
    }
};

[[nodiscard]] inline FamilyCrossings family_crossings(const KernelCache& cache, int n = kFamilySize)
{
    FamilyCrossings out;
    out.parities = family_parities(n);
    for (double p0 : out.parities) {
        out.crossings.push_back(extrema_times(cache, p0));
    }
    return out;
}

/// Largest gap between consecutive crossing times of the whole family inside
/// [t_lo, t_hi], counting the interval ends.
[[nodiscard]] inline double largest_crossing_gap(const FamilyCrossings& family, double t_lo, double t_hi)
{
    double prev = t_lo;
    double gap = 0.0;
    for (double t : family.all_times()) {
        if (t < t_lo || t > t_hi) {
            continue;
        }
        gap = std::max(gap, t - prev);
        prev = t;
    }
    return std::max(gap, t_hi - prev);
}

}  // namespace reslevel
