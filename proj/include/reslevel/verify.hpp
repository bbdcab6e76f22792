#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "reslevel/choi_kraus.hpp"
#include "reslevel/diagnostics.hpp"
#include "reslevel/env_info.hpp"
#include "reslevel/figures.hpp"
#include "reslevel/kernels.hpp"
#include "reslevel/liouville.hpp"
#include "reslevel/solvers.hpp"
#include "reslevel/special_functions.hpp"

namespace reslevel {

enum class VerifyLevel { quick, full };

[[nodiscard]] inline std::string_view to_string(VerifyLevel l)
{
    return l == VerifyLevel::quick ? "quick" : "full";
}

[[nodiscard]] inline VerifyLevel parse_level(std::string_view s)
{
    if (s == "quick") {
        return VerifyLevel::quick;
    }
    if (s == "full") {
        return VerifyLevel::full;
    }
    throw ConfigError("level", "expected quick or full, got '" + std::string(s) + "'");
}

struct VerifyOptions {
    VerifyLevel level = VerifyLevel::quick;
    /// Test-only negative control: replaces g(t) wherever a dynamical map is built.
    std::optional<double> injected_g;
};

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
    double budget = 0.0;  // seconds; 0 = none
};

struct VerifyReport {
    VerifyLevel level = VerifyLevel::quick;
    std::vector<CheckResult> checks;

    [[nodiscard]] bool passed() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
    }

    /// One "PASS/FAIL criterion N: name (detail)" line per check.
    [[nodiscard]] std::string text() const
    {
        std::ostringstream os;
        for (const CheckResult& c : checks) {
            os << (c.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << " ["
               << c.detail << "; " << c.seconds << " s";
            if (c.budget > 0.0) {
                os << " of " << c.budget << " s";
            }
            os << "]\n";
        }
        return os.str();
    }
};

namespace detail {

/// Collects the failed sub-checks of one criterion together with the worst values seen.
class Ledger {
public:
    void expect(bool ok, const std::string& what)
    {
        if (!ok && failures_.size() < 5) {
            failures_.push_back(what);
        }
        failed_ = failed_ || !ok;
    }
    void less(double value, double bound, const std::string& what)
    {
        expect(value < bound, what + " = " + fmt(value) + " >= " + fmt(bound));
    }
    void note(const std::string& s) { notes_.push_back(s); }

    [[nodiscard]] bool ok() const { return !failed_; }
    [[nodiscard]] std::string detail() const
    {
        std::string out;
        for (const auto& s : failed_ ? failures_ : notes_) {
            out += (out.empty() ? "" : "; ") + s;
        }
        return out;
    }

    static std::string fmt(double v, int digits = 3)
    {
        std::ostringstream os;
        os.precision(digits);
        os << v;
        return os.str();
    }

private:
    bool failed_ = false;
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

template <class F>
CheckResult timed(int id, std::string name, double budget, F&& body)
{
    CheckResult r;
    r.id = id;
    r.name = std::move(name);
    r.budget = budget;
    Ledger ledger;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(ledger);
    } catch (const std::exception& e) {
        ledger.expect(false, std::string("exception: ") + e.what());
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget > 0.0) {
        ledger.less(r.seconds, budget, "runtime");
    }
    r.pass = ledger.ok();
    r.detail = ledger.detail();
    return r;
}

[[nodiscard]] inline double map_g(const VerifyOptions& o, double g) { return o.injected_g.value_or(g); }

struct GridPoint {
    ModelParams p;
    double t;
    double g;
    double h;
};

/// Detunings {0, 0.5, 2 pi, 10 pi} x pi T/(Gamma/2) in {1e-3, 1, 10, 20}, 200 times on [0, 30].
/// mu is shifted off zero so the level energy and the detuning differ.
[[nodiscard]] inline std::vector<GridPoint> representation_grid()
{
    std::vector<GridPoint> out;
    for (double eps : {0.0, 0.5, 2.0 * pi, 10.0 * pi}) {
        for (double piT : {1e-3, 1.0, 10.0, 20.0}) {
            ModelParams p;
            p.mu = -0.2;
            p.epsilon_level = p.mu + eps;
            p.temperature = piT * 0.5 / pi;
            const KernelCache cache(p, 30.0);
            for (int i = 0; i < 200; ++i) {
                const double t = 30.0 * i / 199.0;
                out.push_back({p, t, t == 0.0 ? 0.0 : cache.g(t), t == 0.0 ? 0.0 : cache.h(t)});
            }
        }
    }
    return out;
}

[[nodiscard]] inline double mat_err(const Mat2& a, const Mat2& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace detail

/// Overshoot of h above 1 in the T, Gamma -> 0 limit.
[[nodiscard]] inline CheckResult check_overshoot()
{
    return detail::timed(1, "overshoot constant max h = (2/pi) Si(pi)", 1.0, [](detail::Ledger& l) {
        ModelParams p;
        p.epsilon_level = 1.0;
        p.gamma_coupling = 1e-6;
        p.temperature = 1e-6;
        // coarse scan, then Brent on the bracketing cell
        double best_t = 0.0;
        double best_h = -1.0;
        const int n = 64;
        const double span = 4.0 * pi;
        for (int i = 1; i <= n; ++i) {
            const double t = span * i / n;
            const double h = h_of_t(p, t);
            if (h > best_h) {
                best_h = h;
                best_t = t;
            }
        }
        const auto [t_star, neg_h] = boost::math::tools::brent_find_minima(
            [&](double t) { return -h_of_t(p, t); }, best_t - span / n, best_t + span / n, 40);
        const double h_max = -neg_h;
        const double si = 2.0 / pi * sine_integral(pi);
        l.less(std::abs(h_max - 1.17898), 1e-3, "|max h - 1.17898|");
        l.less(std::abs(h_max - si), 1e-3, "|max h - (2/pi)Si(pi)|");
        l.note("max h = " + detail::Ledger::fmt(h_max, 8) + " at t = " + detail::Ledger::fmt(t_star));
    });
}

[[nodiscard]] inline CheckResult check_representations(const VerifyOptions& o = {})
{
    return detail::timed(2, "closed, exponential and Kraus forms agree", 10.0, [&](detail::Ledger& l) {
        double worst_exp = 0.0;
        double worst_kraus = 0.0;
        for (const detail::GridPoint& x : detail::representation_grid()) {
            const double g = detail::map_g(o, x.g);
            const Mat4 closed = propagator_closed(x.p, x.t, g).matrix;
            worst_exp = std::max(worst_exp, max_norm(closed - propagator_exponential(x.p, x.t, g).matrix));
            worst_kraus = std::max(
                worst_kraus, max_norm(closed - map_from_kraus(kraus_closed_form(x.p, x.t, g).operators).matrix));
        }
        l.less(worst_exp, 1e-10, "max |closed - exponential|");
        l.less(worst_kraus, 1e-9, "max |closed - Kraus|");
        l.note("3200 points, exponential " + detail::Ledger::fmt(worst_exp) + ", Kraus " +
               detail::Ledger::fmt(worst_kraus));
    });
}

[[nodiscard]] inline CheckResult check_factorization()
{
    return detail::timed(3, "divisor factorization Pi(t) = Pi(t,t') Pi(t')", 5.0, [](detail::Ledger& l) {
        const std::vector<ModelParams> sets = {figure_params(20.0, 1e-3), figure_params(4.0, 10.0),
                                               figure_params(4.0, 1e-3), figure_params(4.0, 20.0)};
        std::vector<KernelCache> caches;
        for (const ModelParams& p : sets) {
            caches.emplace_back(p, 20.0);
        }
        std::mt19937_64 rng(20240611);
        std::uniform_real_distribution<double> u(0.0, 20.0);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const std::size_t k = static_cast<std::size_t>(i) % sets.size();
            double t = u(rng);
            double tp = u(rng);
            if (tp > t) {
                std::swap(t, tp);
            }
            const ModelParams& p = sets[k];
            const KernelCache& c = caches[k];
            const Mat4 full = propagator_closed(p, t, t == 0.0 ? 0.0 : c.g(t)).matrix;
            const Mat4 first = propagator_closed(p, tp, tp == 0.0 ? 0.0 : c.g(tp)).matrix;
            worst = std::max(worst, max_norm(full - divisor(p, t, tp, c).matrix * first));
        }
        l.less(worst, 1e-10, "max factorization error");
        l.note("100 pairs, worst " + detail::Ledger::fmt(worst));
    });
}

[[nodiscard]] inline CheckResult check_cp_criteria(const VerifyOptions& o = {})
{
    return detail::timed(4, "CP iff |g| <= 1, CP-divisible iff sup |h| <= 1", 0.0, [&](detail::Ledger& l) {
        constexpr double delta = 1e-6;
        int cp_mismatch = 0;
        int div_mismatch = 0;
        int div_checked = 0;
        std::optional<KernelCache> cache;
        for (const detail::GridPoint& x : detail::representation_grid()) {
            const double m = cp_minimum(choi_of(propagator_closed(x.p, x.t, detail::map_g(o, x.g))));
            cp_mismatch += (m >= -kCpTolerance) != (std::abs(x.g) <= 1.0) ? 1 : 0;
            if (x.t < 2.0 * delta || std::abs(std::abs(x.h) - 1.0) < 1e-4) {
                continue;
            }
            if (!cache || !cache->built_for(x.p)) {
                cache.emplace(x.p, 30.0);
            }
            const double md = cp_minimum(choi_of(divisor(x.p, x.t, x.t - delta, *cache)));
            div_mismatch += (md >= -1e-14) != (std::abs(x.h) <= 1.0) ? 1 : 0;
            ++div_checked;
        }
        l.expect(cp_mismatch == 0, std::to_string(cp_mismatch) + " Choi/|g| sign disagreements");
        l.expect(div_mismatch == 0, std::to_string(div_mismatch) + " divisor Choi/|h| sign disagreements");

        const DivisibilityReport fig3 = classify_divisibility(figure_params(20.0, 1e-3), 20.0);
        l.expect(fig3.regime == Regime::non_cp_divisible,
                 "Fig. 3 parameters classified " + std::string(to_string(fig3.regime)));
        l.expect(!fig3.forbidden_windows().empty(), "Fig. 3 parameters without forbidden windows");
        const DivisibilityReport fig7a = classify_divisibility(figure_params(4.0, 20.0), 20.0);
        l.expect(fig7a.regime == Regime::cp_divisible,
                 "Fig. 7(a) parameters classified " + std::string(to_string(fig7a.regime)));
        l.note("3200 Choi signs, " + std::to_string(div_checked) + " divisor signs; Fig. 3 " +
               std::to_string(fig3.forbidden_windows().size()) + " forbidden windows, h_max " +
               detail::Ledger::fmt(fig3.h_max) + "; Fig. 7(a) h_max " + detail::Ledger::fmt(fig7a.h_max));
    });
}

[[nodiscard]] inline CheckResult check_solvers()
{
    return detail::timed(5, "TCL and NZ solvers reproduce the closed form", 30.0, [](detail::Ledger& l) {
        auto parity_error = [](const ModelParams& p, const DensityMatrix& rho0, const Trajectory& tr) {
            double worst = 0.0;
            for (std::size_t i = 0; i < tr.times.size(); ++i) {
                worst = std::max(worst, std::abs(tr.states[i].parity - evolve_state(p, rho0, tr.times[i]).parity));
            }
            return worst;
        };
        double worst_tcl = 0.0;
        double worst_nz = 0.0;
        for (const ModelParams& p : {figure_params(20.0, 1e-3), figure_params(4.0, 10.0), figure_params(4.0, 1e-3)}) {
            for (double p0 : {1.0, -0.6}) {
                const DensityMatrix rho0 = detail::parity_state_of(p0);
                worst_tcl = std::max(worst_tcl, parity_error(p, rho0, integrate_tcl(p, rho0, TimeGrid{20.0, 400})));
                worst_nz = std::max(worst_nz,
                                    parity_error(p, rho0, integrate_nz(p, rho0, TimeGrid::resolving(p, 20.0, 40))));
            }
        }
        l.less(worst_tcl, 1e-6, "TCL parity error");
        l.less(worst_nz, 2e-4, "NZ parity error");

        const ModelParams p = figure_params(4.0, 1e-3);
        const DensityMatrix rho0 = detail::parity_state_of(1.0);
        std::vector<double> err;
        for (int n : {100, 200, 400}) {
            err.push_back(parity_error(p, rho0, integrate_nz(p, rho0, TimeGrid{10.0, n})));
        }
        const double order1 = std::log2(err[0] / err[1]);
        const double order2 = std::log2(err[1] / err[2]);
        l.less(std::abs(order1 - 2.0), 0.25, "|NZ order (100/200) - 2|");
        l.less(std::abs(order2 - 2.0), 0.25, "|NZ order (200/400) - 2|");
        l.note("TCL " + detail::Ledger::fmt(worst_tcl) + ", NZ " + detail::Ledger::fmt(worst_nz) + ", NZ orders " +
               detail::Ledger::fmt(order1) + ", " + detail::Ledger::fmt(order2));
    });
}

[[nodiscard]] inline CheckResult check_microscopic_oracle()
{
    return detail::timed(6, "microscopic oracle reproduces the occupation", 60.0, [](detail::Ledger& l) {
        const ModelParams p = figure_params(4.0, 1e-3);
        const DensityMatrix rho0 = detail::parity_state_of(1.0);
        const TimeGrid grid{10.0, 100};
        auto worst = [&](const BathDiscretization& bath) {
            const OccupationTrajectory out = microscopic_oracle(p, bath, rho0, grid);
            l.expect(out.warnings.empty(), "oracle warned about revivals");
            double w = 0.0;
            for (std::size_t i = 0; i < out.times.size(); ++i) {
                const double ref = 0.5 * (1.0 - evolve_state(p, rho0, out.times[i]).parity);
                w = std::max(w, std::abs(out.occupation[i] - ref));
            }
            return w;
        };
        const double base = worst({2000, 200.0});
        const double doubled = worst({4000, 400.0});
        l.less(base, 2e-2, "N = 2000, W = 200 deviation");
        l.expect(doubled <= 0.5 * base || doubled < 1e-2,
                 "doubling W gave " + detail::Ledger::fmt(doubled) + " from " + detail::Ledger::fmt(base));
        l.note("deviation " + detail::Ledger::fmt(base) + ", doubled bath " + detail::Ledger::fmt(doubled));
    });
}

[[nodiscard]] inline CheckResult check_reentrance()
{
    return detail::timed(7, "reentrance at t_r, none for Markov-only", 0.0, [](detail::Ledger& l) {
        const ModelParams p = figure_params(4.0, 10.0);
        const double t_r = 2.0;
        const double p0 = g_of_t(p, t_r);
        const DensityMatrix rho0 = detail::parity_state_of(p0);
        l.less(std::abs(evolve_state(p, rho0, t_r).parity - p0), 1e-8, "|closed-form parity(t_r) - parity(0)|");
        const Trajectory tcl = integrate_tcl(p, rho0, TimeGrid{t_r, 100});
        l.less(std::abs(tcl.states.back().parity - p0), 1e-8, "|TCL parity(t_r) - parity(0)|");
        // Markov-only relaxes monotonically towards g(inf) and never returns to p0
        const double side = g_stationary(p) - p0;
        int recross = 0;
        for (int i = 1; i <= 4000; ++i) {
            recross += (markov_only(p, rho0, 0.01 * i).parity - p0) * side > 0.0 ? 0 : 1;
        }
        l.expect(recross == 0, std::to_string(recross) + " Markov-only returns to parity(0)");
        const auto found = reentrance_time(p, p0);
        l.expect(found.has_value(), "reentrance_time found nothing");
        l.note("parity(0) = " + detail::Ledger::fmt(p0) +
               (found ? ", first reentrance at " + detail::Ledger::fmt(*found) : ""));
    });
}

[[nodiscard]] inline CheckResult check_current_families()
{
    return detail::timed(8, "current-reversal families", 0.0, [](detail::Ledger& l) {
        const std::vector<double> parities = family_parities();

        // (a) every 0.2/Gamma window holds a time where some initial parity reverses the current
        const KernelCache high(figure_params(4.0, 20.0), 10.0);
        int empty_windows = 0;
        for (int w = 0; w < 50; ++w) {
            bool any = false;
            for (int i = 1; i <= 20 && !any; ++i) {
                any = family_reverses_at(high, parities, 0.2 * w + 0.01 * i);
            }
            empty_windows += any ? 0 : 1;
        }
        l.expect(empty_windows == 0, "Fig. 7(a): " + std::to_string(empty_windows) + " windows without reversal");

        // (b) no member reverses inside the |h| > 1 windows
        const KernelCache low(figure_params(4.0, 1e-3), 10.0);
        const DivisibilityReport r = classify_divisibility(low);
        const std::vector<Interval> bad = r.forbidden_windows();
        l.expect(!bad.empty(), "Fig. 7(b): no |h| > 1 windows");
        int inside = 0;
        for (double t : family_crossings(low).all_times()) {
            for (const Interval& w : bad) {
                inside += t > w.lo + kRootTolerance && t < w.hi - kRootTolerance ? 1 : 0;
            }
        }
        int straddles = 0;
        for (const Interval& w : bad) {
            for (int i = 1; i < 200; ++i) {
                straddles += family_reverses_at(low, parities, w.lo + w.width() * i / 200.0) ? 1 : 0;
            }
        }
        l.expect(inside == 0, "Fig. 7(b): " + std::to_string(inside) + " member crossings inside |h| > 1 windows");
        l.expect(straddles == 0, "Fig. 7(b): family straddles zero at " + std::to_string(straddles) + " times");
        std::string windows;
        for (const Interval& w : bad) {
            windows += (windows.empty() ? "" : " ") + ("[" + detail::Ledger::fmt(w.lo) + ", " +
                                                       detail::Ledger::fmt(w.hi) + "]");
        }
        l.note("Fig. 7(b) reversal-free windows " + windows);
    });
}

[[nodiscard]] inline CheckResult check_sum_rules(const VerifyOptions& o = {})
{
    return detail::timed(9, "Kraus sum rules and limits", 0.0, [&](detail::Ledger& l) {
        using namespace ops;
        double worst = 0.0;
        double worst_lambda = 0.0;
        double worst_trace = 0.0;
        for (const detail::GridPoint& x : detail::representation_grid()) {
            const double g = detail::map_g(o, x.g);
            const KrausSet k = kraus_closed_form(x.p, x.t, g);
            const double G = x.p.gamma_coupling;
            const double om = detail::one_minus_exp(G * x.t);
            Mat2 s1 = Mat2::Zero(), s2 = Mat2::Zero(), s3 = Mat2::Zero(), s4 = Mat2::Zero();
            for (int eta : {+1, -1}) {
                const Mat2& k0 = k.k(0, eta);
                const Mat2& k1 = k.k(1, eta);
                s1 += k0.adjoint() * k0 + k1.adjoint() * k1;
                s2 += k0 * k0.adjoint() + k1 * k1.adjoint();
                s3 += k0 * k0.adjoint() - k0.adjoint() * k0;
                s4 += k1 * k1.adjoint() + k1.adjoint() * k1;
            }
            worst = std::max({worst, detail::mat_err(s1, identity()), detail::mat_err(s2, identity() + om * g * parity()),
                              s3.cwiseAbs().maxCoeff(), detail::mat_err(s4, om * identity())});
            for (int etap : {+1, -1}) {
                const Mat2 f = d_eta(etap).adjoint();
                Mat2 adj0 = Mat2::Zero(), fwd0 = Mat2::Zero(), fwd1 = Mat2::Zero(), adj1 = Mat2::Zero();
                for (int eta : {+1, -1}) {
                    const Mat2& k0 = k.k(0, eta);
                    const Mat2& k1 = k.k(1, eta);
                    adj0 += k0.adjoint() * f * k0;
                    fwd0 += k0 * f * k0.adjoint();
                    fwd1 += k1 * f * k1.adjoint();
                    adj1 += k1.adjoint() * f * k1;
                }
                const double eps = x.p.epsilon_level;
                const complex adj_phase = std::exp(complex{-0.5 * G * x.t, -etap * eps * x.t});
                const complex fwd_phase = std::exp(complex{-0.5 * G * x.t, etap * eps * x.t});
                worst = std::max({worst, detail::mat_err(adj0, adj_phase * f), detail::mat_err(fwd0, fwd_phase * f),
                                  fwd1.cwiseAbs().maxCoeff(), adj1.cwiseAbs().maxCoeff()});
            }
            double sum = 0.0;
            for (double lam : k.eigenvalues) {
                sum += lam;
            }
            worst_trace = std::max(worst_trace, std::abs(sum - 2.0));
            for (int eta : {+1, -1}) {
                worst_lambda = std::max(worst_lambda, std::abs(k.lambda(1, eta) - 0.5 * om * (1.0 - eta * g)));
            }
        }
        l.less(worst, 1e-12, "sum-rule error");
        l.less(worst_trace, 1e-12, "|sum lambda - 2|");
        l.expect(worst_lambda == 0.0, "lambda^1 differs from the closed form by " + detail::Ledger::fmt(worst_lambda));

        const KrausSet k0 = kraus_closed_form(figure_params(4.0, 1.0), 0.0);
        double initial = detail::mat_err(k0.operators[0], identity());
        for (std::size_t m = 1; m < 4; ++m) {
            initial = std::max(initial, k0.operators[m].cwiseAbs().maxCoeff());
        }
        l.less(initial, 1e-15, "K(0) deviation from {1, 0, 0, 0}");
        l.note("sum rules " + detail::Ledger::fmt(worst) + ", trace " + detail::Ledger::fmt(worst_trace));
    });
}

[[nodiscard]] inline CheckResult check_information()
{
    return detail::timed(10, "coherent information and effective environment", 0.0, [](detail::Ledger& l) {
        const std::vector<ModelParams> sets = {figure_params(4.0, 1.0), figure_params(-4.0, 1e-3),
                                               figure_params(20.0, 1e-3), figure_params(4.0, 10.0)};
        double worst_pure = 0.0;
        double worst_bound = 0.0;  // largest violation of 0 <= mismatch <= 2 S + 1e-12
        double worst_late = 0.0;
        double worst_env = 0.0;
        double worst_product = 0.0;
        for (const ModelParams& p : sets) {
            for (double sigma : {1.0, -1.0}) {
                for (int i = 1; i <= 80; ++i) {
                    worst_pure = std::max(worst_pure,
                                          std::abs(info_measures(p, 0.5 * i, detail::parity_state_of(sigma)).coherent_information));
                }
            }
            for (double p0 : {-0.8, -0.3, 0.0, 0.4, 0.9}) {
                const DensityMatrix rho0 = detail::parity_state_of(p0);
                const double s0 = entropy(rho0.eigenvalues());
                for (int i = 0; i <= 400; ++i) {
                    const double t = 0.1 * i;
                    const InfoMeasures m = info_measures(p, t, rho0);
                    worst_bound = std::max({worst_bound, -m.mismatch, m.mismatch - 2.0 * s0 - 1e-12});
                    const ModeSpectra f = env_mode_spectra(p, t, rho0);
                    worst_product = std::max(worst_product, std::abs(f.even(+1) * f.even(-1) - f.odd(+1) * f.odd(-1)));
                }
                worst_late = std::max(worst_late, std::abs(info_measures(p, 40.0, rho0).mismatch - 2.0 * s0));
                worst_env = std::max(worst_env,
                                     max_norm(env_state(p, 40.0, rho0).matrix - env_stationary_product(p, rho0)));
            }
        }
        l.less(worst_pure, 1e-10, "|I_c| for pure states");
        l.expect(worst_bound <= 0.0, "mismatch outside [0, 2 S + 1e-12] by " + detail::Ledger::fmt(worst_bound));
        l.less(worst_late, 1e-3, "|mismatch(40) - 2 S|");
        l.less(worst_env, 1e-3, "|rho_E'(40) - rho(inf) x rho(0)|");
        l.less(worst_product, 1e-12, "factor-product identity");
        l.note("pure I_c " + detail::Ledger::fmt(worst_pure) + ", late mismatch " + detail::Ledger::fmt(worst_late) +
               ", environment " + detail::Ledger::fmt(worst_env));
    });
}

[[nodiscard]] inline CheckResult check_qme_structure()
{
    return detail::timed(11, "memory kernel, TCL generator and spectra", 0.0, [](detail::Ledger& l) {
        using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
        const std::vector<ModelParams> sets = {figure_params(20.0, 1e-3), figure_params(4.0, 10.0),
                                               figure_params(2.0, 1.0)};
        double worst_int = 0.0;
        double worst_laplace = 0.0;
        double worst_spec = 0.0;
        const double n30 = nilpotent_direction()(3, 0).real();
        for (const ModelParams& p : sets) {
            for (double t : {0.7, 3.0, 8.0}) {
                // the regular part is a scalar times the nilpotent direction
                auto entry = [&](double s) { return nz_kernel(p, s).regular_part.matrix(3, 0).real(); };
                const int panels = 400;
                double acc = 0.0;
                for (int k = 0; k < panels; ++k) {
                    acc += GK::integrate(entry, t * k / panels, t * (k + 1) / panels, 0, 0.0);
                }
                const Mat4 integral = nz_kernel(p, t).delta_part.matrix + acc / n30 * nilpotent_direction();
                worst_int = std::max(worst_int, max_norm(integral - tcl_kernel(p, t).matrix));

                // eigenvalues of the closed-form map, found numerically, against e^{Sigma_k t}
                const double h = h_of_t(p, t);
                const auto tcl = spectral_decomposition_tcl(p, h);
                worst_spec = std::max(worst_spec, max_norm(tcl.reconstruct() - tcl_generator_from_h(p, h).matrix));
                const Eigen::Vector4cd ev = Eigen::ComplexEigenSolver<Mat4>(propagator_closed(p, t).matrix, false).eigenvalues();
                for (std::size_t k = 0; k < 4; ++k) {
                    const complex want = std::exp(tcl.terms[k].eigenvalue * t);
                    double nearest = std::numeric_limits<double>::infinity();
                    for (Eigen::Index j = 0; j < 4; ++j) {
                        nearest = std::min(nearest, std::abs(ev(j) - want));
                    }
                    worst_spec = std::max(worst_spec, nearest);
                }
            }
            const Mat4 laplace = nz_kernel_laplace(p, complex{0.0, 0.0}).matrix;
            worst_laplace = std::max({worst_laplace, max_norm(laplace - tcl_kernel_from_h(p, g_stationary(p)).matrix),
                                      max_norm(laplace - tcl_kernel(p, 80.0).matrix)});
        }
        l.less(worst_int, 1e-6, "|int Sigma - Sigma_TCL|");
        l.less(worst_laplace, 1e-8, "|Sigma(i0+) - Sigma_TCL(inf)|");
        l.less(worst_spec, 1e-12, "|Pi_k - exp(Sigma_k t)|");
        l.note("integral " + detail::Ledger::fmt(worst_int) + ", Laplace " + detail::Ledger::fmt(worst_laplace) +
               ", spectra " + detail::Ledger::fmt(worst_spec));
    });
}

[[nodiscard]] inline CheckResult check_special_case()
{
    return detail::timed(12, "dg/dt closed form and touching points at Gamma/2 = pi T", 0.0, [](detail::Ledger& l) {
        const ModelParams p = figure_params(4.0, 1.0);
        const double G = p.gamma_coupling;
        const double T = p.temperature;
        const double eps = p.detuning();
        auto closed = [&](double t) {
            const double s = std::sinh(0.5 * G * t);
            return G * T / eps * (1.0 - std::cos(eps * t)) / (s * s);
        };
        auto from_h = [&](double t) { return G * (h_of_t(p, t) - g_of_t(p, t)) / detail::one_minus_exp(G * t); };
        double worst_identity = 0.0;
        double worst_fd = 0.0;
        const double d = 1e-3;
        for (int i = 1; i <= 200; ++i) {
            const double t = 0.05 * i;
            worst_identity = std::max(worst_identity, std::abs(from_h(t) - closed(t)));
            const double fd = (-g_of_t(p, t + 2 * d) + 8.0 * g_of_t(p, t + d) - 8.0 * g_of_t(p, t - d) +
                               g_of_t(p, t - 2 * d)) /
                              (12.0 * d);
            worst_fd = std::max(worst_fd, std::abs(fd - closed(t)));
        }
        l.less(worst_identity, 1e-8, "|Gamma(h - g)/(1 - e^{-Gamma t}) - closed form|");
        l.less(worst_fd, 1e-8, "|finite-difference dg/dt - closed form|");

        // h - g has a double zero at t_l = 2 l pi/eps; its derivative has a simple one
        auto slope = [&](double t) { return std::exp(-0.5 * G * t) * correlation_gamma(p, t) - from_h(t); };
        double worst_t = 0.0;
        double worst_gap = 0.0;
        for (int ell = 1; ell <= 4; ++ell) {
            const double t_l = 2.0 * ell * pi / eps;
            const double lo = t_l - 0.1;
            const double root = detail::bisect_root(slope, lo, t_l + 0.1, slope(lo));
            worst_t = std::max(worst_t, std::abs(root - t_l));
            worst_gap = std::max(worst_gap, std::abs(h_of_t(p, t_l) - g_of_t(p, t_l)));
        }
        l.less(worst_t, kRootTolerance, "|touching time - 2 l pi/eps|");
        l.less(worst_gap, 1e-12, "|h - g| at touching points");
        l.note("dg/dt " + detail::Ledger::fmt(worst_identity) + " (identity), " + detail::Ledger::fmt(worst_fd) +
               " (finite difference); touching " + detail::Ledger::fmt(worst_t));
    });
}

/// Runs the criteria of the requested level. quick skips the solver and microscopic oracles.
[[nodiscard]] inline VerifyReport run_verify(const VerifyOptions& o = {},
                                             const std::function<void(const CheckResult&)>& on_result = {})
{
    VerifyReport report;
    report.level = o.level;
    const bool full = o.level == VerifyLevel::full;
    auto add = [&](CheckResult r) {
        if (on_result) {
            on_result(r);
        }
        report.checks.push_back(std::move(r));
    };
    add(check_overshoot());
    add(check_representations(o));
    add(check_factorization());
    add(check_cp_criteria(o));
    if (full) {
        add(check_solvers());
        add(check_microscopic_oracle());
    }
    add(check_reentrance());
    add(check_current_families());
    add(check_sum_rules(o));
    add(check_information());
    add(check_qme_structure());
    add(check_special_case());
    return report;
}

}  // namespace reslevel
