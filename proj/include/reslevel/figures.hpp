#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "reslevel/diagnostics.hpp"
#include "reslevel/env_info.hpp"
#include "reslevel/kernels.hpp"
#include "reslevel/liouville.hpp"
#include "reslevel/scenario.hpp"
#include "reslevel/solvers.hpp"

namespace reslevel {

/// Parameters in the units of the figures: detuning 2 eps/pi and pi T/(Gamma/2), Gamma = 1.
[[nodiscard]] inline ModelParams figure_params(double two_eps_over_pi, double pi_t_over_half_gamma,
                                               double mu = 0.0)
{
    ModelParams p;
    p.gamma_coupling = 1.0;
    p.mu = mu;
    p.epsilon_level = mu + two_eps_over_pi * pi / 2.0;
    p.temperature = pi_t_over_half_gamma * 0.5 / pi;
    return p;
}

inline constexpr std::array<std::string_view, 10> kFigureIds = {"3", "4", "5", "6", "7a", "7b", "8", "9", "11", "12"};

/// Initial parities of the Fig. 6 evolutions; Fig. 12 uses the middle three.
inline constexpr std::array<double, 5> kFigureSixParities = {-1.0, -0.5, 0.0, 0.4, 1.0};

struct FigureFile {
    std::string name;  // file name inside the output directory
    Table table;
};

namespace detail {

[[nodiscard]] inline DensityMatrix parity_state_of(double parity0, complex field = {})
{
    DensityMatrix s;
    s.parity = parity0;
    s.field = field;
    return s;
}

[[nodiscard]] inline std::vector<double> uniform(double t_max, int n)
{
    std::vector<double> t(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        t[static_cast<std::size_t>(i)] = t_max * i / (n - 1);
    }
    return t;
}

[[nodiscard]] inline Table figure_table(std::string_view id, const ModelParams& p,
                                        std::vector<std::string> columns)
{
    Table t;
    t.metadata.push_back("reslevel figure " + std::string(id));
    t.metadata.push_back("epsilon_level = " + format_number(p.epsilon_level));
    t.metadata.push_back("mu = " + format_number(p.mu));
    t.metadata.push_back("gamma_coupling = " + format_number(p.gamma_coupling));
    t.metadata.push_back("temperature = " + format_number(p.temperature));
    t.columns = std::move(columns);
    return t;
}

inline void add_windows(Table& t, const DivisibilityReport& r)
{
    t.metadata.push_back("regime = " + std::string(to_string(r.regime)));
    t.metadata.push_back("h_max = " + format_number(r.h_max));
    for (const Interval& w : r.forbidden_windows()) {
        t.metadata.push_back("forbidden_window = " + format_number(w.lo) + " " + format_number(w.hi));
    }
}

[[nodiscard]] inline double parity_at(const KernelCache& c, double p0, double t)
{
    const double G = c.params().gamma_coupling;
    return std::exp(-G * t) * p0 + (t == 0.0 ? 0.0 : c.alpha(t));
}

/// t, parity, g, h of one evolution, optionally with the Markov-only parity.
[[nodiscard]] inline Table evolution(std::string_view id, const ModelParams& p, double p0, double t_max, int n,
                                     bool markov)
{
    std::vector<std::string> cols{"t", "parity", "g", "h"};
    if (markov) {
        cols.emplace_back("parity_markov_only");
    }
    Table out = figure_table(id, p, cols);
    out.metadata.push_back("initial_parity = " + format_number(p0));
    const KernelCache c(p, t_max);
    for (double t : uniform(t_max, n)) {
        std::vector<double> row{t, parity_at(c, p0, t), t == 0.0 ? 0.0 : c.g(t), t == 0.0 ? 0.0 : c.h(t)};
        if (markov) {
            row.push_back(markov_only(p, parity_state_of(p0), t).parity);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace detail

/// Data files for one figure preset. Throws ConfigError for an unknown id.
[[nodiscard]] inline std::vector<FigureFile> figure_data(std::string_view id)
{
    using detail::figure_table;
    using detail::uniform;
    const std::string stem = "fig" + std::string(id);
    std::vector<FigureFile> files;

    if (id == "3") {
        const ModelParams p = figure_params(20.0, 1e-3);
        const double t_max = 10.0;
        const KernelCache c(p, t_max);
        Table t = figure_table(id, p, {"t", "gamma", "h", "g"});
        detail::add_windows(t, classify_divisibility(c));
        for (double x : uniform(t_max, 2001)) {
            if (x > 0.0) {  // gamma(s) is defined for s > 0
                t.rows.push_back({x, correlation_gamma(p, x), c.h(x), c.g(x)});
            }
        }
        files.push_back({stem + ".csv", std::move(t)});
    } else if (id == "4") {
        const ModelParams p = figure_params(20.0, 1e-3);
        const double t_max = 10.0;
        const KernelCache c(p, t_max);
        Table t = figure_table(id, p, {"t", "ratio", "g_divisor"});
        for (double x : uniform(t_max, 401)) {
            if (x == 0.0) {
                continue;
            }
            for (double a : uniform(1.0, 21)) {
                t.rows.push_back({x, a, c.g_divisor(x, a * x)});
            }
        }
        files.push_back({stem + ".csv", std::move(t)});
    } else if (id == "5") {
        const ModelParams p = figure_params(4.0, 10.0);
        const double p0 = g_of_t(p, 2.0);
        Table t = detail::evolution(id, p, p0, 8.0, 801, true);
        if (const auto tr = reentrance_time(p, p0)) {
            t.metadata.push_back("reentrance_time = " + format_number(*tr));
        }
        for (double te : extrema_times(p, p0, 8.0)) {
            t.metadata.push_back("extremum_time = " + format_number(te));
        }
        files.push_back({stem + ".csv", std::move(t)});
    } else if (id == "6") {
        const ModelParams p = figure_params(4.0, 1e-3);
        const double t_max = 8.0;
        const KernelCache c(p, t_max);
        Table t = figure_table(id, p, {"initial_parity", "t", "parity", "parity_exponential"});
        t.metadata.push_back("g_stationary = " + format_number(g_stationary(p)));
        for (double p0 : kFigureSixParities) {
            if (const auto tr = reentrance_time(p, p0)) {
                t.metadata.push_back("reentrance " + format_number(p0) + " = " + format_number(*tr));
            }
            const double ginf = g_stationary(p);
            for (double x : uniform(t_max, 801)) {
                // leading exponential e^{-Gamma t} p0 + (1 - e^{-Gamma t}) g(inf)
                const double e = std::exp(-p.gamma_coupling * x);
                t.rows.push_back({p0, x, detail::parity_at(c, p0, x), e * p0 + (1.0 - e) * ginf});
            }
        }
        files.push_back({stem + ".csv", std::move(t)});
    } else if (id == "7a" || id == "7b") {
        const ModelParams p = figure_params(4.0, id == "7a" ? 20.0 : 1e-3);
        const double t_max = 10.0;
        const KernelCache c(p, t_max);
        Table t = figure_table(id, p, {"initial_parity", "t", "current"});
        detail::add_windows(t, classify_divisibility(c));
        const std::vector<double> parities = family_parities();
        const std::vector<double> times = uniform(t_max, 1001);
        std::vector<std::vector<double>> currents;
        for (double x : times) {
            currents.push_back(family_currents(c, parities, x));
        }
        for (std::size_t k = 0; k < parities.size(); ++k) {
            for (std::size_t i = 0; i < times.size(); ++i) {
                t.rows.push_back({parities[k], times[i], currents[i][k]});
            }
        }
        files.push_back({stem + ".csv", std::move(t)});
        Table crossings = figure_table(id, p, {"initial_parity", "t"});
        const FamilyCrossings fam = family_crossings(c);
        for (std::size_t k = 0; k < fam.parities.size(); ++k) {
            for (double x : fam.crossings[k]) {
                crossings.rows.push_back({fam.parities[k], x});
            }
        }
        files.push_back({stem + "_crossings.csv", std::move(crossings)});
    } else if (id == "8") {
        const ModelParams p = figure_params(2.0, 1e-3);
        const double tp = 2.0 * pi / p.epsilon_level;  // l = 2
        const double p0 = extremum_initial_condition(p, tp);
        Table t = detail::evolution(id, p, p0, 6.0, 601, false);
        t.metadata.push_back("plateau_time = " + format_number(tp));
        t.metadata.push_back("curvature = " + format_number(extremum_curvature(p, tp)));
        files.push_back({stem + ".csv", std::move(t)});
    } else if (id == "9") {
        const ModelParams p = figure_params(4.0, 1.0);
        const double tr = 2.0 * pi / p.epsilon_level;  // t_p = l pi/eps with l = 2
        Table t = detail::evolution(id, p, g_of_t(p, tr), 6.0, 601, false);
        t.metadata.push_back("touching_time = " + format_number(tr));
        files.push_back({stem + ".csv", std::move(t)});
    } else if (id == "11") {
        const ModelParams base = figure_params(2.0, 1.0);
        Table t = figure_table(id, base, {"pi_t_over_half_gamma", "t_e", "condition"});
        t.metadata.push_back("temperature column varies; see pi_t_over_half_gamma");
        for (double piT : {0.01, 1.0, 1.5}) {
            const ModelParams p = figure_params(2.0, piT);
            for (double x : uniform(10.0, 1001)) {
                if (x == 0.0) {
                    continue;
                }
                t.rows.push_back({piT, x, extremum_initial_condition(p, x)});
            }
        }
        files.push_back({stem + ".csv", std::move(t)});
    } else if (id == "12") {
        const ModelParams p = figure_params(4.0, 1e-3);
        Table t = figure_table(id, p,
                               {"initial_parity", "t", "S_sys", "S_env", "S_env_plus", "S_env_minus", "mismatch",
                                "S_sys_markov_only", "mismatch_markov_only"});
        const double ginf = g_stationary(p);
        const double t_max = 8.0;
        const KernelCache c(p, t_max);
        for (std::size_t k = 1; k + 1 < kFigureSixParities.size(); ++k) {
            const DensityMatrix rho0 = detail::parity_state_of(kFigureSixParities[k]);
            for (double x : uniform(t_max, 401)) {
                const InfoMeasures m = info_measures(p, x, rho0, x == 0.0 ? 0.0 : c.g(x));
                // Markov-only is the closed form with g(t) frozen at g(inf)
                const InfoMeasures mk = info_measures(p, x, rho0, ginf);
                t.rows.push_back({rho0.parity, x, m.s_sys, m.s_env, m.s_env_plus, m.s_env_minus, m.mismatch,
                                  mk.s_sys, mk.mismatch});
            }
        }
        files.push_back({stem + ".csv", std::move(t)});
    } else {
        throw ConfigError("id", "unknown figure '" + std::string(id) + "'");
    }
    return files;
}

}  // namespace reslevel
