#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <exception>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "reslevel/choi_kraus.hpp"
#include "reslevel/env_info.hpp"
#include "reslevel/errors.hpp"
#include "reslevel/kernels.hpp"
#include "reslevel/liouville.hpp"

namespace reslevel {

inline constexpr std::array<std::string_view, 18> kTraceColumns = {
    "t",       "gamma", "h",           "g",           "parity",       "occupation",
    "current", "g_divisor", "S_sys",   "S_env",       "S_env_plus",   "S_env_minus",
    "I_c",     "mismatch", "lambda0_plus", "lambda0_minus", "lambda1_plus", "lambda1_minus"};

/// printf("%.17g")-style text, independent of the C locale; reads back bit-exactly.
[[nodiscard]] inline std::string format_number(double v)
{
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    return {buf.data(), res.ptr};
}

/// Flat key = value scenario. Energies in units of Gamma, times in 1/Gamma.
struct ScenarioConfig {
    double epsilon_level = 2.0 * pi;
    double mu = 0.0;
    double gamma_coupling = 1.0;
    double temperature = 1e-3 * 0.5 / pi;
    double t_max = 10.0;
    int n_points = 201;
    double initial_parity = 1.0;
    double initial_field_re = 0.0;
    double initial_field_im = 0.0;
    Mode mode = Mode::fermion;
    std::vector<std::string> outputs;  // empty: all columns
    double divisor_ratio = 0.5;        // g_divisor column is g(t, divisor_ratio * t)

    bool operator==(const ScenarioConfig&) const = default;

    [[nodiscard]] ModelParams params() const { return {epsilon_level, mu, gamma_coupling, temperature}; }

    [[nodiscard]] DensityMatrix initial_state() const
    {
        DensityMatrix s;
        s.parity = initial_parity;
        s.field = complex{initial_field_re, initial_field_im};
        return s;
    }

    [[nodiscard]] std::vector<std::string> columns() const
    {
        if (!outputs.empty()) {
            return outputs;
        }
        return {kTraceColumns.begin(), kTraceColumns.end()};
    }

    void validate() const
    {
        auto finite = [](const char* field, double v) {
            if (!std::isfinite(v)) {
                throw ConfigError(field, "must be finite");
            }
        };
        finite("epsilon_level", epsilon_level);
        finite("mu", mu);
        finite("gamma_coupling", gamma_coupling);
        finite("temperature", temperature);
        finite("t_max", t_max);
        finite("initial_parity", initial_parity);
        finite("initial_field_re", initial_field_re);
        finite("initial_field_im", initial_field_im);
        finite("divisor_ratio", divisor_ratio);
        if (!(gamma_coupling > 0.0)) {
            throw ConfigError("gamma_coupling", "must be > 0");
        }
        if (temperature < 0.0) {
            throw ConfigError("temperature", "must be >= 0");
        }
        if (!(t_max > 0.0)) {
            throw ConfigError("t_max", "must be > 0");
        }
        if (n_points < 2) {
            throw ConfigError("n_points", "must be >= 2");
        }
        if (divisor_ratio < 0.0 || divisor_ratio > 1.0) {
            throw ConfigError("divisor_ratio", "must lie in [0, 1]");
        }
        const double f2 = initial_field_re * initial_field_re + initial_field_im * initial_field_im;
        if (initial_parity * initial_parity + 4.0 * f2 > 1.0 + 1e-12) {
            throw ConfigError("initial_parity", "|initial_parity|^2 + |2 field|^2 must be <= 1");
        }
        if (mode == Mode::fermion && f2 != 0.0) {
            throw ConfigError(initial_field_re != 0.0 ? "initial_field_re" : "initial_field_im",
                              "fermion mode requires a zero initial field");
        }
        for (const std::string& c : outputs) {
            if (std::find(kTraceColumns.begin(), kTraceColumns.end(), c) == kTraceColumns.end()) {
                throw ConfigError("outputs", "unknown column '" + c + "'");
            }
        }
    }
};

namespace detail {

[[nodiscard]] inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[nodiscard]] inline double parse_double(const std::string& field, std::string_view text)
{
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ConfigError(field, "expected a number, got '" + std::string(text) + "'");
    }
    return v;
}

[[nodiscard]] inline int parse_int(const std::string& field, std::string_view text)
{
    int v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ConfigError(field, "expected an integer, got '" + std::string(text) + "'");
    }
    return v;
}

}  // namespace detail

/// Sets one key from its text value. Unknown keys are errors.
inline void set_config_value(ScenarioConfig& c, const std::string& key, std::string_view raw)
{
    const std::string_view value = detail::trim(raw);
    std::map<std::string, double*, std::less<>> reals = {
        {"epsilon_level", &c.epsilon_level},     {"mu", &c.mu},
        {"gamma_coupling", &c.gamma_coupling},   {"temperature", &c.temperature},
        {"t_max", &c.t_max},                     {"initial_parity", &c.initial_parity},
        {"initial_field_re", &c.initial_field_re}, {"initial_field_im", &c.initial_field_im},
        {"divisor_ratio", &c.divisor_ratio}};
    if (const auto it = reals.find(key); it != reals.end()) {
        *it->second = detail::parse_double(key, value);
    } else if (key == "n_points") {
        c.n_points = detail::parse_int(key, value);
    } else if (key == "mode") {
        if (value == "fermion") {
            c.mode = Mode::fermion;
        } else if (value == "spin") {
            c.mode = Mode::spin;
        } else {
            throw ConfigError(key, "expected 'fermion' or 'spin'");
        }
    } else if (key == "outputs") {
        c.outputs.clear();
        std::string_view rest = value;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const std::string_view item = detail::trim(rest.substr(0, comma));
            if (!item.empty()) {
                c.outputs.emplace_back(item);
            }
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
    } else {
        throw ConfigError(key, "unknown key");
    }
}

/// Applies a "key=value" override.
inline void apply_override(ScenarioConfig& c, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError(std::string(detail::trim(assignment)), "override must have the form key=value");
    }
    set_config_value(c, std::string(detail::trim(assignment.substr(0, eq))), assignment.substr(eq + 1));
}

/// Parses key = value lines; '#' starts a comment. Does not validate.
[[nodiscard]] inline ScenarioConfig parse_config(std::istream& in)
{
    ScenarioConfig c;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view s = line;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) {
            s = s.substr(0, hash);
        }
        s = detail::trim(s);
        if (s.empty()) {
            continue;
        }
        apply_override(c, s);
    }
    return c;
}

[[nodiscard]] inline ScenarioConfig parse_config(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

[[nodiscard]] inline std::string serialize_config(const ScenarioConfig& c)
{
    std::ostringstream out;
    auto put = [&](const char* k, const std::string& v) { out << k << " = " << v << '\n'; };
    put("epsilon_level", format_number(c.epsilon_level));
    put("mu", format_number(c.mu));
    put("gamma_coupling", format_number(c.gamma_coupling));
    put("temperature", format_number(c.temperature));
    put("t_max", format_number(c.t_max));
    put("n_points", std::to_string(c.n_points));
    put("initial_parity", format_number(c.initial_parity));
    put("initial_field_re", format_number(c.initial_field_re));
    put("initial_field_im", format_number(c.initial_field_im));
    put("mode", c.mode == Mode::fermion ? "fermion" : "spin");
    std::string outs;
    for (std::size_t i = 0; i < c.outputs.size(); ++i) {
        outs += (i ? "," : "") + c.outputs[i];
    }
    put("outputs", outs);
    put("divisor_ratio", format_number(c.divisor_ratio));
    return out.str();
}

/// Column-major-free numeric table with '#' metadata lines.
struct Table {
    std::vector<std::string> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] std::size_t column_index(std::string_view name) const
    {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) {
            throw DomainError("Table: no column '" + std::string(name) + "'");
        }
        return static_cast<std::size_t>(it - columns.begin());
    }

    [[nodiscard]] std::vector<double> column(std::string_view name) const
    {
        const std::size_t k = column_index(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) {
            out.push_back(r[k]);
        }
        return out;
    }

    void write_csv(std::ostream& out) const
    {
        for (const std::string& m : metadata) {
            out << "# " << m << '\n';
        }
        for (std::size_t i = 0; i < columns.size(); ++i) {
            out << (i ? "," : "") << columns[i];
        }
        out << '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                out << (i ? "," : "") << format_number(r[i]);
            }
            out << '\n';
        }
    }

    [[nodiscard]] std::string csv() const
    {
        std::ostringstream out;
        write_csv(out);
        return out.str();
    }
};

namespace detail {

inline void echo_config(Table& t, const ScenarioConfig& c)
{
    std::istringstream lines(serialize_config(c));
    std::string line;
    while (std::getline(lines, line)) {
        t.metadata.push_back("config " + line);
    }
}

[[nodiscard]] inline bool wants(const std::vector<std::string>& cols, std::initializer_list<std::string_view> any)
{
    return std::any_of(cols.begin(), cols.end(), [&](const std::string& c) {
        return std::find(any.begin(), any.end(), c) != any.end();
    });
}

}  // namespace detail

/// Time trace of the scenario on n_points uniform times in [0, t_max].
[[nodiscard]] inline Table run_trace(const ScenarioConfig& c)
{
    c.validate();
    const ModelParams p = c.params();
    const DensityMatrix rho0 = c.initial_state();
    const std::vector<std::string> cols = c.columns();
    const KernelCache cache(p, c.t_max);
    const bool need_info = detail::wants(cols, {"S_sys", "S_env", "S_env_plus", "S_env_minus", "I_c", "mismatch"});
    const bool need_kraus = detail::wants(cols, {"lambda0_plus", "lambda0_minus", "lambda1_plus", "lambda1_minus"});
    const double G = p.gamma_coupling;
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    Table table;
    table.metadata.push_back("reslevel trace");
    detail::echo_config(table, c);
    table.columns = cols;
    const int n = c.n_points - 1;
    for (int i = 0; i <= n; ++i) {
        const double t = i == n ? c.t_max : c.t_max * i / n;
        const double g = t == 0.0 ? 0.0 : cache.alpha(t) / detail::one_minus_exp(G * t);
        const double h = t == 0.0 ? 0.0 : cache.h(t);
        const double parity = std::exp(-G * t) * rho0.parity + (t == 0.0 ? 0.0 : cache.alpha(t));
        InfoMeasures info{nan, nan, nan, nan, nan, nan};
        if (need_info) {
            info = info_measures(p, t, rho0, g, c.mode);
        }
        KrausSet kraus;
        if (need_kraus) {
            kraus = kraus_closed_form(p, t, g);
        }
        std::vector<double> row;
        row.reserve(cols.size());
        for (const std::string& col : cols) {
            double v = nan;
            if (col == "t") {
                v = t;
            } else if (col == "gamma") {
                v = detail::gamma_unchecked(p, t);
            } else if (col == "h") {
                v = h;
            } else if (col == "g") {
                v = g;
            } else if (col == "parity") {
                v = parity;
            } else if (col == "occupation") {
                v = 0.5 * (1.0 - parity);
            } else if (col == "current") {
                v = 0.5 * G * (parity - h);
            } else if (col == "g_divisor") {
                v = t == 0.0 ? 0.0 : cache.g_divisor(t, c.divisor_ratio * t);
            } else if (col == "S_sys") {
                v = info.s_sys;
            } else if (col == "S_env") {
                v = info.s_env;
            } else if (col == "S_env_plus") {
                v = info.s_env_plus;
            } else if (col == "S_env_minus") {
                v = info.s_env_minus;
            } else if (col == "I_c") {
                v = info.coherent_information;
            } else if (col == "mismatch") {
                v = info.mismatch;
            } else if (col == "lambda0_plus") {
                v = kraus.lambda(0, +1);
            } else if (col == "lambda0_minus") {
                v = kraus.lambda(0, -1);
            } else if (col == "lambda1_plus") {
                v = kraus.lambda(1, +1);
            } else if (col == "lambda1_minus") {
                v = kraus.lambda(1, -1);
            }
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

enum class ScanAxis { initial_parity, epsilon_level, temperature };

[[nodiscard]] inline ScanAxis parse_axis(std::string_view name)
{
    if (name == "initial_parity") {
        return ScanAxis::initial_parity;
    }
    if (name == "epsilon_level") {
        return ScanAxis::epsilon_level;
    }
    if (name == "temperature") {
        return ScanAxis::temperature;
    }
    throw ConfigError("axis", "expected initial_parity, epsilon_level or temperature");
}

[[nodiscard]] inline std::string_view to_string(ScanAxis a)
{
    switch (a) {
    case ScanAxis::initial_parity:
        return "initial_parity";
    case ScanAxis::epsilon_level:
        return "epsilon_level";
    case ScanAxis::temperature:
        return "temperature";
    }
    return "?";
}

struct ScanSpec {
    ScanAxis axis = ScanAxis::initial_parity;
    double from = -1.0;
    double to = 1.0;
    int count = 41;

    [[nodiscard]] std::vector<double> values() const
    {
        if (count < 1) {
            throw ConfigError("count", "must be >= 1");
        }
        if (!std::isfinite(from) || !std::isfinite(to)) {
            throw ConfigError("from", "scan bounds must be finite");
        }
        std::vector<double> out(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            out[static_cast<std::size_t>(i)] =
                count == 1 ? from : (i == count - 1 ? to : from + (to - from) * i / (count - 1));
        }
        return out;
    }
};

/// One trace per axis value, stacked in axis order with the axis value as first column.
/// Traces run on up to `threads` workers (0: hardware concurrency); output order is fixed.
[[nodiscard]] inline Table run_scan(const ScenarioConfig& base, const ScanSpec& scan, unsigned threads = 0)
{
    base.validate();
    const std::vector<double> values = scan.values();
    std::vector<ScenarioConfig> configs(values.size(), base);
    for (std::size_t i = 0; i < values.size(); ++i) {
        switch (scan.axis) {
        case ScanAxis::initial_parity:
            configs[i].initial_parity = values[i];
            break;
        case ScanAxis::epsilon_level:
            configs[i].epsilon_level = values[i];
            break;
        case ScanAxis::temperature:
            configs[i].temperature = values[i];
            break;
        }
        configs[i].validate();
    }

    std::vector<Table> parts(values.size());
    std::vector<std::exception_ptr> errors(values.size());
    if (threads == 0) {
        threads = std::max(1U, std::thread::hardware_concurrency());
    }
    threads = std::min<unsigned>(threads, static_cast<unsigned>(values.size()));
    auto work = [&](unsigned worker) {
        for (std::size_t i = worker; i < values.size(); i += threads) {
            try {
                parts[i] = run_trace(configs[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back(work, w);
        }
        for (std::thread& th : pool) {
            th.join();
        }
    }
    for (const std::exception_ptr& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    Table table;
    table.metadata.push_back("reslevel scan");
    table.metadata.push_back("scan axis = " + std::string(to_string(scan.axis)) + " from = " +
                             format_number(scan.from) + " to = " + format_number(scan.to) +
                             " count = " + std::to_string(scan.count));
    detail::echo_config(table, base);
    table.columns.emplace_back(to_string(scan.axis));
    const std::vector<std::string> cols = base.columns();
    table.columns.insert(table.columns.end(), cols.begin(), cols.end());
    // rows sorted by (axis, t)
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const std::size_t i = scan.from <= scan.to ? k : parts.size() - 1 - k;
        for (auto& r : parts[i].rows) {
            std::vector<double> row{values[i]};
            row.insert(row.end(), r.begin(), r.end());
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

}  // namespace reslevel
