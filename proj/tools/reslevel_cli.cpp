// reslevel: trace, scan, verify and figure-data front end.
//
// Exit codes: 0 success, 1 verification failure, 2 config or usage error,
// 3 numerical failure inside the library.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reslevel/figures.hpp"
#include "reslevel/scenario.hpp"
#include "reslevel/verify.hpp"

namespace {

using namespace reslevel;

constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

ScenarioConfig load_config(const std::string& path, const std::vector<std::string>& overrides)
{
    ScenarioConfig c;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) {
            throw ConfigError("config", "cannot open '" + path + "'");
        }
        c = parse_config(in);
    }
    for (const std::string& o : overrides) {
        apply_override(c, o);
    }
    c.validate();
    return c;
}

void emit(const Table& t, const std::string& out)
{
    if (out.empty() || out == "-") {
        t.write_csv(std::cout);
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) {
        throw ConfigError("out", "cannot write '" + out + "'");
    }
    t.write_csv(f);
}

nlohmann::json to_json(const VerifyReport& r)
{
    nlohmann::json checks = nlohmann::json::array();
    for (const CheckResult& c : r.checks) {
        checks.push_back({{"criterion", c.id},
                          {"name", c.name},
                          {"pass", c.pass},
                          {"detail", c.detail},
                          {"seconds", c.seconds},
                          {"budget_seconds", c.budget}});
    }
    return {{"level", std::string(to_string(r.level))}, {"pass", r.passed()}, {"checks", checks}};
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Resonant level dynamics: traces, scans, verification and figure data"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out;

    auto* trace = app.add_subcommand("trace", "Time trace of one scenario as CSV");
    trace->add_option("--config", config_path, "key = value scenario file")->check(CLI::ExistingFile);
    trace->add_option("--set", overrides, "Override one key, e.g. --set t_max=20");
    trace->add_option("--out", out, "Output file (default stdout)");

    std::string axis;
    double from = 0.0;
    double to = 0.0;
    int count = 0;
    unsigned threads = 0;
    auto* scan = app.add_subcommand("scan", "Trace repeated over one parameter axis");
    scan->add_option("--config", config_path, "key = value scenario file")->check(CLI::ExistingFile);
    scan->add_option("--set", overrides, "Override one key");
    scan->add_option("--axis", axis, "initial_parity, epsilon_level or temperature")->required();
    scan->add_option("--from", from, "First axis value")->required();
    scan->add_option("--to", to, "Last axis value")->required();
    scan->add_option("--count", count, "Number of axis points")->required();
    scan->add_option("--threads", threads, "Worker threads (0 = hardware)");
    scan->add_option("--out", out, "Output file (default stdout)");

    std::string level = "quick";
    std::string json_path;
    double inject_g = 0.0;
    auto* verify = app.add_subcommand("verify", "Run the verification suite");
    verify->add_option("--level", level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
    verify->add_option("--json", json_path, "Write the JSON report here ('-' for stdout)");
    auto* inject = verify->add_option("--inject-g", inject_g, "Replace g(t) in the maps (negative control)");
    inject->group("");  // hidden

    std::string figure_id;
    std::string out_dir;
    auto* figure = app.add_subcommand("figure", "Write the data of one figure preset");
    figure->add_option("--id", figure_id, "Figure id")
        ->required()
        ->check(CLI::IsMember(std::vector<std::string>(kFigureIds.begin(), kFigureIds.end())));
    figure->add_option("--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*trace) {
            emit(run_trace(load_config(config_path, overrides)), out);
        } else if (*scan) {
            const ScenarioConfig c = load_config(config_path, overrides);
            emit(run_scan(c, {parse_axis(axis), from, to, count}, threads), out);
        } else if (*verify) {
            VerifyOptions o;
            o.level = parse_level(level);
            if (*inject) {
                o.injected_g = inject_g;
            }
            // human-readable lines go to stderr when the JSON report takes stdout
            std::ostream& human = json_path == "-" ? std::cerr : std::cout;
            const VerifyReport report = run_verify(o, [&](const CheckResult& c) {
                VerifyReport one;
                one.checks.push_back(c);
                human << one.text() << std::flush;
            });
            if (!json_path.empty()) {
                const std::string text = to_json(report).dump(2) + "\n";
                if (json_path == "-") {
                    std::cout << text;
                } else {
                    std::ofstream f(json_path);
                    if (!f) {
                        throw ConfigError("json", "cannot write '" + json_path + "'");
                    }
                    f << text;
                }
            }
            human << (report.passed() ? "verify: all checks passed" : "verify: FAILED") << '\n';
            return report.passed() ? 0 : kExitVerifyFailed;
        } else if (*figure) {
            const std::filesystem::path dir(out_dir);
            std::filesystem::create_directories(dir);
            for (const FigureFile& f : figure_data(figure_id)) {
                emit(f.table, (dir / f.name).string());
                std::cout << (dir / f.name).string() << '\n';
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
