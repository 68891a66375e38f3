#include <iostream>

#include <CLI11.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "adaptsim/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Adaptive partitioning simulator for mobile ad hoc network models"};
    app.require_subcommand(1);

    std::string logLevel = "info";
    std::vector<std::string> overrides;
    app.add_option("--log-level", logLevel, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));
    app.add_option("--override", overrides, "section.key=value, applied after the config file")->take_all();

    std::string configPath;
    auto* run = app.add_subcommand("run", "run every LP in this process (run.mode sim or threads)");
    run->add_option("config", configPath, "INI configuration")->required();

    std::optional<std::uint32_t> lp;
    auto* launch = app.add_subcommand("launch", "run one LP of a tcp deployment");
    launch->add_option("config", configPath, "INI configuration")->required();
    launch->add_option("--lp", lp, "LP id of this process; defaults to net.this_lp");

    std::vector<std::string> dirs;
    std::string outDir = "report";
    auto* report = app.add_subcommand("report", "charts and WCT table from trace directories");
    report->add_option("dirs", dirs, "trace directories")->required();
    report->add_option("--out", outDir, "where the charts go")->capture_default_str();

    // let the subcommands accept the global flags too
    for (auto* sub : {run, launch, report}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : adaptsim::kExitConfig;
    }

    auto logger = spdlog::stderr_color_mt("adaptsim");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::from_str(logLevel));

    if (run->parsed()) return adaptsim::cmd_run(configPath, overrides, std::cout, std::cerr);
    if (launch->parsed()) return adaptsim::cmd_launch(configPath, lp, overrides, std::cout, std::cerr);
    std::vector<std::filesystem::path> paths(dirs.begin(), dirs.end());
    return adaptsim::cmd_report(paths, outDir, std::cout, std::cerr);
}
