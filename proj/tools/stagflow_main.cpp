#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "stagflow/study.hpp"

int main(int argc, char** argv) {
    CLI::App app{"stagflow: staggered-grid incompressible Navier-Stokes studies"};
    app.set_version_flag("--version", std::string("stagflow ") + STAGFLOW_VERSION);
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    auto* run = app.add_subcommand("run", "Run the study described by a configuration file");
    run->add_option("config", config_path, "Configuration file")->required();
    run->add_option("--set", overrides, "Override one key, section.key=value (repeatable)")->allow_extra_args(false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : stagflow::exit_config;
    }

    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "error: cannot read configuration '" << config_path << "'\n";
        return stagflow::exit_io;
    }
    std::stringstream text;
    text << in.rdbuf();

    stagflow::RunConfig cfg;
    try {
        cfg = stagflow::parse_config(text.str(), overrides);
    } catch (const stagflow::ConfigError& e) {
        std::cerr << config_path << ": " << e.what() << "\n";
        return stagflow::exit_config;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const int rc = stagflow::run_study(cfg, &std::cout);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "exit " << rc << " after " << secs << " s; outputs in " << cfg.output << "\n";
    return rc;
}
