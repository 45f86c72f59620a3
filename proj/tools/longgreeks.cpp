#include "longgreeks/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    namespace cli = longgreeks::cli;
    CLI::App app{"Long-horizon prices and sensitivities by martingale extraction"};
    app.set_version_flag("--version", std::string(cli::kVersion));
    app.require_subcommand(1, 1);

    cli::RunOptions opt;
    std::string config;
    int threads = 0;
    double bump = 0.0;

    const std::pair<const char*, const char*> commands[] = {
        {"price", "Monte Carlo price under Q, P or both"},
        {"greeks", "Long-horizon sensitivity of one parameter"},
        {"convergence", "Slope series over a horizon grid next to its limit"},
        {"density", "CIR transition or invariant density on a grid"},
        {"riccati", "Stabilizing solution of a continuous algebraic Riccati equation"},
        {"selftest", "Fast oracle subset"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--set", opt.overrides, "Dotted key=value override, repeatable");
        sub->add_option("--threads", threads, "Worker threads (0 = machine parallelism)")->check(CLI::NonNegativeNumber);
        sub->add_option("--out-dir", opt.out_dir, "Directory for relative output paths");
        sub->add_option("--debug-lambda-bump", bump)->group("");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(cli::ValidationFailure);
    }

    CLI::App* sub = app.get_subcommands().front();
    opt.command = sub->get_name();
    if (!config.empty()) opt.config_path = config;
    if (sub->count("--threads")) opt.threads = threads;
    if (sub->count("--debug-lambda-bump")) opt.debug_lambda_bump = bump;
    return cli::run(opt, std::cout, std::cerr);
}
