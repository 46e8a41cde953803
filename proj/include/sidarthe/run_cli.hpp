#pragma once

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sidarthe/cli.hpp"

namespace sidarthe::cli {

/// Parse argv and dispatch to the subcommand. Returns the process exit
/// code: 0 ok, 1 usage/config error, 2 data error, 3 numerical divergence.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{std::string(kLibraryName) +
                 " — compartmental epidemic model fitting and forecasting"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;    // -1 = keep the config's seed
    std::int64_t workers = -1; // -1 = keep the config's worker count

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_dir, "output directory (all files land here)")->required();
        sub->add_option("--seed", seed, "override fit.seed / grid.seed0");
        sub->add_option("--workers", workers,
                        "override worker count (default: SIDARTHE_GF_WORKERS or all cores)");
    };
    CLI::App* c_sim = app.add_subcommand("simulate", "integrate the model forward");
    CLI::App* c_fit = app.add_subcommand("fit", "fit rates to observations");
    CLI::App* c_fc = app.add_subcommand("forecast", "extend a fit beyond its window");
    CLI::App* c_grid = app.add_subcommand("grid", "hyperparameter grid search");
    CLI::App* c_abl = app.add_subcommand("ablate", "momentum / smoothing ablation studies");
    for (CLI::App* sub : {c_sim, c_fit, c_fc, c_grid, c_abl}) add_common(sub);

    // CLI11 wants mutable argc/argv-style input; feed it the vector directly.
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const sidarthe::error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    if (seed >= 0) {
        cfg.fit.seed = static_cast<std::uint64_t>(seed);
        cfg.grid.seed0 = static_cast<std::uint64_t>(seed);
        cfg.ablate.seed0 = static_cast<std::uint64_t>(seed);
    }
    if (workers >= 0) cfg.workers = static_cast<std::size_t>(workers);

    if (c_sim->parsed()) return cmd_simulate(cfg, out_dir, err);
    if (c_fit->parsed()) return cmd_fit(cfg, out_dir, err);
    if (c_fc->parsed()) return cmd_forecast(cfg, out_dir, err);
    if (c_grid->parsed()) return cmd_grid(cfg, out_dir, err, out);
    if (c_abl->parsed()) return cmd_ablate(cfg, out_dir, err, out);
    err << "error: no subcommand\n";
    return 1;
}

inline int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

} // namespace sidarthe::cli
