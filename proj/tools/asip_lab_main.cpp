#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "asiplab/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"asip-lab: transfer operators, backward chains, reverse-martingale couplings"};
    app.require_subcommand(1);

    std::string config_path, manifest_path, out_dir;
    long long seed_override = -1;
    int workers = 0;

    auto* run_cmd = app.add_subcommand("run", "run an experiment config");
    run_cmd->add_option("config", config_path, "JSON experiment config")->required();
    run_cmd->add_option("--seed", seed_override, "override the config seed");
    run_cmd->add_option("--workers", workers, "worker pool size");
    run_cmd->add_option("--out-dir", out_dir, "override the output directory");

    auto* replay_cmd = app.add_subcommand("replay", "re-run a manifest and byte-compare artifacts");
    replay_cmd->add_option("manifest", manifest_path, "manifest.json from a previous run")->required();

    auto* lm = app.add_subcommand("list-maps", "print the map catalog");
    auto* lo = app.add_subcommand("list-observables", "print the observable catalog");

    CLI11_PARSE(app, argc, argv);

    try {
        if (lm->parsed()) {
            for (const auto& id : asiplab::map_catalog()) std::cout << id << "\n";
            return 0;
        }
        if (lo->parsed()) {
            for (const auto& id : asiplab::observable_catalog_ids()) std::cout << id << "\n";
            return 0;
        }
        if (replay_cmd->parsed()) return asiplab::replay(manifest_path, std::cout);

        asiplab::ExperimentConfig cfg = asiplab::load_config_file(config_path);
        if (seed_override >= 0) {
            cfg.seed = static_cast<std::uint64_t>(seed_override);
            cfg.raw["seed"] = cfg.seed;
        }
        if (workers > 0) {
            cfg.workers = workers;
            cfg.raw["workers"] = workers;
        }
        if (!out_dir.empty()) {
            cfg.out_dir = out_dir;
            cfg.raw["out_dir"] = out_dir;
        }
        const asiplab::RunResult res = asiplab::run_experiment(cfg);
        for (const auto& v : res.verdicts) std::cout << v << "\n";
        std::cout << "wrote " << res.artifacts.size() << " artifact(s) to " << cfg.out_dir << " in "
                  << res.elapsed_ms << " ms\n";
        return 0;
    } catch (const asiplab::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << "\n";
        return 3;
    }
}
