#include "pathlab/experiments.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"pathlab - expectation operators, martingale tests and final value problems on "
                 "a discretized path space"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run one experiment from the registry");
    std::string experiment, config_path, out_dir, format;
    std::int64_t samples = -1;
    double dt = -1.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    run->add_option("--experiment,-e", experiment, "experiment id (see `pathlab list`)");
    run->add_option("--config,-c", config_path, "flat key=value config file");
    run->add_option("--seed", seed, "base seed")->each([&](const std::string&) { seed_set = true; });
    run->add_option("--samples,-n", samples, "Monte Carlo budget");
    run->add_option("--dt", dt, "grid step");
    run->add_option("--out,-o", out_dir, "output directory");
    run->add_option("--format,-f", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    // list
    auto* list = app.add_subcommand("list", "list the experiment registry");
    bool as_json = false;
    std::string tag;
    list->add_flag("--json", as_json, "machine readable output");
    list->add_option("--tag", tag, "filter by tag");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        std::cout << pathlab::list_experiments(as_json, tag) << '\n';
        return 0;
    }

    try {
        pathlab::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = pathlab::ExperimentConfig::from_file(config_path);
        if (!experiment.empty()) cfg.experiment = experiment;
        if (samples > 0) cfg.n_samples = samples;
        if (dt > 0) cfg.dt = dt;
        if (seed_set) cfg.base_seed = seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!format.empty()) cfg.format = format;
        if (cfg.out_dir.empty()) cfg.out_dir = "pathlab_out_" + cfg.experiment;

        const pathlab::ExperimentResult result = pathlab::run_experiment(cfg);
        const auto files = pathlab::emit(result, cfg.out_dir, cfg.format);

        std::cout << (result.pass ? "[PASS] " : "[FAIL] ") << result.experiment;
        for (const auto& h : result.headline) std::cout << "  " << h.name << "=" << h.value;
        std::cout << "\nwrote:";
        for (const auto& f : files) std::cout << ' ' << f;
        std::cout << std::endl;
        return result.pass ? 0 : 1;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << std::endl;
        return 2;
    }
}
