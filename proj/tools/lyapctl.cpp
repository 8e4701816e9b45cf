#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "strictlyap/certify.hpp"

using namespace strictlyap::cli;

int main(int argc, char** argv) {
    CLI::App app{"lyapctl: explicit strict Lyapunov functions with numerical certificates"};
    app.require_subcommand(1);

    CommandOptions opts;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    unsigned jobs = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
        sub->add_option("--seed", seed, "seed for random samples and initial states");
        sub->add_option("--tol", tol, "tolerance override");
        sub->add_option("--jobs", jobs, "worker threads (0 = hardware concurrency)");
    };

    auto* strictify = app.add_subcommand("strictify", "build the strict Lyapunov function and tabulate gains");
    auto* certify = app.add_subcommand("certify", "build and certify the decay inequalities");
    auto* simulate = app.add_subcommand("simulate", "simulate hybrid arcs and write CSV");
    for (auto* sub : {strictify, certify, simulate}) {
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        add_common(sub);
    }

    auto* examples = app.add_subcommand("examples", "example gallery");
    examples->require_subcommand(1);
    examples->add_subcommand("list", "list registered examples");
    auto* run = examples->add_subcommand("run", "simulate, strictify and certify one example");
    std::string example_id;
    run->add_option("id", example_id, "example id")->required();
    add_common(run);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    return run_guarded(
        [&]() -> int {
            opts.seed = seed;
            opts.tolerance = tol;
            strictlyap::set_default_jobs(jobs);
            if (examples->parsed()) {
                if (run->parsed()) return cmd_examples_run(example_id, opts, std::cout);
                return cmd_examples_list(std::cout);
            }
            const ExperimentConfig cfg = ExperimentConfig::load(config_path);
            if (strictify->parsed()) return cmd_strictify(cfg, opts, std::cout);
            if (certify->parsed()) return cmd_certify(cfg, opts, std::cout);
            return cmd_simulate(cfg, opts, std::cout);
        },
        std::cerr);
}
