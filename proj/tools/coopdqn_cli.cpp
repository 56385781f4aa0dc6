#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "coopdqn/coopdqn.hpp"

int main(int argc, char** argv) {
    using namespace coopdqn;
    CLI::App app{"Shared-policy DQN simulator for the networked Prisoner's Dilemma"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "Execute an experiment spec and write the output bundle");
    std::string spec_path;
    RunOptions opt;
    std::size_t workers = 0;
    std::string out_dir;
    run_cmd->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
    run_cmd->add_option("--workers", workers, std::string("Parallel runs (default: ") + kWorkersEnv +
                                                  ", then spec, then hardware threads)");
    run_cmd->add_option("--out", out_dir, "Output directory (overrides output.dir)");
    run_cmd->add_flag("--dump-trace", opt.dump_trace, "Write trace-<run_id>.csv per run");
    run_cmd->add_flag("--dump-activations", opt.dump_activations, "Write activations-<run_id>.csv per run");
    run_cmd->add_flag("--dump-checkpoints", opt.dump_checkpoints, "Write final network snapshots per run");
    run_cmd->add_flag("--resume-skip-existing", opt.resume_skip_existing, "Skip runs already marked ok in runs.csv");
    bool quiet = false;
    run_cmd->add_flag("-q,--quiet", quiet, "No progress lines");

    auto* defaults_cmd = app.add_subcommand("default-spec", "Print the default spec with every field filled in");

    auto* edges_cmd = app.add_subcommand("edges", "Print a topology as an edge list");
    std::string kind = "grid";
    TopologySpec tspec;
    std::uint64_t seed = 0;
    edges_cmd->add_option("--kind", kind, "grid | random_regular | modular | small_world");
    edges_cmd->add_option("--L", tspec.L, "Grid side (agent count L*L unless --n is given)");
    edges_cmd->add_option("--n", tspec.n, "Agent count for non-grid kinds");
    edges_cmd->add_option("--p-rewire", tspec.p_rewire, "Small-world swap probability");
    edges_cmd->add_option("--modules", tspec.n_modules, "Modular: number of modules");
    edges_cmd->add_option("--cross", tspec.n_cross, "Modular: cross-module swaps");
    edges_cmd->add_option("--seed", seed, "Generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            ExperimentSpec spec;
            try {
                spec = parse_spec(spec_path);
            } catch (const ConfigError& e) {
                std::cerr << "config error: " << e.what() << '\n';
                return 1;
            }
            if (workers > 0) opt.workers = workers;
            if (!out_dir.empty()) opt.out_dir = out_dir;
            opt.progress = !quiet;
            return run_experiment(std::move(spec), opt);
        }
        if (*defaults_cmd) {
            std::cout << spec_to_json(ExperimentSpec{}).dump(2) << '\n';
            return 0;
        }
        if (*edges_cmd) {
            tspec.kind = topology_kind_from_string(kind);
            build_topology(tspec, seed).write_edge_list(std::cout);
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
