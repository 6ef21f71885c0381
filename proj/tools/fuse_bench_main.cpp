#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "fusebench/bench.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw fusebench::IoError("cannot read config file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fuse-bench: benchmark estimate fusion with unknown cross-covariances"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    int threads = 0;
    std::uint64_t seed_override = 0;

    CLI::App* run = app.add_subcommand("run", "run a sweep and write CSV results");
    run->add_option("--config", config_path, "sweep configuration file (JSON)")->required();
    run->add_option("--out", out_path, "output CSV path")->required();
    run->add_option("--threads", threads, "worker thread count, 0 = hardware concurrency");
    CLI::Option* seed_opt = run->add_option("--seed", seed_override, "override the config seed");

    CLI::App* validate = app.add_subcommand("validate", "check a configuration without running");
    validate->add_option("--config", config_path, "sweep configuration file (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    fusebench::SweepSpec spec;
    try {
        spec = fusebench::parse_config(read_file(config_path));
        if (seed_opt->count() > 0) {
            spec.seed = seed_override;
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    if (validate->parsed()) {
        std::cout << "config OK: model " << spec.model << ", sweep '" << spec.sweep_param
                  << "' over " << spec.sweep_values.size() << " value(s), " << spec.trials
                  << " trials per point\n";
        return 0;
    }

    try {
        const std::vector<fusebench::ResultRow> rows = fusebench::run_sweep(spec, threads);
        fusebench::write_csv(rows, out_path);
        std::cout << fusebench::format_table(rows);
        std::cout << "wrote " << rows.size() << " rows to " << out_path << '\n';
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
