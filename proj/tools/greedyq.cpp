#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "greedyq/experiments.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

int cmd_run(const std::string& config_path) {
    std::vector<greedyq::ExperimentConfig> configs;
    try {
        configs = greedyq::parse_config_file(config_path);
    } catch (const greedyq::ConfigError& e) {
        std::cerr << config_path << ": " << e.what() << "\n";
        std::cerr << "usage: greedyq run <config.toml>  (see `greedyq gen-config <experiment>`)\n";
        return kExitUsage;
    }
    const auto outcomes = greedyq::run_batch(configs);
    int rc = 0;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const auto& c = configs[i];
        const auto& r = outcomes[i];
        if (r.ok) {
            std::cout << c.label << ": ok -> " << c.output_dir.string() << "\n";
        } else {
            std::cerr << c.label << ": failed: " << r.error << " (partial artifacts in " << c.output_dir.string()
                      << ")\n";
            rc = kExitFailure;
        }
    }
    return rc;
}

int cmd_compare(const std::vector<std::string>& inputs, const std::string& output) {
    try {
        std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
        const auto csv = greedyq::io::to_csv(greedyq::compare_report(paths));
        if (output.empty()) std::cout << csv;
        else greedyq::io::write_file(output, csv);
    } catch (const std::exception& e) {
        std::cerr << "compare: " << e.what() << "\n";
        return kExitFailure;
    }
    return 0;
}

int cmd_gen_config(const std::string& experiment) {
    try {
        std::cout << greedyq::default_config(experiment);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Greedy quantization sequences: experiments and comparisons"};
    app.require_subcommand(1);

    std::string config;
    auto* run = app.add_subcommand("run", "Run the experiment(s) described by a TOML config");
    run->add_option("config", config, "Config file")->required();

    std::vector<std::string> inputs;
    std::string output;
    auto* compare = app.add_subcommand("compare", "Merge scaled trajectories of finished runs on N");
    compare->add_option("outputs", inputs, "Output directories or scaled CSV files")->required();
    compare->add_option("-o,--output", output, "Write the merged CSV here instead of stdout");

    std::string experiment;
    auto* gen = app.add_subcommand("gen-config", "Print a default config for an experiment");
    gen->add_option("experiment", experiment, "Experiment name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (*run) return cmd_run(config);
    if (*compare) return cmd_compare(inputs, output);
    return cmd_gen_config(experiment);
}
