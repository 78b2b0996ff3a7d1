// Command-line front end: runs config-driven experiments and lists them.
//   moyo run <config.json> [--threads N] [--output-dir PATH]
//   moyo list
// EXPERIMENT_SEED, when set, replaces the config master seed.
// Exit codes: 0 success, 2 scientific band violated, 1 operational error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "moyo/experiments.hpp"

namespace {

std::optional<std::uint64_t> env_seed_override() {
    const char* raw = std::getenv("EXPERIMENT_SEED");
    if (!raw || !*raw) return std::nullopt;
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(raw, &used);
        if (used != std::string(raw).size())
            throw moyo::ConfigError("EXPERIMENT_SEED is not an integer: " + std::string(raw));
        return static_cast<std::uint64_t>(v);
    } catch (const moyo::ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw moyo::ConfigError("EXPERIMENT_SEED is not an integer: " + std::string(raw));
    }
}

int run_command(const std::string& config_path, int threads,
                const std::string& output_dir_flag) {
    const moyo::json cfg = moyo::load_json_file(config_path);

    std::string out_dir = output_dir_flag;
    if (out_dir.empty() && cfg.contains("output_dir")) {
        if (!cfg["output_dir"].is_string())
            moyo::cfg::fail("$.output_dir", "expected a string");
        out_dir = cfg["output_dir"].get<std::string>();
    }
    if (out_dir.empty()) out_dir = ".";
    std::filesystem::create_directories(out_dir);

    const moyo::ExperimentOutcome outcome =
        moyo::run_experiment(cfg, out_dir, threads, env_seed_override());

    for (const auto& f : outcome.outputs) std::cout << "wrote " << out_dir << "/" << f << "\n";
    if (!outcome.ok()) {
        for (const auto& f : outcome.failures) std::cerr << "band violation: " << f << "\n";
        return 2;
    }
    return 0;
}

void list_command() {
    for (const auto& e : moyo::experiment_catalog()) {
        std::cout << e.name << "\n  " << e.summary << "\n  keys: " << e.required_keys
                  << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"penalized-diffusion experiment runner"};
    app.require_subcommand(1);

    std::string config_path, output_dir;
    int threads = 1;

    CLI::App* run = app.add_subcommand("run", "run an experiment from a JSON config");
    run->add_option("config", config_path, "path to the experiment config")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--threads", threads, "worker pool size")->check(CLI::PositiveNumber);
    run->add_option("--output-dir", output_dir, "directory for reports");

    CLI::App* list = app.add_subcommand("list", "list experiments and their config keys");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (list->parsed()) {
            list_command();
            return 0;
        }
        return run_command(config_path, threads, output_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
