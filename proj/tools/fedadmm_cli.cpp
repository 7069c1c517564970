// fedadmm: run, sweep and theory-check federated ADMM experiments.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedadmm/errors.hpp"
#include "fedadmm/experiment.hpp"

using namespace fedadmm;

namespace {

std::vector<std::int64_t> parse_k0_list(const std::string& text) {
    std::vector<std::int64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            long long v = std::stoll(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw Error(ErrorCode::ConfigError, "--k0: '" + item + "' is not an integer");
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Communication-efficient federated ADMM experiments"};
    app.require_subcommand(1);

    std::string config_path;
    long long seed = -1;
    std::string out_dir;
    bool timing = false;
    std::string k0_text;
    int repeats = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "JSON experiment config")->required();
        sub->add_option("--seed", seed, "override problem.seed");
        sub->add_option("--out", out_dir, "override output_dir");
        sub->add_flag("--timing", timing, "record wall-clock times (artifacts stop being byte-reproducible)");
    };
    auto* run_cmd = app.add_subcommand("run", "solve once, write trace.csv and summary.json");
    add_common(run_cmd);
    auto* sweep_cmd = app.add_subcommand("sweep", "average iterations and rounds over k0 values and seeds");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--k0", k0_text, "comma separated k0 values")->required();
    sweep_cmd->add_option("--repeats", repeats, "seeded instances per k0")->required();
    auto* check_cmd = app.add_subcommand("check", "solve with theory checks on; fail on any violated inequality");
    add_common(check_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }

    ExperimentConfig cfg;
    std::vector<std::int64_t> k0_values;
    try {
        cfg = load_config(config_path);
        if (seed >= 0) cfg.problem.seed = static_cast<std::uint64_t>(seed);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (timing) cfg.hp.record_timing = true;
        if (*sweep_cmd) k0_values = parse_k0_list(k0_text);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    }

    if (*run_cmd) return run_experiment(cfg, std::cerr);
    if (*sweep_cmd) return run_sweep(cfg, k0_values, repeats, std::cerr);
    cfg.theory_check = true;
    return run_experiment(cfg, std::cerr, true);
}
