#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "fuelsim/errors.hpp"
#include "fuelsim/pipeline.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> n;
    std::string out_dir;
    std::string vehicle;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "pipeline config file");
    cmd->add_option("--seed", flags.seed, "campaign seed override");
    cmd->add_option("--n", flags.n, "campaign size override");
    cmd->add_option("--out", flags.out_dir, "output directory override");
    cmd->add_option("--vehicle", flags.vehicle, "vehicle fixture name override");
}

fuelsim::PipelineConfig build_config(const CommonFlags& flags) {
    fuelsim::PipelineConfig cfg;
    if (!flags.config_path.empty()) cfg = fuelsim::parse_config_file(flags.config_path);
    if (flags.seed) cfg.campaign.seed = *flags.seed;
    if (flags.n) cfg.campaign.n = static_cast<std::size_t>(*flags.n);
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (!flags.vehicle.empty()) {
        cfg.vehicle_fixture = flags.vehicle;
        cfg.vehicle_config_path.clear();
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Car-following fuel consumption pipeline"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string data_path;
    std::string test_path;

    CLI::App* simulate = app.add_subcommand("simulate", "run a Monte Carlo campaign");
    add_common_flags(simulate, flags);

    CLI::App* analyze = app.add_subcommand("analyze", "correlation and fit reports for a campaign");
    analyze->add_option("data", data_path, "campaign CSV")->required();
    add_common_flags(analyze, flags);

    CLI::App* predict = app.add_subcommand("predict", "train a GP regressor and score a test set");
    predict->add_option("train", data_path, "training campaign CSV")->required();
    predict->add_option("test", test_path, "test campaign CSV (sampled when omitted)");
    add_common_flags(predict, flags);

    CLI::App* demo = app.add_subcommand("demo", "all four scenario x vehicle cells end-to-end");
    add_common_flags(demo, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
            return app.exit(e);
        }
        app.exit(e);
        return 2;
    }

    try {
        const fuelsim::PipelineConfig cfg = build_config(flags);
        if (simulate->parsed()) {
            fuelsim::cmd_simulate(cfg);
        } else if (analyze->parsed()) {
            fuelsim::cmd_analyze(cfg, data_path);
        } else if (predict->parsed()) {
            fuelsim::cmd_predict(cfg, data_path, test_path);
        } else if (demo->parsed()) {
            fuelsim::run_demo(cfg);
        }
        return 0;
    } catch (const fuelsim::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
