#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "nbart/cli.hpp"

namespace {

std::optional<nbart::cli::SeedRange> parse_seed_range(const std::string& s) {
    if (s.empty()) return std::nullopt;
    nbart::cli::SeedRange range;
    auto dots = s.find("..");
    try {
        if (dots == std::string::npos) {
            range.from = range.to = std::stoull(s);
        } else {
            range.from = std::stoull(s.substr(0, dots));
            range.to = std::stoull(s.substr(dots + 2));
        }
    } catch (const std::exception&) {
        return std::nullopt;
    }
    if (range.to < range.from) return std::nullopt;
    return range;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"NBART protocol simulator and property harness"};
    app.require_subcommand(1);

    std::string scenario_file, out_dir = "out", seeds_arg;
    bool expect_failure = false;
    bool full = false;
    unsigned parallel = 1;
    std::size_t conformance_seeds = 500;

    auto* run = app.add_subcommand("run", "execute a scenario and check the transfer properties");
    run->add_option("--scenario", scenario_file, "scenario file")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seeds", seeds_arg, "seed range a..b overriding the scenario");
    run->add_flag("--expect-failure", expect_failure, "exit 0 only if some property fails");
    run->add_option("--parallel", parallel, "worker threads across seeds");

    auto* game = app.add_subcommand("game", "collusion-tolerance sweep over the behavior catalogs");
    game->add_option("--scenario", scenario_file, "scenario file")->required();
    game->add_option("--out", out_dir, "output directory");
    game->add_option("--parallel", parallel, "worker threads");

    auto* complexity = app.add_subcommand("complexity", "message/bit accounting over a parameter grid");
    complexity->add_option("--scenario", scenario_file, "grid scenario file")->required();
    complexity->add_option("--out", out_dir, "output directory");

    auto* validate = app.add_subcommand("validate", "parse and validate a scenario");
    validate->add_option("--scenario", scenario_file, "scenario file")->required();
    validate->add_flag("--full", full, "also run the conformance suite");
    validate->add_option("--conformance-seeds", conformance_seeds, "schedule samples per conformance check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto range = parse_seed_range(seeds_arg);
            if (!seeds_arg.empty() && !range) {
                std::cerr << "bad --seeds range: " << seeds_arg << "\n";
                return 2;
            }
            return nbart::cli::cmd_run(scenario_file, out_dir, range, expect_failure, parallel);
        }
        if (*game) return nbart::cli::cmd_game(scenario_file, out_dir, parallel);
        if (*complexity) return nbart::cli::cmd_complexity(scenario_file, out_dir);
        if (*validate) return nbart::cli::cmd_validate(scenario_file, full, conformance_seeds);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
