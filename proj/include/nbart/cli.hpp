#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "nbart/scenario.hpp"
#include "nbart/verification.hpp"

namespace nbart::cli {

// Exit codes: 0 success, 1 oracle or verdict failure, 2 invalid scenario.

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

struct SeedRange {
    std::uint64_t from = 1;
    std::uint64_t to = 1;
};

inline int cmd_run(const std::string& scenario_file, const std::string& out_dir,
                   const std::optional<SeedRange>& seed_override, bool expect_failure, unsigned parallel,
                   std::ostream& log = std::cout) {
    Scenario sc;
    try {
        sc = load_scenario(scenario_file);
        if (seed_override) {
            sc.seeds.clear();
            for (std::uint64_t s = seed_override->from; s <= seed_override->to; ++s) sc.seeds.push_back(s);
        }
        sc.validate();
    } catch (const std::exception& e) {
        log << "invalid scenario: " << e.what() << "\n";
        return 2;
    }

    KeyRegistry registry(sc.key_seed, sc.params.n_p, sc.params.n_c, sc.crypto);
    std::vector<SeedReport> reports(sc.seeds.size());
    auto worker = [&](std::size_t begin, std::size_t step) {
        for (std::size_t i = begin; i < sc.seeds.size(); i += step)
            reports[i] = evaluate_seed(sc, sc.seeds[i], registry);
    };
    if (parallel <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < parallel; ++t) pool.emplace_back(worker, t, parallel);
        for (auto& t : pool) t.join();
    }

    std::filesystem::create_directories(out_dir);
    std::size_t failures = 0;
    for (const auto& sr : reports) {
        write_file(std::filesystem::path(out_dir) / ("trace_s" + std::to_string(sr.seed) + ".txt"), sr.trace_text);
        for (const auto& entry : sr.oracles.results)
            if (!entry.pass) ++failures;
    }
    std::string report = render_run_report(sc, reports);
    write_file(std::filesystem::path(out_dir) / "report.txt", report);
    log << report;

    if (expect_failure) {
        if (failures > 0) {
            log << "expected failure found (" << failures << " oracle failures)\n";
            return 0;
        }
        log << "expected a failure but every oracle passed\n";
        return 1;
    }
    return failures == 0 ? 0 : 1;
}

inline int cmd_game(const std::string& scenario_file, const std::string& out_dir, unsigned parallel,
                    std::ostream& log = std::cout) {
    Scenario sc;
    try {
        sc = load_scenario(scenario_file);
        sc.validate();
        if (!sc.byzantine.empty())
            throw ScenarioError("game scenarios must leave [byzantine] empty; the minimization owns it");
        if (!sc.params.meets_game_regime())
            throw ScenarioError("params do not meet the game regime bounds");
    } catch (const std::exception& e) {
        log << "invalid scenario: " << e.what() << "\n";
        return 2;
    }

    std::vector<CoalitionSpec> coalitions;
    for (const auto& [gname, g] : sc.groups) {
        CoalitionSpec t = g;
        t.deviation = DeviationId::honest;  // the sweep owns the deviation axis
        coalitions.push_back(std::move(t));
    }
    if (coalitions.empty()) {
        // no declared groups: the singleton (Nash) case
        for (std::uint32_t p = 0; p < sc.params.n_p; ++p)
            coalitions.push_back({{producer_id(p)}, DeviationId::honest});
        for (std::uint32_t c = 0; c < sc.params.n_c; ++c)
            coalitions.push_back({{consumer_id(c)}, DeviationId::honest});
    }

    RunSpec honest = sc.to_run_spec(sc.seeds[0]);
    honest.coalitions.clear();
    KeyRegistry registry(sc.key_seed, sc.params.n_p, sc.params.n_c, sc.crypto);

    CotoleranceReport report;
    try {
        report = check_cotolerance(honest, coalitions, sc.seeds, sc.costs, registry, parallel);
    } catch (const std::exception& e) {
        log << "game check aborted: " << e.what() << "\n";
        return 2;
    }

    std::string text = render_cotolerance_report(sc, report, sc.seeds.size());
    std::filesystem::create_directories(out_dir);
    write_file(std::filesystem::path(out_dir) / "cotolerance.txt", text);
    log << text;
    return report.verdict ? 0 : 1;
}

inline int cmd_complexity(const std::string& grid_file, const std::string& out_dir,
                          std::ostream& log = std::cout) {
    Scenario base;
    std::map<std::string, std::vector<std::uint64_t>> grid;
    try {
        base = load_scenario(grid_file, true, &grid);
    } catch (const std::exception& e) {
        log << "invalid grid: " << e.what() << "\n";
        return 2;
    }

    static const std::vector<std::string> axes{"producers",     "consumers", "byz_producers",
                                               "byz_consumers", "threshold", "omega",
                                               "size_bytes"};
    for (const auto& [key, values] : grid) {
        if (std::find(axes.begin(), axes.end(), key) == axes.end()) {
            log << "invalid grid: unknown axis '" << key << "'\n";
            return 2;
        }
        if (values.empty()) {
            log << "invalid grid: empty axis '" << key << "'\n";
            return 2;
        }
    }

    // cartesian product over the grid axes
    std::vector<std::map<std::string, std::uint64_t>> cells{{}};
    for (const auto& [key, values] : grid) {
        std::vector<std::map<std::string, std::uint64_t>> next;
        for (const auto& cell : cells)
            for (auto v : values) {
                auto copy = cell;
                copy[key] = v;
                next.push_back(std::move(copy));
            }
        cells = std::move(next);
    }

    std::string text = "nbart-complexity v1\n";
    text += "scenario " + base.name + "\n";
    for (const auto& cell : cells) {
        Scenario sc = base;
        sc.byzantine.clear();
        sc.groups.clear();
        for (const auto& [key, v] : cell) {
            if (key == "producers") sc.params.n_p = static_cast<std::uint32_t>(v);
            else if (key == "consumers") sc.params.n_c = static_cast<std::uint32_t>(v);
            else if (key == "byz_producers") sc.params.f_p = static_cast<std::uint32_t>(v);
            else if (key == "byz_consumers") sc.params.f_c = static_cast<std::uint32_t>(v);
            else if (key == "threshold") sc.params.b = static_cast<std::uint32_t>(v);
            else if (key == "omega") sc.params.omega = static_cast<unsigned>(v);
            else if (key == "size_bytes") sc.value_bytes = random_bytes(11, v);
        }
        try {
            sc.validate();
        } catch (const std::exception& e) {
            log << "invalid grid cell: " << e.what() << "\n";
            return 2;
        }
        RunSpec spec = sc.to_run_spec(sc.seeds[0]);
        KeyRegistry registry(sc.key_seed, sc.params.n_p, sc.params.n_c, sc.crypto);
        ComplexityReport r = measure(run_spec(spec, registry), sc.crypto);
        text += "cell NP=" + std::to_string(sc.params.n_p) + " NC=" + std::to_string(sc.params.n_c) +
                " FP=" + std::to_string(sc.params.f_p) + " FC=" + std::to_string(sc.params.f_c) +
                " B=" + std::to_string(sc.params.b) + " omega=" + std::to_string(sc.params.omega) +
                " value-bits=" + std::to_string(sc.value_bytes.size() * 8) + " " + complexity_line(r) + "\n";
    }
    std::filesystem::create_directories(out_dir);
    write_file(std::filesystem::path(out_dir) / "complexity.txt", text);
    log << text;
    return 0;
}

inline int cmd_validate(const std::string& scenario_file, bool full, std::size_t conformance_seeds,
                        std::ostream& log = std::cout) {
    try {
        Scenario sc = load_scenario(scenario_file, true);
        sc.validate();
        log << "scenario ok: " << sc.name << "\n";
        log << params_line(sc.params) << "\n";
        log << "correctness-regime " << (sc.params.meets_correctness_regime() ? "yes" : "no") << "\n";
        log << "game-regime " << (sc.params.meets_game_regime() ? "yes" : "no") << "\n";
    } catch (const std::exception& e) {
        log << "invalid scenario: " << e.what() << "\n";
        return 2;
    }
    if (!full) return 0;

    ConformanceOptions opts;
    opts.seeds = conformance_seeds;
    bool all = true;
    for (const auto& check : conformance_suite(opts)) {
        log << "check " << check.name << (check.pass ? " pass" : " FAIL " + check.witness) << "\n";
        if (!check.pass) all = false;
    }
    for (const auto& check : mutation_sensitivity(opts)) {
        log << "check " << check.name << (check.pass ? " pass" : " FAIL " + check.witness) << "\n";
        if (!check.pass) all = false;
    }
    return all ? 0 : 1;
}

} // namespace nbart::cli
