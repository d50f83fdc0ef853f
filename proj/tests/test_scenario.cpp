#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nbart/cli.hpp"
#include "nbart/scenario.hpp"

using namespace nbart;

namespace {

const char* kScenario = R"(
# comment
[params]
producers = 5
consumers = 4
byz_producers = 1
byz_consumers = 1
threshold = 2
omega = 8
coalition_producers = 2
coalition_consumers = 2

[value]
size_bytes = 40
seed = 9

[crypto]
hash_bits = 128
sig_bits = 64

[schedule]
policy = consumer-starving

[costs]
benefit_producer = 500
benefit_consumer = 400
message_cost = 0.5
bit_cost = 0.0001
compute_cost = 1

[seeds]
list = 2..4

[byzantine]
p4 = silent

[coalitions]
g1 = p1 p2

[deviations]
g1 = lazy_produce_relay
)";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) : path(std::filesystem::temp_directory_path() / ("nbart_" + tag)) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::filesystem::path write_scn(const TempDir& dir, const std::string& name, const std::string& text) {
    auto p = dir.path / name;
    std::ofstream out(p, std::ios::binary);
    out << text;
    return p;
}

} // namespace

TEST_CASE("scenario parser reads every section") {
    Scenario sc = parse_scenario_text(kScenario, "inline");
    CHECK(sc.params.n_p == 5);
    CHECK(sc.params.n_c == 4);
    CHECK(sc.params.nt_p == 2);
    CHECK(sc.crypto.hash_bits == 128);
    CHECK(sc.crypto.sig_bits == 64);
    CHECK(sc.policy == SchedulePolicy::consumer_starving);
    CHECK(sc.costs.beta_p == 500);
    CHECK(sc.seeds == std::vector<std::uint64_t>{2, 3, 4});
    CHECK(sc.value_bytes.size() == 40);
    REQUIRE(sc.byzantine.size() == 1);
    CHECK(sc.byzantine.at(producer_id(4)) == ByzBehavior::silent);
    REQUIRE(sc.groups.size() == 1);
    CHECK(sc.groups[0].second.deviation == DeviationId::lazy_produce_relay);
    CHECK_NOTHROW(sc.validate());
}

TEST_CASE("parser rejects unknown keys, sections and bad values") {
    CHECK_THROWS_AS(parse_scenario_text("[paramz]\n", "x"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario_text("[params]\nproducerz = 3\n", "x"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario_text("[params]\nproducers = three\n", "x"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario_text("stray = 1\n", "x"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario_text("[schedule]\npolicy = sometimes\n", "x"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario_text("[byzantine]\nq3 = silent\n", "x"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario_text("[byzantine]\np0 = shy\n", "x"), ScenarioError);
    // grid section only allowed when requested
    CHECK_THROWS_AS(parse_scenario_text("[grid]\nconsumers = 2\n", "x"), ScenarioError);
}

TEST_CASE("scenario validation enforces budgets and structure") {
    Scenario sc = parse_scenario_text(kScenario, "inline");
    sc.byzantine[producer_id(0)] = ByzBehavior::silent;  // two byz producers, F_P = 1
    CHECK_THROWS_AS(sc.validate(), ScenarioError);

    Scenario bad_b = parse_scenario_text(kScenario, "inline");
    bad_b.params.b = 5;  // B > N_P - F_P
    CHECK_THROWS_AS(bad_b.validate(), InvalidParams);

    // a benefit that cannot even cover the honest cost is rejected up front
    Scenario starved = parse_scenario_text(kScenario, "inline");
    starved.costs.beta_p = 0.5;
    starved.costs.cost_per_message = 1.0;
    CHECK_THROWS_AS(starved.validate(), ScenarioError);
}

TEST_CASE("run command: exit codes and reproducible files") {
    TempDir dir("run");
    auto scn = write_scn(dir, "ff.scn", R"(
[params]
producers = 3
consumers = 2
byz_producers = 1
byz_consumers = 1
threshold = 2

[value]
size_bytes = 32
seed = 3

[seeds]
list = 1..3
)");
    std::ostringstream log1, log2;
    auto out1 = dir.path / "out1";
    auto out2 = dir.path / "out2";
    CHECK(cli::cmd_run(scn.string(), out1.string(), std::nullopt, false, 1, log1) == 0);
    CHECK(cli::cmd_run(scn.string(), out2.string(), std::nullopt, false, 2, log2) == 0);

    // byte-identical outputs, independent of worker count
    CHECK(slurp(out1 / "report.txt") == slurp(out2 / "report.txt"));
    for (int s = 1; s <= 3; ++s)
        CHECK(slurp(out1 / ("trace_s" + std::to_string(s) + ".txt")) ==
              slurp(out2 / ("trace_s" + std::to_string(s) + ".txt")));
    CHECK(slurp(out1 / "report.txt").find("verdict pass") != std::string::npos);
}

TEST_CASE("run command: malformed params exit 2 naming the invariant") {
    TempDir dir("bad");
    auto scn = write_scn(dir, "bad.scn", R"(
[params]
producers = 5
consumers = 3
byz_producers = 1
byz_consumers = 0
threshold = 5

[value]
size_bytes = 16
)");
    std::ostringstream log;
    CHECK(cli::cmd_run(scn.string(), (dir.path / "out").string(), std::nullopt, false, 1, log) == 2);
    CHECK(log.str().find("B") != std::string::npos);
}

TEST_CASE("run command: expect-failure flips the exit code") {
    std::ostringstream log;
    TempDir dir("boundary");
    // boundary shape: one equivocator among two producers stalls consumption
    auto scn = write_scn(dir, "boundary.scn", R"(
[params]
producers = 2
consumers = 2
byz_producers = 1
byz_consumers = 0
threshold = 1

[value]
size_bytes = 16

[seeds]
list = 1..4

[byzantine]
p1 = equivocate
)");
    CHECK(cli::cmd_run(scn.string(), (dir.path / "o1").string(), std::nullopt, true, 1, log) == 0);
    CHECK(cli::cmd_run(scn.string(), (dir.path / "o2").string(), std::nullopt, false, 1, log) == 1);

    // a healthy scenario with --expect-failure exits 1: nothing failed
    auto ok = write_scn(dir, "ok.scn", R"(
[params]
producers = 3
consumers = 2
byz_producers = 1
byz_consumers = 0
threshold = 2

[value]
size_bytes = 16

[seeds]
list = 1
)");
    CHECK(cli::cmd_run(ok.string(), (dir.path / "o3").string(), std::nullopt, true, 1, log) == 1);
}

TEST_CASE("run command replays a scenario-assigned coalition deviation") {
    TempDir dir("coalition");
    auto scn = write_scn(dir, "lazy.scn", R"(
[params]
producers = 5
consumers = 4
byz_producers = 1
byz_consumers = 1
threshold = 2
coalition_producers = 2
coalition_consumers = 2

[value]
size_bytes = 32

[seeds]
list = 1..2

[coalitions]
crew = p1 p2

[deviations]
crew = lazy_produce_relay
)");
    std::ostringstream log;
    // an observation-equivalent deviation keeps all seven properties
    CHECK(cli::cmd_run(scn.string(), (dir.path / "out").string(), std::nullopt, false, 1, log) == 0);
    std::string report = slurp(dir.path / "out" / "report.txt");
    CHECK(report.find("verdict pass") != std::string::npos);
    // the lazy member kept its full benefit without paying for messages
    CHECK(report.find("utility p1 benefit=1000.000000 message-cost=0.000000") != std::string::npos);
}

TEST_CASE("complexity command writes one row per grid cell") {
    TempDir dir("grid");
    auto scn = write_scn(dir, "grid.scn", R"(
[params]
producers = 5
consumers = 2
byz_producers = 1
byz_consumers = 0
threshold = 2

[value]
size_bytes = 64

[grid]
consumers = 2 4
threshold = 1 2
)");
    std::ostringstream log;
    CHECK(cli::cmd_complexity(scn.string(), (dir.path / "out").string(), log) == 0);
    std::string table = slurp(dir.path / "out" / "complexity.txt");
    CHECK(std::count(table.begin(), table.end(), '\n') == 2 + 4);  // header lines + 4 cells
    CHECK(table.find("ratio-bits=1.000000") != std::string::npos);
}

TEST_CASE("game command rejects unusable scenarios up front") {
    TempDir dir("game2");
    // a fixed byzantine set would shadow the worst-case minimization
    auto fixed = write_scn(dir, "fixed.scn", R"(
[params]
producers = 5
consumers = 4
byz_producers = 1
byz_consumers = 1
threshold = 2
coalition_producers = 2
coalition_consumers = 2

[value]
size_bytes = 24

[byzantine]
p0 = silent
)");
    std::ostringstream log;
    CHECK(cli::cmd_game(fixed.string(), (dir.path / "o1").string(), 1, log) == 2);
    CHECK(log.str().find("byzantine") != std::string::npos);

    // outside the game regime the verdict machinery refuses to run
    auto narrow = write_scn(dir, "narrow.scn", R"(
[params]
producers = 5
consumers = 2
byz_producers = 1
byz_consumers = 1
threshold = 2
coalition_producers = 2
coalition_consumers = 2

[value]
size_bytes = 24
)");
    std::ostringstream log2;
    CHECK(cli::cmd_game(narrow.string(), (dir.path / "o2").string(), 1, log2) == 2);
    CHECK(log2.str().find("game regime") != std::string::npos);
}

TEST_CASE("validate command distinguishes good from broken files") {
    TempDir dir("validate");
    auto good = write_scn(dir, "good.scn", R"(
[params]
producers = 3
consumers = 2
byz_producers = 1
byz_consumers = 1
threshold = 2

[value]
size_bytes = 24
)");
    std::ostringstream log;
    CHECK(cli::cmd_validate(good.string(), false, 10, log) == 0);
    CHECK(log.str().find("scenario ok") != std::string::npos);

    auto broken = write_scn(dir, "broken.scn", "[params]\nproducers = 0\n");
    std::ostringstream log2;
    CHECK(cli::cmd_validate(broken.string(), false, 10, log2) == 2);
}
