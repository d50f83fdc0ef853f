#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nbart/behaviors.hpp"
#include "nbart/game.hpp"
#include "nbart/metrics.hpp"

namespace nbart {

// ---------------------------------------------------------------------------
// Scenario files: flat structured text with named sections. The parser
// rejects unknown sections and keys outright; a silently misread game
// scenario would invalidate every verdict computed from it.
// ---------------------------------------------------------------------------

struct ScenarioError : std::runtime_error {
    explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

struct Scenario {
    std::string name;
    Params params;
    CryptoParams crypto;
    Bytes value_bytes;
    SchedulePolicy policy = SchedulePolicy::uniform_random;
    CostModel costs;
    std::vector<std::uint64_t> seeds{1};
    std::map<Identity, ByzBehavior> byzantine;
    std::vector<std::pair<std::string, CoalitionSpec>> groups;
    std::uint64_t key_seed = 0xBA27;

    RunSpec to_run_spec(std::uint64_t seed) const {
        RunSpec spec;
        spec.params = params;
        spec.value = ValuePayload::from_bytes(value_bytes);
        spec.crypto = crypto;
        spec.key_seed = key_seed;
        spec.policy = policy;
        spec.seed = seed;
        spec.byzantine = byzantine;
        for (const auto& [gname, g] : groups) spec.coalitions.push_back(g);
        return spec;
    }

    void validate() const {
        params.validate();
        crypto.validate();
        costs.validate();
        if (value_bytes.empty()) throw ScenarioError("value: payload must be non-empty");
        if (value_bytes.size() * 8 <= params.b) throw ScenarioError("value: payload must be longer than B bits");
        if (seeds.empty()) throw ScenarioError("seeds: at least one seed required");
        std::size_t byz_p = 0, byz_c = 0;
        for (const auto& [id, b] : byzantine) {
            (void)b;
            if (id.role == Role::producer) ++byz_p;
            if (id.role == Role::consumer) ++byz_c;
        }
        if (byz_p > params.f_p) throw ScenarioError("byzantine: more producers than the F_P budget");
        if (byz_c > params.f_c) throw ScenarioError("byzantine: more consumers than the F_C budget");
        validate_run_spec(to_run_spec(seeds[0]));  // roles, bounds, disjointness

        // the benefit must dominate each player's honest fault-free cost,
        // otherwise utility verdicts are meaningless; checked by a probe run
        RunSpec probe = to_run_spec(seeds[0]);
        probe.byzantine.clear();
        probe.coalitions.clear();
        probe.policy = SchedulePolicy::fifo;
        KeyRegistry probe_registry(key_seed, params.n_p, params.n_c, crypto);
        UtilityLedger ledger = utility(run_spec(probe, probe_registry), costs, probe_registry);
        for (const auto& [id, row] : ledger.players)
            if (row.benefit <= row.cost())
                throw ScenarioError("costs: benefit does not exceed the honest fault-free cost for " +
                                    to_string(id));
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline std::optional<Identity> parse_identity(const std::string& s) {
    if (s.size() < 2) return std::nullopt;
    std::uint32_t idx = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') return std::nullopt;
        idx = idx * 10 + static_cast<std::uint32_t>(s[i] - '0');
    }
    if (s[0] == 'p') return producer_id(idx);
    if (s[0] == 'c') return consumer_id(idx);
    return std::nullopt;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        std::uint64_t v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ScenarioError(where + ": expected an unsigned integer, got '" + s + "'");
    }
}

inline double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ScenarioError(where + ": expected a number, got '" + s + "'");
    }
}

/// "1..5" or "3 7 9".
inline std::vector<std::uint64_t> parse_seed_list(const std::string& s, const std::string& where) {
    std::vector<std::uint64_t> out;
    auto dots = s.find("..");
    if (dots != std::string::npos) {
        std::uint64_t from = parse_u64(trim(s.substr(0, dots)), where);
        std::uint64_t to = parse_u64(trim(s.substr(dots + 2)), where);
        if (to < from || to - from > 1000000) throw ScenarioError(where + ": bad seed range");
        for (std::uint64_t v = from; v <= to; ++v) out.push_back(v);
        return out;
    }
    for (const auto& tok : split_ws(s)) out.push_back(parse_u64(tok, where));
    return out;
}

inline Bytes parse_hex(const std::string& s, const std::string& where) {
    if (s.size() % 2) throw ScenarioError(where + ": hex payload needs an even digit count");
    auto nibble = [&](char ch) -> int {
        if (ch >= '0' && ch <= '9') return ch - '0';
        if (ch >= 'a' && ch <= 'f') return ch - 'a' + 10;
        if (ch >= 'A' && ch <= 'F') return ch - 'A' + 10;
        throw ScenarioError(where + ": bad hex digit");
    };
    Bytes out;
    for (std::size_t i = 0; i < s.size(); i += 2)
        out.push_back(static_cast<std::uint8_t>(nibble(s[i]) * 16 + nibble(s[i + 1])));
    return out;
}

} // namespace detail

/// Parses one scenario file. `allow_grid` additionally accepts a [grid]
/// section (complexity sweeps); grid values are returned through `grid_out`.
inline Scenario parse_scenario_text(const std::string& text, const std::string& name, bool allow_grid = false,
                                    std::map<std::string, std::vector<std::uint64_t>>* grid_out = nullptr) {
    using detail::parse_double;
    using detail::parse_u64;
    using detail::trim;

    Scenario sc;
    sc.name = name;
    std::optional<std::size_t> value_size;
    std::optional<std::uint64_t> value_seed;
    bool have_value_hex = false;
    std::map<std::string, std::string> deviation_by_group;

    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string where = name + ":" + std::to_string(lineno);
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ScenarioError(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            static const std::vector<std::string> known{"params",    "value",  "crypto",     "schedule",
                                                        "costs",     "seeds",  "byzantine",  "coalitions",
                                                        "deviations"};
            bool ok = std::find(known.begin(), known.end(), section) != known.end() ||
                      (allow_grid && section == "grid");
            if (!ok) throw ScenarioError(where + ": unknown section [" + section + "]");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ScenarioError(where + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw ScenarioError(where + ": expected key = value");

        if (section == "params") {
            if (key == "producers") sc.params.n_p = static_cast<std::uint32_t>(parse_u64(value, where));
            else if (key == "consumers") sc.params.n_c = static_cast<std::uint32_t>(parse_u64(value, where));
            else if (key == "byz_producers") sc.params.f_p = static_cast<std::uint32_t>(parse_u64(value, where));
            else if (key == "byz_consumers") sc.params.f_c = static_cast<std::uint32_t>(parse_u64(value, where));
            else if (key == "threshold") sc.params.b = static_cast<std::uint32_t>(parse_u64(value, where));
            else if (key == "omega") sc.params.omega = static_cast<unsigned>(parse_u64(value, where));
            else if (key == "coalition_producers") sc.params.nt_p = static_cast<std::uint32_t>(parse_u64(value, where));
            else if (key == "coalition_consumers") sc.params.nt_c = static_cast<std::uint32_t>(parse_u64(value, where));
            else throw ScenarioError(where + ": unknown key '" + key + "' in [params]");
        } else if (section == "value") {
            if (key == "size_bytes") value_size = parse_u64(value, where);
            else if (key == "seed") value_seed = parse_u64(value, where);
            else if (key == "hex") { sc.value_bytes = detail::parse_hex(value, where); have_value_hex = true; }
            else throw ScenarioError(where + ": unknown key '" + key + "' in [value]");
        } else if (section == "crypto") {
            if (key == "hash_bits") sc.crypto.hash_bits = static_cast<unsigned>(parse_u64(value, where));
            else if (key == "sig_bits") sc.crypto.sig_bits = static_cast<unsigned>(parse_u64(value, where));
            else if (key == "key_seed") sc.key_seed = parse_u64(value, where);
            else throw ScenarioError(where + ": unknown key '" + key + "' in [crypto]");
        } else if (section == "schedule") {
            if (key == "policy") {
                auto p = parse_policy(value);
                if (!p) throw ScenarioError(where + ": unknown schedule policy '" + value + "'");
                sc.policy = *p;
            } else {
                throw ScenarioError(where + ": unknown key '" + key + "' in [schedule]");
            }
        } else if (section == "costs") {
            if (key == "benefit_producer") sc.costs.beta_p = parse_double(value, where);
            else if (key == "benefit_consumer") sc.costs.beta_c = parse_double(value, where);
            else if (key == "message_cost") sc.costs.cost_per_message = parse_double(value, where);
            else if (key == "bit_cost") sc.costs.cost_per_bit = parse_double(value, where);
            else if (key == "compute_cost") sc.costs.local_compute_cost = parse_double(value, where);
            else throw ScenarioError(where + ": unknown key '" + key + "' in [costs]");
        } else if (section == "seeds") {
            if (key == "list") sc.seeds = detail::parse_seed_list(value, where);
            else throw ScenarioError(where + ": unknown key '" + key + "' in [seeds]");
        } else if (section == "byzantine") {
            auto id = detail::parse_identity(key);
            if (!id) throw ScenarioError(where + ": expected a producer (pN) or consumer (cN) key");
            auto b = parse_byz_behavior(value);
            if (!b) throw ScenarioError(where + ": unknown byzantine behavior '" + value + "'");
            sc.byzantine[*id] = *b;
        } else if (section == "coalitions") {
            CoalitionSpec g;
            for (const auto& tok : detail::split_ws(value)) {
                auto id = detail::parse_identity(tok);
                if (!id) throw ScenarioError(where + ": bad member '" + tok + "'");
                g.members.push_back(*id);
            }
            if (g.members.empty()) throw ScenarioError(where + ": empty coalition");
            sc.groups.emplace_back(key, std::move(g));
        } else if (section == "deviations") {
            deviation_by_group[key] = value;
        } else if (section == "grid" && allow_grid) {
            if (grid_out) (*grid_out)[key] = detail::parse_seed_list(value, where);
        } else {
            throw ScenarioError(where + ": key outside any section");
        }
    }

    for (const auto& [gname, dname] : deviation_by_group) {
        auto d = parse_deviation(dname);
        if (!d) throw ScenarioError(name + ": unknown deviation '" + dname + "'");
        bool found = false;
        for (auto& [n, g] : sc.groups)
            if (n == gname) {
                g.deviation = *d;
                found = true;
            }
        if (!found) throw ScenarioError(name + ": deviation assigned to unknown coalition '" + gname + "'");
    }

    if (!have_value_hex) {
        std::size_t n = value_size.value_or(48);
        sc.value_bytes = random_bytes(value_seed.value_or(11), n);
    }
    return sc;
}

inline Scenario load_scenario(const std::string& path, bool allow_grid = false,
                              std::map<std::string, std::vector<std::uint64_t>>* grid_out = nullptr) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string name = path;
    auto slash = name.find_last_of('/');
    if (slash != std::string::npos) name = name.substr(slash + 1);
    return parse_scenario_text(buf.str(), name, allow_grid, grid_out);
}

// --- deterministic report formatting ------------------------------------------

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string params_line(const Params& p) {
    std::string s;
    s += "params NP=" + std::to_string(p.n_p) + " NC=" + std::to_string(p.n_c) + " FP=" + std::to_string(p.f_p) +
         " FC=" + std::to_string(p.f_c) + " B=" + std::to_string(p.b) + " omega=" + std::to_string(p.omega) +
         " NtP=" + std::to_string(p.nt_p) + " NtC=" + std::to_string(p.nt_c);
    return s;
}

inline std::string complexity_line(const ComplexityReport& r) {
    std::string s = "complexity";
    s += " messages=" + std::to_string(r.messages_total);
    s += " pc-messages=" + std::to_string(r.producer_consumer_messages);
    s += " reports=" + std::to_string(r.report_messages);
    s += " block-bits=" + std::to_string(r.block_bits);
    s += " hash-bits=" + std::to_string(r.pc_hash_bits);
    s += " sig-bits=" + std::to_string(r.pc_signature_bits);
    s += " report-bits=" + std::to_string(r.report_bits);
    s += " framing-bits=" + std::to_string(r.framing_bits);
    s += " bits-total=" + std::to_string(r.bits_total);
    s += " formula-msgs=" + std::to_string(r.formula_msgs);
    s += " formula-block-bits=" + std::to_string(r.formula_block_bits);
    s += " formula-hashsig-bits=" + std::to_string(r.formula_hashsig_bits);
    s += " ratio-msgs=" + fmt_double(r.ratio_msgs);
    s += " ratio-bits=" + fmt_double(r.ratio_bits);
    return s;
}

/// Everything computed for one seed of a run command.
struct SeedReport {
    std::uint64_t seed = 0;
    OracleReport oracles;
    std::vector<bool> has_prod_flags;
    std::vector<bool> has_ack_flags;
    std::size_t certify_count = 0;
    std::size_t consume_count = 0;
    UtilityLedger ledger;
    ComplexityReport complexity;
    std::string trace_text;
};

inline SeedReport evaluate_seed(const Scenario& sc, std::uint64_t seed, const KeyRegistry& registry) {
    SeedReport r;
    r.seed = seed;
    Trace trace = run_spec(sc.to_run_spec(seed), registry);
    r.oracles = nbart_oracles(trace, registry);
    auto consumed = trace.consumed_flags();
    CertSets sets = cert_sets(trace.final_evidence, consumed, sc.params, registry);
    bool thresholds = sets.meets_thresholds(sc.params);
    for (std::uint32_t p = 0; p < sc.params.n_p; ++p)
        r.has_prod_flags.push_back(thresholds && sets.p_bar.count(p) != 0);
    for (std::uint32_t c = 0; c < sc.params.n_c; ++c)
        r.has_ack_flags.push_back(thresholds && sets.c_bar.count(c) != 0);
    for (const auto& e : trace.events) {
        if (e.kind == EventKind::certify) ++r.certify_count;
        if (e.kind == EventKind::consume) ++r.consume_count;
    }
    r.ledger = utility(trace, sc.costs, registry);
    r.complexity = measure(trace, sc.crypto);
    r.trace_text = export_trace(trace);
    return r;
}

inline std::string render_run_report(const Scenario& sc, const std::vector<SeedReport>& seeds) {
    std::string out;
    out += "nbart-run-report v1\n";
    out += "scenario " + sc.name + "\n";
    out += params_line(sc.params) + "\n";
    out += "policy " + std::string(to_string(sc.policy)) + "\n";
    out += "value-bits " + std::to_string(sc.value_bytes.size() * 8) + "\n";
    out += "hash-bits " + std::to_string(sc.crypto.hash_bits) + "\n";
    out += "sig-bits " + std::to_string(sc.crypto.sig_bits) + "\n";
    out += "seeds " + std::to_string(seeds.size()) + "\n";

    std::size_t failures = 0;
    std::map<Identity, double> worst_u;
    for (const auto& sr : seeds) {
        out += "\nbegin-seed " + std::to_string(sr.seed) + "\n";
        for (std::size_t i = 0; i < sr.oracles.results.size(); ++i) {
            const auto& entry = sr.oracles.results[i];
            out += "oracle ";
            out += to_string(static_cast<NbartProperty>(i));
            out += entry.pass ? " pass" : " FAIL " + entry.witness;
            out += "\n";
            if (!entry.pass) ++failures;
        }
        for (std::uint32_t p = 0; p < sc.params.n_p; ++p)
            out += "predicate hasProd p" + std::to_string(p) + (sr.has_prod_flags[p] ? " true" : " false") + "\n";
        for (std::uint32_t c = 0; c < sc.params.n_c; ++c)
            out += "predicate hasAck c" + std::to_string(c) + (sr.has_ack_flags[c] ? " true" : " false") + "\n";
        out += "certify-count " + std::to_string(sr.certify_count) + "\n";
        out += "consume-count " + std::to_string(sr.consume_count) + "\n";
        for (const auto& [id, row] : sr.ledger.players) {
            out += "utility " + to_string(id) + " benefit=" + fmt_double(row.benefit) +
                   " message-cost=" + fmt_double(row.message_cost) + " bit-cost=" + fmt_double(row.bit_cost) +
                   " compute-cost=" + fmt_double(row.compute_cost) + " u=" + fmt_double(row.u()) + "\n";
            auto [it, fresh] = worst_u.try_emplace(id, row.u());
            if (!fresh && row.u() < it->second) it->second = row.u();
        }
        out += complexity_line(sr.complexity) + "\n";
        out += "end-seed " + std::to_string(sr.seed) + "\n";
    }

    out += "\naggregate\n";
    out += "runs " + std::to_string(seeds.size()) + "\n";
    out += "oracle-failures " + std::to_string(failures) + "\n";
    for (const auto& [id, u] : worst_u) out += "worst-u " + to_string(id) + " " + fmt_double(u) + "\n";
    out += failures == 0 ? "verdict pass\n" : "verdict fail\n";
    return out;
}

inline std::string render_cotolerance_report(const Scenario& sc, const CotoleranceReport& report,
                                             std::size_t seed_count) {
    std::string out;
    out += "nbart-cotolerance v1\n";
    out += "scenario " + sc.name + "\n";
    out += params_line(sc.params) + "\n";
    out += "seeds " + std::to_string(seed_count) + "\n";
    for (const auto& [id, u] : report.honest_u_bar)
        out += "honest-u " + to_string(id) + " " + fmt_double(u) + "\n";
    for (const auto& row : report.rows) {
        out += "row coalition={";
        for (std::size_t i = 0; i < row.coalition.members.size(); ++i) {
            if (i) out += " ";
            out += to_string(row.coalition.members[i]);
        }
        out += "} deviation=" + std::string(to_string(row.deviation));
        out += " claimed=";
        out += row.claimed_compliant ? "compliant" : "non-compliant";
        out += " checker=";
        out += row.checker_compliant ? "compliant" : "non-compliant";
        if (row.witness) out += " witness=" + to_string(*row.witness);
        if (row.checker_compliant) out += row.nbart_ok ? " nbart=pass" : " nbart=FAIL";
        out += " worst-benefit=" + fmt_double(row.worst_benefit);
        out += " max-u=" + fmt_double(row.max_u_bar);
        out += row.pass ? " result=pass" : " result=FAIL " + row.detail;
        out += "\n";
    }
    out += std::string("verdict ") + (report.verdict ? "cotolerant-over-catalog" : "violated") + "\n";
    out += "caveat minimization and quantifiers are scoped to the finite behavior catalogs\n";
    return out;
}

} // namespace nbart
