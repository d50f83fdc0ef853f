#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "nbart/behaviors.hpp"
#include "nbart/evidence.hpp"
#include "nbart/simnet.hpp"

namespace nbart {

// ---------------------------------------------------------------------------
// Trace oracles for the seven transfer properties, utility accounting, the
// Byzantine-aware expected utility, and the collusion-tolerance check.
// ---------------------------------------------------------------------------

enum class NbartProperty : std::size_t {
    validity = 0,
    integrity,
    agreement,
    eventual_consumption,
    evidence,
    producer_certification,
    consumer_certification,
};

inline const char* to_string(NbartProperty p) {
    switch (p) {
    case NbartProperty::validity: return "validity";
    case NbartProperty::integrity: return "integrity";
    case NbartProperty::agreement: return "agreement";
    case NbartProperty::eventual_consumption: return "eventual-consumption";
    case NbartProperty::evidence: return "evidence";
    case NbartProperty::producer_certification: return "producer-certification";
    case NbartProperty::consumer_certification: return "consumer-certification";
    }
    return "?";
}

struct OracleReport {
    struct Entry {
        bool pass = true;
        std::string witness;
    };
    std::array<Entry, 7> results;

    Entry& at(NbartProperty p) { return results[static_cast<std::size_t>(p)]; }
    const Entry& at(NbartProperty p) const { return results[static_cast<std::size_t>(p)]; }
    bool all_pass() const {
        for (const auto& e : results)
            if (!e.pass) return false;
        return true;
    }
};

/// Evaluates all seven properties on a quiescent trace. Only non-Byzantine
/// actors are constrained; the honest value is the scenario payload.
inline OracleReport nbart_oracles(const Trace& trace, const KeyRegistry& registry) {
    OracleReport report;
    const Params& params = trace.params;
    auto non_byz_consumer = [&](std::uint32_t c) { return trace.byz.consumers.count(c) == 0; };
    auto non_byz_producer = [&](std::uint32_t p) { return trace.byz.producers.count(p) == 0; };

    // validity + integrity + agreement over consume events
    std::optional<ValuePayload> first_value;
    for (const auto& e : trace.events) {
        if (e.kind != EventKind::consume || e.actor.role != Role::consumer) continue;
        if (!non_byz_consumer(e.actor.index)) continue;
        if (!e.value || !(*e.value == trace.value)) {
            report.at(NbartProperty::validity) = {false, to_string(e.actor) + " consumed a non-produced value"};
        }
        if (first_value && e.value && !(*e.value == *first_value)) {
            report.at(NbartProperty::agreement) = {false, to_string(e.actor) + " disagrees on the consumed value"};
        }
        if (!first_value) first_value = e.value;
    }
    for (std::uint32_t c = 0; c < params.n_c; ++c) {
        if (!non_byz_consumer(c)) continue;
        std::size_t n = trace.consume_count(c);
        if (n > 1) report.at(NbartProperty::integrity) = {false, "c" + std::to_string(c) + " consumed " + std::to_string(n) + " times"};
        if (n == 0)
            report.at(NbartProperty::eventual_consumption) = {false, "c" + std::to_string(c) + " never consumed"};
    }

    // walk the trace: predicates over the evidence prefix after each report
    ObserverMachine shadow(params, &registry);
    std::vector<bool> consumed_so_far(params.n_c, false);
    std::optional<std::uint64_t> all_true_seq;
    auto predicates_all_true = [&]() {
        CertSets sets = cert_sets(shadow.evidence(), consumed_so_far, params, registry);
        if (!sets.meets_thresholds(params)) return false;
        for (std::uint32_t p = 0; p < params.n_p; ++p)
            if (non_byz_producer(p) && !sets.p_bar.count(p)) return false;
        for (std::uint32_t c = 0; c < params.n_c; ++c)
            if (non_byz_consumer(c) && !sets.c_bar.count(c)) return false;
        return true;
    };
    for (const auto& e : trace.events) {
        if (e.kind == EventKind::consume && e.actor.role == Role::consumer) consumed_so_far[e.actor.index] = true;
        if (e.kind == EventKind::deliver && e.message && e.message->receiver == observer_id()) {
            auto out = shadow.on_deliver(*e.message);
            if (out.certified && !all_true_seq && predicates_all_true()) all_true_seq = e.seq;
        }
    }
    if (all_true_seq) {
        bool certified_after = false;
        for (const auto& e : trace.events)
            if (e.kind == EventKind::certify && e.seq >= *all_true_seq) certified_after = true;
        if (!certified_after)
            report.at(NbartProperty::evidence) = {false, "no certify at or after the completion point"};
    } else {
        // the predicates never became true for every honest player; the
        // certification oracles below carry the failure
    }

    auto consumed = trace.consumed_flags();
    CertSets final_sets = cert_sets(trace.final_evidence, consumed, params, registry);
    bool thresholds = final_sets.meets_thresholds(params);
    for (std::uint32_t p = 0; p < params.n_p; ++p) {
        if (!non_byz_producer(p)) continue;
        if (!thresholds || !final_sets.p_bar.count(p)) {
            report.at(NbartProperty::producer_certification) = {false, "hasProd false for p" + std::to_string(p)};
            break;
        }
    }
    for (std::uint32_t c = 0; c < params.n_c; ++c) {
        if (!non_byz_consumer(c)) continue;
        if (!thresholds || !final_sets.c_bar.count(c)) {
            report.at(NbartProperty::consumer_certification) = {false, "hasAck false for c" + std::to_string(c)};
            break;
        }
    }
    return report;
}

// --- utility accounting --------------------------------------------------------

struct CostModel {
    double beta_p = 1000.0;          // producer benefit
    double beta_c = 1000.0;          // consumer benefit
    double cost_per_message = 1.0;   // per wire message to a non-coalition member
    double cost_per_bit = 0.001;
    double local_compute_cost = 2.0; // per encode/decode invocation

    void validate() const {
        if (beta_p <= 0 || beta_c <= 0) throw InvalidParams("benefits must be positive");
        if (cost_per_message < 0 || cost_per_bit < 0 || local_compute_cost < 0)
            throw InvalidParams("costs must be non-negative");
    }
};

struct PlayerUtility {
    double benefit = 0;
    double message_cost = 0;
    double bit_cost = 0;
    double compute_cost = 0;

    double cost() const { return message_cost + bit_cost + compute_cost; }
    double u() const { return benefit - cost(); }
};

struct UtilityLedger {
    std::map<Identity, PlayerUtility> players;  // non-Byzantine players only
};

/// Benefits come from the predicates on final evidence, costs from counted
/// sends (intra-coalition wire messages and local messages are free) plus the
/// encode/decode compute units the run recorded.
inline UtilityLedger utility(const Trace& trace, const CostModel& costs, const KeyRegistry& registry) {
    const Params& params = trace.params;
    UtilityLedger ledger;

    auto group_of = [&](Identity id) -> int {
        for (std::size_t g = 0; g < trace.coalitions.size(); ++g)
            for (const auto& m : trace.coalitions[g])
                if (m == id) return static_cast<int>(g);
        return -1;
    };

    auto consumed = trace.consumed_flags();
    CertSets sets = cert_sets(trace.final_evidence, consumed, params, registry);
    bool thresholds = sets.meets_thresholds(params);

    for (std::uint32_t p = 0; p < params.n_p; ++p) {
        if (trace.byz.producers.count(p)) continue;
        PlayerUtility& row = ledger.players[producer_id(p)];
        row.benefit = (thresholds && sets.p_bar.count(p)) ? costs.beta_p : 0.0;
    }
    for (std::uint32_t c = 0; c < params.n_c; ++c) {
        if (trace.byz.consumers.count(c)) continue;
        PlayerUtility& row = ledger.players[consumer_id(c)];
        row.benefit = (thresholds && sets.c_bar.count(c)) ? costs.beta_c : 0.0;
    }

    for (const auto& e : trace.events) {
        if (e.kind != EventKind::send || !e.message) continue;
        auto it = ledger.players.find(e.emitter);
        if (it == ledger.players.end()) continue;  // Byzantine or observer
        int g = group_of(e.emitter);
        if (g >= 0 && g == group_of(e.message->receiver)) continue;  // intra-coalition: free
        it->second.message_cost += costs.cost_per_message;
        it->second.bit_cost += costs.cost_per_bit * 8.0 * static_cast<double>(serialize(*e.message).size());
    }
    for (const auto& [id, units] : trace.compute_units) {
        auto it = ledger.players.find(id);
        if (it != ledger.players.end()) it->second.compute_cost += units * costs.local_compute_cost;
    }
    return ledger;
}

// --- Byzantine-aware expected utility --------------------------------------------

struct ByzCell {
    std::map<Identity, ByzBehavior> assignment;

    std::string describe() const {
        if (assignment.empty()) return "none";
        std::string s;
        for (const auto& [id, b] : assignment) {
            if (!s.empty()) s += ",";
            s += to_string(id);
            s += ":";
            s += to_string(b);
        }
        return s;
    }
};

/// All Byzantine cells: identity subsets within the F budgets (drawn outside
/// `excluded`) crossed with per-member behavior assignments.
inline std::vector<ByzCell> byzantine_cells(const Params& params, const CoalitionSpec& excluded) {
    std::vector<std::uint32_t> eligible_p, eligible_c;
    for (std::uint32_t p = 0; p < params.n_p; ++p)
        if (!excluded.has(producer_id(p))) eligible_p.push_back(p);
    for (std::uint32_t c = 0; c < params.n_c; ++c)
        if (!excluded.has(consumer_id(c))) eligible_c.push_back(c);

    std::vector<ByzBehavior> producer_behaviors, consumer_behaviors;
    for (const auto& info : byzantine_catalog()) {
        if (info.for_producers) producer_behaviors.push_back(info.id);
        if (info.for_consumers) consumer_behaviors.push_back(info.id);
    }

    // enumerate subsets of size <= budget, then behavior assignments per member
    std::vector<std::vector<std::uint32_t>> psubs{{}}, csubs{{}};
    {
        std::vector<std::uint32_t> cur;
        auto rec = [&](auto&& self, const std::vector<std::uint32_t>& ids, std::uint32_t budget,
                       std::vector<std::vector<std::uint32_t>>& out, std::size_t start) -> void {
            if (cur.size() == budget) return;
            for (std::size_t i = start; i < ids.size(); ++i) {
                cur.push_back(ids[i]);
                out.push_back(cur);
                self(self, ids, budget, out, i + 1);
                cur.pop_back();
            }
        };
        rec(rec, eligible_p, params.f_p, psubs, 0);
        rec(rec, eligible_c, params.f_c, csubs, 0);
    }

    auto assignments = [](const std::vector<std::uint32_t>& members, const std::vector<ByzBehavior>& behaviors,
                          Role role) {
        std::vector<std::map<Identity, ByzBehavior>> out{{}};
        for (auto m : members) {
            std::vector<std::map<Identity, ByzBehavior>> next;
            for (const auto& partial : out)
                for (auto b : behaviors) {
                    auto copy = partial;
                    copy[{role, m}] = b;
                    next.push_back(std::move(copy));
                }
            out = std::move(next);
        }
        return out;
    };

    std::vector<ByzCell> cells;
    for (const auto& ps : psubs) {
        auto passign = assignments(ps, producer_behaviors, Role::producer);
        for (const auto& cs : csubs) {
            auto cassign = assignments(cs, consumer_behaviors, Role::consumer);
            for (const auto& pa : passign)
                for (const auto& ca : cassign) {
                    ByzCell cell;
                    cell.assignment = pa;
                    cell.assignment.insert(ca.begin(), ca.end());
                    cells.push_back(std::move(cell));
                }
        }
    }
    return cells;
}

struct ExpectedUtilityReport {
    std::map<Identity, double> u_bar;
    std::map<Identity, double> worst_benefit;
    std::map<Identity, std::string> witness;  // argmin byz assignment + seed
    std::size_t cells_evaluated = 0;
    // set when the enumeration budget cut the sweep short: the minima are
    // then only upper bounds on the true worst case
    bool partial = false;
};

/// Risk-averse expected utility: a double minimization over Byzantine
/// identity subsets and catalog behavior assignments, evaluated on every
/// listed seed. The infinite strategy space is scoped to the finite catalog;
/// the run report carries that caveat.
inline ExpectedUtilityReport expected_utility(const RunSpec& profile, const std::vector<std::uint64_t>& seeds,
                                              const CostModel& costs, const KeyRegistry& registry,
                                              std::size_t max_cells = 2000000) {
    CoalitionSpec excluded;
    for (const auto& t : profile.coalitions)
        excluded.members.insert(excluded.members.end(), t.members.begin(), t.members.end());
    auto cells = byzantine_cells(profile.params, excluded);

    ExpectedUtilityReport report;
    for (const auto& cell : cells) {
        if (report.cells_evaluated + seeds.size() > max_cells) {
            report.partial = true;
            break;
        }
        report.cells_evaluated += seeds.size();
        for (std::uint64_t seed : seeds) {
            RunSpec spec = profile;
            spec.seed = seed;
            spec.byzantine = cell.assignment;
            Trace trace = run_spec(spec, registry);
            UtilityLedger ledger = utility(trace, costs, registry);
            for (const auto& [id, row] : ledger.players) {
                auto [it, fresh] = report.u_bar.try_emplace(id, row.u());
                bool lower = row.u() < it->second;
                if (fresh || lower) {
                    it->second = row.u();
                    report.witness[id] = cell.describe() + " seed=" + std::to_string(seed);
                }
                auto [bit, bfresh] = report.worst_benefit.try_emplace(id, row.benefit);
                if (bfresh || row.benefit < bit->second) bit->second = row.benefit;
            }
        }
    }
    return report;
}

// --- cotolerance ------------------------------------------------------------------

struct CotoleranceRow {
    CoalitionSpec coalition;
    DeviationId deviation = DeviationId::honest;
    bool claimed_compliant = false;
    bool checker_compliant = false;
    std::optional<Identity> witness;
    bool nbart_ok = true;        // compliant rows: oracles under the Byzantine sweep
    double worst_benefit = 0;    // min over members
    double max_u_bar = 0;        // max over members of the deviation's expected utility
    bool pass = false;
    std::string detail;
};

struct CotoleranceReport {
    std::map<Identity, double> honest_u_bar;
    std::vector<CotoleranceRow> rows;
    bool honest_positive = true;
    bool verdict = true;
};

namespace detail {

inline CotoleranceRow evaluate_cotolerance_row(const RunSpec& honest, const CoalitionSpec& t,
                                               const DeviationInfo& info,
                                               const std::vector<std::uint64_t>& seeds, const CostModel& costs,
                                               const KeyRegistry& registry) {
    CotoleranceRow row;
    row.coalition = t;
    row.coalition.deviation = info.id;
    row.deviation = info.id;
    row.claimed_compliant = info.claimed_compliant;

    // the baseline keeps the same grouping (free intra-coalition messages)
    // with everyone honest, so utilities compare like for like
    CoalitionSpec honest_group = t;
    honest_group.deviation = DeviationId::honest;
    RunSpec base = honest;
    base.coalitions.push_back(honest_group);
    RunSpec dev = honest;
    dev.coalitions.push_back(row.coalition);

    // compliance on every listed seed
    bool compliant = true;
    std::optional<Identity> witness;
    for (std::uint64_t seed : seeds) {
        RunSpec base_run = base;
        base_run.seed = seed;
        RunSpec dev_run = dev;
        dev_run.seed = seed;
        auto verdict = check_compliance(run_spec(dev_run, registry), run_spec(base_run, registry), row.coalition);
        if (!verdict.compliant) {
            compliant = false;
            witness = verdict.witness;
            break;
        }
    }
    row.checker_compliant = compliant;
    row.witness = witness;

    ExpectedUtilityReport base_eu = expected_utility(base, seeds, costs, registry);
    ExpectedUtilityReport dev_eu = expected_utility(dev, seeds, costs, registry);
    if (base_eu.partial || dev_eu.partial)
        throw EnumerationBudgetExceeded("per-row minimization was cut short; verdict would be unsound");
    bool first_member = true;
    double min_benefit = 0, max_u = 0;
    for (const auto& m : t.members) {
        double b = dev_eu.worst_benefit.at(m);
        double u = dev_eu.u_bar.at(m);
        if (first_member || b < min_benefit) min_benefit = b;
        if (first_member || u > max_u) max_u = u;
        first_member = false;
    }
    row.worst_benefit = min_benefit;
    row.max_u_bar = max_u;

    if (compliant != info.claimed_compliant) {
        row.pass = false;
        row.detail = "checker verdict disagrees with the catalog claim";
    } else if (compliant) {
        // compliant side: the properties must survive the Byzantine sweep
        row.nbart_ok = true;
        auto cells = byzantine_cells(honest.params, row.coalition);
        for (const auto& cell : cells) {
            for (std::uint64_t seed : seeds) {
                RunSpec spec = dev;
                spec.seed = seed;
                spec.byzantine = cell.assignment;
                Trace trace = run_spec(spec, registry);
                OracleReport oracles = nbart_oracles(trace, registry);
                if (!oracles.all_pass()) {
                    row.nbart_ok = false;
                    row.detail = "property failure under " + cell.describe();
                    break;
                }
            }
            if (!row.nbart_ok) break;
        }
        bool full_benefits = true;
        for (const auto& m : t.members) {
            double expected = m.role == Role::producer ? costs.beta_p : costs.beta_c;
            if (dev_eu.worst_benefit.at(m) != expected) full_benefits = false;
        }
        row.pass = row.nbart_ok && full_benefits;
        if (!full_benefits) row.detail = "a compliant member missed its benefit";
    } else {
        // non-compliant side: zero worst-case benefit, non-positive utility,
        // strictly below the honest profile
        bool zero_benefit = true, non_positive = true, dominated = true;
        for (const auto& m : t.members) {
            if (dev_eu.worst_benefit.at(m) != 0.0) zero_benefit = false;
            if (dev_eu.u_bar.at(m) > 0.0) non_positive = false;
            if (dev_eu.u_bar.at(m) >= base_eu.u_bar.at(m)) dominated = false;
        }
        row.pass = zero_benefit && non_positive && dominated;
        if (!row.pass) row.detail = "a deviating member kept benefit or utility";
    }
    return row;
}

} // namespace detail

/// Definition-1 style check over the finite catalogs: compliant deviations
/// must preserve all seven properties and full benefits; non-compliant ones
/// must pin every member's worst-case benefit to exactly zero with expected
/// utility at most zero, strictly below the honest profile's. Rows are
/// independent; `parallel` > 1 spreads them over that many threads without
/// changing the result.
inline CotoleranceReport check_cotolerance(const RunSpec& honest_profile,
                                           const std::vector<CoalitionSpec>& coalitions,
                                           const std::vector<std::uint64_t>& seeds, const CostModel& costs,
                                           const KeyRegistry& registry, unsigned parallel = 1) {
    if (!honest_profile.params.meets_game_regime())
        throw InvalidParams("instance shape does not meet the game regime bounds");
    costs.validate();

    CotoleranceReport report;
    RunSpec honest = honest_profile;
    honest.byzantine.clear();

    ExpectedUtilityReport honest_eu = expected_utility(honest, seeds, costs, registry);
    if (honest_eu.partial)
        throw EnumerationBudgetExceeded("honest-profile minimization was cut short; verdict would be unsound");
    report.honest_u_bar = honest_eu.u_bar;
    for (const auto& [id, u] : honest_eu.u_bar)
        if (u <= 0) report.honest_positive = false;
    if (!report.honest_positive) report.verdict = false;

    std::vector<std::pair<CoalitionSpec, DeviationInfo>> tasks;
    for (const auto& t : coalitions)
        for (const auto& info : deviation_catalog())
            if (deviation_applicable(info.id, t, honest_profile.params)) tasks.emplace_back(t, info);

    report.rows.resize(tasks.size());
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&](std::size_t begin, std::size_t step) {
        for (std::size_t k = begin; k < tasks.size(); k += step) {
            try {
                report.rows[k] =
                    detail::evaluate_cotolerance_row(honest, tasks[k].first, tasks[k].second, seeds, costs, registry);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (parallel <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < parallel; ++w) pool.emplace_back(worker, w, parallel);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    for (const auto& row : report.rows)
        if (!row.pass) report.verdict = false;
    return report;
}

} // namespace nbart
