#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nbart/game.hpp"

namespace nbart {

// ---------------------------------------------------------------------------
// The conformance suite: each check drives curated scenarios across seeded
// schedules and Byzantine assignments and verifies one protocol-level
// property on the resulting traces. Checks are independently runnable; the
// mutation checks prove the oracles are not vacuous.
// ---------------------------------------------------------------------------

struct CheckResult {
    std::string name;
    bool pass = true;
    std::string witness;

    explicit CheckResult(std::string check_name = {}) : name(std::move(check_name)) {}
};

struct ConformanceOptions {
    std::size_t seeds = 500;       // schedule-space coverage per check
    std::size_t game_seeds = 2;    // seeds per cell in game-side checks
};

namespace detail {

struct SweepContext {
    RunSpec spec;
    KeyRegistry registry;
    HashVector honest_hashes;
};

inline SweepContext make_context(Params params) {
    RunSpec spec;
    spec.params = params;
    spec.value = ValuePayload::from_bytes(random_bytes(4242, 56));
    SweepContext ctx{spec, KeyRegistry(spec.key_seed, params.n_p, params.n_c, spec.crypto), {}};
    ProducerMachine probe(0, params, &ctx.registry);
    for (const auto& m : probe.on_produce(ctx.spec.value)) {
        ctx.honest_hashes = m.hashes;
        break;
    }
    return ctx;
}

/// Drives `seeds` runs over rotating schedule policies and budget-filling
/// Byzantine behavior pairs; calls `inspect` on every quiescent trace.
inline void correctness_sweep(const SweepContext& ctx, std::size_t seeds,
                              const std::function<void(const Trace&)>& inspect) {
    std::vector<ByzBehavior> pbs, cbs;
    for (const auto& info : byzantine_catalog()) {
        if (info.for_producers) pbs.push_back(info.id);
        if (info.for_consumers) cbs.push_back(info.id);
    }
    const Params& params = ctx.spec.params;
    std::size_t variants = 1 + pbs.size() * cbs.size();
    for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
        RunSpec spec = ctx.spec;
        spec.seed = seed;
        spec.policy = static_cast<SchedulePolicy>(seed % 4);
        std::size_t variant = seed % variants;
        if (variant != 0 && params.f_p > 0 && params.f_c > 0) {
            ByzBehavior pb = pbs[(variant - 1) % pbs.size()];
            ByzBehavior cb = cbs[(variant - 1) / pbs.size()];
            // rotate the Byzantine identities with the seed
            for (std::uint32_t k = 0; k < params.f_p; ++k)
                spec.byzantine[producer_id((seed + k) % params.n_p)] = pb;
            for (std::uint32_t k = 0; k < params.f_c; ++k)
                spec.byzantine[consumer_id((seed + k) % params.n_c)] = cb;
        }
        inspect(run_spec(spec, ctx.registry));
    }
}

} // namespace detail

/// Non-Byzantine consumers only ever latch the honest hash vector.
inline CheckResult check_unique_hash_vector(const ConformanceOptions& opts,
                                            ConsumerMutation mutation = ConsumerMutation::none) {
    CheckResult result{"unique_hash_vector"};
    auto ctx = detail::make_context(Params{5, 4, 1, 1, 2, 8, 2, 2});
    ctx.spec.mutation = mutation;
    detail::correctness_sweep(ctx, opts.seeds, [&](const Trace& trace) {
        if (!result.pass) return;
        for (std::uint32_t c = 0; c < trace.params.n_c; ++c) {
            if (trace.byz.consumers.count(c)) continue;
            const auto& latched = trace.final_consumers[c].correcthashvec;
            if (latched && !(*latched == ctx.honest_hashes)) {
                result.pass = false;
                result.witness = "c" + std::to_string(c) + " latched a non-honest vector, seed " +
                                 std::to_string(trace.seed);
            }
        }
    });
    return result;
}

/// Every non-Byzantine consumer consumes exactly once per quiescent run.
inline CheckResult check_single_consumption(const ConformanceOptions& opts,
                                            ConsumerMutation mutation = ConsumerMutation::none) {
    CheckResult result{"single_consumption"};
    auto ctx = detail::make_context(Params{5, 4, 1, 1, 2, 8, 2, 2});
    ctx.spec.mutation = mutation;
    detail::correctness_sweep(ctx, opts.seeds, [&](const Trace& trace) {
        if (!result.pass) return;
        for (std::uint32_t c = 0; c < trace.params.n_c; ++c) {
            if (trace.byz.consumers.count(c)) continue;
            if (trace.consume_count(c) != 1) {
                result.pass = false;
                result.witness = "c" + std::to_string(c) + " consumed " +
                                 std::to_string(trace.consume_count(c)) + " times, seed " +
                                 std::to_string(trace.seed);
            }
        }
    });
    return result;
}

/// Every non-Byzantine producer ends up certified by every non-Byzantine consumer.
inline CheckResult check_pairwise_certification(const ConformanceOptions& opts) {
    CheckResult result{"pairwise_certification"};
    auto ctx = detail::make_context(Params{5, 4, 1, 1, 2, 8, 2, 2});
    detail::correctness_sweep(ctx, opts.seeds, [&](const Trace& trace) {
        if (!result.pass) return;
        for (std::uint32_t p = 0; p < trace.params.n_p; ++p) {
            if (trace.byz.producers.count(p)) continue;
            for (std::uint32_t c = 0; c < trace.params.n_c; ++c) {
                if (trace.byz.consumers.count(c)) continue;
                if (!certified(trace.final_evidence, p, c, trace.params, ctx.registry)) {
                    result.pass = false;
                    result.witness = "p" + std::to_string(p) + " not certified by c" + std::to_string(c) +
                                     ", seed " + std::to_string(trace.seed);
                }
            }
        }
    });
    return result;
}

/// The certified sets stay above N_P - F_P and N_C - F_C.
inline CheckResult check_certified_set_sizes(const ConformanceOptions& opts) {
    CheckResult result{"certified_set_sizes"};
    auto ctx = detail::make_context(Params{5, 4, 1, 1, 2, 8, 2, 2});
    detail::correctness_sweep(ctx, opts.seeds, [&](const Trace& trace) {
        if (!result.pass) return;
        auto consumed = trace.consumed_flags();
        CertSets sets = cert_sets(trace.final_evidence, consumed, trace.params, ctx.registry);
        if (sets.p_bar.size() < trace.params.n_p - trace.params.f_p ||
            sets.c_bar.size() < trace.params.n_c - trace.params.f_c) {
            result.pass = false;
            result.witness = "sets shrank below the thresholds, seed " + std::to_string(trace.seed);
        }
    });
    return result;
}

/// All seven transfer properties hold on every swept trace.
inline CheckResult check_all_properties(const ConformanceOptions& opts) {
    CheckResult result{"all_properties"};
    for (Params params : {Params{5, 4, 1, 1, 2, 8, 2, 2}, Params{3, 2, 1, 1, 2, 8, 1, 1}}) {
        auto ctx = detail::make_context(params);
        detail::correctness_sweep(ctx, opts.seeds, [&](const Trace& trace) {
            if (!result.pass) return;
            OracleReport report = nbart_oracles(trace, ctx.registry);
            if (!report.all_pass()) {
                for (std::size_t i = 0; i < report.results.size(); ++i)
                    if (!report.results[i].pass)
                        result.witness = std::string(to_string(static_cast<NbartProperty>(i))) + ": " +
                                         report.results[i].witness + ", seed " + std::to_string(trace.seed);
                result.pass = false;
            }
        });
    }
    return result;
}

/// Producers inside a compliant coalition still trigger produce.
inline CheckResult check_coalition_producers_produce(const ConformanceOptions& opts) {
    CheckResult result{"coalition_producers_produce"};
    auto ctx = detail::make_context(Params{5, 4, 1, 1, 2, 8, 2, 2});
    CoalitionSpec t;
    t.members = {producer_id(1), producer_id(2)};
    t.deviation = DeviationId::lazy_produce_relay;
    for (std::uint64_t seed = 1; seed <= opts.game_seeds + 2; ++seed) {
        RunSpec spec = ctx.spec;
        spec.seed = seed;
        spec.coalitions = {t};
        Trace trace = run_spec(spec, ctx.registry);
        for (const auto& m : t.members) {
            bool produced = false;
            for (const auto& e : trace.events)
                if (e.kind == EventKind::produce && e.actor == m) produced = true;
            if (!produced) {
                result.pass = false;
                result.witness = to_string(m) + " never produced under the relay deviation";
            }
        }
    }
    return result;
}

/// Equal observer-side behavior implies equal masked evidence.
inline CheckResult check_masked_evidence_determined_by_observation(const ConformanceOptions& opts) {
    CheckResult result{"masked_evidence_determined_by_observation"};
    auto ctx = detail::make_context(Params{5, 4, 1, 1, 2, 8, 2, 2});
    for (auto deviation : {DeviationId::lazy_produce_relay, DeviationId::intra_coalition_skip}) {
        CoalitionSpec t;
        t.members = deviation == DeviationId::lazy_produce_relay
                        ? std::vector<Identity>{producer_id(1), producer_id(2)}
                        : std::vector<Identity>{producer_id(1), consumer_id(2)};
        t.deviation = deviation;
        for (std::uint64_t seed = 1; seed <= opts.game_seeds + 2; ++seed) {
            RunSpec base = ctx.spec;
            base.seed = seed;
            base.byzantine[consumer_id(0)] = ByzBehavior::no_report;
            RunSpec dev = base;
            dev.coalitions = {t};
            Trace base_trace = run_spec(base, ctx.registry);
            Trace dev_trace = run_spec(dev, ctx.registry);

            std::vector<Identity> everyone;
            for (std::uint32_t p = 0; p < base.params.n_p; ++p) everyone.push_back(producer_id(p));
            for (std::uint32_t c = 0; c < base.params.n_c; ++c) everyone.push_back(consumer_id(c));
            auto phi_base = observable_behavior(base_trace, everyone, observer_id());
            auto phi_dev = observable_behavior(dev_trace, everyone, observer_id());
            if (phi_base != phi_dev) {
                result.pass = false;
                result.witness = "observer multisets diverged, seed " + std::to_string(seed);
                continue;
            }
            if (epsilon_view(base_trace.final_evidence, base_trace.byz) !=
                epsilon_view(dev_trace.final_evidence, dev_trace.byz)) {
                result.pass = false;
                result.witness = "equal observation but different masked evidence, seed " + std::to_string(seed);
            }
        }
    }
    return result;
}

/// Every non-compliant catalog deviation zeroes its members' worst-case benefit.
inline CheckResult check_noncompliant_zero_benefit(const ConformanceOptions& opts) {
    CheckResult result{"noncompliant_zero_benefit"};
    auto ctx = detail::make_context(Params{5, 4, 1, 1, 2, 8, 2, 2});
    CostModel costs;
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= opts.game_seeds; ++s) seeds.push_back(s);
    std::vector<CoalitionSpec> candidates{{{producer_id(1)}, DeviationId::honest},
                                          {{consumer_id(1)}, DeviationId::honest},
                                          {{producer_id(1), consumer_id(1)}, DeviationId::honest}};
    for (const auto& info : deviation_catalog()) {
        if (info.claimed_compliant) continue;
        for (const auto& base : candidates) {
            CoalitionSpec t = base;
            t.deviation = info.id;
            if (!deviation_applicable(info.id, t, ctx.spec.params)) continue;
            RunSpec profile = ctx.spec;
            profile.coalitions = {t};
            ExpectedUtilityReport eu = expected_utility(profile, seeds, costs, ctx.registry);
            for (const auto& m : t.members) {
                if (eu.worst_benefit.at(m) != 0.0 || eu.u_bar.at(m) > 0.0) {
                    result.pass = false;
                    result.witness = std::string(info.name) + " left " + to_string(m) +
                                     " with benefit under worst-case fill";
                }
            }
        }
    }
    return result;
}

/// The full catalog-scoped collusion-tolerance verdict.
inline CheckResult check_collusion_tolerance(const ConformanceOptions& opts) {
    CheckResult result{"collusion_tolerance"};
    auto ctx = detail::make_context(Params{5, 4, 1, 1, 2, 8, 2, 2});
    CostModel costs;
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= opts.game_seeds; ++s) seeds.push_back(s);
    std::vector<CoalitionSpec> coalitions{{{producer_id(1), producer_id(2), consumer_id(0), consumer_id(1)},
                                           DeviationId::honest},
                                          {{producer_id(3), consumer_id(2)}, DeviationId::honest}};
    CotoleranceReport report = check_cotolerance(ctx.spec, coalitions, seeds, costs, ctx.registry);
    if (!report.verdict) {
        result.pass = false;
        for (const auto& row : report.rows)
            if (!row.pass) result.witness = std::string(to_string(row.deviation)) + ": " + row.detail;
    }
    return result;
}

inline std::vector<CheckResult> conformance_suite(const ConformanceOptions& opts = {}) {
    return {
        check_unique_hash_vector(opts),
        check_single_consumption(opts),
        check_pairwise_certification(opts),
        check_certified_set_sizes(opts),
        check_all_properties(opts),
        check_coalition_producers_produce(opts),
        check_masked_evidence_determined_by_observation(opts),
        check_noncompliant_zero_benefit(opts),
        check_collusion_tolerance(opts),
    };
}

/// Fault-injection sensitivity: each entry passes when the corresponding
/// protocol mutation makes its guarding check fail, proving the check bites.
inline std::vector<CheckResult> mutation_sensitivity(const ConformanceOptions& opts = {}) {
    std::vector<CheckResult> out;
    ConformanceOptions fast = opts;
    if (fast.seeds > 120) fast.seeds = 120;

    CheckResult skip_decode{"mutation_skip_decode_detected"};
    CheckResult consumption = check_single_consumption(fast, ConsumerMutation::skip_decode);
    skip_decode.pass = !consumption.pass;
    if (consumption.pass) skip_decode.witness = "dropping the decode step went unnoticed";
    out.push_back(skip_decode);

    CheckResult weak{"mutation_weak_hash_threshold_detected"};
    CheckResult unique = check_unique_hash_vector(fast, ConsumerMutation::weak_hash_threshold);
    weak.pass = !unique.pass;
    if (unique.pass) weak.witness = "lowering the vector-count threshold went unnoticed";
    out.push_back(weak);
    return out;
}

} // namespace nbart
