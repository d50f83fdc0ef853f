#include "doctest.h"

#include "nbart/behaviors.hpp"

using namespace nbart;

namespace {

RunSpec game_spec(SchedulePolicy policy = SchedulePolicy::uniform_random, std::uint64_t seed = 21) {
    RunSpec spec;
    spec.params = Params{5, 4, 1, 1, 2, 8, 2, 2};
    spec.value = ValuePayload::from_bytes(random_bytes(88, 48));
    spec.policy = policy;
    spec.seed = seed;
    return spec;
}

const std::vector<SchedulePolicy> kPolicies{SchedulePolicy::fifo, SchedulePolicy::uniform_random,
                                            SchedulePolicy::byzantine_favoring,
                                            SchedulePolicy::consumer_starving};

} // namespace

TEST_CASE("catalog ids are stable and parseable") {
    for (const auto& info : byzantine_catalog()) CHECK(parse_byz_behavior(info.name) == info.id);
    for (const auto& info : deviation_catalog()) CHECK(parse_deviation(info.name) == info.id);
    CHECK_FALSE(parse_byz_behavior("nonsense").has_value());
    CHECK_FALSE(parse_deviation("nonsense").has_value());
}

TEST_CASE("equivocating producers cannot displace the honest hash vector") {
    for (auto policy : kPolicies) {
        for (std::uint64_t seed : {1ull, 9ull, 33ull}) {
            RunSpec spec = game_spec(policy, seed);
            spec.byzantine[producer_id(2)] = ByzBehavior::equivocate;
            KeyRegistry registry = make_registry(spec);
            Trace trace = run_spec(spec, registry);

            // reconstruct the honest hash vector
            ProducerMachine honest(0, spec.params, &registry);
            HashVector h_v;
            for (const auto& m : honest.on_produce(spec.value))
                if (m.kind == MessageKind::block) {
                    h_v = m.hashes;
                    break;
                }
            for (std::uint32_t c = 0; c < spec.params.n_c; ++c) {
                REQUIRE(trace.final_consumers[c].correcthashvec.has_value());
                REQUIRE(*trace.final_consumers[c].correcthashvec == h_v);
                REQUIRE(trace.final_consumers[c].value == spec.value);
            }
        }
    }
}

TEST_CASE("corrupt block senders leave missing but contribute nothing decodable") {
    RunSpec spec = game_spec(SchedulePolicy::fifo, 3);
    spec.byzantine[producer_id(0)] = ByzBehavior::corrupt_block;
    KeyRegistry registry = make_registry(spec);
    Trace trace = run_spec(spec, registry);
    for (std::uint32_t c = 0; c < spec.params.n_c; ++c) {
        // every consumer consumed regardless
        CHECK(trace.final_consumers[c].value == spec.value);
        // p0 was removed from missing everywhere (its signature was valid)
        CHECK(trace.final_consumers[c].missing.count(0) == 0);
        // but consumers in conset(p0) never certify it
        if (in_prodset(0, c, spec.params)) CHECK_FALSE(trace.final_consumers[c].correctproducers[0].has_value());
    }
}

TEST_CASE("silent Byzantine producers do not stop honest consumption") {
    RunSpec spec = game_spec(SchedulePolicy::byzantine_favoring, 14);
    spec.byzantine[producer_id(4)] = ByzBehavior::silent;
    KeyRegistry registry = make_registry(spec);
    Trace trace = run_spec(spec, registry);
    for (std::uint32_t c = 0; c < spec.params.n_c; ++c) {
        CHECK(trace.consume_count(c) == 1);
        CHECK(trace.final_consumers[c].value == spec.value);
    }
}

TEST_CASE("non-reporting Byzantine consumers leave honest predicates intact") {
    RunSpec spec = game_spec(SchedulePolicy::uniform_random, 5);
    spec.byzantine[consumer_id(3)] = ByzBehavior::no_report;
    KeyRegistry registry = make_registry(spec);
    Trace trace = run_spec(spec, registry);
    auto consumed = trace.consumed_flags();
    for (std::uint32_t p = 0; p < spec.params.n_p; ++p)
        CHECK(has_prod(trace.final_evidence, consumed, p, spec.params, registry));
    for (std::uint32_t c = 0; c < 3; ++c)
        CHECK(has_ack(trace.final_evidence, consumed, c, spec.params, registry));
    CHECK_FALSE(has_ack(trace.final_evidence, consumed, 3, spec.params, registry));
}

TEST_CASE("false reports are stored but certify nobody") {
    RunSpec spec = game_spec(SchedulePolicy::fifo, 6);
    spec.byzantine[consumer_id(0)] = ByzBehavior::false_report;
    KeyRegistry registry = make_registry(spec);
    Trace trace = run_spec(spec, registry);
    REQUIRE(trace.final_evidence[0].has_value());
    for (std::uint32_t p = 0; p < spec.params.n_p; ++p)
        CHECK_FALSE(certified(trace.final_evidence, p, 0, spec.params, registry));
    // honest players keep their predicates
    auto consumed = trace.consumed_flags();
    for (std::uint32_t p = 0; p < spec.params.n_p; ++p)
        CHECK(has_prod(trace.final_evidence, consumed, p, spec.params, registry));
    for (std::uint32_t c = 1; c < spec.params.n_c; ++c)
        CHECK(has_ack(trace.final_evidence, consumed, c, spec.params, registry));
}

TEST_CASE("late flood resends are absorbed by the missing guard") {
    RunSpec spec = game_spec(SchedulePolicy::uniform_random, 8);
    spec.byzantine[producer_id(1)] = ByzBehavior::late_flood;
    KeyRegistry registry = make_registry(spec);
    Trace trace = run_spec(spec, registry);
    for (std::uint32_t c = 0; c < spec.params.n_c; ++c) {
        CHECK(trace.consume_count(c) == 1);
        CHECK(trace.final_consumers[c].value == spec.value);
    }
    // the flood produced duplicate sends, each delivered exactly once and dropped
    std::size_t p1_sends = 0;
    for (const auto& e : trace.events)
        if (e.kind == EventKind::send && e.message && e.message->sender == producer_id(1)) ++p1_sends;
    CHECK(p1_sends == 2 * spec.params.n_c);
}

TEST_CASE("compliance checker is reflexive for every behavior") {
    for (const auto& info : deviation_catalog()) {
        RunSpec spec = game_spec(SchedulePolicy::uniform_random, 17);
        CoalitionSpec t;
        t.members = {producer_id(1), producer_id(2), consumer_id(0), consumer_id(1)};
        t.deviation = info.id;
        if (!deviation_applicable(info.id, t, spec.params)) continue;
        spec.coalitions = {t};
        KeyRegistry registry = make_registry(spec);
        Trace trace = run_spec(spec, registry);
        auto self = check_compliance(trace, trace, t);
        CHECK(self.compliant);
    }
}

TEST_CASE("lazy produce relay is compliant under every policy and seed") {
    CoalitionSpec t;
    t.members = {producer_id(1), producer_id(2)};
    t.deviation = DeviationId::lazy_produce_relay;
    for (auto policy : kPolicies) {
        for (std::uint64_t seed : {2ull, 19ull}) {
            RunSpec base = game_spec(policy, seed);
            RunSpec dev = base;
            dev.coalitions = {t};
            KeyRegistry registry = make_registry(base);
            Trace base_trace = run_spec(base, registry);
            Trace dev_trace = run_spec(dev, registry);
            auto verdict = check_compliance(dev_trace, base_trace, t);
            CHECK(verdict.compliant);

            // the lazy member still produces, and the relay does its sending
            bool lazy_produced = false;
            std::size_t lazy_emitted = 0, relayed = 0;
            for (const auto& e : dev_trace.events) {
                if (e.kind == EventKind::produce && e.actor == producer_id(1)) lazy_produced = true;
                if (e.kind == EventKind::send && e.message && e.message->sender == producer_id(1)) {
                    if (e.emitter == producer_id(1)) ++lazy_emitted;
                    if (e.emitter == producer_id(2)) ++relayed;
                }
            }
            CHECK(lazy_produced);
            CHECK(lazy_emitted == 0);
            CHECK(relayed == base.params.n_c);
        }
    }
}

TEST_CASE("intra-coalition skip is compliant and keeps messages off the wire") {
    CoalitionSpec t;
    t.members = {producer_id(0), consumer_id(2)};
    t.deviation = DeviationId::intra_coalition_skip;
    for (auto policy : kPolicies) {
        RunSpec base = game_spec(policy, 23);
        RunSpec dev = base;
        dev.coalitions = {t};
        KeyRegistry registry = make_registry(base);
        Trace base_trace = run_spec(base, registry);
        Trace dev_trace = run_spec(dev, registry);
        CHECK(check_compliance(dev_trace, base_trace, t).compliant);

        std::size_t local = 0;
        for (const auto& e : dev_trace.events) {
            if (e.kind == EventKind::local_deliver) ++local;
            // no wire event carries p0 -> c2
            if ((e.kind == EventKind::send || e.kind == EventKind::deliver) && e.message) {
                bool intra = e.message->sender == producer_id(0) && e.message->receiver == consumer_id(2);
                CHECK_FALSE(intra);
            }
        }
        CHECK(local == 1);
        // the member consumer still consumed the value
        CHECK(dev_trace.final_consumers[2].value == base.value);
    }
}

TEST_CASE("skip deviations are flagged with the right witness") {
    RunSpec base = game_spec(SchedulePolicy::uniform_random, 29);
    KeyRegistry registry = make_registry(base);
    Trace base_trace = run_spec(base, registry);

    auto run_dev = [&](DeviationId d, std::vector<Identity> members) {
        CoalitionSpec t;
        t.members = std::move(members);
        t.deviation = d;
        RunSpec dev = base;
        dev.coalitions = {t};
        Trace dev_trace = run_spec(dev, registry);
        return std::pair{check_compliance(dev_trace, base_trace, t), t};
    };

    auto [skip_summary, t1] = run_dev(DeviationId::skip_summary, {producer_id(1)});
    CHECK_FALSE(skip_summary.compliant);
    REQUIRE(skip_summary.witness.has_value());
    CHECK(skip_summary.witness->role == Role::consumer);

    auto [skip_block, t2] = run_dev(DeviationId::skip_block, {producer_id(1)});
    CHECK_FALSE(skip_block.compliant);
    REQUIRE(skip_block.witness.has_value());
    CHECK(skip_block.witness->role == Role::consumer);

    auto [skip_report, t3] = run_dev(DeviationId::skip_report, {consumer_id(1)});
    CHECK_FALSE(skip_report.compliant);
    REQUIRE(skip_report.witness.has_value());
    CHECK(*skip_report.witness == observer_id());

    auto [no_consume, t4] = run_dev(DeviationId::no_consume, {consumer_id(1)});
    CHECK_FALSE(no_consume.compliant);
    CHECK(*no_consume.witness == observer_id());

    auto [partial, t5] = run_dev(DeviationId::partial_report, {consumer_id(1)});
    CHECK_FALSE(partial.compliant);
    CHECK(*partial.witness == observer_id());

    auto [freeride, t6] = run_dev(DeviationId::no_produce_freeride, {producer_id(1)});
    CHECK_FALSE(freeride.compliant);
    // the freerider never produces nor sends: consumers and TO both lose events
    REQUIRE(freeride.witness.has_value());
}

TEST_CASE("behaviors are deterministic given scenario and seed") {
    RunSpec spec = game_spec(SchedulePolicy::uniform_random, 31);
    spec.byzantine[producer_id(3)] = ByzBehavior::equivocate;
    spec.byzantine[consumer_id(2)] = ByzBehavior::false_report;
    CoalitionSpec t;
    t.members = {producer_id(0), producer_id(1)};
    t.deviation = DeviationId::lazy_produce_relay;
    spec.coalitions = {t};
    KeyRegistry registry = make_registry(spec);
    Trace a = run_spec(spec, registry);
    Trace b = run_spec(spec, registry);
    CHECK(export_trace(a) == export_trace(b));
}

TEST_CASE("run spec validation rejects inconsistent assignments") {
    RunSpec spec = game_spec();
    spec.byzantine[producer_id(0)] = ByzBehavior::no_report;  // consumer-only behavior
    KeyRegistry registry = make_registry(spec);
    CHECK_THROWS_AS(run_spec(spec, registry), InvalidParams);

    RunSpec overlap = game_spec();
    overlap.byzantine[producer_id(0)] = ByzBehavior::silent;
    CoalitionSpec t;
    t.members = {producer_id(0), producer_id(1)};
    t.deviation = DeviationId::lazy_produce_relay;
    overlap.coalitions = {t};
    CHECK_THROWS_AS(run_spec(overlap, registry), InvalidParams);

    RunSpec too_big = game_spec();
    CoalitionSpec huge;
    huge.members = {producer_id(0), producer_id(1), producer_id(2)};  // nt_p = 2
    huge.deviation = DeviationId::lazy_produce_relay;
    too_big.coalitions = {huge};
    CHECK_THROWS_AS(run_spec(too_big, registry), InvalidParams);
}
