#include "doctest.h"

#include <algorithm>

#include "nbart/protocol.hpp"

using namespace nbart;

namespace {

struct Setup {
    Params params;
    KeyRegistry registry;
    ValuePayload value;
    std::vector<ProducerMachine> producers;
    // messages addressed to each consumer, grouped by sender index
    std::vector<std::vector<ProtocolMessage>> outbox;

    Setup(std::uint32_t n_p, std::uint32_t n_c, std::uint32_t f_p, std::uint32_t b, std::uint64_t seed = 5)
        : registry(seed, n_p, n_c, CryptoParams{}) {
        params.n_p = n_p;
        params.n_c = n_c;
        params.f_p = f_p;
        params.f_c = 0;
        params.b = b;
        value = ValuePayload::from_bytes(random_bytes(seed * 31 + 1, 48));
        for (std::uint32_t i = 0; i < n_p; ++i) producers.emplace_back(i, params, &registry);
        outbox.resize(n_p);
        for (std::uint32_t i = 0; i < n_p; ++i) outbox[i] = producers[i].on_produce(value);
    }

    ProtocolMessage to_consumer(std::uint32_t p, std::uint32_t c) const {
        for (const auto& m : outbox[p])
            if (m.receiver == consumer_id(c)) return m;
        FAIL("no message from p" << p << " to c" << c);
        return {};
    }
};

} // namespace

TEST_CASE("producer emits one block per conset member and one summary per other consumer") {
    Setup s(5, 3, 1, 2);
    // conset(p0) = {c0, c1}
    std::size_t blocks = 0, summaries = 0;
    for (const auto& m : s.outbox[0]) {
        if (m.kind == MessageKind::block) ++blocks;
        if (m.kind == MessageKind::summary) ++summaries;
        CHECK(m.sender == producer_id(0));
    }
    CHECK(blocks == 2);
    CHECK(summaries == 1);
    CHECK(s.outbox[0].size() == s.params.n_c);

    auto m = s.to_consumer(0, 0);
    REQUIRE(m.kind == MessageKind::block);
    CHECK(s.registry.verifysig(producer_id(0), signed_bytes(MessageKind::block, m.hashes), m.signature));
    REQUIRE(m.block.has_value());
    CHECK(s.registry.verifyhash(m.block->canonical(), m.hashes.entries[0]));

    CHECK_THROWS_AS(s.producers[0].on_produce(s.value), DoubleProduce);
}

TEST_CASE("single consumer receives exactly one message per producer") {
    Setup s(3, 1, 1, 2);
    for (std::uint32_t p = 0; p < 3; ++p) CHECK(s.outbox[p].size() == 1);
}

TEST_CASE("minimum_hashes needs F_P+1 matching vectors") {
    Setup s(5, 3, 1, 2);
    HashVector h = s.to_consumer(0, 0).hashes;
    HashVector other = h;
    other.entries[0] = hash_data(Bytes{1, 2, 3}, 256);

    std::vector<std::optional<HashVectorSig>> hv(5);
    Signature dummy{producer_id(0), Bytes{1}};
    hv[0] = HashVectorSig{h, dummy};
    CHECK_FALSE(minimum_hashes(hv, 1).has_value());
    hv[1] = HashVectorSig{other, dummy};
    CHECK_FALSE(minimum_hashes(hv, 1).has_value());
    hv[2] = HashVectorSig{h, dummy};
    auto got = minimum_hashes(hv, 1);
    REQUIRE(got.has_value());
    CHECK(*got == h);

    // F_P = 2: three identical among five distinct-signer entries
    std::vector<std::optional<HashVectorSig>> five(5);
    five[0] = HashVectorSig{other, dummy};
    five[1] = HashVectorSig{h, dummy};
    five[2] = HashVectorSig{h, dummy};
    five[3] = HashVectorSig{h, dummy};
    five[4] = HashVectorSig{other, dummy};
    auto three = minimum_hashes(five, 2);
    REQUIRE(three.has_value());
    CHECK(*three == h);
}

TEST_CASE("consumer walks init -> gotHashes -> consumed and reports") {
    Setup s(5, 3, 1, 2);
    ConsumerMachine c(0, s.params, &s.registry);
    CHECK(c.phase() == ConsumerPhase::init);
    CHECK(c.missing().size() == 5);

    // prodset(c0) = {p0, p1, p2}: blocks; p3, p4: summaries
    auto out = c.on_deliver(s.to_consumer(0, 0));
    CHECK(out.messages.empty());
    CHECK(c.phase() == ConsumerPhase::init);
    CHECK(c.missing().count(0) == 0);

    out = c.on_deliver(s.to_consumer(1, 0));
    // second matching vector with F_P=1 sets correcthashvec; two blocks held = B, so it consumes
    CHECK(c.phase() == ConsumerPhase::consumed);
    CHECK(out.consumed_now);
    REQUIRE(out.consumed_value.has_value());
    CHECK(*out.consumed_value == s.value);
    REQUIRE(out.messages.size() == 1);
    CHECK(out.messages[0].kind == MessageKind::report);
    CHECK(out.messages[0].receiver == observer_id());
    // report certifies the producers whose vectors matched
    std::size_t certified = std::count_if(out.messages[0].producers.begin(), out.messages[0].producers.end(),
                                          [](const auto& sig) { return sig.has_value(); });
    CHECK(certified >= s.params.f_p + 1);

    // late matching BLOCK in consumed phase: one new entry, one fresh report
    out = c.on_deliver(s.to_consumer(2, 0));
    CHECK_FALSE(out.consumed_now);
    REQUIRE(out.messages.size() == 1);
    CHECK(c.correctproducers()[2].has_value());

    // late matching SUMMARY in consumed phase likewise
    out = c.on_deliver(s.to_consumer(3, 0));
    REQUIRE(out.messages.size() == 1);
    CHECK(c.correctproducers()[3].has_value());

    // consume fired exactly once across the whole sequence
    out = c.on_deliver(s.to_consumer(4, 0));
    CHECK_FALSE(out.consumed_now);
}

TEST_CASE("summary-first consumer stays in gotHashes until blocks arrive") {
    Setup s(5, 3, 1, 2);
    ConsumerMachine c(0, s.params, &s.registry);
    auto out = c.on_deliver(s.to_consumer(3, 0));
    CHECK(c.phase() == ConsumerPhase::init);
    out = c.on_deliver(s.to_consumer(4, 0));
    // F_P+1 = 2 matching summaries set correcthashvec, but no blocks yet
    CHECK(c.phase() == ConsumerPhase::got_hashes);
    CHECK_FALSE(out.consumed_now);
    CHECK(out.messages.empty());

    out = c.on_deliver(s.to_consumer(0, 0));
    CHECK(c.phase() == ConsumerPhase::got_hashes);  // one block < B
    out = c.on_deliver(s.to_consumer(1, 0));
    CHECK(c.phase() == ConsumerPhase::consumed);
    CHECK(out.consumed_now);
    REQUIRE(out.messages.size() == 1);
    // the two summary senders' signatures are in the report too
    CHECK(out.messages[0].producers[3].has_value());
    CHECK(out.messages[0].producers[4].has_value());
}

TEST_CASE("guards drop without state change") {
    Setup s(5, 3, 1, 2);
    ConsumerMachine c(0, s.params, &s.registry);

    // SUMMARY from a prodset member is ignored
    auto summary_like = s.to_consumer(0, 0);
    REQUIRE(summary_like.kind == MessageKind::block);
    ProtocolMessage forged = summary_like;
    forged.kind = MessageKind::summary;
    forged.block.reset();
    auto out = c.on_deliver(forged);
    CHECK(out.dropped);
    CHECK(c.missing().size() == 5);

    // BLOCK from outside prodset is ignored
    auto outside = s.to_consumer(3, 0);
    REQUIRE(outside.kind == MessageKind::summary);
    ProtocolMessage fake_block = outside;
    fake_block.kind = MessageKind::block;
    out = c.on_deliver(fake_block);
    CHECK(out.dropped);
    CHECK(c.missing().size() == 5);

    // invalid signature: no state change at all
    auto tampered = s.to_consumer(0, 0);
    tampered.signature.bytes[0] ^= 1;
    out = c.on_deliver(tampered);
    CHECK(out.dropped);
    CHECK(c.missing().count(0) == 1);

    // valid signature but corrupted block: sender leaves missing, nothing stored
    auto corrupted = s.to_consumer(0, 0);
    corrupted.block->bytes[0] ^= 0xFF;
    out = c.on_deliver(corrupted);
    CHECK(out.dropped);
    CHECK(out.messages.empty());
    CHECK(c.missing().count(0) == 0);
    CHECK_FALSE(c.hashvecs()[0].has_value());
    CHECK(c.phase() == ConsumerPhase::init);

    // duplicate delivery from the same producer is excluded by the missing guard
    out = c.on_deliver(s.to_consumer(0, 0));
    CHECK(out.dropped);
}

TEST_CASE("missing shrinks monotonically and correctproducers never clears") {
    Setup s(5, 3, 1, 2);
    ConsumerMachine c(1, s.params, &s.registry);
    std::size_t last_missing = c.missing().size();
    std::size_t last_cert = 0;
    for (std::uint32_t p : {4u, 0u, 3u, 1u, 2u}) {
        c.on_deliver(s.to_consumer(p, 1));
        CHECK(c.missing().size() <= last_missing);
        last_missing = c.missing().size();
        std::size_t cert = std::count_if(c.correctproducers().begin(), c.correctproducers().end(),
                                         [](const auto& sc) { return sc.has_value(); });
        CHECK(cert >= last_cert);
        last_cert = cert;
    }
    CHECK(c.missing().empty());
    CHECK(last_cert == 5);
}

TEST_CASE("observer stores validly signed reports and certifies each time") {
    Setup s(5, 3, 1, 2);
    ObserverMachine to(s.params, &s.registry);
    ConsumerMachine c(0, s.params, &s.registry);

    c.on_deliver(s.to_consumer(0, 0));
    auto out = c.on_deliver(s.to_consumer(1, 0));
    REQUIRE(out.messages.size() == 1);
    ProtocolMessage first_report = out.messages[0];

    auto ob = to.on_deliver(first_report);
    CHECK(ob.certified);
    REQUIRE(to.evidence()[0].has_value());
    std::size_t first_count = std::count_if(to.evidence()[0]->producers.begin(), to.evidence()[0]->producers.end(),
                                            [](const auto& sc) { return sc.has_value(); });

    // invalid signature: evidence unchanged, no certify
    ProtocolMessage bad = first_report;
    bad.signature.bytes[3] ^= 2;
    ob = to.on_deliver(bad);
    CHECK_FALSE(ob.certified);
    CHECK(ob.dropped);

    // a later report with more producers overwrites
    out = c.on_deliver(s.to_consumer(2, 0));
    REQUIRE(out.messages.size() == 1);
    ob = to.on_deliver(out.messages[0]);
    CHECK(ob.certified);
    std::size_t second_count = std::count_if(to.evidence()[0]->producers.begin(), to.evidence()[0]->producers.end(),
                                             [](const auto& sc) { return sc.has_value(); });
    CHECK(second_count == first_count + 1);

    CHECK_FALSE(to.evidence()[1].has_value());
}

TEST_CASE("wire serialization round-trips every message kind") {
    Setup s(5, 3, 1, 2);
    std::size_t checked = 0;
    for (std::uint32_t p = 0; p < 5; ++p)
        for (const auto& m : s.outbox[p]) {
            auto back = deserialize(serialize(m));
            REQUIRE(back.has_value());
            REQUIRE(*back == m);
            ++checked;
        }
    // drive a consumer to obtain REPORT messages too
    ConsumerMachine c(0, s.params, &s.registry);
    for (std::uint32_t p = 0; p < 5; ++p) {
        auto out = c.on_deliver(s.to_consumer(p, 0));
        for (const auto& m : out.messages) {
            auto back = deserialize(serialize(m));
            REQUIRE(back.has_value());
            REQUIRE(*back == m);
            ++checked;
        }
    }
    CHECK(checked > 15);
}

TEST_CASE("deserialization rejects anything but the canonical encoding") {
    Setup s(5, 3, 1, 2);
    Bytes wire = serialize(s.to_consumer(0, 0));

    Bytes truncated(wire.begin(), wire.end() - 3);
    CHECK_FALSE(deserialize(truncated).has_value());

    Bytes trailing = wire;
    trailing.push_back(0);
    CHECK_FALSE(deserialize(trailing).has_value());

    Bytes bad_tag = wire;
    bad_tag[0] = 9;
    CHECK_FALSE(deserialize(bad_tag).has_value());

    Bytes bad_presence = wire;
    bad_presence[11] = 7;  // block-present byte follows kind + two identities
    CHECK_FALSE(deserialize(bad_presence).has_value());

    CHECK_FALSE(deserialize({}).has_value());

    // arbitrary byte soup never crashes the parser
    std::uint64_t st = 7;
    for (int i = 0; i < 2000; ++i) {
        Bytes fuzz = random_bytes(splitmix64(st), 1 + (splitmix64(st) % 120));
        (void)deserialize(fuzz);
    }
}

TEST_CASE("machines are deterministic replayed on the same inputs") {
    Setup s(5, 3, 2, 3, 9);
    for (int rep = 0; rep < 2; ++rep) {
        ConsumerMachine a(2, s.params, &s.registry);
        ConsumerMachine b(2, s.params, &s.registry);
        for (std::uint32_t p = 0; p < 5; ++p) {
            auto oa = a.on_deliver(s.to_consumer(p, 2));
            auto ob = b.on_deliver(s.to_consumer(p, 2));
            REQUIRE(oa.messages == ob.messages);
            REQUIRE(oa.consumed_now == ob.consumed_now);
        }
        CHECK(a.value() == b.value());
        CHECK(a.correctproducers() == b.correctproducers());
    }
}
