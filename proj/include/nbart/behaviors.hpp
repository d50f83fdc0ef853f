#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nbart/simnet.hpp"

namespace nbart {

// ---------------------------------------------------------------------------
// Finite catalogs of Byzantine strategies and coalition deviation strategies.
// Every entry is deterministic given (scenario, seed), emits finitely many
// messages, and signs only with the actor's own keys.
// ---------------------------------------------------------------------------

enum class ByzBehavior : std::uint8_t {
    silent,
    equivocate,
    corrupt_block,
    wrong_vector,
    no_report,
    false_report,
    late_flood,
};

struct ByzInfo {
    ByzBehavior id;
    const char* name;
    bool for_producers;
    bool for_consumers;
};

inline const std::vector<ByzInfo>& byzantine_catalog() {
    static const std::vector<ByzInfo> catalog{
        {ByzBehavior::silent, "silent", true, true},
        {ByzBehavior::equivocate, "equivocate", true, false},
        {ByzBehavior::corrupt_block, "corrupt_block", true, false},
        {ByzBehavior::wrong_vector, "wrong_vector", true, false},
        {ByzBehavior::no_report, "no_report", false, true},
        {ByzBehavior::false_report, "false_report", false, true},
        {ByzBehavior::late_flood, "late_flood", true, false},
    };
    return catalog;
}

inline std::optional<ByzBehavior> parse_byz_behavior(const std::string& name) {
    for (const auto& info : byzantine_catalog())
        if (name == info.name) return info.id;
    return std::nullopt;
}

inline const char* to_string(ByzBehavior b) {
    for (const auto& info : byzantine_catalog())
        if (info.id == b) return info.name;
    return "?";
}

enum class DeviationId : std::uint8_t {
    honest,
    lazy_produce_relay,
    intra_coalition_skip,
    skip_summary,
    skip_block,
    skip_report,
    no_consume,
    partial_report,
    no_produce_freeride,
};

struct DeviationInfo {
    DeviationId id;
    const char* name;
    bool claimed_compliant;
};

inline const std::vector<DeviationInfo>& deviation_catalog() {
    static const std::vector<DeviationInfo> catalog{
        {DeviationId::lazy_produce_relay, "lazy_produce_relay", true},
        {DeviationId::intra_coalition_skip, "intra_coalition_skip", true},
        {DeviationId::skip_summary, "skip_summary", false},
        {DeviationId::skip_block, "skip_block", false},
        {DeviationId::skip_report, "skip_report", false},
        {DeviationId::no_consume, "no_consume", false},
        {DeviationId::partial_report, "partial_report", false},
        {DeviationId::no_produce_freeride, "no_produce_freeride", false},
    };
    return catalog;
}

inline std::optional<DeviationId> parse_deviation(const std::string& name) {
    if (name == "honest") return DeviationId::honest;
    for (const auto& info : deviation_catalog())
        if (name == info.name) return info.id;
    return std::nullopt;
}

inline const char* to_string(DeviationId d) {
    if (d == DeviationId::honest) return "honest";
    for (const auto& info : deviation_catalog())
        if (info.id == d) return info.name;
    return "?";
}

/// A coalition: members may share data freely off the wire and follow one
/// joint deviation. Members must be disjoint from the Byzantine set.
struct CoalitionSpec {
    std::vector<Identity> members;
    DeviationId deviation = DeviationId::honest;

    std::vector<std::uint32_t> producer_members() const {
        std::vector<std::uint32_t> out;
        for (const auto& m : members)
            if (m.role == Role::producer) out.push_back(m.index);
        std::sort(out.begin(), out.end());
        return out;
    }
    std::vector<std::uint32_t> consumer_members() const {
        std::vector<std::uint32_t> out;
        for (const auto& m : members)
            if (m.role == Role::consumer) out.push_back(m.index);
        std::sort(out.begin(), out.end());
        return out;
    }
    bool has(Identity id) const { return std::find(members.begin(), members.end(), id) != members.end(); }
};

inline bool deviation_applicable(DeviationId d, const CoalitionSpec& t, const Params& params) {
    auto prods = t.producer_members();
    auto cons = t.consumer_members();
    auto non_member_consumer_exists = [&](std::uint32_t p, bool inside_conset) {
        for (std::uint32_t j = 0; j < params.n_c; ++j) {
            if (in_prodset(p, j, params) != inside_conset) continue;
            if (!t.has(consumer_id(j))) return true;
        }
        return false;
    };
    switch (d) {
    case DeviationId::honest: return true;
    case DeviationId::lazy_produce_relay: return prods.size() >= 2;
    case DeviationId::intra_coalition_skip:
        // every producer addresses every consumer, so any mixed coalition has intra edges
        return !prods.empty() && !cons.empty();
    case DeviationId::skip_summary: return !prods.empty() && non_member_consumer_exists(prods[0], false);
    case DeviationId::skip_block: return !prods.empty() && non_member_consumer_exists(prods[0], true);
    case DeviationId::skip_report:
    case DeviationId::no_consume:
    case DeviationId::partial_report: return !cons.empty();
    case DeviationId::no_produce_freeride: return !prods.empty();
    }
    return false;
}

// --- Byzantine actors --------------------------------------------------------

namespace detail {

inline ValuePayload perturbed_value(const ValuePayload& v, std::uint64_t seed, std::uint32_t variant) {
    Bytes salt = random_bytes(seed * 1315423911ull + variant, v.bytes.size());
    ValuePayload out = v;
    for (std::size_t i = 0; i < out.bytes.size(); ++i) out.bytes[i] ^= salt[i];
    out.normalize();
    if (out == v) out.bytes[0] ^= 0x80;  // salt happened to be zero on the meaningful bits
    return out;
}

/// Producer messages for an arbitrary (not necessarily honest) value, signed
/// with the actor's own key. Structure mirrors the honest emission so the
/// messages pass the consumers' guards.
inline std::vector<ProtocolMessage> producer_messages(std::uint32_t index, const ValuePayload& v,
                                                      const Params& params, const KeyRegistry& registry) {
    ProducerMachine machine(index, params, &registry);
    return machine.on_produce(v);
}

} // namespace detail

class SilentActor : public Actor {
public:
    explicit SilentActor(Identity id) : id_(id) {}
    Identity id() const override { return id_; }
    ActorResult on_deliver(const ProtocolMessage&) override {
        ActorResult r;
        r.dropped = true;
        r.drop_reason = "silent behavior";
        return r;
    }

private:
    Identity id_;
};

/// Sends one fabricated-but-internally-consistent encoding to the first half
/// of the consumers and a different one to the second half. Byzantine actors
/// given this behavior share the fabricated values (single-coalition model).
class EquivocateProducerActor : public Actor {
public:
    EquivocateProducerActor(std::uint32_t index, const Params& params, const KeyRegistry* registry,
                            std::uint64_t seed)
        : index_(index), params_(params), registry_(registry), seed_(seed) {}

    Identity id() const override { return producer_id(index_); }

    ActorResult on_produce(const ValuePayload& v) override {
        ActorResult r;
        auto emit = [&](const ValuePayload& variant, std::uint32_t from, std::uint32_t to) {
            auto msgs = detail::producer_messages(index_, variant, params_, *registry_);
            for (auto& m : msgs) {
                std::uint32_t j = m.receiver.index;
                if (j >= from && j < to) r.messages.push_back({std::move(m), false});
            }
        };
        std::uint32_t half = params_.n_c / 2;
        emit(detail::perturbed_value(v, seed_, 1), 0, half);
        emit(detail::perturbed_value(v, seed_, 2), half, params_.n_c);
        return r;
    }

private:
    std::uint32_t index_;
    Params params_;
    const KeyRegistry* registry_;
    std::uint64_t seed_;
};

/// Consistent lie: one fabricated encoding to everyone.
class WrongVectorProducerActor : public Actor {
public:
    WrongVectorProducerActor(std::uint32_t index, const Params& params, const KeyRegistry* registry,
                             std::uint64_t seed)
        : index_(index), params_(params), registry_(registry), seed_(seed) {}

    Identity id() const override { return producer_id(index_); }

    ActorResult on_produce(const ValuePayload& v) override {
        ActorResult r;
        for (auto& m : detail::producer_messages(index_, detail::perturbed_value(v, seed_, 3), params_, *registry_))
            r.messages.push_back({std::move(m), false});
        return r;
    }

private:
    std::uint32_t index_;
    Params params_;
    const KeyRegistry* registry_;
    std::uint64_t seed_;
};

/// Honest hash vector and signature, but the block bytes are corrupted: the
/// signature verifies, the hash check fails, so receivers drop the sender
/// from `missing` yet store nothing.
class CorruptBlockProducerActor : public Actor {
public:
    CorruptBlockProducerActor(std::uint32_t index, const Params& params, const KeyRegistry* registry)
        : index_(index), params_(params), registry_(registry) {}

    Identity id() const override { return producer_id(index_); }

    ActorResult on_produce(const ValuePayload& v) override {
        ActorResult r;
        for (auto& m : detail::producer_messages(index_, v, params_, *registry_)) {
            if (m.kind == MessageKind::block && m.block && !m.block->bytes.empty()) m.block->bytes[0] ^= 0xA5;
            r.messages.push_back({std::move(m), false});
        }
        return r;
    }

private:
    std::uint32_t index_;
    Params params_;
    const KeyRegistry* registry_;
};

/// Honest first round, then re-sends every message once after the network
/// first goes quiet. Receivers have left `missing`, so the copies are noise.
class LateFloodProducerActor : public Actor {
public:
    LateFloodProducerActor(std::uint32_t index, const Params& params, const KeyRegistry* registry)
        : index_(index), params_(params), registry_(registry) {}

    Identity id() const override { return producer_id(index_); }

    ActorResult on_produce(const ValuePayload& v) override {
        ActorResult r;
        r.produced = true;
        r.produced_value = v;
        r.compute_units = 1;
        sent_ = detail::producer_messages(index_, v, params_, *registry_);
        for (const auto& m : sent_) r.messages.push_back({m, false});
        return r;
    }

    ActorResult on_quiescence(int round) override {
        ActorResult r;
        if (round == 0)
            for (const auto& m : sent_) r.messages.push_back({m, false});
        return r;
    }

private:
    std::uint32_t index_;
    Params params_;
    const KeyRegistry* registry_;
    std::vector<ProtocolMessage> sent_;
};

/// Consumes like an honest consumer but never talks to the observer.
class NoReportConsumerActor : public Actor {
public:
    NoReportConsumerActor(std::uint32_t index, const Params& params, const KeyRegistry* registry)
        : machine_(index, params, registry) {}

    Identity id() const override { return consumer_id(machine_.index()); }

    ActorResult on_deliver(const ProtocolMessage& msg) override {
        auto out = machine_.on_deliver(msg);
        ActorResult r;
        r.consumed = out.consumed_now;
        r.consumed_value = out.consumed_value;
        r.dropped = out.dropped;
        r.drop_reason = out.drop_reason;
        r.compute_units = out.compute_units;
        return r;  // reports withheld
    }

    std::optional<ConsumerSnapshot> consumer_snapshot() const override {
        return ConsumerSnapshot{machine_.value(), machine_.correcthashvec(), machine_.missing(),
                                machine_.correctproducers()};
    }

private:
    ConsumerMachine machine_;
};

/// Processes honestly but replaces every report with a validly signed report
/// over fabricated hashes whose producer slots hold self-made byte strings;
/// no producer signature can be forged, so nothing it files certifies anyone.
class FalseReportConsumerActor : public Actor {
public:
    FalseReportConsumerActor(std::uint32_t index, const Params& params, const KeyRegistry* registry,
                             std::uint64_t seed)
        : machine_(index, params, registry), params_(params), registry_(registry),
          keys_(registry->keypair(consumer_id(index))), seed_(seed) {}

    Identity id() const override { return consumer_id(machine_.index()); }

    ActorResult on_deliver(const ProtocolMessage& msg) override {
        auto out = machine_.on_deliver(msg);
        ActorResult r;
        r.consumed = out.consumed_now;
        r.consumed_value = out.consumed_value;
        r.dropped = out.dropped;
        r.drop_reason = out.drop_reason;
        r.compute_units = out.compute_units;
        for (std::size_t k = 0; k < out.messages.size(); ++k) r.messages.push_back({fabricated_report(), false});
        return r;
    }

    std::optional<ConsumerSnapshot> consumer_snapshot() const override {
        return ConsumerSnapshot{machine_.value(), machine_.correcthashvec(), machine_.missing(),
                                machine_.correctproducers()};
    }

private:
    ProtocolMessage fabricated_report() const {
        HashVector junk;
        for (std::uint32_t p = 0; p < params_.n_p; ++p)
            junk.entries.push_back(hash_data(random_bytes(seed_ * 7919 + p, 16), registry_->params().hash_bits));
        SignatureSlots slots(params_.n_p);
        for (std::uint32_t p = 0; p < params_.n_p; ++p) {
            Signature fake = registry_->sign(keys_, random_bytes(seed_ * 104729 + p, 12));
            fake.signer = producer_id(p);  // claims to be p's signature; verification will fail
            slots[p] = fake;
        }
        ProtocolMessage m;
        m.kind = MessageKind::report;
        m.sender = id();
        m.receiver = observer_id();
        m.hashes = junk;
        m.producers = slots;
        m.signature = registry_->sign(keys_, report_signed_bytes(m.hashes, m.producers));
        return m;
    }

    ConsumerMachine machine_;
    Params params_;
    const KeyRegistry* registry_;
    Keypair keys_;
    std::uint64_t seed_;
};

// --- coalition deviations ------------------------------------------------------

/// Shared state of one deviating coalition; members hold a pointer and route
/// their role logic through it. Intra-coalition data exchange is free and
/// invisible to outsiders.
class CoalitionController {
public:
    CoalitionController(CoalitionSpec spec, const Params& params, const KeyRegistry* registry)
        : spec_(std::move(spec)), params_(params), registry_(registry) {}

    const CoalitionSpec& spec() const { return spec_; }

    std::uint32_t lazy_producer() const { return spec_.producer_members().at(0); }
    std::uint32_t relay_producer() const { return spec_.producer_members().at(1); }

    /// Lowest-index non-member consumer reached by `p` with the given message
    /// kind; the one the skip deviations starve.
    std::optional<std::uint32_t> skip_target(std::uint32_t p, bool inside_conset) const {
        for (std::uint32_t j = 0; j < params_.n_c; ++j) {
            if (in_prodset(p, j, params_) != inside_conset) continue;
            if (!spec_.has(consumer_id(j))) return j;
        }
        return std::nullopt;
    }

    /// Highest-index non-member producer; the one partial reports omit.
    std::optional<std::uint32_t> omitted_producer() const {
        for (std::uint32_t p = params_.n_p; p-- > 0;)
            if (!spec_.has(producer_id(p))) return p;
        return std::nullopt;
    }

    const Params& params() const { return params_; }
    const KeyRegistry& registry() const { return *registry_; }

private:
    CoalitionSpec spec_;
    Params params_;
    const KeyRegistry* registry_;
};

class CoalitionProducerActor : public Actor {
public:
    CoalitionProducerActor(std::uint32_t index, std::shared_ptr<CoalitionController> ctl)
        : index_(index), ctl_(std::move(ctl)) {}

    Identity id() const override { return producer_id(index_); }

    ActorResult on_produce(const ValuePayload& v) override {
        const Params& params = ctl_->params();
        const KeyRegistry& registry = ctl_->registry();
        DeviationId d = ctl_->spec().deviation;
        ActorResult r;

        if (d == DeviationId::no_produce_freeride && index_ == ctl_->spec().producer_members().at(0)) {
            // waits for a hash vector from outside the coalition instead of
            // producing; honest players never send producers anything, so in
            // the worst case it stays mute and is never certified
            return r;
        }

        r.produced = true;
        r.produced_value = v;
        auto msgs = detail::producer_messages(index_, v, params, registry);

        switch (d) {
        case DeviationId::lazy_produce_relay: {
            bool lazy = index_ == ctl_->lazy_producer();
            // the relay does the encoding for both; the lazy member only signs
            r.compute_units = lazy ? 0 : 1;
            Identity relay = producer_id(ctl_->relay_producer());
            for (auto& m : msgs) {
                ActorMessage am{std::move(m), false};
                if (lazy) am.emitter = relay;
                r.messages.push_back(std::move(am));
            }
            break;
        }
        case DeviationId::intra_coalition_skip: {
            r.compute_units = 1;
            for (auto& m : msgs) {
                bool internal = ctl_->spec().has(m.receiver);
                r.messages.push_back({std::move(m), internal});
            }
            break;
        }
        case DeviationId::skip_summary:
        case DeviationId::skip_block: {
            r.compute_units = 1;
            bool deviator = index_ == ctl_->spec().producer_members().at(0);
            std::optional<std::uint32_t> target;
            if (deviator) target = ctl_->skip_target(index_, d == DeviationId::skip_block);
            for (auto& m : msgs) {
                if (target && m.receiver == consumer_id(*target)) continue;
                r.messages.push_back({std::move(m), false});
            }
            break;
        }
        default: {
            r.compute_units = 1;
            for (auto& m : msgs) r.messages.push_back({std::move(m), false});
            break;
        }
        }
        return r;
    }

    ActorResult on_deliver(const ProtocolMessage& msg) override {
        ActorResult r;
        DeviationId d = ctl_->spec().deviation;
        bool freerider = d == DeviationId::no_produce_freeride &&
                         index_ == ctl_->spec().producer_members().at(0);
        if (!freerider || freeride_done_ || msg.hashes.entries.empty() || ctl_->spec().has(msg.sender)) {
            r.dropped = true;
            r.drop_reason = "not addressed to producers";
            return r;
        }
        // sign the vector that floated in and pass it off as participation;
        // without the blocks only SUMMARY receivers could ever accept it
        freeride_done_ = true;
        const Params& params = ctl_->params();
        const KeyRegistry& registry = ctl_->registry();
        Signature sig = registry.sign(registry.keypair(id()), signed_bytes(MessageKind::summary, msg.hashes));
        for (std::uint32_t j = 0; j < params.n_c; ++j) {
            if (in_prodset(index_, j, params)) continue;
            ProtocolMessage m;
            m.kind = MessageKind::summary;
            m.sender = id();
            m.receiver = consumer_id(j);
            m.hashes = msg.hashes;
            m.signature = sig;
            r.messages.push_back({std::move(m), false});
        }
        return r;
    }

private:
    std::uint32_t index_;
    std::shared_ptr<CoalitionController> ctl_;
    bool freeride_done_ = false;
};

class CoalitionConsumerActor : public Actor {
public:
    CoalitionConsumerActor(std::uint32_t index, std::shared_ptr<CoalitionController> ctl)
        : index_(index), ctl_(std::move(ctl)),
          machine_(index, ctl_->params(), &ctl_->registry(),
                   is_deviator() && ctl_->spec().deviation == DeviationId::no_consume
                       ? ConsumerMutation::skip_decode
                       : ConsumerMutation::none) {}

    Identity id() const override { return consumer_id(index_); }

    ActorResult on_deliver(const ProtocolMessage& msg) override {
        auto out = machine_.on_deliver(msg);
        ActorResult r;
        r.consumed = out.consumed_now;
        r.consumed_value = out.consumed_value;
        r.dropped = out.dropped;
        r.drop_reason = out.drop_reason;
        r.compute_units = out.compute_units;

        DeviationId d = ctl_->spec().deviation;
        for (auto& m : out.messages) {
            if (d == DeviationId::skip_report && is_deviator()) continue;
            if (d == DeviationId::partial_report && is_deviator()) {
                if (auto target = ctl_->omitted_producer()) {
                    m.producers[*target].reset();
                    m.signature = ctl_->registry().sign(ctl_->registry().keypair(id()),
                                                        report_signed_bytes(m.hashes, m.producers));
                }
            }
            r.messages.push_back({std::move(m), false});
        }
        return r;
    }

    std::optional<ConsumerSnapshot> consumer_snapshot() const override {
        return ConsumerSnapshot{machine_.value(), machine_.correcthashvec(), machine_.missing(),
                                machine_.correctproducers()};
    }

private:
    bool is_deviator() const {
        auto cons = ctl_->spec().consumer_members();
        return !cons.empty() && index_ == cons[0];
    }

    std::uint32_t index_;
    std::shared_ptr<CoalitionController> ctl_;
    ConsumerMachine machine_;
};

// --- run assembly ---------------------------------------------------------------

/// Everything needed to execute one run: instance shape, payload, schedule,
/// Byzantine assignment, coalition assignment, and test-only mutation.
struct RunSpec {
    Params params;
    ValuePayload value;
    CryptoParams crypto;
    std::uint64_t key_seed = 0xBA27;
    SchedulePolicy policy = SchedulePolicy::uniform_random;
    std::uint64_t seed = 1;
    std::map<Identity, ByzBehavior> byzantine;
    std::vector<CoalitionSpec> coalitions;
    ConsumerMutation mutation = ConsumerMutation::none;
    std::size_t max_events = 200000;
};

inline ByzantineSet byzantine_set_of(const RunSpec& spec) {
    ByzantineSet byz;
    for (const auto& [id, behavior] : spec.byzantine) {
        (void)behavior;
        if (id.role == Role::producer) byz.producers.insert(id.index);
        if (id.role == Role::consumer) byz.consumers.insert(id.index);
    }
    return byz;
}

inline void validate_run_spec(const RunSpec& spec) {
    spec.params.validate();
    std::set<Identity> seen;
    for (const auto& [id, behavior] : spec.byzantine) {
        if (id.role == Role::observer) throw InvalidParams("the trusted observer cannot be Byzantine");
        if (id.role == Role::producer && id.index >= spec.params.n_p) throw InvalidParams("byzantine producer out of range");
        if (id.role == Role::consumer && id.index >= spec.params.n_c) throw InvalidParams("byzantine consumer out of range");
        const ByzInfo* info = nullptr;
        for (const auto& i : byzantine_catalog())
            if (i.id == behavior) info = &i;
        if (!info) throw InvalidParams("unknown byzantine behavior");
        if (id.role == Role::producer && !info->for_producers)
            throw InvalidParams(std::string(info->name) + " does not apply to producers");
        if (id.role == Role::consumer && !info->for_consumers)
            throw InvalidParams(std::string(info->name) + " does not apply to consumers");
        seen.insert(id);
    }
    for (const auto& t : spec.coalitions) {
        if (t.producer_members().size() > spec.params.nt_p)
            throw InvalidParams("coalition exceeds the producer bound");
        if (t.consumer_members().size() > spec.params.nt_c)
            throw InvalidParams("coalition exceeds the consumer bound");
        for (const auto& m : t.members) {
            if (m.role == Role::observer) throw InvalidParams("the trusted observer joins no coalition");
            if (m.role == Role::producer && m.index >= spec.params.n_p) throw InvalidParams("coalition producer out of range");
            if (m.role == Role::consumer && m.index >= spec.params.n_c) throw InvalidParams("coalition consumer out of range");
            if (!seen.insert(m).second)
                throw InvalidParams("coalitions must be disjoint from each other and from the Byzantine set");
        }
        if (t.deviation != DeviationId::honest && !deviation_applicable(t.deviation, t, spec.params))
            throw InvalidParams(std::string("deviation ") + to_string(t.deviation) +
                                " is not applicable to this coalition");
    }
}

inline ActorRoster build_roster(const RunSpec& spec, const KeyRegistry& registry) {
    ActorRoster roster;
    std::map<Identity, std::shared_ptr<CoalitionController>> controller_of;
    for (const auto& t : spec.coalitions) {
        if (t.deviation == DeviationId::honest) continue;
        auto ctl = std::make_shared<CoalitionController>(t, spec.params, &registry);
        for (const auto& m : t.members) controller_of[m] = ctl;
    }

    for (std::uint32_t i = 0; i < spec.params.n_p; ++i) {
        Identity me = producer_id(i);
        auto byz = spec.byzantine.find(me);
        if (byz != spec.byzantine.end()) {
            switch (byz->second) {
            case ByzBehavior::silent: roster.producers.push_back(std::make_unique<SilentActor>(me)); break;
            case ByzBehavior::equivocate:
                roster.producers.push_back(std::make_unique<EquivocateProducerActor>(i, spec.params, &registry, spec.seed));
                break;
            case ByzBehavior::wrong_vector:
                roster.producers.push_back(std::make_unique<WrongVectorProducerActor>(i, spec.params, &registry, spec.seed));
                break;
            case ByzBehavior::corrupt_block:
                roster.producers.push_back(std::make_unique<CorruptBlockProducerActor>(i, spec.params, &registry));
                break;
            case ByzBehavior::late_flood:
                roster.producers.push_back(std::make_unique<LateFloodProducerActor>(i, spec.params, &registry));
                break;
            default: throw InvalidParams("behavior/role mismatch");
            }
        } else if (auto it = controller_of.find(me); it != controller_of.end()) {
            roster.producers.push_back(std::make_unique<CoalitionProducerActor>(i, it->second));
        } else {
            roster.producers.push_back(std::make_unique<HonestProducerActor>(i, spec.params, &registry));
        }
    }

    for (std::uint32_t j = 0; j < spec.params.n_c; ++j) {
        Identity me = consumer_id(j);
        auto byz = spec.byzantine.find(me);
        if (byz != spec.byzantine.end()) {
            switch (byz->second) {
            case ByzBehavior::silent: roster.consumers.push_back(std::make_unique<SilentActor>(me)); break;
            case ByzBehavior::no_report:
                roster.consumers.push_back(std::make_unique<NoReportConsumerActor>(j, spec.params, &registry));
                break;
            case ByzBehavior::false_report:
                roster.consumers.push_back(std::make_unique<FalseReportConsumerActor>(j, spec.params, &registry, spec.seed));
                break;
            default: throw InvalidParams("behavior/role mismatch");
            }
        } else if (auto it = controller_of.find(me); it != controller_of.end()) {
            roster.consumers.push_back(std::make_unique<CoalitionConsumerActor>(j, it->second));
        } else {
            roster.consumers.push_back(std::make_unique<HonestConsumerActor>(j, spec.params, &registry, spec.mutation));
        }
    }

    roster.observer = std::make_unique<ObserverActor>(spec.params, &registry);
    return roster;
}

/// Runs one complete scenario instance and returns its trace.
inline Trace run_spec(const RunSpec& spec, const KeyRegistry& registry) {
    validate_run_spec(spec);
    RunConfig config;
    config.params = spec.params;
    config.value = spec.value;
    config.policy = spec.policy;
    config.seed = spec.seed;
    config.byz = byzantine_set_of(spec);
    for (const auto& t : spec.coalitions) config.coalitions.push_back(t.members);
    config.max_events = spec.max_events;
    return run_sim(config, build_roster(spec, registry));
}

inline KeyRegistry make_registry(const RunSpec& spec) {
    return KeyRegistry(spec.key_seed, spec.params.n_p, spec.params.n_c, spec.crypto);
}

// --- the compliance checker -----------------------------------------------------

struct ComplianceResult {
    bool compliant = true;
    std::optional<Identity> witness;
};

/// phi-multiset comparison: the deviation run is compliant iff every observer
/// outside the coalition saw exactly the same event multiset as in the base
/// run. Message equality is full-byte equality.
inline ComplianceResult check_compliance(const Trace& dev, const Trace& base, const CoalitionSpec& t) {
    if (dev.params != base.params || dev.seed != base.seed || dev.policy != base.policy ||
        !(dev.value == base.value))
        throw ScenarioMismatch("compliance requires the same scenario modulo the coalition's behavior");

    std::vector<Identity> observers;
    for (std::uint32_t i = 0; i < base.params.n_p; ++i)
        if (!t.has(producer_id(i))) observers.push_back(producer_id(i));
    for (std::uint32_t j = 0; j < base.params.n_c; ++j)
        if (!t.has(consumer_id(j))) observers.push_back(consumer_id(j));
    observers.push_back(observer_id());

    for (const auto& obs : observers) {
        if (observable_behavior(dev, t.members, obs) != observable_behavior(base, t.members, obs))
            return {false, obs};
    }
    return {true, std::nullopt};
}

} // namespace nbart
