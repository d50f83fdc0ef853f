#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nbart/evidence.hpp"
#include "nbart/protocol.hpp"

namespace nbart {

// ---------------------------------------------------------------------------
// Deterministic discrete-event network: reliable authenticated point-to-point
// channels, adversary-influenced but fair scheduling, full trace capture.
// Asynchrony is adversarial reordering with eventual delivery; liveness
// properties are evaluated at quiescence.
// ---------------------------------------------------------------------------

enum class EventKind : std::uint8_t {
    send,
    deliver,
    produce,
    consume,
    certify,
    drop,
    local_send,    // intra-coalition message kept off the wire
    local_deliver,
};

inline const char* to_string(EventKind k) {
    switch (k) {
    case EventKind::send: return "send";
    case EventKind::deliver: return "deliver";
    case EventKind::produce: return "produce";
    case EventKind::consume: return "consume";
    case EventKind::certify: return "certify";
    case EventKind::drop: return "drop";
    case EventKind::local_send: return "local-send";
    case EventKind::local_deliver: return "local-deliver";
    }
    return "?";
}

struct SimEvent {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::send;
    Identity actor;                        // sender for sends, receiver for delivers
    Identity emitter;                      // who physically emitted (cost attribution)
    std::optional<ProtocolMessage> message;
    std::optional<ValuePayload> value;     // produce/consume payload
    std::string note;
};

enum class SchedulePolicy : std::uint8_t { fifo, uniform_random, byzantine_favoring, consumer_starving };

inline const char* to_string(SchedulePolicy p) {
    switch (p) {
    case SchedulePolicy::fifo: return "fifo";
    case SchedulePolicy::uniform_random: return "uniform-random";
    case SchedulePolicy::byzantine_favoring: return "byzantine-favoring";
    case SchedulePolicy::consumer_starving: return "consumer-starving";
    }
    return "?";
}

inline std::optional<SchedulePolicy> parse_policy(const std::string& s) {
    if (s == "fifo") return SchedulePolicy::fifo;
    if (s == "uniform-random") return SchedulePolicy::uniform_random;
    if (s == "byzantine-favoring") return SchedulePolicy::byzantine_favoring;
    if (s == "consumer-starving") return SchedulePolicy::consumer_starving;
    return std::nullopt;
}

struct ConsumerSnapshot {
    std::optional<ValuePayload> value;
    std::optional<HashVector> correcthashvec;
    std::set<std::uint32_t> missing;
    SignatureSlots correctproducers;
};

/// Totally ordered event log of one run plus the final machine states.
/// Replayable: (scenario, seed) reproduces an identical trace.
struct Trace {
    Params params;
    ValuePayload value;
    std::uint64_t seed = 0;
    SchedulePolicy policy = SchedulePolicy::fifo;
    ByzantineSet byz;
    std::vector<std::vector<Identity>> coalitions;
    std::vector<SimEvent> events;
    Evidence final_evidence;
    std::vector<ConsumerSnapshot> final_consumers;
    std::map<Identity, double> compute_units;

    std::vector<bool> consumed_flags() const {
        std::vector<bool> flags(params.n_c, false);
        for (const auto& e : events)
            if (e.kind == EventKind::consume && e.actor.role == Role::consumer) flags[e.actor.index] = true;
        return flags;
    }

    std::size_t consume_count(std::uint32_t c) const {
        std::size_t n = 0;
        for (const auto& e : events)
            if (e.kind == EventKind::consume && e.actor == consumer_id(c)) ++n;
        return n;
    }
};

// --- actor interface ---------------------------------------------------------

struct ActorMessage {
    ProtocolMessage msg;
    bool local = false;  // stays off the wire; delivered through the scheduler all the same
    std::optional<Identity> emitter;  // physical sender when it differs from the acting actor

    ActorMessage(ProtocolMessage m, bool is_local = false, std::optional<Identity> from = std::nullopt)
        : msg(std::move(m)), local(is_local), emitter(std::move(from)) {}
};

struct ActorResult {
    std::vector<ActorMessage> messages;
    bool produced = false;
    std::optional<ValuePayload> produced_value;
    bool consumed = false;
    std::optional<ValuePayload> consumed_value;
    bool certified = false;
    bool dropped = false;
    std::string drop_reason;
    double compute_units = 0;
};

class Actor {
public:
    virtual ~Actor() = default;
    virtual Identity id() const = 0;
    virtual ActorResult on_produce(const ValuePayload&) { return {}; }
    virtual ActorResult on_deliver(const ProtocolMessage&) { return {}; }
    virtual ActorResult on_quiescence(int) { return {}; }
    virtual std::optional<ConsumerSnapshot> consumer_snapshot() const { return std::nullopt; }
    virtual const Evidence* evidence() const { return nullptr; }
};

// --- honest actors -----------------------------------------------------------

class HonestProducerActor : public Actor {
public:
    HonestProducerActor(std::uint32_t index, const Params& params, const KeyRegistry* registry)
        : machine_(index, params, registry) {}

    Identity id() const override { return producer_id(machine_.index()); }

    ActorResult on_produce(const ValuePayload& v) override {
        ActorResult r;
        r.produced = true;
        r.produced_value = v;
        r.compute_units = 1;  // one encode invocation
        for (auto& m : machine_.on_produce(v)) r.messages.push_back({std::move(m), false});
        return r;
    }

private:
    ProducerMachine machine_;
};

class HonestConsumerActor : public Actor {
public:
    HonestConsumerActor(std::uint32_t index, const Params& params, const KeyRegistry* registry,
                        ConsumerMutation mutation = ConsumerMutation::none)
        : machine_(index, params, registry, mutation) {}

    Identity id() const override { return consumer_id(machine_.index()); }

    ActorResult on_deliver(const ProtocolMessage& msg) override {
        auto out = machine_.on_deliver(msg);
        ActorResult r;
        for (auto& m : out.messages) r.messages.push_back({std::move(m), false});
        r.consumed = out.consumed_now;
        r.consumed_value = out.consumed_value;
        r.dropped = out.dropped;
        r.drop_reason = out.drop_reason;
        r.compute_units = out.compute_units;
        return r;
    }

    std::optional<ConsumerSnapshot> consumer_snapshot() const override {
        return ConsumerSnapshot{machine_.value(), machine_.correcthashvec(), machine_.missing(),
                                machine_.correctproducers()};
    }

    const ConsumerMachine& machine() const { return machine_; }

private:
    ConsumerMachine machine_;
};

class ObserverActor : public Actor {
public:
    ObserverActor(const Params& params, const KeyRegistry* registry) : machine_(params, registry) {}

    Identity id() const override { return observer_id(); }

    ActorResult on_deliver(const ProtocolMessage& msg) override {
        auto out = machine_.on_deliver(msg);
        ActorResult r;
        r.certified = out.certified;
        r.dropped = out.dropped;
        r.drop_reason = out.drop_reason;
        return r;
    }

    const Evidence* evidence() const override { return &machine_.evidence(); }

private:
    ObserverMachine machine_;
};

// --- the simulator core --------------------------------------------------------

struct ActorRoster {
    std::vector<std::unique_ptr<Actor>> producers;  // index-aligned
    std::vector<std::unique_ptr<Actor>> consumers;
    std::unique_ptr<Actor> observer;
};

inline ActorRoster honest_roster(const Params& params, const KeyRegistry* registry,
                                 ConsumerMutation mutation = ConsumerMutation::none) {
    ActorRoster roster;
    for (std::uint32_t i = 0; i < params.n_p; ++i)
        roster.producers.push_back(std::make_unique<HonestProducerActor>(i, params, registry));
    for (std::uint32_t j = 0; j < params.n_c; ++j)
        roster.consumers.push_back(std::make_unique<HonestConsumerActor>(j, params, registry, mutation));
    roster.observer = std::make_unique<ObserverActor>(params, registry);
    return roster;
}

struct RunConfig {
    Params params;
    ValuePayload value;
    SchedulePolicy policy = SchedulePolicy::uniform_random;
    std::uint64_t seed = 1;
    ByzantineSet byz;
    std::vector<std::vector<Identity>> coalitions;
    std::size_t max_events = 200000;
    int max_quiescence_rounds = 3;
};

namespace detail {

struct PendingItem {
    std::uint64_t enqueued_at = 0;
    bool is_produce_task = false;
    Identity target;
    ProtocolMessage msg;
    bool local = false;
};

inline std::size_t pick_next(const std::vector<PendingItem>& pool, SchedulePolicy policy,
                             std::mt19937_64& rng) {
    switch (policy) {
    case SchedulePolicy::fifo:
        return 0;
    case SchedulePolicy::uniform_random:
        return static_cast<std::size_t>(rng() % pool.size());
    case SchedulePolicy::byzantine_favoring:
        return pool.size() - 1;  // invert send order
    case SchedulePolicy::consumer_starving: {
        // anything not destined to a consumer goes first; then feed consumers
        // one at a time in index order, starving the later ones
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (pool[i].is_produce_task || pool[i].target.role != Role::consumer) return i;
        std::size_t best = 0;
        for (std::size_t i = 1; i < pool.size(); ++i) {
            auto key = [&](std::size_t k) {
                return std::pair<std::uint32_t, std::uint64_t>(pool[k].target.index, pool[k].enqueued_at);
            };
            if (key(i) < key(best)) best = i;
        }
        return best;
    }
    }
    return 0;
}

} // namespace detail

/// Executes one run to quiescence: injects produce at every producer at
/// schedule-chosen times, drives deliveries until no message is pending, and
/// records every event. Byzantine catalog behaviors get bounded quiescence
/// hooks so late injections still terminate.
inline Trace run_sim(const RunConfig& config, ActorRoster roster) {
    config.params.validate();

    Trace trace;
    trace.params = config.params;
    trace.value = config.value;
    trace.seed = config.seed;
    trace.policy = config.policy;
    trace.byz = config.byz;
    trace.coalitions = config.coalitions;

    std::mt19937_64 rng(config.seed);
    std::vector<detail::PendingItem> pool;
    std::uint64_t seq = 0;

    auto actor_for = [&](Identity id) -> Actor* {
        switch (id.role) {
        case Role::producer: return id.index < roster.producers.size() ? roster.producers[id.index].get() : nullptr;
        case Role::consumer: return id.index < roster.consumers.size() ? roster.consumers[id.index].get() : nullptr;
        case Role::observer: return roster.observer.get();
        }
        return nullptr;
    };

    auto record = [&](EventKind kind, Identity actor, Identity emitter,
                      std::optional<ProtocolMessage> msg = std::nullopt,
                      std::optional<ValuePayload> value = std::nullopt, std::string note = {}) {
        SimEvent e;
        e.seq = seq++;
        e.kind = kind;
        e.actor = actor;
        e.emitter = emitter;
        e.message = std::move(msg);
        e.value = std::move(value);
        e.note = std::move(note);
        trace.events.push_back(std::move(e));
    };

    auto process_result = [&](Identity acting, ActorResult&& result) {
        if (result.produced)
            record(EventKind::produce, acting, acting, std::nullopt,
                   result.produced_value ? *result.produced_value : config.value);
        if (result.consumed) record(EventKind::consume, acting, acting, std::nullopt, result.consumed_value);
        if (result.certified) record(EventKind::certify, observer_id(), observer_id());
        if (result.dropped) record(EventKind::drop, acting, acting, std::nullopt, std::nullopt, result.drop_reason);
        trace.compute_units[acting] += result.compute_units;
        for (auto& am : result.messages) {
            record(am.local ? EventKind::local_send : EventKind::send, am.msg.sender,
                   am.emitter.value_or(acting), am.msg);
            pool.push_back({seq, false, am.msg.receiver, std::move(am.msg), am.local});
        }
    };

    // produce tasks for every producer, injected up front and scheduled freely
    for (std::uint32_t i = 0; i < config.params.n_p; ++i)
        pool.push_back({seq, true, producer_id(i), {}, false});

    int quiescence_round = 0;
    while (true) {
        while (!pool.empty()) {
            if (trace.events.size() > config.max_events)
                throw NonQuiescent("event budget exhausted; a behavior keeps injecting messages");
            std::size_t idx = detail::pick_next(pool, config.policy, rng);
            // Reports from one consumer reach the observer in send order: the
            // observer's entry overwrite assumes the newest report wins, and a
            // reordered stale report would silently revoke certifications.
            // Producer-to-consumer traffic stays fully reorderable.
            if (!pool[idx].is_produce_task && pool[idx].target == observer_id()) {
                for (std::size_t k = 0; k < idx; ++k) {
                    if (!pool[k].is_produce_task && pool[k].target == observer_id() &&
                        pool[k].msg.sender == pool[idx].msg.sender) {
                        idx = k;
                        break;
                    }
                }
            }
            detail::PendingItem item = std::move(pool[idx]);
            pool.erase(pool.begin() + static_cast<long>(idx));

            Actor* actor = actor_for(item.target);
            if (!actor) continue;
            if (item.is_produce_task) {
                process_result(item.target, actor->on_produce(config.value));
            } else {
                record(item.local ? EventKind::local_deliver : EventKind::deliver, item.target,
                       item.msg.sender, item.msg);
                process_result(item.target, actor->on_deliver(item.msg));
            }
        }
        if (quiescence_round >= config.max_quiescence_rounds) break;
        bool injected = false;
        auto poll = [&](Actor* a) {
            if (!a) return;
            ActorResult r = a->on_quiescence(quiescence_round);
            if (!r.messages.empty() || r.produced || r.consumed || r.certified) injected = true;
            process_result(a->id(), std::move(r));
        };
        for (auto& p : roster.producers) poll(p.get());
        for (auto& c : roster.consumers) poll(c.get());
        poll(roster.observer.get());
        ++quiescence_round;
        if (!injected && pool.empty()) break;
    }

    if (const Evidence* e = roster.observer->evidence()) trace.final_evidence = *e;
    trace.final_consumers.resize(config.params.n_c);
    for (std::uint32_t j = 0; j < config.params.n_c; ++j)
        if (auto snap = roster.consumers[j]->consumer_snapshot()) trace.final_consumers[j] = *snap;
    return trace;
}

// --- observable behavior and trace export -------------------------------------

/// phi_i(sigma_t): the multiset of events triggered in observer i by coalition
/// t. Deliveries of wire messages sent by t members, plus, for the observer
/// role, the produce and consume events of t members. Encoded as sorted
/// canonical byte strings so comparison is order-insensitive.
inline std::vector<Bytes> observable_behavior(const Trace& trace, const std::vector<Identity>& t, Identity i) {
    std::vector<Bytes> events;
    auto in_t = [&](Identity id) { return std::find(t.begin(), t.end(), id) != t.end(); };
    if (in_t(i)) throw ScenarioMismatch("observer must be outside the coalition");

    for (const auto& e : trace.events) {
        if (e.kind == EventKind::deliver && e.actor == i && e.message && in_t(e.message->sender)) {
            Bytes b{'D'};
            Bytes ser = serialize(*e.message);
            b.insert(b.end(), ser.begin(), ser.end());
            events.push_back(std::move(b));
        }
        if (i == observer_id()) {
            if (e.kind == EventKind::produce && e.actor.role == Role::producer && in_t(e.actor)) {
                Bytes b{'P'};
                put_identity(b, e.actor);
                if (e.value) put_bytes(b, e.value->bytes);
                events.push_back(std::move(b));
            }
            if (e.kind == EventKind::consume && e.actor.role == Role::consumer && in_t(e.actor)) {
                Bytes b{'C'};
                put_identity(b, e.actor);
                if (e.value) put_bytes(b, e.value->bytes);
                events.push_back(std::move(b));
            }
        }
    }
    std::sort(events.begin(), events.end());
    return events;
}

/// Line-oriented trace export: `seq kind sender receiver msgkind bytelen digest8`.
inline std::string export_trace(const Trace& trace) {
    std::string out;
    out.reserve(trace.events.size() * 48);
    for (const auto& e : trace.events) {
        out += std::to_string(e.seq);
        out += ' ';
        out += to_string(e.kind);
        out += ' ';
        if (e.message) {
            out += to_string(e.message->sender);
            out += ' ';
            out += to_string(e.message->receiver);
            out += ' ';
            out += to_string(e.message->kind);
            Bytes ser = serialize(*e.message);
            out += ' ';
            out += std::to_string(ser.size());
            out += ' ';
            out += to_hex(hash_data(ser, 64).bytes, 4);
        } else {
            out += to_string(e.actor);
            out += " - -";
            Bytes payload = e.value ? e.value->bytes : Bytes{};
            out += ' ';
            out += std::to_string(payload.size());
            out += ' ';
            out += to_hex(hash_data(payload, 64).bytes, 4);
        }
        if (!e.note.empty()) {
            out += ' ';
            out += e.note;
        }
        out += '\n';
    }
    return out;
}

} // namespace nbart
