#pragma once

#include <cassert>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "nbart/common.hpp"
#include "nbart/crypto.hpp"
#include "nbart/message.hpp"
#include "nbart/rs.hpp"
#include "nbart/topology.hpp"

namespace nbart {

// ---------------------------------------------------------------------------
// Role state machines. All three are I/O-free: an input event maps to a new
// state plus output messages/events, so the simulator (or any transport) can
// drive them and properties are assertable on plain values.
// ---------------------------------------------------------------------------

struct HashVectorSig {
    HashVector vec;
    Signature sig;
};

/// Returns the vector present in at least F_P+1 slots, if any. Ties (possible
/// only outside the correctness regime) break toward the smallest serialized
/// vector so the machine stays deterministic.
inline std::optional<HashVector> minimum_hashes_with_threshold(
    const std::vector<std::optional<HashVectorSig>>& hashvecs, std::uint32_t threshold) {
    if (threshold == 0) threshold = 1;
    std::map<Bytes, std::pair<std::uint32_t, const HashVector*>> counts;
    for (const auto& entry : hashvecs) {
        if (!entry) continue;
        Bytes key;
        put_hashvector(key, entry->vec);
        auto& slot = counts[key];
        ++slot.first;
        slot.second = &entry->vec;
    }
    const HashVector* best = nullptr;
    std::uint32_t best_count = 0;
    for (const auto& [key, slot] : counts) {
        if (slot.first >= threshold && slot.first > best_count) {
            best = slot.second;
            best_count = slot.first;
        }
    }
    if (!best) return std::nullopt;
    return *best;
}

inline std::optional<HashVector> minimum_hashes(const std::vector<std::optional<HashVectorSig>>& hashvecs,
                                                std::uint32_t f_p) {
    return minimum_hashes_with_threshold(hashvecs, f_p + 1);
}

// --- producer ---------------------------------------------------------------

struct ProducerState {
    std::optional<BlockVector> blocks;
    std::optional<HashVector> hashes;
};

class ProducerMachine {
public:
    ProducerMachine(std::uint32_t index, Params params, const KeyRegistry* registry)
        : index_(index), params_(params), registry_(registry), keys_(registry->keypair(producer_id(index))) {}

    /// Encode, hash every block, and emit one BLOCK per conset member plus
    /// one SUMMARY per remaining consumer: exactly N_C messages.
    std::vector<ProtocolMessage> on_produce(const ValuePayload& v) {
        if (state_.blocks) throw DoubleProduce();
        BlockVector blocks = rs_encode(v, params_, params_.gf());
        HashVector hashes;
        hashes.entries.reserve(params_.n_p);
        for (const auto& blk : blocks) hashes.entries.push_back(registry_->hash(blk.canonical()));
        state_.blocks = blocks;
        state_.hashes = hashes;

        std::vector<ProtocolMessage> out;
        out.reserve(params_.n_c);
        Signature block_sig = registry_->sign(keys_, signed_bytes(MessageKind::block, hashes));
        for (std::uint32_t j : conset(index_, params_)) {
            ProtocolMessage m;
            m.kind = MessageKind::block;
            m.sender = producer_id(index_);
            m.receiver = consumer_id(j);
            m.block = blocks[index_];
            m.hashes = hashes;
            m.signature = block_sig;
            out.push_back(std::move(m));
        }
        Signature summary_sig = registry_->sign(keys_, signed_bytes(MessageKind::summary, hashes));
        for (std::uint32_t j = 0; j < params_.n_c; ++j) {
            if (in_prodset(index_, j, params_)) continue;
            ProtocolMessage m;
            m.kind = MessageKind::summary;
            m.sender = producer_id(index_);
            m.receiver = consumer_id(j);
            m.hashes = hashes;
            m.signature = summary_sig;
            out.push_back(std::move(m));
        }
        return out;
    }

    const ProducerState& state() const { return state_; }
    std::uint32_t index() const { return index_; }

private:
    std::uint32_t index_;
    Params params_;
    const KeyRegistry* registry_;
    Keypair keys_;
    ProducerState state_;
};

// --- consumer ---------------------------------------------------------------

enum class ConsumerPhase { init, got_hashes, consumed };

/// Fault-injection knobs used by the conformance suite to prove the trace
/// oracles are not vacuous. Production paths always use `none`.
enum class ConsumerMutation { none, skip_decode, weak_hash_threshold };

struct ConsumerOutput {
    std::vector<ProtocolMessage> messages;
    bool consumed_now = false;
    std::optional<ValuePayload> consumed_value;
    bool dropped = false;
    std::string drop_reason;
    double compute_units = 0;
};

class ConsumerMachine {
public:
    ConsumerMachine(std::uint32_t index, Params params, const KeyRegistry* registry,
                    ConsumerMutation mutation = ConsumerMutation::none)
        : index_(index), params_(params), registry_(registry), keys_(registry->keypair(consumer_id(index))),
          mutation_(mutation), hashvecs_(params.n_p), blocks_(params.n_p), correctproducers_(params.n_p) {
        for (std::uint32_t p = 0; p < params_.n_p; ++p) missing_.insert(p);
    }

    ConsumerPhase phase() const {
        if (value_) return ConsumerPhase::consumed;
        if (correcthashvec_) return ConsumerPhase::got_hashes;
        return ConsumerPhase::init;
    }

    ConsumerOutput on_deliver(const ProtocolMessage& msg) {
        switch (msg.kind) {
        case MessageKind::block: return on_block(msg);
        case MessageKind::summary: return on_summary(msg);
        default: return drop("not addressed to consumers");
        }
    }

    const std::optional<ValuePayload>& value() const { return value_; }
    const std::optional<HashVector>& correcthashvec() const { return correcthashvec_; }
    const std::set<std::uint32_t>& missing() const { return missing_; }
    const SignatureSlots& correctproducers() const { return correctproducers_; }
    const std::vector<std::optional<HashVectorSig>>& hashvecs() const { return hashvecs_; }
    std::uint32_t index() const { return index_; }

private:
    ConsumerOutput drop(std::string reason) {
        ConsumerOutput out;
        out.dropped = true;
        out.drop_reason = std::move(reason);
        return out;
    }

    bool malformed(const ProtocolMessage& msg) const {
        if (msg.hashes.entries.size() != params_.n_p) return true;
        for (const auto& d : msg.hashes.entries)
            if (d.bytes.size() * 8 != registry_->params().hash_bits) return true;
        return false;
    }

    ConsumerOutput on_block(const ProtocolMessage& msg) {
        if (msg.sender.role != Role::producer) return drop("block from non-producer");
        std::uint32_t p = msg.sender.index;
        if (p >= params_.n_p || !missing_.count(p) || !in_prodset(p, index_, params_))
            return drop("guard: sender not in missing intersect prodset");
        if (malformed(msg)) return drop("malformed hash vector");
        if (!registry_->verifysig(msg.sender, signed_bytes(MessageKind::block, msg.hashes), msg.signature))
            return drop("invalid signature");

        ConsumerOutput out;
        missing_.erase(p);
        bool hash_ok = msg.block && registry_->verifyhash(msg.block->canonical(), msg.hashes.entries[p]);
        if (!hash_ok) {
            out.dropped = true;
            out.drop_reason = "block hash mismatch";
            return out;
        }
        if (!correcthashvec_) {
            hashvecs_[p] = HashVectorSig{msg.hashes, msg.signature};
            blocks_[p] = *msg.block;
            correcthashvec_ = run_minimum_hashes();
            if (correcthashvec_) consume_and_report(out);
        } else if (!value_) {
            if (msg.hashes == *correcthashvec_) {
                hashvecs_[p] = HashVectorSig{msg.hashes, msg.signature};
                blocks_[p] = *msg.block;
                consume_and_report(out);
            }
        } else if (msg.hashes == *correcthashvec_) {
            correctproducers_[p] = msg.signature;
            out.messages.push_back(make_report());
        }
        return out;
    }

    ConsumerOutput on_summary(const ProtocolMessage& msg) {
        if (msg.sender.role != Role::producer) return drop("summary from non-producer");
        std::uint32_t p = msg.sender.index;
        if (p >= params_.n_p || !missing_.count(p) || in_prodset(p, index_, params_))
            return drop("guard: sender not in missing minus prodset");
        if (malformed(msg)) return drop("malformed hash vector");
        if (!registry_->verifysig(msg.sender, signed_bytes(MessageKind::summary, msg.hashes), msg.signature))
            return drop("invalid signature");

        ConsumerOutput out;
        missing_.erase(p);
        if (!correcthashvec_) {
            hashvecs_[p] = HashVectorSig{msg.hashes, msg.signature};
            correcthashvec_ = run_minimum_hashes();
            if (correcthashvec_) consume_and_report(out);
        } else if (!value_) {
            if (msg.hashes == *correcthashvec_) {
                hashvecs_[p] = HashVectorSig{msg.hashes, msg.signature};
                consume_and_report(out);
            }
        } else if (msg.hashes == *correcthashvec_) {
            correctproducers_[p] = msg.signature;
            out.messages.push_back(make_report());
        }
        return out;
    }

    std::optional<HashVector> run_minimum_hashes() const {
        std::uint32_t threshold =
            mutation_ == ConsumerMutation::weak_hash_threshold ? params_.f_p : params_.f_p + 1;
        return minimum_hashes_with_threshold(hashvecs_, threshold);
    }

    void consume_and_report(ConsumerOutput& out) {
        assert(correcthashvec_);
        if (mutation_ == ConsumerMutation::skip_decode) return;
        auto decoded = rs_decode(blocks_, params_, params_.gf(), correcthashvec_->entries);
        if (!decoded) return;
        value_ = decoded;
        out.consumed_now = true;
        out.consumed_value = decoded;
        out.compute_units += 1;
        for (std::uint32_t p = 0; p < params_.n_p; ++p)
            if (hashvecs_[p] && hashvecs_[p]->vec == *correcthashvec_) correctproducers_[p] = hashvecs_[p]->sig;
        out.messages.push_back(make_report());
    }

    ProtocolMessage make_report() const {
        ProtocolMessage m;
        m.kind = MessageKind::report;
        m.sender = consumer_id(index_);
        m.receiver = observer_id();
        m.hashes = *correcthashvec_;
        m.producers = correctproducers_;
        m.signature = registry_->sign(keys_, report_signed_bytes(m.hashes, m.producers));
        return m;
    }

    std::uint32_t index_;
    Params params_;
    const KeyRegistry* registry_;
    Keypair keys_;
    ConsumerMutation mutation_;

    std::optional<ValuePayload> value_;
    std::optional<HashVector> correcthashvec_;
    std::vector<std::optional<HashVectorSig>> hashvecs_;
    std::vector<std::optional<Block>> blocks_;
    std::set<std::uint32_t> missing_;
    SignatureSlots correctproducers_;
};

// --- trusted observer -------------------------------------------------------

struct EvidenceEntry {
    HashVector hashesvec;
    SignatureSlots producers;
    friend bool operator==(const EvidenceEntry&, const EvidenceEntry&) = default;
};

/// TO's per-consumer evidence array; an entry is set only by a validly signed
/// REPORT and later reports overwrite it.
using Evidence = std::vector<std::optional<EvidenceEntry>>;

struct ObserverOutput {
    bool certified = false;
    bool dropped = false;
    std::string drop_reason;
};

class ObserverMachine {
public:
    ObserverMachine(Params params, const KeyRegistry* registry)
        : params_(params), registry_(registry), evidence_(params.n_c) {}

    ObserverOutput on_deliver(const ProtocolMessage& msg) {
        ObserverOutput out;
        if (msg.kind != MessageKind::report || msg.sender.role != Role::consumer ||
            msg.sender.index >= params_.n_c) {
            out.dropped = true;
            out.drop_reason = "not a consumer report";
            return out;
        }
        if (msg.hashes.entries.size() != params_.n_p || msg.producers.size() != params_.n_p) {
            out.dropped = true;
            out.drop_reason = "malformed report";
            return out;
        }
        if (!registry_->verifysig(msg.sender, report_signed_bytes(msg.hashes, msg.producers), msg.signature)) {
            out.dropped = true;
            out.drop_reason = "invalid signature";
            return out;
        }
        evidence_[msg.sender.index] = EvidenceEntry{msg.hashes, msg.producers};
        out.certified = true;
        return out;
    }

    const Evidence& evidence() const { return evidence_; }

private:
    Params params_;
    const KeyRegistry* registry_;
    Evidence evidence_;
};

} // namespace nbart
