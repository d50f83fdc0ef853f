#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nbart/common.hpp"
#include "nbart/crypto.hpp"
#include "nbart/rs.hpp"

namespace nbart {

enum class MessageKind : std::uint8_t { block = 0, summary = 1, report = 2 };

inline const char* to_string(MessageKind k) {
    switch (k) {
    case MessageKind::block: return "BLOCK";
    case MessageKind::summary: return "SUMMARY";
    case MessageKind::report: return "REPORT";
    }
    return "?";
}

/// Per-producer digest vector, index-aligned with producer indices.
struct HashVector {
    std::vector<Digest> entries;
    friend bool operator==(const HashVector&, const HashVector&) = default;
};

using SignatureSlots = std::vector<std::optional<Signature>>;

/// The three wire messages. `hashes` is h_v for BLOCK/SUMMARY and
/// correcthashvec for REPORT; `producers` is REPORT-only.
struct ProtocolMessage {
    MessageKind kind = MessageKind::block;
    Identity sender;
    Identity receiver;
    std::optional<Block> block;  // BLOCK only
    HashVector hashes;
    SignatureSlots producers;  // REPORT only
    Signature signature;

    friend bool operator==(const ProtocolMessage&, const ProtocolMessage&) = default;
};

// digests are fixed-width within a run, so one length prefix covers them all
inline void put_hashvector(Bytes& out, const HashVector& h) {
    put_u32(out, static_cast<std::uint32_t>(h.entries.size()));
    std::uint32_t digest_len = h.entries.empty() ? 0 : static_cast<std::uint32_t>(h.entries[0].bytes.size());
    put_u32(out, digest_len);
    for (const auto& d : h.entries) out.insert(out.end(), d.bytes.begin(), d.bytes.end());
}

inline void put_signature_slots(Bytes& out, const SignatureSlots& slots) {
    put_u32(out, static_cast<std::uint32_t>(slots.size()));
    for (const auto& s : slots) {
        if (!s) {
            put_u8(out, 0);
        } else {
            put_u8(out, 1);
            put_identity(out, s->signer);
            put_bytes(out, s->bytes);
        }
    }
}

/// Byte string covered by a BLOCK or SUMMARY signature: kind tag then the
/// hash vector. The block itself is not signed; the signed hashes already
/// authenticate it.
inline Bytes signed_bytes(MessageKind kind, const HashVector& hashes) {
    Bytes out;
    put_u8(out, static_cast<std::uint8_t>(kind));
    put_hashvector(out, hashes);
    return out;
}

/// Byte string covered by a REPORT signature: tag, correcthashvec, producers.
inline Bytes report_signed_bytes(const HashVector& correcthashvec, const SignatureSlots& producers) {
    Bytes out;
    put_u8(out, static_cast<std::uint8_t>(MessageKind::report));
    put_hashvector(out, correcthashvec);
    put_signature_slots(out, producers);
    return out;
}

/// Canonical wire serialization: fixed field order, length-prefixed variable
/// fields. Stable across runs so bit counts and trace digests reproduce.
inline Bytes serialize(const ProtocolMessage& m) {
    Bytes out;
    put_u8(out, static_cast<std::uint8_t>(m.kind));
    put_identity(out, m.sender);
    put_identity(out, m.receiver);
    if (m.kind == MessageKind::block) {
        put_u8(out, m.block ? 1 : 0);
        if (m.block) {
            put_u32(out, m.block->bit_length);
            put_bytes(out, m.block->bytes);
        }
    }
    put_hashvector(out, m.hashes);
    if (m.kind == MessageKind::report) put_signature_slots(out, m.producers);
    put_identity(out, m.signature.signer);
    put_bytes(out, m.signature.bytes);
    return out;
}

/// Inverse of serialize. Rejects anything that is not the exact canonical
/// encoding (wrong tags, truncation, trailing bytes).
inline std::optional<ProtocolMessage> deserialize(const Bytes& wire) {
    ByteReader r{wire};
    ProtocolMessage m;
    std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(MessageKind::report)) return std::nullopt;
    m.kind = static_cast<MessageKind>(kind);
    m.sender = r.identity();
    m.receiver = r.identity();
    if (m.kind == MessageKind::block) {
        std::uint8_t present = r.u8();
        if (present > 1) return std::nullopt;
        if (present) {
            Block b;
            b.bit_length = r.u32();
            b.bytes = r.bytes();
            m.block = std::move(b);
        }
    }
    std::uint32_t count = r.u32();
    std::uint32_t digest_len = r.u32();
    if (count > wire.size() || digest_len > wire.size()) return std::nullopt;
    for (std::uint32_t i = 0; i < count && !r.fail; ++i) m.hashes.entries.push_back({r.raw(digest_len)});
    if (m.kind == MessageKind::report) {
        std::uint32_t slots = r.u32();
        if (slots > wire.size()) return std::nullopt;
        for (std::uint32_t i = 0; i < slots && !r.fail; ++i) {
            std::uint8_t present = r.u8();
            if (present > 1) return std::nullopt;
            if (!present) {
                m.producers.emplace_back();
                continue;
            }
            Signature sig;
            sig.signer = r.identity();
            sig.bytes = r.bytes();
            m.producers.emplace_back(std::move(sig));
        }
    }
    m.signature.signer = r.identity();
    m.signature.bytes = r.bytes();
    if (!r.done()) return std::nullopt;
    return m;
}

/// Information-content bits of a message: block payload bits, digest bits,
/// signature bits. Framing (tags, indices, length prefixes) is excluded and
/// reported separately by the metrics layer.
struct MessageBits {
    std::uint64_t block_bits = 0;
    std::uint64_t hash_bits = 0;
    std::uint64_t signature_bits = 0;

    std::uint64_t total() const { return block_bits + hash_bits + signature_bits; }
};

inline MessageBits information_bits(const ProtocolMessage& m) {
    MessageBits bits;
    if (m.block) bits.block_bits = m.block->bit_length;
    for (const auto& d : m.hashes.entries) bits.hash_bits += d.bytes.size() * 8;
    bits.signature_bits = m.signature.bytes.size() * 8;
    for (const auto& s : m.producers)
        if (s) bits.signature_bits += s->bytes.size() * 8;
    return bits;
}

} // namespace nbart
