#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "nbart/common.hpp"

namespace nbart {

// ---------------------------------------------------------------------------
// SHA-256 core. Used as the deterministic digest primitive for both hashing
// and the MAC-style test signature scheme.
// ---------------------------------------------------------------------------

namespace detail {

struct Sha256 {
    std::array<std::uint32_t, 8> h{0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                                   0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    std::array<std::uint8_t, 64> block{};
    std::size_t block_len = 0;
    std::uint64_t total_len = 0;

    static constexpr std::array<std::uint32_t, 64> k = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
        0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
        0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
        0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
        0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
        0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
        0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
        0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};

    static std::uint32_t rotr(std::uint32_t x, unsigned n) { return (x >> n) | (x << (32 - n)); }

    void compress(const std::uint8_t* p) {
        std::array<std::uint32_t, 64> w{};
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        auto [a, b, c, d, e, f, g, hh] = h;
        for (int i = 0; i < 64; ++i) {
            std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            std::uint32_t ch = (e & f) ^ (~e & g);
            std::uint32_t t1 = hh + s1 + ch + k[i] + w[i];
            std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            std::uint32_t t2 = s0 + maj;
            hh = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d;
        h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
    }

    void update(const std::uint8_t* data, std::size_t len) {
        total_len += len;
        while (len) {
            std::size_t take = std::min(len, block.size() - block_len);
            std::copy(data, data + take, block.begin() + static_cast<long>(block_len));
            block_len += take;
            data += take;
            len -= take;
            if (block_len == block.size()) {
                compress(block.data());
                block_len = 0;
            }
        }
    }

    std::array<std::uint8_t, 32> finish() {
        std::uint64_t bits = total_len * 8;
        std::uint8_t pad = 0x80;
        update(&pad, 1);
        std::uint8_t zero = 0;
        while (block_len != 56) update(&zero, 1);
        std::uint8_t len_be[8];
        for (int i = 0; i < 8; ++i) len_be[i] = static_cast<std::uint8_t>(bits >> (56 - 8 * i));
        update(len_be, 8);
        std::array<std::uint8_t, 32> out{};
        for (int i = 0; i < 8; ++i) {
            out[4 * i] = static_cast<std::uint8_t>(h[i] >> 24);
            out[4 * i + 1] = static_cast<std::uint8_t>(h[i] >> 16);
            out[4 * i + 2] = static_cast<std::uint8_t>(h[i] >> 8);
            out[4 * i + 3] = static_cast<std::uint8_t>(h[i]);
        }
        return out;
    }
};

inline std::array<std::uint8_t, 32> sha256(const Bytes& data) {
    Sha256 s;
    s.update(data.data(), data.size());
    return s.finish();
}

} // namespace detail

// ---------------------------------------------------------------------------
// Digest / signature primitives with configurable bit lengths.
// ---------------------------------------------------------------------------

struct CryptoParams {
    unsigned hash_bits = 256;  // l_h
    unsigned sig_bits = 256;   // l_s

    void validate() const {
        if (hash_bits % 8 != 0 || hash_bits < 64 || hash_bits > 512)
            throw InvalidParams("hash_bits must be a multiple of 8 in [64,512]");
        if (sig_bits % 8 != 0 || sig_bits < 64 || sig_bits > 512)
            throw InvalidParams("sig_bits must be a multiple of 8 in [64,512]");
    }
};

struct Digest {
    Bytes bytes;
    friend bool operator==(const Digest&, const Digest&) = default;
    friend auto operator<=>(const Digest&, const Digest&) = default;
};

/// Digest of `data`, extended/truncated to `out_bits/8` bytes. Lengths other
/// than 256 are produced by counter-mode rehashing of the base digest.
inline Digest hash_data(const Bytes& data, unsigned out_bits = 256) {
    std::size_t want = out_bits / 8;
    auto base = detail::sha256(data);
    Digest d;
    d.bytes.assign(base.begin(), base.end());
    std::uint32_t counter = 0;
    while (d.bytes.size() < want) {
        Bytes next(base.begin(), base.end());
        put_u32(next, ++counter);
        auto ext = detail::sha256(next);
        d.bytes.insert(d.bytes.end(), ext.begin(), ext.end());
    }
    d.bytes.resize(want);
    return d;
}

struct Signature {
    Identity signer;
    Bytes bytes;
    friend bool operator==(const Signature&, const Signature&) = default;
};

struct Keypair {
    Identity id;
    Bytes secret;
};

/// Registry of per-identity secrets. Built once at scenario setup; behaviors
/// only ever receive their own Keypair, so non-Byzantine signatures cannot be
/// forged by construction.
class KeyRegistry {
public:
    KeyRegistry() = default;
    KeyRegistry(std::uint64_t seed, std::uint32_t producers, std::uint32_t consumers, CryptoParams params)
        : params_(params) {
        params_.validate();
        std::uint64_t s = seed ^ 0x6b657973ULL;
        auto add = [&](Identity id) {
            Bytes secret = random_bytes(splitmix64(s), 32);
            secrets_.emplace(id, std::move(secret));
        };
        for (std::uint32_t i = 0; i < producers; ++i) add(producer_id(i));
        for (std::uint32_t i = 0; i < consumers; ++i) add(consumer_id(i));
        add(observer_id());
    }

    const CryptoParams& params() const { return params_; }

    Keypair keypair(Identity id) const {
        auto it = secrets_.find(id);
        if (it == secrets_.end()) throw UnknownIdentity("no key registered for " + to_string(id));
        return {id, it->second};
    }

    bool knows(Identity id) const { return secrets_.count(id) != 0; }

    Digest hash(const Bytes& data) const { return hash_data(data, params_.hash_bits); }

    Signature sign(const Keypair& keys, const Bytes& data) const {
        Bytes mac;
        mac.reserve(keys.secret.size() + data.size() + 8);
        put_bytes(mac, keys.secret);
        mac.insert(mac.end(), data.begin(), data.end());
        return {keys.id, hash_data(mac, params_.sig_bits).bytes};
    }

    bool verifysig(Identity signer, const Bytes& data, const Signature& sig) const {
        auto it = secrets_.find(signer);
        if (it == secrets_.end()) throw UnknownIdentity("no key registered for " + to_string(signer));
        if (sig.signer != signer) return false;
        Bytes mac;
        mac.reserve(it->second.size() + data.size() + 8);
        put_bytes(mac, it->second);
        mac.insert(mac.end(), data.begin(), data.end());
        return sig.bytes == hash_data(mac, params_.sig_bits).bytes;
    }

    bool verifyhash(const Bytes& block, const Digest& h) const { return hash(block) == h; }

private:
    CryptoParams params_;
    std::map<Identity, Bytes> secrets_;
};

} // namespace nbart
