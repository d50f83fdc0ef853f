#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "nbart/common.hpp"
#include "nbart/crypto.hpp"
#include "nbart/gf.hpp"
#include "nbart/topology.hpp"

namespace nbart {

/// A value to transfer. `bit_length` bits of `bytes` are meaningful (MSB-first);
/// trailing bits of the last byte are kept zero so equality is bytewise.
struct ValuePayload {
    Bytes bytes;
    std::uint64_t bit_length = 0;

    static ValuePayload from_bytes(Bytes b) {
        ValuePayload v{std::move(b), 0};
        v.bit_length = v.bytes.size() * 8;
        return v;
    }

    static ValuePayload from_bits(Bytes b, std::uint64_t bits) {
        ValuePayload v{std::move(b), bits};
        v.normalize();
        return v;
    }

    void normalize() {
        bytes.resize((bit_length + 7) / 8);
        if (bit_length % 8 != 0 && !bytes.empty())
            bytes.back() &= static_cast<std::uint8_t>(0xFF << (8 - bit_length % 8));
    }

    friend bool operator==(const ValuePayload&, const ValuePayload&) = default;
};

/// One erasure-coded block. bit_length = padded(l_v)/B for every block of an
/// encoding. The canonical form (hashed and serialized) binds the bit length.
struct Block {
    Bytes bytes;
    std::uint32_t bit_length = 0;

    Bytes canonical() const {
        Bytes out;
        put_u32(out, bit_length);
        out.insert(out.end(), bytes.begin(), bytes.end());
        return out;
    }

    friend bool operator==(const Block&, const Block&) = default;
};

using BlockVector = std::vector<Block>;

namespace bits {

inline bool get(const Bytes& b, std::uint64_t i) { return (b[i / 8] >> (7 - i % 8)) & 1; }

inline void set(Bytes& b, std::uint64_t i, bool v) {
    if (v) b[i / 8] |= static_cast<std::uint8_t>(1u << (7 - i % 8));
}

inline GfElem get_word(const Bytes& b, std::uint64_t word_index, unsigned omega) {
    GfElem w = 0;
    std::uint64_t base = word_index * omega;
    for (unsigned k = 0; k < omega; ++k) w = static_cast<GfElem>((w << 1) | (get(b, base + k) ? 1 : 0));
    return w;
}

inline void put_word(Bytes& b, std::uint64_t word_index, unsigned omega, GfElem w) {
    std::uint64_t base = word_index * omega;
    for (unsigned k = 0; k < omega; ++k) set(b, base + k, (w >> (omega - 1 - k)) & 1);
}

} // namespace bits

/// Padded bit length: l_v plus a 1 bit plus zero fill to the next multiple of
/// B*omega. Self-delimiting, so decode strips it exactly without metadata.
inline std::uint64_t padded_bit_length(std::uint64_t l_v, std::uint32_t b, unsigned omega) {
    std::uint64_t unit = static_cast<std::uint64_t>(b) * omega;
    std::uint64_t with_marker = l_v + 1;
    return ((with_marker + unit - 1) / unit) * unit;
}

inline GfElem poly_eval(const std::vector<GfElem>& coeffs, GfElem x, const GfParams& gf) {
    GfElem acc = 0;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = gf_add(gf_mul(acc, x, gf), coeffs[i]);
    return acc;
}

/// Coefficients (constant term first) of the unique degree<n polynomial
/// through the n points (xs[k], ys[k]). Characteristic-2 Lagrange form.
inline std::vector<GfElem> lagrange_coefficients(const std::vector<GfElem>& xs, const std::vector<GfElem>& ys,
                                                 const GfParams& gf) {
    std::size_t n = xs.size();
    // master(x) = prod_k (x + x_k)
    std::vector<GfElem> master{1};
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<GfElem> next(master.size() + 1, 0);
        for (std::size_t i = 0; i < master.size(); ++i) {
            next[i + 1] = gf_add(next[i + 1], master[i]);
            next[i] = gf_add(next[i], gf_mul(master[i], xs[k], gf));
        }
        master = std::move(next);
    }

    std::vector<GfElem> result(n, 0);
    std::vector<GfElem> q(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        // q(x) = master(x) / (x + x_k) by synthetic division
        q[n - 1] = master[n];
        for (std::size_t i = n - 1; i-- > 0;) q[i] = gf_add(master[i + 1], gf_mul(xs[k], q[i + 1], gf));
        GfElem denom = poly_eval(q, xs[k], gf);
        GfElem scale = gf_div(ys[k], denom, gf);
        for (std::size_t i = 0; i < n; ++i) result[i] = gf_add(result[i], gf_mul(scale, q[i], gf));
    }
    return result;
}

/// RS-ENC: the padded payload is split into stripes of B words; each stripe's
/// words are the coefficients of a degree-(B-1) polynomial evaluated at point
/// i+1 for producer i (distinct and nonzero since 2^omega > N_P).
inline BlockVector rs_encode(const ValuePayload& v, const Params& params, const GfParams& gf) {
    params.validate();
    gf.validate();
    if (gf.omega != params.omega) throw InvalidParams("field word size disagrees with instance params");
    if (v.bit_length <= params.b) throw InvalidParams("payload must be longer than B bits");

    std::uint64_t padded = padded_bit_length(v.bit_length, params.b, params.omega);
    Bytes data((padded + 7) / 8, 0);
    std::copy(v.bytes.begin(), v.bytes.end(), data.begin());
    bits::set(data, v.bit_length, true);  // pad marker

    std::uint64_t stripes = padded / (static_cast<std::uint64_t>(params.b) * params.omega);
    std::uint32_t block_bits = static_cast<std::uint32_t>(stripes * params.omega);

    BlockVector out(params.n_p);
    for (auto& blk : out) {
        blk.bit_length = block_bits;
        blk.bytes.assign((block_bits + 7) / 8, 0);
    }

    std::vector<GfElem> coeffs(params.b);
    for (std::uint64_t s = 0; s < stripes; ++s) {
        for (std::uint32_t k = 0; k < params.b; ++k)
            coeffs[k] = bits::get_word(data, s * params.b + k, params.omega);
        for (std::uint32_t i = 0; i < params.n_p; ++i) {
            GfElem y = poly_eval(coeffs, static_cast<GfElem>(i + 1), gf);
            bits::put_word(out[i].bytes, s, params.omega, y);
        }
    }
    return out;
}

/// RS-DEC: keep candidate blocks whose canonical hash matches h_v at their
/// index; if at least B survive, interpolate from the B lowest-indexed ones
/// and strip the padding, otherwise return nullopt.
inline std::optional<ValuePayload> rs_decode(const std::vector<std::optional<Block>>& partial,
                                             const Params& params, const GfParams& gf,
                                             const std::vector<Digest>& h_v) {
    if (h_v.size() != params.n_p) return std::nullopt;
    if (partial.size() > params.n_p) return std::nullopt;

    std::vector<std::uint32_t> keep;
    for (std::uint32_t i = 0; i < partial.size(); ++i) {
        if (!partial[i]) continue;
        unsigned digest_bits = static_cast<unsigned>(h_v[i].bytes.size() * 8);
        if (hash_data(partial[i]->canonical(), digest_bits) == h_v[i]) keep.push_back(i);
    }
    if (keep.size() < params.b) return std::nullopt;
    keep.resize(params.b);

    std::uint32_t block_bits = partial[keep[0]]->bit_length;
    for (auto i : keep)
        if (partial[i]->bit_length != block_bits) return std::nullopt;
    if (block_bits == 0 || block_bits % params.omega != 0) return std::nullopt;
    std::uint64_t stripes = block_bits / params.omega;

    std::vector<GfElem> xs;
    xs.reserve(params.b);
    for (auto i : keep) xs.push_back(static_cast<GfElem>(i + 1));
    std::vector<GfElem> ys(params.b);

    std::uint64_t padded = stripes * params.b * params.omega;
    Bytes data((padded + 7) / 8, 0);

    for (std::uint64_t s = 0; s < stripes; ++s) {
        for (std::uint32_t k = 0; k < params.b; ++k)
            ys[k] = bits::get_word(partial[keep[k]]->bytes, s, params.omega);
        auto coeffs = lagrange_coefficients(xs, ys, gf);
        for (std::uint32_t k = 0; k < params.b; ++k)
            bits::put_word(data, s * params.b + k, params.omega, coeffs[k]);
    }

    // strip self-delimiting padding
    std::uint64_t idx = padded;
    while (idx > 0 && !bits::get(data, idx - 1)) --idx;
    if (idx == 0) return std::nullopt;  // no pad marker: not a valid encoding
    std::uint64_t l_v = idx - 1;
    data.resize((l_v + 7) / 8);
    return ValuePayload::from_bits(std::move(data), l_v);
}

} // namespace nbart
