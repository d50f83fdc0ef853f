#pragma once

#include <cstdint>
#include <vector>

#include "nbart/behaviors.hpp"
#include "nbart/simnet.hpp"

namespace nbart {

/// Message and bit accounting for one quiescent trace, next to the closed-form
/// counts for the fault-free algorithm. Framing (tags, indices, length
/// prefixes) is tallied separately so the comparison stays information-content
/// against information-content.
struct ComplexityReport {
    std::uint64_t messages_total = 0;
    std::uint64_t producer_consumer_messages = 0;
    std::uint64_t report_messages = 0;

    std::uint64_t bits_total = 0;           // information bits over all wire messages
    std::uint64_t block_bits = 0;           // BLOCK payloads
    std::uint64_t pc_hash_bits = 0;         // digests in BLOCK/SUMMARY
    std::uint64_t pc_signature_bits = 0;    // signatures on BLOCK/SUMMARY
    std::uint64_t report_bits = 0;          // information bits of REPORTs
    std::uint64_t framing_bits = 0;

    std::uint64_t formula_msgs = 0;          // N_P * N_C
    std::uint64_t formula_block_bits = 0;    // N_C * (B+F_P) * padded(l_v)/B
    std::uint64_t formula_hashsig_bits = 0;  // N_P * N_C * (l_s + N_P * l_h)

    double ratio_msgs = 0;
    double ratio_bits = 0;
};

inline ComplexityReport measure(const Trace& trace, const CryptoParams& crypto) {
    const Params& params = trace.params;
    ComplexityReport r;

    for (const auto& e : trace.events) {
        if (e.kind != EventKind::send || !e.message) continue;
        const ProtocolMessage& m = *e.message;
        MessageBits bits = information_bits(m);
        std::uint64_t wire_bits = 8ull * serialize(m).size();
        r.messages_total += 1;
        r.bits_total += bits.total();
        r.framing_bits += wire_bits - bits.total();
        if (m.kind == MessageKind::report) {
            r.report_messages += 1;
            r.report_bits += bits.total();
        } else {
            r.producer_consumer_messages += 1;
            r.block_bits += bits.block_bits;
            r.pc_hash_bits += bits.hash_bits;
            r.pc_signature_bits += bits.signature_bits;
        }
    }

    std::uint64_t padded = padded_bit_length(trace.value.bit_length, params.b, params.omega);
    r.formula_msgs = static_cast<std::uint64_t>(params.n_p) * params.n_c;
    r.formula_block_bits =
        static_cast<std::uint64_t>(params.n_c) * (params.b + params.f_p) * (padded / params.b);
    r.formula_hashsig_bits = static_cast<std::uint64_t>(params.n_p) * params.n_c *
                             (crypto.sig_bits + static_cast<std::uint64_t>(params.n_p) * crypto.hash_bits);

    if (r.formula_msgs) r.ratio_msgs = static_cast<double>(r.producer_consumer_messages) / r.formula_msgs;
    std::uint64_t formula_bits = r.formula_block_bits + r.formula_hashsig_bits;
    std::uint64_t measured_pc_bits = r.block_bits + r.pc_hash_bits + r.pc_signature_bits;
    if (formula_bits) r.ratio_bits = static_cast<double>(measured_pc_bits) / formula_bits;
    return r;
}

/// One fault-free run per grid cell. Cells must be structurally valid.
inline std::vector<ComplexityReport> sweep(const std::vector<RunSpec>& cells) {
    std::vector<ComplexityReport> out;
    out.reserve(cells.size());
    for (const auto& cell : cells) {
        RunSpec spec = cell;
        spec.byzantine.clear();
        spec.coalitions.clear();
        KeyRegistry registry = make_registry(spec);
        out.push_back(measure(run_spec(spec, registry), spec.crypto));
    }
    return out;
}

} // namespace nbart
