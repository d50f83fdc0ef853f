#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "nbart/protocol.hpp"
#include "nbart/topology.hpp"

namespace nbart {

/// p is certified by c iff c's evidence entry carries a signature by p, over
/// the entry's own hash vector, with the tag matching c's relation to p
/// (BLOCK for conset members, SUMMARY otherwise).
inline bool certified(const Evidence& evidence, std::uint32_t p, std::uint32_t c, const Params& params,
                      const KeyRegistry& registry) {
    if (c >= evidence.size() || !evidence[c]) return false;
    const EvidenceEntry& entry = *evidence[c];
    if (p >= entry.producers.size() || !entry.producers[p]) return false;
    MessageKind tag = in_prodset(p, c, params) ? MessageKind::block : MessageKind::summary;
    return registry.verifysig(producer_id(p), signed_bytes(tag, entry.hashesvec), *entry.producers[p]);
}

struct CertSets {
    std::set<std::uint32_t> p_bar;
    std::set<std::uint32_t> c_bar;

    bool meets_thresholds(const Params& params) const {
        return p_bar.size() >= params.n_p - params.f_p && c_bar.size() >= params.n_c - params.f_c;
    }
};

/// The certified sets: among consumers that reported and consumed, pick the
/// subset (with its induced producer set) forming the best maximal pair.
/// "Best" prefers pairs meeting both size thresholds, then the largest
/// combined size, then the larger consumer set, then the lexicographically
/// smallest consumer subset; this matches the sets the honest algorithm
/// builds and keeps the selection deterministic when reports conflict.
inline CertSets cert_sets(const Evidence& evidence, const std::vector<bool>& consumed, const Params& params,
                          const KeyRegistry& registry) {
    std::vector<std::uint32_t> reporters;
    for (std::uint32_t c = 0; c < params.n_c; ++c)
        if (c < evidence.size() && evidence[c] && c < consumed.size() && consumed[c]) reporters.push_back(c);

    if (reporters.size() > 16) throw EnumerationBudgetExceeded("certified-set search supports at most 16 reporters");

    // certified producers per reporter, as bitmasks
    std::vector<std::uint64_t> cert_mask(reporters.size(), 0);
    for (std::size_t k = 0; k < reporters.size(); ++k)
        for (std::uint32_t p = 0; p < params.n_p; ++p)
            if (certified(evidence, p, reporters[k], params, registry)) cert_mask[k] |= 1ull << p;

    CertSets best;
    bool best_meets = false;
    std::size_t best_sum = 0;
    std::size_t best_c = 0;
    bool have = false;

    std::uint64_t full = params.n_p >= 64 ? ~0ull : (1ull << params.n_p) - 1;
    for (std::uint64_t sub = 0; sub < (1ull << reporters.size()); ++sub) {
        std::uint64_t inter = full;
        std::size_t c_count = 0;
        for (std::size_t k = 0; k < reporters.size(); ++k)
            if (sub & (1ull << k)) {
                inter &= cert_mask[k];
                ++c_count;
            }
        if (c_count == 0) inter = 0;  // an empty consumer set certifies nobody
        std::size_t p_count = static_cast<std::size_t>(__builtin_popcountll(inter));
        bool meets = p_count >= params.n_p - params.f_p && c_count >= params.n_c - params.f_c;
        std::size_t sum = p_count + c_count;

        bool better;
        if (!have) {
            better = true;
        } else if (meets != best_meets) {
            better = meets;
        } else if (sum != best_sum) {
            better = sum > best_sum;
        } else {
            better = c_count > best_c;
        }
        // equal on all keys: keep the earlier (lexicographically smaller) subset
        if (!better) continue;

        have = true;
        best_meets = meets;
        best_sum = sum;
        best_c = c_count;
        best.p_bar.clear();
        best.c_bar.clear();
        for (std::uint32_t p = 0; p < params.n_p; ++p)
            if (inter & (1ull << p)) best.p_bar.insert(p);
        for (std::size_t k = 0; k < reporters.size(); ++k)
            if (sub & (1ull << k)) best.c_bar.insert(reporters[k]);
    }
    return best;
}

/// Both predicates are gated by the global thresholds before membership.
inline bool has_prod(const Evidence& evidence, const std::vector<bool>& consumed, std::uint32_t p,
                     const Params& params, const KeyRegistry& registry) {
    CertSets sets = cert_sets(evidence, consumed, params, registry);
    return sets.meets_thresholds(params) && sets.p_bar.count(p) != 0;
}

inline bool has_ack(const Evidence& evidence, const std::vector<bool>& consumed, std::uint32_t c,
                    const Params& params, const KeyRegistry& registry) {
    CertSets sets = cert_sets(evidence, consumed, params, registry);
    return sets.meets_thresholds(params) && sets.c_bar.count(c) != 0;
}

/// Byzantine assignment by identity set.
struct ByzantineSet {
    std::set<std::uint32_t> producers;
    std::set<std::uint32_t> consumers;

    bool is_byz(Identity id) const {
        if (id.role == Role::producer) return producers.count(id.index) != 0;
        if (id.role == Role::consumer) return consumers.count(id.index) != 0;
        return false;
    }
    friend bool operator==(const ByzantineSet&, const ByzantineSet&) = default;
};

using EvidenceView = Evidence;

/// The analysis-side view of evidence: rows of Byzantine consumers and, in
/// the remaining rows, columns of Byzantine producers are masked to bottom.
inline EvidenceView epsilon_view(const Evidence& evidence, const ByzantineSet& byz) {
    EvidenceView view = evidence;
    for (std::uint32_t c = 0; c < view.size(); ++c) {
        if (byz.consumers.count(c)) {
            view[c].reset();
            continue;
        }
        if (!view[c]) continue;
        for (std::uint32_t p = 0; p < view[c]->producers.size(); ++p)
            if (byz.producers.count(p)) view[c]->producers[p].reset();
    }
    return view;
}

} // namespace nbart
