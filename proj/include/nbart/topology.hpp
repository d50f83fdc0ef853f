#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nbart/common.hpp"
#include "nbart/gf.hpp"

namespace nbart {

/// Instance shape. Structural validity (validate) is required everywhere;
/// the correctness and game regimes are assumptions that boundary scenarios
/// may deliberately violate, so they are separate predicates.
struct Params {
    std::uint32_t n_p = 0;   // producer count
    std::uint32_t n_c = 0;   // consumer count
    std::uint32_t f_p = 0;   // Byzantine-producer bound
    std::uint32_t f_c = 0;   // Byzantine-consumer bound
    std::uint32_t b = 1;     // reconstruction threshold
    unsigned omega = 8;      // field word size
    std::uint32_t nt_p = 1;  // max producers per coalition
    std::uint32_t nt_c = 1;  // max consumers per coalition

    void validate() const {
        if (n_p == 0) throw InvalidParams("N_P must be positive");
        if (n_c == 0) throw InvalidParams("N_C must be positive");
        if (b < 1) throw InvalidParams("B must be at least 1");
        if (f_p >= n_p) throw InvalidParams("F_P must be smaller than N_P");
        if (b + f_p > n_p) throw InvalidParams("B must satisfy B <= N_P - F_P");
        if ((1u << omega) <= n_p) throw InvalidParams("2^omega must exceed N_P");
        GfParams::for_omega(omega);  // throws for unsupported omega
    }

    bool meets_correctness_regime() const { return n_p >= 2 * f_p + 1 && n_c >= f_c + 1; }

    bool meets_game_regime() const {
        std::uint32_t m = f_p > nt_p ? f_p : nt_p;
        return n_p >= m + f_p + 1 && n_c >= f_c + nt_c + 1;
    }

    GfParams gf() const { return GfParams::for_omega(omega); }

    friend bool operator==(const Params&, const Params&) = default;
};

/// Producers expected to send their block to consumer j: the window of
/// B+F_P indices starting at j*(B+F_P) mod N_P.
inline std::vector<std::uint32_t> prodset(std::uint32_t j, const Params& params) {
    params.validate();
    if (j >= params.n_c) throw InvalidParams("consumer index out of range");
    std::uint32_t width = params.b + params.f_p;
    std::uint32_t k = static_cast<std::uint32_t>((static_cast<std::uint64_t>(j) * width) % params.n_p);
    std::vector<std::uint32_t> out;
    out.reserve(width);
    for (std::uint32_t r = 0; r < width; ++r) out.push_back((k + r) % params.n_p);
    return out;
}

inline bool in_prodset(std::uint32_t producer, std::uint32_t j, const Params& params) {
    std::uint32_t width = params.b + params.f_p;
    std::uint32_t k = static_cast<std::uint32_t>((static_cast<std::uint64_t>(j) * width) % params.n_p);
    std::uint32_t off = (producer + params.n_p - k) % params.n_p;
    return off < width;
}

/// Exact inverse image of prodset, ascending.
inline std::vector<std::uint32_t> conset(std::uint32_t i, const Params& params) {
    params.validate();
    if (i >= params.n_p) throw InvalidParams("producer index out of range");
    std::vector<std::uint32_t> out;
    for (std::uint32_t j = 0; j < params.n_c; ++j)
        if (in_prodset(i, j, params)) out.push_back(j);
    return out;
}

} // namespace nbart
