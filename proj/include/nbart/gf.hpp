#pragma once

#include <cstdint>
#include <vector>

#include "nbart/common.hpp"

namespace nbart {

using GfElem = std::uint16_t;

/// Field parameters for GF(2^omega). The reduction polynomial is given with its
/// top bit included, e.g. 0x11B for x^8+x^4+x^3+x+1.
struct GfParams {
    unsigned omega = 8;
    std::uint32_t reduction_poly = 0x11B;

    static GfParams for_omega(unsigned omega) {
        switch (omega) {
        case 3: return {3, 0xB};    // x^3+x+1
        case 4: return {4, 0x13};   // x^4+x+1
        case 8: return {8, 0x11B};  // x^8+x^4+x^3+x+1
        default: throw InvalidParams("no built-in reduction polynomial for omega=" + std::to_string(omega));
        }
    }

    void validate() const {
        if (omega < 2 || omega > 8) throw InvalidParams("omega must be in [2,8]");
        GfParams known = for_omega(omega);
        if (reduction_poly != known.reduction_poly)
            throw InvalidParams("reduction polynomial not in the built-in irreducible table for omega=" +
                                std::to_string(omega));
    }

    std::uint32_t order() const { return 1u << omega; }

    friend bool operator==(const GfParams&, const GfParams&) = default;
};

inline GfElem gf_add(GfElem a, GfElem b) { return static_cast<GfElem>(a ^ b); }

inline GfElem gf_mul(GfElem a, GfElem b, const GfParams& gf) {
    std::uint32_t acc = 0;
    std::uint32_t aa = a;
    std::uint32_t bb = b;
    while (bb) {
        if (bb & 1) acc ^= aa;
        bb >>= 1;
        aa <<= 1;
        if (aa & gf.order()) aa ^= gf.reduction_poly;
    }
    return static_cast<GfElem>(acc);
}

inline GfElem gf_pow(GfElem a, std::uint32_t e, const GfParams& gf) {
    GfElem acc = 1;
    GfElem base = a;
    while (e) {
        if (e & 1) acc = gf_mul(acc, base, gf);
        base = gf_mul(base, base, gf);
        e >>= 1;
    }
    return acc;
}

inline GfElem gf_inv(GfElem a, const GfParams& gf) {
    if (a == 0) throw InvalidParams("zero has no multiplicative inverse");
    return gf_pow(a, gf.order() - 2, gf);
}

inline GfElem gf_div(GfElem a, GfElem b, const GfParams& gf) { return gf_mul(a, gf_inv(b, gf), gf); }

} // namespace nbart
