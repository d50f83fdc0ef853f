#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nbart {

using Bytes = std::vector<std::uint8_t>;

// Thrown when instance parameters violate a structural invariant.
struct InvalidParams : std::runtime_error {
    explicit InvalidParams(const std::string& what) : std::runtime_error(what) {}
};

struct DoubleProduce : std::runtime_error {
    DoubleProduce() : std::runtime_error("produce invoked twice on the same producer") {}
};

struct UnknownIdentity : std::runtime_error {
    explicit UnknownIdentity(const std::string& what) : std::runtime_error(what) {}
};

struct ScenarioMismatch : std::runtime_error {
    explicit ScenarioMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct NonQuiescent : std::runtime_error {
    explicit NonQuiescent(const std::string& what) : std::runtime_error(what) {}
};

struct EnumerationBudgetExceeded : std::runtime_error {
    explicit EnumerationBudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

enum class Role : std::uint8_t { producer = 0, consumer = 1, observer = 2 };

// One protocol participant. The trusted observer is the unique {observer, 0}.
struct Identity {
    Role role = Role::producer;
    std::uint32_t index = 0;

    friend bool operator==(const Identity&, const Identity&) = default;
    friend auto operator<=>(const Identity&, const Identity&) = default;
};

inline Identity producer_id(std::uint32_t i) { return {Role::producer, i}; }
inline Identity consumer_id(std::uint32_t i) { return {Role::consumer, i}; }
inline Identity observer_id() { return {Role::observer, 0}; }

inline std::string to_string(const Identity& id) {
    switch (id.role) {
    case Role::producer: return "p" + std::to_string(id.index);
    case Role::consumer: return "c" + std::to_string(id.index);
    case Role::observer: return "TO";
    }
    return "?";
}

// --- byte packing helpers (canonical little-endian framing) ---

inline void put_u8(Bytes& out, std::uint8_t v) { out.push_back(v); }

inline void put_u32(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline void put_u64(Bytes& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

inline void put_bytes(Bytes& out, const Bytes& b) {
    put_u32(out, static_cast<std::uint32_t>(b.size()));
    out.insert(out.end(), b.begin(), b.end());
}

inline void put_identity(Bytes& out, const Identity& id) {
    put_u8(out, static_cast<std::uint8_t>(id.role));
    put_u32(out, id.index);
}

struct ByteReader {
    const Bytes& buf;
    std::size_t pos = 0;

    bool fail = false;

    std::uint8_t u8() {
        if (pos + 1 > buf.size()) { fail = true; return 0; }
        return buf[pos++];
    }
    std::uint32_t u32() {
        if (pos + 4 > buf.size()) { fail = true; return 0; }
        std::uint32_t v = buf[pos] | (buf[pos + 1] << 8) | (buf[pos + 2] << 16) |
                          (static_cast<std::uint32_t>(buf[pos + 3]) << 24);
        pos += 4;
        return v;
    }
    Bytes bytes() {
        std::uint32_t n = u32();
        if (fail || pos + n > buf.size()) { fail = true; return {}; }
        Bytes b(buf.begin() + static_cast<long>(pos), buf.begin() + static_cast<long>(pos + n));
        pos += n;
        return b;
    }
    Bytes raw(std::size_t n) {
        if (pos + n > buf.size()) { fail = true; return {}; }
        Bytes b(buf.begin() + static_cast<long>(pos), buf.begin() + static_cast<long>(pos + n));
        pos += n;
        return b;
    }
    Identity identity() {
        auto r = u8();
        auto i = u32();
        if (r > 2) fail = true;
        return {static_cast<Role>(r), i};
    }
    bool done() const { return !fail && pos == buf.size(); }
};

inline std::string to_hex(const Bytes& b, std::size_t max_bytes = SIZE_MAX) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    std::size_t n = b.size() < max_bytes ? b.size() : max_bytes;
    s.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        s.push_back(digits[b[i] >> 4]);
        s.push_back(digits[b[i] & 0xF]);
    }
    return s;
}

// Deterministic 64-bit mixer used for seeded payload/test-data generation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline Bytes random_bytes(std::uint64_t seed, std::size_t n) {
    Bytes out;
    out.reserve(n);
    std::uint64_t s = seed;
    while (out.size() < n) {
        std::uint64_t w = splitmix64(s);
        for (int i = 0; i < 8 && out.size() < n; ++i) out.push_back(static_cast<std::uint8_t>(w >> (8 * i)));
    }
    return out;
}

} // namespace nbart
