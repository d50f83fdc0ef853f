#include "doctest.h"

#include <algorithm>
#include <set>

#include "nbart/topology.hpp"

using namespace nbart;

namespace {

Params desk(std::uint32_t n_p, std::uint32_t n_c, std::uint32_t f_p, std::uint32_t b) {
    Params p;
    p.n_p = n_p;
    p.n_c = n_c;
    p.f_p = f_p;
    p.f_c = 0;
    p.b = b;
    p.omega = 8;
    return p;
}

void subsets_of_size(std::uint32_t n, std::uint32_t k, std::vector<std::vector<std::uint32_t>>& out) {
    std::vector<std::uint32_t> cur;
    auto rec = [&](auto&& self, std::uint32_t start) -> void {
        if (cur.size() == k) {
            out.push_back(cur);
            return;
        }
        for (std::uint32_t i = start; i < n; ++i) {
            cur.push_back(i);
            self(self, i + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
}

} // namespace

TEST_CASE("prodset windows match the mapping formula") {
    Params p = desk(5, 3, 1, 2);
    CHECK(prodset(0, p) == std::vector<std::uint32_t>{0, 1, 2});
    CHECK(prodset(1, p) == std::vector<std::uint32_t>{3, 4, 0});
    CHECK(prodset(2, p) == std::vector<std::uint32_t>{1, 2, 3});
    CHECK_THROWS_AS(prodset(3, p), InvalidParams);
}

TEST_CASE("conset inverts prodset") {
    Params p = desk(5, 3, 1, 2);
    CHECK(conset(0, p) == std::vector<std::uint32_t>{0, 1});
    CHECK(conset(2, p) == std::vector<std::uint32_t>{0, 2});

    // exhaustive duality across a grid of shapes
    for (std::uint32_t n_p : {3u, 5u, 7u, 8u}) {
        for (std::uint32_t n_c : {1u, 2u, 5u, 9u}) {
            for (std::uint32_t f_p = 0; 2 * f_p + 1 <= n_p; ++f_p) {
                for (std::uint32_t b = 1; b + f_p <= n_p; ++b) {
                    Params q = desk(n_p, n_c, f_p, b);
                    for (std::uint32_t i = 0; i < n_p; ++i) {
                        auto cs = conset(i, q);
                        for (std::uint32_t j = 0; j < n_c; ++j) {
                            auto ps = prodset(j, q);
                            bool in_ps = std::find(ps.begin(), ps.end(), i) != ps.end();
                            bool in_cs = std::find(cs.begin(), cs.end(), j) != cs.end();
                            REQUIRE(in_ps == in_cs);
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("prodset cardinality is exactly B+F_P and load is balanced") {
    for (std::uint32_t n_p : {3u, 5u, 7u}) {
        for (std::uint32_t n_c : {2u, 4u, 8u}) {
            for (std::uint32_t f_p = 0; 2 * f_p + 1 <= n_p; ++f_p) {
                for (std::uint32_t b = 1; b + f_p <= n_p; ++b) {
                    Params q = desk(n_p, n_c, f_p, b);
                    std::vector<std::size_t> counts;
                    for (std::uint32_t j = 0; j < n_c; ++j) {
                        auto ps = prodset(j, q);
                        REQUIRE(ps.size() == b + f_p);
                        REQUIRE(std::set<std::uint32_t>(ps.begin(), ps.end()).size() == ps.size());
                    }
                    for (std::uint32_t i = 0; i < n_p; ++i) counts.push_back(conset(i, q).size());
                    auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
                    REQUIRE(*mx - *mn <= 1);
                }
            }
        }
    }
}

TEST_CASE("every consumer keeps B honest suppliers under any Byzantine set") {
    Params p = desk(5, 3, 1, 2);
    std::vector<std::vector<std::uint32_t>> byz_sets;
    subsets_of_size(p.n_p, p.f_p, byz_sets);
    for (const auto& byz : byz_sets) {
        for (std::uint32_t j = 0; j < p.n_c; ++j) {
            auto ps = prodset(j, p);
            std::size_t honest = 0;
            for (auto i : ps)
                if (std::find(byz.begin(), byz.end(), i) == byz.end()) ++honest;
            REQUIRE(honest >= p.b);
        }
    }
}

TEST_CASE("params validation names the regimes") {
    Params p = desk(5, 3, 2, 3);
    CHECK_NOTHROW(p.validate());
    CHECK(p.meets_correctness_regime());

    Params boundary = desk(2, 1, 1, 1);
    CHECK_NOTHROW(boundary.validate());  // structurally fine
    CHECK_FALSE(boundary.meets_correctness_regime());

    Params bad_b = desk(5, 3, 2, 4);
    CHECK_THROWS_AS(bad_b.validate(), InvalidParams);

    Params small_field = desk(5, 3, 1, 2);
    small_field.omega = 2;  // 2^2 = 4 <= 5
    CHECK_THROWS_AS(small_field.validate(), InvalidParams);

    Params game = desk(5, 4, 1, 2);
    game.nt_p = 2;
    game.nt_c = 2;
    game.f_c = 1;
    CHECK(game.meets_game_regime());
    game.nt_c = 3;
    CHECK_FALSE(game.meets_game_regime());
}
