#include "doctest.h"

#include <map>
#include <random>
#include <vector>

#include "sealpy/runtime/freelist.hpp"

using namespace sealpy::runtime;

TEST_CASE("balloc refuses exponents outside [0, kmax]") {
    freelist_state st;
    CHECK(st.kmax() == 32);
    for (std::int64_t k : {-3LL, -1LL, 33LL, 64LL, 2147483647LL}) {
        const auto before = st.capacity_computations();
        CHECK_THROWS_AS(st.balloc(k), invalid_shift_exponent);
        CHECK(st.capacity_computations() == before);
        CHECK(st.minted() == 0);
        CHECK(st.live_count() == 0);
    }
}

TEST_CASE("balloc(0) gives a one-word block and balloc(kmax) is accepted") {
    freelist_state st;
    auto b = st.balloc(0);
    CHECK(st.info(b).capacity_words == 1);
    CHECK(st.words(b).size() == 1);
    auto top = st.balloc(32);
    CHECK(st.info(top).capacity_words == (std::uint64_t{1} << 32));
}

TEST_CASE("freed block is reused LIFO within its size class") {
    freelist_state st;
    auto b1 = st.balloc(5);
    auto b2 = st.balloc(5);
    st.bfree(b1);
    st.bfree(b2);
    CHECK(st.freelist(5).back() == b2);
    CHECK(st.balloc(5) == b2);
    CHECK(st.balloc(5) == b1);
    // a different class never sees those blocks
    auto other = st.balloc(4);
    CHECK(other != b1);
    CHECK(other != b2);
}

TEST_CASE("bfree error paths") {
    freelist_state st;
    auto b = st.balloc(3);
    st.bfree(b);
    CHECK(st.is_recycled(b));
    CHECK_THROWS_AS(st.bfree(b), double_free);
    CHECK_THROWS_AS(st.bfree(block_id{999}), unknown_block);
    CHECK_THROWS_AS(st.words(b), allocator_error);
}

TEST_CASE("custom kmax") {
    freelist_state st(4);
    CHECK_NOTHROW(st.balloc(4));
    CHECK_THROWS_AS(st.balloc(5), invalid_shift_exponent);
    CHECK_THROWS_AS(freelist_state(-1), std::invalid_argument);
}

// Reference model: one stack per k plus a live set.
TEST_CASE("random alloc/free sequences agree with a stack-per-k model") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 rng(seed);
        freelist_state st(8);
        std::map<int, std::vector<block_id>> model_free;
        std::map<block_id, int> model_live;
        for (int step = 0; step < 4000; ++step) {
            const bool do_alloc = model_live.empty() || rng() % 3 != 0;
            if (do_alloc) {
                const int k = static_cast<int>(rng() % 9);
                auto id = st.balloc(k);
                auto& stack = model_free[k];
                if (!stack.empty()) {
                    CHECK(id == stack.back());
                    stack.pop_back();
                }
                CHECK(st.info(id).k == k);
                CHECK(st.info(id).capacity_words == (std::uint64_t{1} << k));
                model_live[id] = k;
            } else {
                auto it = model_live.begin();
                std::advance(it, static_cast<long>(rng() % model_live.size()));
                st.bfree(it->first);
                model_free[it->second].push_back(it->first);
                model_live.erase(it);
            }
            REQUIRE(st.minted() == st.live_count() + st.recycled_count());
            REQUIRE(st.live_count() == model_live.size());
        }
        for (int k = 0; k <= 8; ++k) {
            for (auto id : st.freelist(k)) {
                CHECK(st.info(id).k == k);
                CHECK_FALSE(st.is_live(id));
            }
        }
    }
}
