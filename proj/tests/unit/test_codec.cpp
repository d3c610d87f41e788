#include "doctest.h"

#include <random>

#include "sealpy/runtime/codec.hpp"

using namespace sealpy::runtime;

namespace {
std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }
} // namespace

TEST_CASE("empty input is a bare header") {
    auto c = codec_compress(std::string{});
    CHECK(c.size() == codec::header_size);
    CHECK(c.substr(0, 4) == "MZL1");
    CHECK(codec_decompress(c).empty());
}

TEST_CASE("header carries the little-endian original length") {
    auto c = codec_compress(std::string(300, 'x'));
    CHECK(static_cast<unsigned char>(c[4]) == 0x2c);
    CHECK(static_cast<unsigned char>(c[5]) == 0x01);
    for (int i = 6; i < 12; ++i) CHECK(c[static_cast<std::size_t>(i)] == 0);
}

TEST_CASE("repetitive input shrinks") {
    const std::string input(400, 'a');
    const auto c = codec_compress(input);
    CHECK(c.size() < 400);
    CHECK(codec_decompress(c) == input);
    // literal "a" then one overlapping back-reference of length 399
    CHECK(c.size() == codec::header_size + 3 + 4);
}

TEST_CASE("hand-built token streams decode") {
    std::string s = "MZL1";
    s += std::string("\x06\0\0\0\0\0\0\0", 8);
    s += std::string("\x00\x02" "ab", 4);
    s += std::string("\x01\x02\x04", 3);
    CHECK(codec_decompress(s) == "ababab");
}

TEST_CASE("malformed streams raise corrupt_stream") {
    auto good = codec_compress(std::string("hello hello hello hello"));
    CHECK_THROWS_AS(codec_decompress(std::string("MZL")), corrupt_stream);
    CHECK_THROWS_AS(codec_decompress(std::string("XXXX") + good.substr(4)), corrupt_stream);
    CHECK_THROWS_AS(codec_decompress(good.substr(0, good.size() - 1)), corrupt_stream);
    auto extra = good + std::string(1, '\x00');
    CHECK_THROWS_AS(codec_decompress(extra), corrupt_stream);

    std::string header = std::string("MZL1") + std::string("\x04\0\0\0\0\0\0\0", 8);
    CHECK_THROWS_AS(codec_decompress(header + std::string("\x01\x01\x04", 3)), corrupt_stream); // dist > output
    CHECK_THROWS_AS(codec_decompress(header + std::string("\x07", 1)), corrupt_stream);         // unknown tag
    CHECK_THROWS_AS(codec_decompress(header + std::string("\x00\x00", 2)), corrupt_stream);     // empty run
    CHECK_THROWS_AS(codec_decompress(header + std::string("\x00\x05" "abcde", 7)), corrupt_stream);
    CHECK_THROWS_AS(codec_decompress(header + std::string("\x00\xff\xff\xff\xff\xff\xff\xff\xff\xff\xff\x01", 12)),
                    corrupt_stream);

    std::string huge = std::string("MZL1") + std::string("\xff\xff\xff\xff\xff\xff\xff\xff", 8);
    CHECK_THROWS_AS(codec_decompress(huge), corrupt_stream);
}

TEST_CASE("random inputs round-trip") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = rng() % 70000;
        std::vector<std::uint8_t> data(n);
        const unsigned alphabet = 1 + static_cast<unsigned>(rng() % 256);
        for (auto& b : data) b = static_cast<std::uint8_t>(rng() % alphabet);
        const auto c = codec_compress(data);
        REQUIRE(codec_decompress(c) == data);
    }
    CHECK(codec_decompress(codec_compress(bytes_of("abc"))) == bytes_of("abc"));
}

TEST_CASE("decompress is total on mutated and random bytes") {
    std::mt19937_64 rng(12);
    const auto base = codec_compress(std::string(2000, 'q') + "some text some text some text");
    for (int i = 0; i < 5000; ++i) {
        auto s = base;
        const int flips = 1 + static_cast<int>(rng() % 4);
        for (int f = 0; f < flips; ++f) s[rng() % s.size()] = static_cast<char>(rng());
        try {
            (void)codec_decompress(s);
        } catch (const corrupt_stream&) {
        }
        std::string noise(rng() % 64, '\0');
        for (auto& c : noise) c = static_cast<char>(rng());
        try {
            (void)codec_decompress("MZL1" + noise);
        } catch (const corrupt_stream&) {
        }
    }
    CHECK(true);
}
