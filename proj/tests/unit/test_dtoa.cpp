#include "doctest.h"

#include <bit>
#include <boost/multiprecision/cpp_int.hpp>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>

#include "sealpy/runtime/dtoa.hpp"

using namespace sealpy::runtime;
using boost::multiprecision::cpp_int;

namespace {

// Independent digit generator: integer part by cpp_int printing, fraction by
// repeatedly multiplying the remainder by ten.
std::string oracle_exact(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    const bool neg = bits >> 63;
    const int biased = static_cast<int>((bits >> 52) & 0x7ff);
    std::uint64_t m = bits & ((std::uint64_t{1} << 52) - 1);
    int e = -1074;
    if (biased != 0) {
        m |= std::uint64_t{1} << 52;
        e = biased - 1075;
    }
    std::string out = neg ? "-" : "";
    cpp_int mant = m;
    if (e >= 0) {
        cpp_int n = mant << e;
        return out + n.str();
    }
    const unsigned shift = static_cast<unsigned>(-e);
    cpp_int int_part = mant >> shift;
    cpp_int rem = mant - (int_part << shift);
    out += int_part.str();
    if (rem == 0) return out;
    out += ".";
    while (rem != 0) {
        rem *= 10;
        cpp_int digit = rem >> shift;
        out += static_cast<char>('0' + digit.convert_to<int>());
        rem -= digit << shift;
    }
    return out;
}

double parse_exact(const std::string& s) {
    double out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    REQUIRE(ec == std::errc{});
    REQUIRE(ptr == s.data() + s.size());
    return out;
}

} // namespace

TEST_CASE("simple values") {
    CHECK(format_double_exact(0.5) == "0.5");
    CHECK(format_double_exact(3.0) == "3");
    CHECK(format_double_exact(-2.5) == "-2.5");
    CHECK(format_double_exact(0.0) == "0");
    CHECK(format_double_exact(-0.0) == "-0");
    CHECK(format_double_exact(1e23) == "99999999999999991611392");
}

TEST_CASE("0.1 expands to its exact 55-digit fraction") {
    const std::string exact = format_double_exact(0.1);
    CHECK(exact == "0.1000000000000000055511151231257827021181583404541015625");
    CHECK(exact.size() == 2 + 55);
    CHECK(exact.rfind("0.1000000000000000055511151231257827", 0) == 0);
    CHECK(exact == oracle_exact(0.1));
}

TEST_CASE("extremes agree with the oracle") {
    for (double v : {std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::min(),
                     std::numeric_limits<double>::max(), -std::numeric_limits<double>::max(),
                     123.456, 1.0 / 3.0, 9007199254740993.0}) {
        const auto s = format_double_exact(v);
        CHECK(s == oracle_exact(v));
        CHECK(parse_exact(s) == v);
    }
    CHECK(format_double_exact(std::numeric_limits<double>::denorm_min()).size() == 2 + 1074);
}

TEST_CASE("non-finite input is refused") {
    CHECK_THROWS_AS(format_double_exact(std::numeric_limits<double>::infinity()), non_finite_input);
    CHECK_THROWS_AS(format_double_exact(-std::numeric_limits<double>::infinity()), non_finite_input);
    CHECK_THROWS_AS(format_double_exact(std::nan("")), non_finite_input);
}

TEST_CASE("scratch comes from the freelist and is returned") {
    freelist_state scratch;
    const auto s1 = format_double_exact(0.1, scratch);
    const int k = scratch_exponent_for(0.1);
    CHECK(scratch.live_count() == 0);
    CHECK(scratch.freelist(k).size() == 1);
    // second conversion of the same class reuses the recycled block
    format_double_exact(0.3, scratch);
    CHECK(scratch.minted() == 1);
    CHECK(s1 == oracle_exact(0.1));

    // smallest sufficient class: a 1-limb value uses k <= 2
    CHECK(scratch_exponent_for(1.0) <= 2);
    CHECK(scratch_exponent_for(std::numeric_limits<double>::denorm_min()) >= 7);
}

TEST_CASE("a kmax too small for the value is reported, not overrun") {
    freelist_state tiny(2);
    CHECK_THROWS_AS(format_double_exact(std::numeric_limits<double>::denorm_min(), tiny),
                    invalid_shift_exponent);
    CHECK(tiny.live_count() == 0);
}

TEST_CASE("random doubles round-trip and match the oracle") {
    std::mt19937_64 rng(2024);
    freelist_state scratch;
    for (int i = 0; i < 3000; ++i) {
        double v;
        do {
            v = std::bit_cast<double>(rng());
        } while (!std::isfinite(v));
        const auto s = format_double_exact(v, scratch);
        REQUIRE(parse_exact(s) == v);
        if (i % 10 == 0) REQUIRE(s == oracle_exact(v));
    }
}
