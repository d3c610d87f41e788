#include "sealpy/runtime/dtoa.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>

namespace sealpy::runtime {
namespace {

constexpr std::uint32_t limb_base = 1'000'000'000;

struct decomposed {
    bool negative;
    std::uint64_t mantissa;
    int exponent; // value = mantissa * 2^exponent
};

decomposed decompose(double value) {
    const auto bits = std::bit_cast<std::uint64_t>(value);
    const bool negative = (bits >> 63) != 0;
    const int biased = static_cast<int>((bits >> 52) & 0x7ff);
    std::uint64_t mantissa = bits & ((std::uint64_t{1} << 52) - 1);
    int exponent;
    if (biased == 0) {
        exponent = -1074;
    } else {
        mantissa |= std::uint64_t{1} << 52;
        exponent = biased - 1075;
    }
    while (mantissa != 0 && (mantissa & 1) == 0 && exponent < 0) {
        mantissa >>= 1;
        ++exponent;
    }
    return {negative, mantissa, exponent};
}

std::size_t limbs_needed(const decomposed& d) {
    // digits(m * 5^n) <= 16 + 0.7 n ; digits(m * 2^n) <= 16 + 0.31 n
    const double per_step = d.exponent < 0 ? 0.69897000433601886 : 0.30102999566398120;
    const double digits = 17.0 + per_step * std::abs(d.exponent);
    return static_cast<std::size_t>(digits / 9.0) + 2;
}

int exponent_for_limbs(std::size_t limbs) {
    int k = 0;
    while ((std::size_t{1} << k) < limbs) ++k;
    return k;
}

// Little-endian base-1e9 number living in a freelist block.
class limb_number {
  public:
    limb_number(std::span<std::uint32_t> words, std::uint64_t initial) : words_(words) {
        while (initial != 0) {
            push(static_cast<std::uint32_t>(initial % limb_base));
            initial /= limb_base;
        }
    }

    void multiply(std::uint32_t factor) {
        std::uint64_t carry = 0;
        for (std::size_t i = 0; i < used_; ++i) {
            const std::uint64_t cur = std::uint64_t{words_[i]} * factor + carry;
            words_[i] = static_cast<std::uint32_t>(cur % limb_base);
            carry = cur / limb_base;
        }
        while (carry != 0) {
            push(static_cast<std::uint32_t>(carry % limb_base));
            carry /= limb_base;
        }
    }

    std::string to_decimal() const {
        if (used_ == 0) return "0";
        char buf[16];
        std::snprintf(buf, sizeof buf, "%u", words_[used_ - 1]);
        std::string out = buf;
        for (std::size_t i = used_ - 1; i-- > 0;) {
            std::snprintf(buf, sizeof buf, "%09u", words_[i]);
            out += buf;
        }
        return out;
    }

  private:
    void push(std::uint32_t limb) {
        if (used_ >= words_.size()) {
            throw allocator_error("dtoa scratch block exhausted");
        }
        words_[used_++] = limb;
    }

    std::span<std::uint32_t> words_;
    std::size_t used_ = 0;
};

} // namespace

int scratch_exponent_for(double value) {
    if (!std::isfinite(value)) {
        throw non_finite_input("format_double_exact requires a finite value");
    }
    return exponent_for_limbs(limbs_needed(decompose(value)));
}

std::string format_double_exact(double value, freelist_state& scratch) {
    if (!std::isfinite(value)) {
        throw non_finite_input("format_double_exact requires a finite value");
    }
    const decomposed d = decompose(value);
    const std::string sign = d.negative ? "-" : "";
    if (d.mantissa == 0) {
        return sign + "0";
    }

    const block_id block = scratch.balloc(exponent_for_limbs(limbs_needed(d)));
    std::string digits;
    try {
        limb_number n(scratch.words(block), d.mantissa);
        // Powers that keep limb * factor + carry below 2^64.
        constexpr std::uint32_t five_13 = 1'220'703'125;
        constexpr std::uint32_t two_29 = 1u << 29;
        if (d.exponent < 0) {
            int steps = -d.exponent;
            for (; steps >= 13; steps -= 13) n.multiply(five_13);
            std::uint32_t rest = 1;
            while (steps-- > 0) rest *= 5;
            n.multiply(rest);
        } else {
            int steps = d.exponent;
            for (; steps >= 29; steps -= 29) n.multiply(two_29);
            n.multiply(std::uint32_t{1} << steps);
        }
        digits = n.to_decimal();
    } catch (...) {
        scratch.bfree(block);
        throw;
    }
    scratch.bfree(block);

    if (d.exponent >= 0) {
        return sign + digits;
    }
    // value = digits * 10^exponent, i.e. `frac` digits after the point.
    const std::size_t frac = static_cast<std::size_t>(-d.exponent);
    std::string int_part;
    std::string frac_part;
    if (digits.size() > frac) {
        int_part = digits.substr(0, digits.size() - frac);
        frac_part = digits.substr(digits.size() - frac);
    } else {
        int_part = "0";
        frac_part = std::string(frac - digits.size(), '0') + digits;
    }
    while (!frac_part.empty() && frac_part.back() == '0') frac_part.pop_back();
    if (frac_part.empty()) return sign + int_part;
    return sign + int_part + "." + frac_part;
}

std::string format_double_exact(double value) {
    freelist_state scratch;
    return format_double_exact(value, scratch);
}

} // namespace sealpy::runtime
