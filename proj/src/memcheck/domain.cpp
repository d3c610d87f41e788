#include "sealpy/memcheck/domain.hpp"

#include <algorithm>
#include <array>

namespace sealpy::memcheck {
namespace {

using i128 = __int128;

bool is_inf(std::int64_t v) { return v == interval::neg_inf || v == interval::pos_inf; }

// True when v is representable as a finite bound.
bool fits(i128 v) { return v > interval::neg_inf && v < interval::pos_inf; }

// Product of two bounds where either may be infinite. Sets `overflow` when
// two finite values multiply past the finite range.
std::int64_t mul_bound(std::int64_t a, std::int64_t b, bool& overflow) {
    if (a == 0 || b == 0) return 0;
    if (is_inf(a) || is_inf(b)) {
        const bool negative = (a < 0) != (b < 0);
        return negative ? interval::neg_inf : interval::pos_inf;
    }
    const i128 p = static_cast<i128>(a) * b;
    if (!fits(p)) {
        overflow = true;
        return 0;
    }
    return static_cast<std::int64_t>(p);
}

std::int64_t add_bound(std::int64_t a, std::int64_t b, bool& overflow) {
    if (is_inf(a)) return a;
    if (is_inf(b)) return b;
    const i128 s = static_cast<i128>(a) + b;
    if (!fits(s)) {
        overflow = true;
        return 0;
    }
    return static_cast<std::int64_t>(s);
}

std::int64_t negate_bound(std::int64_t a) {
    if (a == interval::neg_inf) return interval::pos_inf;
    if (a == interval::pos_inf) return interval::neg_inf;
    return -a;
}

} // namespace

interval::interval(std::int64_t lo, std::int64_t hi) : bottom_(lo > hi), lo_(lo), hi_(hi) {
    if (bottom_) lo_ = hi_ = 0;
}

bool interval::subset_of(const interval& other) const noexcept {
    if (bottom_) return true;
    if (other.bottom_) return false;
    return other.lo_ <= lo_ && hi_ <= other.hi_;
}

interval interval::join(const interval& o) const {
    if (bottom_) return o;
    if (o.bottom_) return *this;
    return {std::min(lo_, o.lo_), std::max(hi_, o.hi_)};
}

interval interval::meet(const interval& o) const {
    if (bottom_ || o.bottom_) return bottom();
    return {std::max(lo_, o.lo_), std::min(hi_, o.hi_)};
}

interval interval::widen(const interval& next) const {
    if (bottom_) return next;
    if (next.bottom_) return *this;
    return {next.lo_ < lo_ ? neg_inf : lo_, next.hi_ > hi_ ? pos_inf : hi_};
}

interval interval::operator+(const interval& o) const {
    if (bottom_ || o.bottom_) return bottom();
    bool overflow = false;
    const auto lo = add_bound(lo_, o.lo_, overflow);
    const auto hi = add_bound(hi_, o.hi_, overflow);
    // Concrete arithmetic wraps, so any overflow can land anywhere.
    if (overflow) return top();
    return {lo, hi};
}

interval interval::operator-(const interval& o) const {
    if (bottom_ || o.bottom_) return bottom();
    return *this + interval(negate_bound(o.hi_), negate_bound(o.lo_));
}

interval interval::operator*(const interval& o) const {
    if (bottom_ || o.bottom_) return bottom();
    bool overflow = false;
    const std::array<std::int64_t, 4> p = {mul_bound(lo_, o.lo_, overflow), mul_bound(lo_, o.hi_, overflow),
                                           mul_bound(hi_, o.lo_, overflow), mul_bound(hi_, o.hi_, overflow)};
    if (overflow) return top();
    return {*std::min_element(p.begin(), p.end()), *std::max_element(p.begin(), p.end())};
}

interval interval::shl(const interval& amount) const {
    if (bottom_ || amount.bottom_) return bottom();
    if (amount.lo_ < 0 || amount.hi_ > 62) return top();
    const interval factor(std::int64_t{1} << amount.lo_, std::int64_t{1} << amount.hi_);
    return *this * factor;
}

std::string interval::str() const {
    if (bottom_) return "_|_";
    auto b = [](std::int64_t v) {
        if (v == neg_inf) return std::string("-inf");
        if (v == pos_inf) return std::string("+inf");
        return std::to_string(v);
    };
    return "[" + b(lo_) + ", " + b(hi_) + "]";
}

std::optional<int> pointer_value::single_site() const {
    if (external || sites.size() != 1) return std::nullopt;
    return *sites.begin();
}

pointer_value pointer_value::join(const pointer_value& o) const {
    pointer_value out{may_null || o.may_null, may_freed || o.may_freed, may_valid || o.may_valid,
                      external || o.external, sites};
    out.sites.insert(o.sites.begin(), o.sites.end());
    return out;
}

std::string pointer_value::str() const {
    if (is_bottom()) return "Bottom";
    if (may_null && !may_valid && !may_freed) return "Null";
    if (may_freed && !may_null && !may_valid) return "Freed";
    if (may_valid && !may_freed) {
        if (may_null) return "MaybeNull";
        return "NonNull";
    }
    return "Top";
}

} // namespace sealpy::memcheck
