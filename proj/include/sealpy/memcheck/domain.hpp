#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>

namespace sealpy::memcheck {

// Signed 64-bit interval; INT64_MIN and INT64_MAX stand for -inf and +inf.
class interval {
  public:
    static constexpr std::int64_t neg_inf = std::numeric_limits<std::int64_t>::min();
    static constexpr std::int64_t pos_inf = std::numeric_limits<std::int64_t>::max();

    interval() = default; // bottom
    interval(std::int64_t lo, std::int64_t hi);

    static interval top() { return {neg_inf, pos_inf}; }
    static interval bottom() { return {}; }
    static interval constant(std::int64_t v) { return {v, v}; }

    bool is_bottom() const noexcept { return bottom_; }
    bool is_top() const noexcept { return !bottom_ && lo_ == neg_inf && hi_ == pos_inf; }
    std::int64_t lo() const noexcept { return lo_; }
    std::int64_t hi() const noexcept { return hi_; }
    bool is_singleton() const noexcept { return !bottom_ && lo_ == hi_ && lo_ != neg_inf && lo_ != pos_inf; }
    bool contains(std::int64_t v) const noexcept { return !bottom_ && lo_ <= v && v <= hi_; }
    bool subset_of(const interval& other) const noexcept;

    interval join(const interval& other) const;
    interval meet(const interval& other) const;
    interval widen(const interval& next) const;

    interval operator+(const interval& o) const;
    interval operator-(const interval& o) const;
    interval operator*(const interval& o) const;
    // this << amount, assuming amount lies within [0, 63]; otherwise top.
    interval shl(const interval& amount) const;

    friend bool operator==(const interval&, const interval&) = default;
    std::string str() const;

  private:
    bool bottom_ = true;
    std::int64_t lo_ = 0;
    std::int64_t hi_ = 0;
};

// Address abstraction: which of {null, freed, valid} a pointer may be, and
// the allocation sites (instruction indices) it may refer to. `external`
// marks objects of unknown provenance: parameters and call results.
struct pointer_value {
    bool may_null = false;
    bool may_freed = false;
    bool may_valid = false;
    bool external = false;
    std::set<int> sites;

    static pointer_value null() { return {true, false, false, false, {}}; }
    static pointer_value valid(int site) { return {false, false, true, false, {site}}; }
    static pointer_value unknown() { return {true, false, true, true, {}}; }

    bool is_bottom() const noexcept { return !may_null && !may_freed && !may_valid; }
    // The one site this pointer refers to, when it refers to exactly one.
    std::optional<int> single_site() const;
    pointer_value join(const pointer_value& other) const;

    // Names used in reports: Null, MaybeNull, NonNull, Freed, Top.
    std::string str() const;
    friend bool operator==(const pointer_value&, const pointer_value&) = default;
};

struct abstract_value {
    interval num;
    pointer_value ptr;

    abstract_value join(const abstract_value& o) const { return {num.join(o.num), ptr.join(o.ptr)}; }
    friend bool operator==(const abstract_value&, const abstract_value&) = default;
};

} // namespace sealpy::memcheck
