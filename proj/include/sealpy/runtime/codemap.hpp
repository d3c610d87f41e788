#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sealpy/runtime/skiplist.hpp"

namespace sealpy::runtime {

class overlap_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class invalid_interval : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct codemap_entry {
    std::uint64_t addr = 0;
    std::uint64_t size = 0;
    std::uint64_t payload = 0;

    // Covers [addr, addr + size).
    bool contains(std::uint64_t a) const noexcept { return a >= addr && a - addr < size; }
    friend bool operator==(const codemap_entry&, const codemap_entry&) = default;
};

// Address-range index for generated code, keyed by start address.
class codemap {
  public:
    explicit codemap(std::uint64_t seed = 0x5eed) : index_(seed) {}

    void add(const codemap_entry& entry);

    // Removes the entry found by a predecessor search at addr + size - 1,
    // provided it starts at or after addr. Absence is an ordinary result.
    std::optional<codemap_entry> del(std::uint64_t addr, std::uint64_t size);

    std::optional<codemap_entry> lookup(std::uint64_t addr) const;

    std::size_t size() const noexcept { return index_.size(); }
    std::uint64_t generation() const noexcept { return generation_; }
    std::vector<codemap_entry> entries() const;

  private:
    skiplist<codemap_entry> index_;
    std::uint64_t generation_ = 0;
};

} // namespace sealpy::runtime
