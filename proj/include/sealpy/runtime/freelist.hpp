#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sealpy::runtime {

class allocator_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Requested size class lies outside [0, kmax]; the allocator refuses.
class invalid_shift_exponent : public allocator_error {
  public:
    explicit invalid_shift_exponent(std::int64_t k);
    std::int64_t exponent;
};

class double_free : public allocator_error {
  public:
    using allocator_error::allocator_error;
};

class unknown_block : public allocator_error {
  public:
    using allocator_error::allocator_error;
};

struct block_id {
    std::uint64_t value = 0;
    friend auto operator<=>(const block_id&, const block_id&) = default;
};

struct block_info {
    int k = 0;
    std::uint64_t capacity_words = 0;
};

// Power-of-two freelist allocator in the style of dtoa's Balloc/Bfree.
//
// Blocks are opaque ids; each id has a fixed size class k and a capacity of
// exactly 2^k words. Freed blocks go onto a per-k LIFO stack and are handed
// out again before any new block is minted. Backing storage is materialized
// lazily, on the first call to words().
class freelist_state {
  public:
    static constexpr int default_kmax = 32;

    explicit freelist_state(int kmax = default_kmax);

    block_id balloc(std::int64_t k);
    void bfree(block_id block);

    int kmax() const noexcept { return kmax_; }

    bool is_live(block_id block) const;
    bool is_recycled(block_id block) const;
    const block_info& info(block_id block) const;

    // Scratch words of a live block; size() == capacity_words.
    std::span<std::uint32_t> words(block_id block);

    std::uint64_t minted() const noexcept { return next_block_id_ - 1; }
    std::size_t live_count() const noexcept { return live_.size(); }
    std::size_t recycled_count() const;
    const std::vector<block_id>& freelist(int k) const;

    // Number of times a capacity 2^k has been computed. Lets tests prove the
    // rejection path never evaluates the shift.
    std::uint64_t capacity_computations() const noexcept { return capacity_computations_; }

  private:
    struct block_record {
        block_info info;
        bool live = true;
        std::vector<std::uint32_t> storage;
    };

    block_record& record(block_id block);
    const block_record& record(block_id block) const;

    int kmax_;
    std::vector<std::vector<block_id>> freelists_;
    std::map<block_id, block_record> blocks_;
    std::map<block_id, block_info> live_;
    std::uint64_t next_block_id_ = 1;
    std::uint64_t capacity_computations_ = 0;
};

} // namespace sealpy::runtime
