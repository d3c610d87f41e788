#include "sealpy/runtime/freelist.hpp"

#include <numeric>

namespace sealpy::runtime {

invalid_shift_exponent::invalid_shift_exponent(std::int64_t k)
    : allocator_error("invalid shift exponent k=" + std::to_string(k)), exponent(k) {}

freelist_state::freelist_state(int kmax) : kmax_(kmax) {
    if (kmax < 0 || kmax > 62) {
        throw std::invalid_argument("kmax must lie in [0, 62]");
    }
    freelists_.resize(static_cast<std::size_t>(kmax) + 1);
}

block_id freelist_state::balloc(std::int64_t k) {
    // Guard first: nothing below may run for an out-of-range k.
    if (k < 0 || k > kmax_) {
        throw invalid_shift_exponent(k);
    }
    auto& stack = freelists_[static_cast<std::size_t>(k)];
    if (!stack.empty()) {
        const block_id reused = stack.back();
        stack.pop_back();
        auto& rec = record(reused);
        rec.live = true;
        live_.emplace(reused, rec.info);
        return reused;
    }
    ++capacity_computations_;
    const std::uint64_t capacity = std::uint64_t{1} << k;
    const block_id id{next_block_id_++};
    block_record rec;
    rec.info = block_info{static_cast<int>(k), capacity};
    blocks_.emplace(id, std::move(rec));
    live_.emplace(id, block_info{static_cast<int>(k), capacity});
    return id;
}

void freelist_state::bfree(block_id block) {
    auto it = blocks_.find(block);
    if (it == blocks_.end()) {
        throw unknown_block("block " + std::to_string(block.value) + " was never allocated");
    }
    if (!it->second.live) {
        throw double_free("block " + std::to_string(block.value) + " is already free");
    }
    it->second.live = false;
    live_.erase(block);
    freelists_[static_cast<std::size_t>(it->second.info.k)].push_back(block);
}

bool freelist_state::is_live(block_id block) const { return live_.contains(block); }

bool freelist_state::is_recycled(block_id block) const {
    auto it = blocks_.find(block);
    return it != blocks_.end() && !it->second.live;
}

const block_info& freelist_state::info(block_id block) const { return record(block).info; }

std::span<std::uint32_t> freelist_state::words(block_id block) {
    auto& rec = record(block);
    if (!rec.live) {
        throw allocator_error("access to freed block " + std::to_string(block.value));
    }
    if (rec.storage.size() != rec.info.capacity_words) {
        rec.storage.assign(rec.info.capacity_words, 0);
    }
    return rec.storage;
}

std::size_t freelist_state::recycled_count() const {
    return std::accumulate(freelists_.begin(), freelists_.end(), std::size_t{0},
                           [](std::size_t n, const auto& s) { return n + s.size(); });
}

const std::vector<block_id>& freelist_state::freelist(int k) const {
    if (k < 0 || k > kmax_) {
        throw invalid_shift_exponent(k);
    }
    return freelists_[static_cast<std::size_t>(k)];
}

freelist_state::block_record& freelist_state::record(block_id block) {
    auto it = blocks_.find(block);
    if (it == blocks_.end()) {
        throw unknown_block("block " + std::to_string(block.value) + " was never allocated");
    }
    return it->second;
}

const freelist_state::block_record& freelist_state::record(block_id block) const {
    auto it = blocks_.find(block);
    if (it == blocks_.end()) {
        throw unknown_block("block " + std::to_string(block.value) + " was never allocated");
    }
    return it->second;
}

} // namespace sealpy::runtime
