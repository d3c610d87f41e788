#include "sealpy/runtime/codemap.hpp"

#include <limits>
#include <string>

namespace sealpy::runtime {

void codemap::add(const codemap_entry& entry) {
    if (entry.size == 0) {
        throw invalid_interval("codemap entry must have positive size");
    }
    if (entry.addr > std::numeric_limits<std::uint64_t>::max() - entry.size) {
        throw invalid_interval("codemap entry wraps the address space");
    }
    const std::uint64_t last = entry.addr + entry.size - 1;
    // Entries are disjoint, so only the nearest start at or below `last` can intersect.
    if (auto prev = index_.search(last); prev && prev->value.addr + prev->value.size > entry.addr) {
        throw overlap_error("interval [" + std::to_string(entry.addr) + ", " +
                            std::to_string(entry.addr + entry.size) + ") overlaps entry at " +
                            std::to_string(prev->key));
    }
    index_.insert(entry.addr, entry);
    ++generation_;
}

std::optional<codemap_entry> codemap::del(std::uint64_t addr, std::uint64_t size) {
    if (size == 0) {
        return std::nullopt;
    }
    // May wrap for addr near the top; a wrapped key is always below addr and
    // the start-address check rejects whatever it finds.
    const std::uint64_t search_key = addr + size - 1;
    auto node = index_.search(search_key);
    if (!node || node->key < addr) {
        return std::nullopt;
    }
    codemap_entry removed = index_.remove(node->key);
    ++generation_;
    return removed;
}

std::optional<codemap_entry> codemap::lookup(std::uint64_t addr) const {
    auto node = index_.search(addr);
    if (node && node->value.contains(addr)) {
        return node->value;
    }
    return std::nullopt;
}

std::vector<codemap_entry> codemap::entries() const {
    std::vector<codemap_entry> out;
    out.reserve(index_.size());
    index_.for_each([&](std::uint64_t, const codemap_entry& e) { out.push_back(e); });
    return out;
}

} // namespace sealpy::runtime
