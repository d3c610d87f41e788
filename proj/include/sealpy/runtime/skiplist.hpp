#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sealpy::runtime {

class duplicate_key : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class key_absent : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Ordered map from unsigned keys to values with skiplist structure.
//
// Nodes live in an index arena; links are arena indices, slot 0 is the head
// sentinel. Tower heights use geometric promotion with p = 1/2 drawn from a
// seeded generator, so a given seed always builds the same shape.
template <typename Value>
class skiplist {
  public:
    static constexpr int max_level = 16;

    struct node_view {
        std::uint64_t key;
        const Value& value;
    };

    explicit skiplist(std::uint64_t seed = 0x5eed) : rng_(seed) {
        nodes_.push_back(node{0, std::nullopt, std::vector<std::uint32_t>(max_level, nil)});
    }

    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }

    // Greatest key <= key, or nothing.
    std::optional<node_view> search(std::uint64_t key) const {
        std::uint32_t x = head;
        for (int lvl = level_ - 1; lvl >= 0; --lvl) {
            while (true) {
                const std::uint32_t nxt = nodes_[x].next[lvl];
                if (nxt == nil || nodes_[nxt].key > key) break;
                x = nxt;
            }
        }
        if (x == head) return std::nullopt;
        return node_view{nodes_[x].key, *nodes_[x].value};
    }

    std::optional<node_view> find(std::uint64_t key) const {
        auto found = search(key);
        if (found && found->key == key) return found;
        return std::nullopt;
    }

    void insert(std::uint64_t key, Value value) {
        std::vector<std::uint32_t> update(max_level, head);
        std::uint32_t x = head;
        for (int lvl = level_ - 1; lvl >= 0; --lvl) {
            while (true) {
                const std::uint32_t nxt = nodes_[x].next[lvl];
                if (nxt == nil || nodes_[nxt].key >= key) break;
                x = nxt;
            }
            update[lvl] = x;
        }
        const std::uint32_t candidate = nodes_[x].next[0];
        if (candidate != nil && nodes_[candidate].key == key) {
            throw duplicate_key("key " + std::to_string(key) + " already present");
        }
        const int height = random_level();
        if (height > level_) level_ = height;

        const std::uint32_t idx = acquire_slot();
        nodes_[idx].key = key;
        nodes_[idx].value.emplace(std::move(value));
        nodes_[idx].next.assign(static_cast<std::size_t>(height), nil);
        for (int lvl = 0; lvl < height; ++lvl) {
            nodes_[idx].next[lvl] = nodes_[update[lvl]].next[lvl];
            nodes_[update[lvl]].next[lvl] = idx;
        }
        ++size_;
    }

    Value remove(std::uint64_t key) {
        std::vector<std::uint32_t> update(max_level, head);
        std::uint32_t x = head;
        for (int lvl = level_ - 1; lvl >= 0; --lvl) {
            while (true) {
                const std::uint32_t nxt = nodes_[x].next[lvl];
                if (nxt == nil || nodes_[nxt].key >= key) break;
                x = nxt;
            }
            update[lvl] = x;
        }
        const std::uint32_t target = nodes_[x].next[0];
        if (target == nil || nodes_[target].key != key) {
            throw key_absent("key " + std::to_string(key) + " not present");
        }
        const int height = static_cast<int>(nodes_[target].next.size());
        for (int lvl = 0; lvl < height; ++lvl) {
            if (nodes_[update[lvl]].next[lvl] == target) {
                nodes_[update[lvl]].next[lvl] = nodes_[target].next[lvl];
            }
        }
        while (level_ > 1 && nodes_[head].next[level_ - 1] == nil) --level_;

        Value out = std::move(*nodes_[target].value);
        nodes_[target].value.reset();
        nodes_[target].next.clear();
        free_slots_.push_back(target);
        --size_;
        return out;
    }

    // Level-0 traversal in key order.
    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (std::uint32_t x = nodes_[head].next[0]; x != nil; x = nodes_[x].next[0]) {
            fn(nodes_[x].key, *nodes_[x].value);
        }
    }

    // Keys reachable on one level, in chain order. Used by structural checks.
    std::vector<std::uint64_t> level_keys(int lvl) const {
        std::vector<std::uint64_t> out;
        if (lvl < 0 || lvl >= max_level) return out;
        for (std::uint32_t x = nodes_[head].next[lvl]; x != nil; x = nodes_[x].next[lvl]) {
            out.push_back(nodes_[x].key);
        }
        return out;
    }

    int level() const noexcept { return level_; }

  private:
    static constexpr std::uint32_t nil = 0xffffffffu;
    static constexpr std::uint32_t head = 0;

    struct node {
        std::uint64_t key;
        std::optional<Value> value;
        std::vector<std::uint32_t> next;
    };

    int random_level() {
        int height = 1;
        while (height < max_level && (rng_() & 1u) != 0) ++height;
        return height;
    }

    std::uint32_t acquire_slot() {
        if (!free_slots_.empty()) {
            const std::uint32_t idx = free_slots_.back();
            free_slots_.pop_back();
            return idx;
        }
        nodes_.push_back(node{0, std::nullopt, {}});
        return static_cast<std::uint32_t>(nodes_.size() - 1);
    }

    std::vector<node> nodes_;
    std::vector<std::uint32_t> free_slots_;
    std::size_t size_ = 0;
    int level_ = 1;
    std::mt19937_64 rng_;
};

} // namespace sealpy::runtime
