#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>

#include "sealpy/interp/value.hpp"

namespace sealpy::collections {

using interp::value;

enum class hardening_mode { hardened, baseline };

std::string_view to_string(hardening_mode mode);

enum class bounds_verdict { in_bounds, out_of_bounds };

struct bounds_report {
    std::string_view operation; // "list_get", "list_set" or "str_index"
    std::size_t container_length = 0;
    std::int64_t requested_index = 0;
    std::int64_t normalized_index = 0;
    bounds_verdict verdict = bounds_verdict::in_bounds;
};

// Per-run access state. `checks` counts hardened index reads and writes;
// baseline accesses never touch it or the observer.
struct access_context {
    hardening_mode mode = hardening_mode::hardened;
    std::uint64_t checks = 0;
    std::function<void(const bounds_report&)> observer;
};

// Python normalization: negative indices get len added once.
std::int64_t normalize_index(std::int64_t index, std::size_t length) noexcept;

value list_get(const interp::list_obj& list, std::int64_t index, access_context& ctx);
void list_set(interp::list_obj& list, std::int64_t index, value v, access_context& ctx);
// Clamping slice; never raises. Allocates the result on the list's heap.
interp::list_ref list_slice(const interp::list_obj& list, std::optional<std::int64_t> start,
                            std::optional<std::int64_t> stop, access_context& ctx);

// KeyError when absent, TypeError when the key is unhashable.
value map_get(const interp::map_obj& map, const value& key, access_context& ctx);
void map_set(interp::map_obj& map, const value& key, value v, access_context& ctx);

// Single byte as a fresh one-character string.
interp::str_ref str_index(const interp::str_obj& text, std::int64_t index, access_context& ctx);
interp::str_ref str_slice(const interp::str_obj& text, std::optional<std::int64_t> start,
                          std::optional<std::int64_t> stop, access_context& ctx);

} // namespace sealpy::collections
