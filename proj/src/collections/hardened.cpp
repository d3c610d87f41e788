#include "sealpy/collections/hardened.hpp"

#include <stdexcept>

#include "sealpy/interp/errors.hpp"

namespace sealpy::collections {

using interp::guest_error;
using interp::guest_error_kind;

std::string_view to_string(hardening_mode mode) {
    return mode == hardening_mode::hardened ? "hardened" : "baseline";
}

std::int64_t normalize_index(std::int64_t index, std::size_t length) noexcept {
    return index < 0 ? index + static_cast<std::int64_t>(length) : index;
}

namespace {

[[noreturn]] void out_of_range(std::string_view what) {
    throw guest_error(guest_error_kind::index_error, std::string(what) + " index out of range");
}

// Hardened validation. Returns the position to use; throws when outside.
std::size_t validate(std::string_view op, std::string_view what, std::size_t length, std::int64_t index,
                     access_context& ctx) {
    const std::int64_t n = normalize_index(index, length);
    const bool inside = n >= 0 && static_cast<std::uint64_t>(n) < length;
    ++ctx.checks;
    if (ctx.observer) {
        ctx.observer(bounds_report{op, length, index, n, inside ? bounds_verdict::in_bounds : bounds_verdict::out_of_bounds});
    }
    if (!inside) out_of_range(what);
    return static_cast<std::size_t>(n);
}

// Slice endpoints clamped into [0, length].
std::pair<std::size_t, std::size_t> clamp(std::optional<std::int64_t> start, std::optional<std::int64_t> stop,
                                          std::size_t length) {
    const auto len = static_cast<std::int64_t>(length);
    auto fix = [len](std::optional<std::int64_t> v, std::int64_t fallback) {
        if (!v) return fallback;
        std::int64_t x = *v;
        if (x < 0) {
            x = x < -len ? 0 : x + len;
        }
        return x > len ? len : x;
    };
    const std::int64_t a = fix(start, 0);
    const std::int64_t b = fix(stop, len);
    if (b <= a) return {0, 0};
    return {static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
}

} // namespace

value list_get(const interp::list_obj& list, std::int64_t index, access_context& ctx) {
    if (ctx.mode == hardening_mode::hardened) {
        return list.items[validate("list_get", "list", list.items.size(), index, ctx)];
    }
    try {
        return list.items.at(static_cast<std::size_t>(normalize_index(index, list.items.size())));
    } catch (const std::out_of_range&) {
        out_of_range("list");
    }
}

void list_set(interp::list_obj& list, std::int64_t index, value v, access_context& ctx) {
    if (ctx.mode == hardening_mode::hardened) {
        list.items[validate("list_set", "list assignment", list.items.size(), index, ctx)] = std::move(v);
        return;
    }
    try {
        list.items.at(static_cast<std::size_t>(normalize_index(index, list.items.size()))) = std::move(v);
    } catch (const std::out_of_range&) {
        out_of_range("list assignment");
    }
}

interp::list_ref list_slice(const interp::list_obj& list, std::optional<std::int64_t> start,
                            std::optional<std::int64_t> stop, access_context&) {
    const auto [a, b] = clamp(start, stop, list.items.size());
    std::vector<value> items(list.items.begin() + static_cast<std::ptrdiff_t>(a),
                             list.items.begin() + static_cast<std::ptrdiff_t>(b));
    return list.owner().make<interp::list_obj>(std::move(items));
}

value map_get(const interp::map_obj& map, const value& key, access_context&) {
    if (const value* v = map.find(key)) return *v;
    throw guest_error(guest_error_kind::key_error, interp::to_repr(key));
}

void map_set(interp::map_obj& map, const value& key, value v, access_context&) { map.set(key, std::move(v)); }

interp::str_ref str_index(const interp::str_obj& text, std::int64_t index, access_context& ctx) {
    char c = 0;
    if (ctx.mode == hardening_mode::hardened) {
        c = text.text[validate("str_index", "string", text.text.size(), index, ctx)];
    } else {
        try {
            c = text.text.at(static_cast<std::size_t>(normalize_index(index, text.text.size())));
        } catch (const std::out_of_range&) {
            out_of_range("string");
        }
    }
    return text.owner().make<interp::str_obj>(std::string(1, c));
}

interp::str_ref str_slice(const interp::str_obj& text, std::optional<std::int64_t> start,
                          std::optional<std::int64_t> stop, access_context&) {
    const auto [a, b] = clamp(start, stop, text.text.size());
    return text.owner().make<interp::str_obj>(text.text.substr(a, b - a));
}

} // namespace sealpy::collections
