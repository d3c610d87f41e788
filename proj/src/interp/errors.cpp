#include "sealpy/interp/errors.hpp"

namespace sealpy::interp {

std::string_view to_string(guest_error_kind kind) {
    switch (kind) {
    case guest_error_kind::index_error: return "IndexError";
    case guest_error_kind::key_error: return "KeyError";
    case guest_error_kind::overflow_error: return "OverflowError";
    case guest_error_kind::type_error: return "TypeError";
    case guest_error_kind::name_error: return "NameError";
    case guest_error_kind::import_error: return "ImportError";
    case guest_error_kind::zero_division_error: return "ZeroDivisionError";
    case guest_error_kind::value_error: return "ValueError";
    case guest_error_kind::recursion_error: return "RecursionError";
    case guest_error_kind::attribute_error: return "AttributeError";
    case guest_error_kind::os_error: return "OSError";
    case guest_error_kind::syntax_error: return "SyntaxError";
    }
    return "Error";
}

guest_error::guest_error(guest_error_kind k, const std::string& message, int l)
    : std::runtime_error(message), kind(k), line(l) {}

syntax_error::syntax_error(std::string source, int l, int c, std::string d)
    : std::runtime_error(source + ":" + std::to_string(l) + ":" + std::to_string(c) + ": SyntaxError: " + d),
      source_name(std::move(source)), line(l), column(c), detail(std::move(d)) {}

memory_budget_exceeded::memory_budget_exceeded(std::size_t req, std::size_t l, std::size_t b)
    : std::runtime_error("memory budget exceeded: " + std::to_string(l) + " live cells + " + std::to_string(req) +
                         " requested > budget " + std::to_string(b)),
      requested(req), live(l), budget(b) {}

step_limit_exceeded::step_limit_exceeded(std::uint64_t l)
    : std::runtime_error("step limit of " + std::to_string(l) + " statements exceeded"), limit(l) {}

} // namespace sealpy::interp
