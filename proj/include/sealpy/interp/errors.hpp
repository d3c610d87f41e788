#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sealpy::interp {

enum class guest_error_kind {
    index_error,
    key_error,
    overflow_error,
    type_error,
    name_error,
    import_error,
    zero_division_error,
    value_error,
    recursion_error,
    attribute_error,
    os_error,
    syntax_error, // raised by an import whose module text does not parse
};

// Python-style class name, e.g. "IndexError".
std::string_view to_string(guest_error_kind kind);

// An error visible to guest code. `line` is 0 until the evaluator attaches
// the line of the statement that raised it.
class guest_error : public std::runtime_error {
  public:
    guest_error(guest_error_kind kind, const std::string& message, int line = 0);

    guest_error_kind kind;
    int line;
    std::string source_name;
};

class syntax_error : public std::runtime_error {
  public:
    syntax_error(std::string source_name, int line, int column, std::string detail);

    std::string source_name;
    int line;
    int column;
    std::string detail;
};

class memory_budget_exceeded : public std::runtime_error {
  public:
    memory_budget_exceeded(std::size_t requested, std::size_t live, std::size_t budget);

    std::size_t requested;
    std::size_t live;
    std::size_t budget;
};

class step_limit_exceeded : public std::runtime_error {
  public:
    explicit step_limit_exceeded(std::uint64_t limit);

    std::uint64_t limit;
};

} // namespace sealpy::interp
