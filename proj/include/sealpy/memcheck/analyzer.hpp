#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sealpy/memcheck/domain.hpp"
#include "sealpy/memcheck/ir.hpp"

namespace sealpy::memcheck {

enum class diagnostic_kind {
    buffer_overflow_write,
    buffer_over_read,
    null_deref,
    memory_leak,
    shift_overflow,
};

std::string_view to_string(diagnostic_kind kind);

struct diagnostic {
    diagnostic_kind kind;
    std::string function;
    int instruction = 0;
    int line = 0;
    std::string message;
};

// Order used by reports: (function, instruction, kind).
bool operator<(const diagnostic& a, const diagnostic& b);

struct analysis_config {
    int widening_delay = 3;
    int max_iterations = 100000;
};

struct analysis_stats {
    int functions = 0;
    int iterations = 0;
};

struct analysis_result {
    std::vector<diagnostic> diagnostics;
    analysis_stats stats;
};

class analysis_budget_exceeded : public std::runtime_error {
  public:
    analysis_budget_exceeded(const std::string& function, int iterations);
    std::string function;
    int iterations;
};

// Forward abstract interpretation, one function at a time. Calls havoc
// their result; parameters of type addr start as possibly-null externals.
analysis_result analyze(const ir_program& program, const analysis_config& config = {});

} // namespace sealpy::memcheck
