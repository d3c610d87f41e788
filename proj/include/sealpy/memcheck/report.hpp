#pragma once

#include <string>
#include <vector>

#include "sealpy/memcheck/analyzer.hpp"

namespace sealpy::memcheck {

enum class report_format { text, json };

// Findings sorted by (function, instruction, kind). Text output for an
// empty list is "no findings"; JSON always carries a findings array and stats.
std::string emit_report(std::vector<diagnostic> diagnostics, const analysis_stats& stats, report_format format);

} // namespace sealpy::memcheck
