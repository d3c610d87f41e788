#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "sealpy/collections/hardened.hpp"
#include "sealpy/interp/ast.hpp"
#include "sealpy/interp/errors.hpp"
#include "sealpy/sandbox/host_access.hpp"
#include "sealpy/sandbox/policy.hpp"

namespace sealpy::interp {

enum class run_status { ok, guest_error, policy_violation, memory_budget_exceeded, step_limit_exceeded };

std::string_view to_string(run_status s);

struct execution_audit {
    std::uint64_t bounds_checks_performed = 0;
    std::uint64_t allocations = 0;
    std::size_t peak_heap_cells = 0;
    std::string output;

    // Counters only; output is compared separately.
    bool same_counters(const execution_audit& o) const noexcept {
        return bounds_checks_performed == o.bounds_checks_performed && allocations == o.allocations &&
               peak_heap_cells == o.peak_heap_cells;
    }
};

struct guest_failure {
    guest_error_kind kind;
    std::string message;
    std::string source_name;
    int line = 0;
};

struct run_result {
    run_status status = run_status::ok;
    execution_audit audit;
    std::optional<guest_failure> error; // set when status is guest_error
    std::string message;                // host-level detail for the other failure statuses
    sandbox::host_access_log host_log;

    // "<source>:<line>: IndexError: list index out of range" style text.
    std::string describe() const;
};

struct run_options {
    // Statements and loop iterations executed before step_limit_exceeded; 0 disables.
    std::uint64_t max_steps = 0;
    // Guest call depth at which RecursionError is raised.
    int max_call_depth = 1000;
    // Host stack the evaluator may consume; deeper recursion raises RecursionError.
    std::size_t max_stack_bytes = std::size_t{4} << 20;
    // Integer globals bound before the program starts.
    std::map<std::string, std::int64_t> globals;
    // Receives every hardened bounds check.
    std::function<void(const collections::bounds_report&)> bounds_observer;
};

// Runs `program` to completion or to its first uncaught error. Never throws
// for guest behavior; every outcome is a status in the result.
run_result execute(const program& program, const sandbox::policy& policy, const run_options& options = {});

} // namespace sealpy::interp
