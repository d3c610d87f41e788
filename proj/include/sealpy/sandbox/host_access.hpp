#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sealpy/sandbox/policy.hpp"

namespace sealpy::sandbox {

enum class capability { filesystem, env, dynamic_load, clock, network };
enum class access_verdict { allowed, denied };

std::string_view to_string(capability c);
std::string_view to_string(access_verdict v);

struct access_entry {
    capability what;
    std::string detail;
    access_verdict verdict;

    friend bool operator==(const access_entry&, const access_entry&) = default;
};

// Append-only record of host capability requests made during one run.
class host_access_log {
  public:
    void record(capability what, std::string detail, access_verdict verdict);
    const std::vector<access_entry>& entries() const noexcept { return entries_; }
    std::size_t count(capability what, access_verdict verdict) const noexcept;

  private:
    std::vector<access_entry> entries_;
};

class policy_violation : public std::runtime_error {
  public:
    policy_violation(capability requested, const std::string& detail);
    capability requested;
    std::string detail;
};

// Whether the policy grants the capability. The monotonic clock is always
// granted; filesystem and network follow allow_host_io.
bool permits(const policy& p, capability what) noexcept;

// Logs the request, then throws policy_violation when denied.
void check_host_capability(const policy& p, host_access_log& log, capability what, std::string detail);

} // namespace sealpy::sandbox
