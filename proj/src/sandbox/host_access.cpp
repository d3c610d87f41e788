#include "sealpy/sandbox/host_access.hpp"

#include <algorithm>

namespace sealpy::sandbox {

std::string_view to_string(capability c) {
    switch (c) {
    case capability::filesystem: return "filesystem";
    case capability::env: return "env";
    case capability::dynamic_load: return "dynamic_load";
    case capability::clock: return "clock";
    case capability::network: return "network";
    }
    return "?";
}

std::string_view to_string(access_verdict v) { return v == access_verdict::allowed ? "allowed" : "denied"; }

void host_access_log::record(capability what, std::string detail, access_verdict verdict) {
    entries_.push_back(access_entry{what, std::move(detail), verdict});
}

std::size_t host_access_log::count(capability what, access_verdict verdict) const noexcept {
    return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [&](const access_entry& e) {
        return e.what == what && e.verdict == verdict;
    }));
}

policy_violation::policy_violation(capability w, const std::string& d)
    : std::runtime_error("PolicyViolation: " + std::string(to_string(w)) + " access denied (" + d + ")"),
      requested(w),
      detail(d) {}

bool permits(const policy& p, capability what) noexcept {
    switch (what) {
    case capability::filesystem:
    case capability::network: return p.allow_host_io();
    case capability::env: return p.allow_env();
    case capability::dynamic_load: return p.allow_dynamic_modules();
    case capability::clock: return true;
    }
    return false;
}

void check_host_capability(const policy& p, host_access_log& log, capability what, std::string detail) {
    const bool ok = permits(p, what);
    log.record(what, detail, ok ? access_verdict::allowed : access_verdict::denied);
    if (!ok) throw policy_violation(what, detail);
}

} // namespace sealpy::sandbox
