#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "sealpy/interp/ast.hpp"
#include "sealpy/sandbox/host_access.hpp"
#include "sealpy/sandbox/policy.hpp"

namespace sealpy::sandbox {

struct resolved_module {
    std::shared_ptr<const interp::program> program;
    bool embedded = false;
};

// Per-run import resolution. Embedded modules win over the search path and
// never touch the host. Other names reach the host only under a policy that
// allows dynamic modules; each module loaded from the host logs one
// dynamic_load entry.
class module_resolver {
  public:
    module_resolver(const policy& p, host_access_log& log) : policy_(p), log_(log) {}

    // Guest ImportError for unknown or invalid names; guest SyntaxError
    // when the module text does not parse. Repeated calls return the
    // cached result without further host access.
    resolved_module resolve(std::string_view name);

  private:
    const policy& policy_;
    host_access_log& log_;
    std::map<std::string, resolved_module, std::less<>> cache_;
};

// Module names are plain identifiers, so no name can form a path.
bool is_module_name(std::string_view name) noexcept;

} // namespace sealpy::sandbox
