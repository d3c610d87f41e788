#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sealpy/collections/hardened.hpp"

namespace sealpy::sandbox {

using collections::hardening_mode;

enum class profile { enclave, native };

std::string_view to_string(profile p);

class inconsistent_policy : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Malformed policy file: bad syntax, unknown key or unparsable value.
class policy_file_error : public std::runtime_error {
  public:
    policy_file_error(int line, const std::string& message);
    int line;
};

inline constexpr std::size_t default_heap_budget_cells = std::size_t{1} << 24;

// Every field left empty takes the profile default.
struct policy_overrides {
    std::optional<bool> allow_host_io;
    std::optional<bool> allow_env;
    std::optional<bool> allow_dynamic_modules;
    std::optional<std::size_t> heap_budget_cells;
    std::optional<hardening_mode> hardening;
    // Replaces the default embedded table.
    std::optional<std::map<std::string, std::string>> embedded_modules;
    // Directories probed for NAME.mpy when dynamic modules are allowed.
    std::optional<std::vector<std::string>> module_search_path;
};

// Immutable once built; only make_policy constructs one, so every instance
// satisfies the profile invariants.
class policy {
  public:
    profile profile_kind() const noexcept { return profile_; }
    bool allow_host_io() const noexcept { return allow_host_io_; }
    bool allow_env() const noexcept { return allow_env_; }
    bool allow_dynamic_modules() const noexcept { return allow_dynamic_modules_; }
    std::size_t heap_budget_cells() const noexcept { return heap_budget_cells_; }
    hardening_mode hardening() const noexcept { return hardening_; }
    const std::map<std::string, std::string>& embedded_modules() const noexcept { return embedded_; }
    const std::vector<std::string>& module_search_path() const noexcept { return search_path_; }

  private:
    friend policy make_policy(profile, const policy_overrides&);
    policy() = default;

    profile profile_ = profile::enclave;
    bool allow_host_io_ = false;
    bool allow_env_ = false;
    bool allow_dynamic_modules_ = false;
    std::size_t heap_budget_cells_ = default_heap_budget_cells;
    hardening_mode hardening_ = hardening_mode::hardened;
    std::map<std::string, std::string> embedded_;
    std::vector<std::string> search_path_;
};

// Enclave: host io, env and dynamic modules off, Hardened, no search path;
// overriding any of these to another value throws inconsistent_policy.
// Native: host io on, env and dynamic modules off, Hardened.
// A zero heap budget is inconsistent under either profile.
policy make_policy(profile p, const policy_overrides& overrides = {});

// Guest sources of the default embedded modules, `zlib_lite` and `mathlib`.
const std::map<std::string, std::string>& default_embedded_modules();

// Parses `key = value` lines; `#` starts a comment. Keys: profile,
// allow_host_io, allow_env, allow_dynamic_modules, heap_budget_cells,
// hardening, module_search_path (colon separated). Returns the profile
// (native when absent) and the overrides.
std::pair<profile, policy_overrides> parse_policy_text(std::string_view text);

} // namespace sealpy::sandbox
