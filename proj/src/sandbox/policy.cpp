#include "sealpy/sandbox/policy.hpp"

#include <charconv>

namespace sealpy::sandbox {

std::string_view to_string(profile p) { return p == profile::enclave ? "enclave" : "native"; }

policy_file_error::policy_file_error(int l, const std::string& message)
    : std::runtime_error("policy line " + std::to_string(l) + ": " + message), line(l) {}

namespace {

constexpr std::string_view zlib_lite_source = R"(# Codec bridge over the host MZL1 implementation.
def compress(s):
    return __zlib_compress(s)

def decompress(b):
    return __zlib_decompress(b)
)";

constexpr std::string_view mathlib_source = R"(def abs(x):
    if x < 0:
        return -x
    return x

def min(a, b):
    if b < a:
        return b
    return a

def max(a, b):
    if b > a:
        return b
    return a

def pow(base, exp):
    if exp < 0:
        return 1.0 / pow(base, -exp)
    result = 1
    while exp > 0:
        if exp % 2 == 1:
            result = result * base
        exp = exp // 2
        if exp > 0:
            base = base * base
    return result
)";

void require(bool ok, const char* what) {
    if (!ok) throw inconsistent_policy(std::string("enclave profile forbids ") + what);
}

} // namespace

const std::map<std::string, std::string>& default_embedded_modules() {
    static const std::map<std::string, std::string> table = {
        {"zlib_lite", std::string(zlib_lite_source)},
        {"mathlib", std::string(mathlib_source)},
    };
    return table;
}

policy make_policy(profile p, const policy_overrides& o) {
    policy out;
    out.profile_ = p;
    if (p == profile::enclave) {
        require(!o.allow_host_io.value_or(false), "allow_host_io");
        require(!o.allow_env.value_or(false), "allow_env");
        require(!o.allow_dynamic_modules.value_or(false), "allow_dynamic_modules");
        require(o.hardening.value_or(hardening_mode::hardened) == hardening_mode::hardened, "baseline hardening");
        require(!o.module_search_path || o.module_search_path->empty(), "a module search path");
        out.allow_host_io_ = false;
        out.allow_env_ = false;
        out.allow_dynamic_modules_ = false;
        out.hardening_ = hardening_mode::hardened;
    } else {
        out.allow_host_io_ = o.allow_host_io.value_or(true);
        out.allow_env_ = o.allow_env.value_or(false);
        out.allow_dynamic_modules_ = o.allow_dynamic_modules.value_or(false);
        out.hardening_ = o.hardening.value_or(hardening_mode::hardened);
        out.search_path_ = o.module_search_path.value_or(std::vector<std::string>{});
    }
    out.heap_budget_cells_ = o.heap_budget_cells.value_or(default_heap_budget_cells);
    if (out.heap_budget_cells_ == 0) throw inconsistent_policy("heap budget must be positive");
    out.embedded_ = o.embedded_modules.value_or(default_embedded_modules());
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_flag(std::string_view v, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw policy_file_error(line, "expected true or false, found '" + std::string(v) + "'");
}

} // namespace

std::pair<profile, policy_overrides> parse_policy_text(std::string_view text) {
    profile prof = profile::native;
    policy_overrides o;
    std::map<std::string, int, std::less<>> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw policy_file_error(line_no, "expected key = value");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view val = trim(line.substr(eq + 1));
        if (!seen.emplace(std::string(key), line_no).second) {
            throw policy_file_error(line_no, "duplicate key '" + std::string(key) + "'");
        }
        if (key == "profile") {
            if (val == "enclave") prof = profile::enclave;
            else if (val == "native") prof = profile::native;
            else throw policy_file_error(line_no, "profile must be enclave or native");
        } else if (key == "allow_host_io") {
            o.allow_host_io = parse_flag(val, line_no);
        } else if (key == "allow_env") {
            o.allow_env = parse_flag(val, line_no);
        } else if (key == "allow_dynamic_modules") {
            o.allow_dynamic_modules = parse_flag(val, line_no);
        } else if (key == "heap_budget_cells") {
            std::size_t n = 0;
            auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(), n);
            if (ec != std::errc() || p != val.data() + val.size() || val.empty()) {
                throw policy_file_error(line_no, "heap_budget_cells must be a non-negative integer");
            }
            o.heap_budget_cells = n;
        } else if (key == "hardening") {
            if (val == "hardened") o.hardening = hardening_mode::hardened;
            else if (val == "baseline") o.hardening = hardening_mode::baseline;
            else throw policy_file_error(line_no, "hardening must be hardened or baseline");
        } else if (key == "module_search_path") {
            std::vector<std::string> dirs;
            std::size_t b = 0;
            while (b <= val.size()) {
                const auto c = val.find(':', b);
                const auto part = val.substr(b, c == std::string_view::npos ? std::string_view::npos : c - b);
                if (!part.empty()) dirs.emplace_back(part);
                b = c == std::string_view::npos ? val.size() + 1 : c + 1;
            }
            o.module_search_path = std::move(dirs);
        } else {
            throw policy_file_error(line_no, "unknown key '" + std::string(key) + "'");
        }
    }
    return {prof, std::move(o)};
}

} // namespace sealpy::sandbox
