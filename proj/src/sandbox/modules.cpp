#include "sealpy/sandbox/modules.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sealpy/interp/errors.hpp"

namespace sealpy::sandbox {

using interp::guest_error;
using interp::guest_error_kind;

bool is_module_name(std::string_view name) noexcept {
    if (name.empty() || name.size() > 255) return false;
    auto start = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    if (!start(name.front())) return false;
    for (const char c : name) {
        if (!start(c) && !(c >= '0' && c <= '9')) return false;
    }
    return true;
}

namespace {

std::shared_ptr<const interp::program> parse_module(std::string_view text, const std::string& source_name) {
    try {
        return std::make_shared<const interp::program>(interp::parse(text, source_name));
    } catch (const interp::syntax_error& e) {
        throw guest_error(guest_error_kind::syntax_error, e.what());
    }
}

} // namespace

resolved_module module_resolver::resolve(std::string_view name) {
    if (auto it = cache_.find(name); it != cache_.end()) return it->second;
    if (!is_module_name(name)) throw guest_error(guest_error_kind::import_error, "invalid module name");
    const std::string key(name);
    const auto& table = policy_.embedded_modules();
    if (auto it = table.find(key); it != table.end()) {
        resolved_module m{parse_module(it->second, "<embedded " + key + ">"), true};
        cache_.emplace(key, m);
        return m;
    }
    // Only a policy that grants dynamic loading ever probes the host.
    if (!permits(policy_, capability::dynamic_load)) {
        throw guest_error(guest_error_kind::import_error, "No module named '" + key + "'");
    }
    namespace fs = std::filesystem;
    for (const auto& dir : policy_.module_search_path()) {
        const fs::path candidate = fs::path(dir) / (key + ".mpy");
        std::error_code ec;
        if (!fs::is_regular_file(candidate, ec)) continue;
        check_host_capability(policy_, log_, capability::dynamic_load, candidate.string());
        std::ifstream in(candidate, std::ios::binary);
        if (!in) throw guest_error(guest_error_kind::import_error, "cannot read " + candidate.string());
        std::ostringstream text;
        text << in.rdbuf();
        resolved_module m{parse_module(text.str(), candidate.string()), false};
        cache_.emplace(key, m);
        return m;
    }
    throw guest_error(guest_error_kind::import_error, "No module named '" + key + "'");
}

} // namespace sealpy::sandbox
