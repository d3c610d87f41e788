#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "sealpy/interp/interpreter.hpp"
#include "sealpy/sandbox/modules.hpp"

using namespace sealpy;
using namespace sealpy::sandbox;
using collections::hardening_mode;
using interp::guest_error;
using interp::guest_error_kind;

namespace {

namespace fs = std::filesystem;

struct temp_dir {
    temp_dir() {
        path = fs::temp_directory_path() / ("sealpy_sandbox_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~temp_dir() { fs::remove_all(path); }
    void write(const std::string& name, const std::string& text) const { std::ofstream(path / name) << text; }
    fs::path path;
};

guest_error_kind import_failure(module_resolver& r, std::string_view name) {
    try {
        r.resolve(name);
    } catch (const guest_error& e) {
        return e.kind;
    }
    FAIL("import succeeded");
    return guest_error_kind::value_error;
}

} // namespace

TEST_CASE("make_policy profile defaults") {
    auto e = make_policy(profile::enclave);
    CHECK(e.profile_kind() == profile::enclave);
    CHECK_FALSE(e.allow_host_io());
    CHECK_FALSE(e.allow_env());
    CHECK_FALSE(e.allow_dynamic_modules());
    CHECK(e.hardening() == hardening_mode::hardened);
    CHECK(e.heap_budget_cells() == default_heap_budget_cells);
    CHECK(e.embedded_modules().count("zlib_lite") == 1);
    CHECK(e.embedded_modules().count("mathlib") == 1);

    auto n = make_policy(profile::native);
    CHECK(n.allow_host_io());
    CHECK_FALSE(n.allow_env());
    CHECK_FALSE(n.allow_dynamic_modules());
    CHECK(n.hardening() == hardening_mode::hardened);

    policy_overrides base;
    base.hardening = hardening_mode::baseline;
    CHECK(make_policy(profile::native, base).hardening() == hardening_mode::baseline);
}

TEST_CASE("enclave rejects every loosening override") {
    auto reject = [](policy_overrides o) { CHECK_THROWS_AS(make_policy(profile::enclave, o), inconsistent_policy); };
    policy_overrides o;
    o.allow_host_io = true;
    reject(o);
    o = {};
    o.allow_env = true;
    reject(o);
    o = {};
    o.allow_dynamic_modules = true;
    reject(o);
    o = {};
    o.hardening = hardening_mode::baseline;
    reject(o);
    o = {};
    o.module_search_path = std::vector<std::string>{"/tmp"};
    reject(o);
    o = {};
    o.heap_budget_cells = 0;
    reject(o);
    CHECK_THROWS_AS(make_policy(profile::native, o), inconsistent_policy);

    // Restating a default is consistent.
    o = {};
    o.allow_host_io = false;
    o.hardening = hardening_mode::hardened;
    o.heap_budget_cells = 100;
    CHECK(make_policy(profile::enclave, o).heap_budget_cells() == 100);
}

TEST_CASE("policy file parsing") {
    auto [p, o] = parse_policy_text("# test\nprofile = native\nallow_env=true\nheap_budget_cells = 4096\n"
                                    "hardening = baseline\nmodule_search_path = /a:/b\n\n");
    CHECK(p == profile::native);
    CHECK(o.allow_env == true);
    CHECK(o.heap_budget_cells == 4096u);
    CHECK(o.hardening == hardening_mode::baseline);
    CHECK(o.module_search_path == std::vector<std::string>{"/a", "/b"});
    CHECK_FALSE(o.allow_host_io.has_value());

    CHECK(parse_policy_text("").first == profile::native);
    CHECK(parse_policy_text("profile = enclave").first == profile::enclave);

    for (const char* bad : {"colour = red", "allow_env = maybe", "profile = sgx", "heap_budget_cells = -1",
                            "heap_budget_cells = 12x", "no equals sign", "allow_env = true\nallow_env = false",
                            "hardening = soft"}) {
        INFO(bad);
        CHECK_THROWS_AS(parse_policy_text(bad), policy_file_error);
    }
    try {
        parse_policy_text("profile = native\n\nbogus = 1\n");
    } catch (const policy_file_error& e) {
        CHECK(e.line == 3);
    }
}

TEST_CASE("check_host_capability table") {
    auto enclave = make_policy(profile::enclave);
    auto native = make_policy(profile::native);
    policy_overrides env;
    env.allow_env = true;
    env.allow_dynamic_modules = true;
    auto open = make_policy(profile::native, env);

    struct row {
        const policy* pol;
        capability cap;
        bool allowed;
    };
    const row rows[] = {
        {&enclave, capability::filesystem, false}, {&enclave, capability::env, false},
        {&enclave, capability::dynamic_load, false}, {&enclave, capability::network, false},
        {&enclave, capability::clock, true},       {&native, capability::filesystem, true},
        {&native, capability::network, true},      {&native, capability::env, false},
        {&native, capability::dynamic_load, false}, {&native, capability::clock, true},
        {&open, capability::env, true},            {&open, capability::dynamic_load, true},
    };
    for (const auto& r : rows) {
        host_access_log log;
        INFO(to_string(r.pol->profile_kind()) << " " << to_string(r.cap));
        CHECK(permits(*r.pol, r.cap) == r.allowed);
        if (r.allowed) {
            CHECK_NOTHROW(check_host_capability(*r.pol, log, r.cap, "x"));
        } else {
            try {
                check_host_capability(*r.pol, log, r.cap, "x");
                FAIL("no violation");
            } catch (const policy_violation& v) {
                CHECK(v.requested == r.cap);
                CHECK(v.detail == "x");
            }
        }
        REQUIRE(log.entries().size() == 1);
        CHECK(log.entries()[0] ==
              access_entry{r.cap, "x", r.allowed ? access_verdict::allowed : access_verdict::denied});
    }
}

TEST_CASE("enclave imports resolve statically") {
    auto enclave = make_policy(profile::enclave);
    host_access_log log;
    module_resolver r(enclave, log);
    auto z = r.resolve("zlib_lite");
    CHECK(z.embedded);
    REQUIRE(z.program);
    CHECK(r.resolve("zlib_lite").program == z.program);
    for (int i = 0; i < 3; ++i) {
        CHECK(import_failure(r, "os") == guest_error_kind::import_error);
        CHECK(import_failure(r, "../etc/passwd") == guest_error_kind::import_error);
    }
    CHECK(log.entries().empty());

    // A separate resolver on the same policy gives the same answers.
    host_access_log log2;
    module_resolver r2(enclave, log2);
    CHECK(dump(*r2.resolve("mathlib").program) == dump(*r.resolve("mathlib").program));
    CHECK(log2.entries().empty());
}

TEST_CASE("native dynamic modules load from the search path once") {
    temp_dir dir;
    dir.write("mylib.mpy", "def triple(x):\n    return 3 * x\n");
    dir.write("broken.mpy", "def (:\n");
    policy_overrides o;
    o.allow_dynamic_modules = true;
    o.module_search_path = std::vector<std::string>{(dir.path / "missing").string(), dir.path.string()};
    auto pol = make_policy(profile::native, o);

    host_access_log log;
    module_resolver r(pol, log);
    auto m = r.resolve("mylib");
    CHECK_FALSE(m.embedded);
    REQUIRE(log.entries().size() == 1);
    CHECK(log.entries()[0].what == capability::dynamic_load);
    CHECK(log.entries()[0].verdict == access_verdict::allowed);
    CHECK(log.entries()[0].detail.find("mylib.mpy") != std::string::npos);
    r.resolve("mylib");
    CHECK(log.entries().size() == 1);

    CHECK(import_failure(r, "nothere") == guest_error_kind::import_error);
    CHECK(import_failure(r, "broken") == guest_error_kind::syntax_error);

    auto run = interp::execute(interp::parse("import mylib\nprint(mylib.triple(14))", "t.mpy"), pol);
    CHECK(run.audit.output == "42\n");
    CHECK(run.host_log.count(capability::dynamic_load, access_verdict::allowed) == 1);

    // Without the dynamic flag the same directory is never probed.
    policy_overrides closed;
    closed.module_search_path = o.module_search_path;
    auto no_dyn = make_policy(profile::native, closed);
    host_access_log log2;
    module_resolver r2(no_dyn, log2);
    CHECK(import_failure(r2, "mylib") == guest_error_kind::import_error);
    CHECK(log2.entries().empty());
}

TEST_CASE("module names cannot form paths") {
    CHECK(is_module_name("mylib"));
    CHECK(is_module_name("_x1"));
    for (const char* bad : {"", "a/b", "..", "a.b", "1abc", "a b", "a\\b"}) CHECK_FALSE(is_module_name(bad));
}

TEST_CASE("charge_allocation boundary") {
    interp::heap h(100);
    h.charge(50);
    h.charge(50);
    CHECK(h.live() == 100);
    CHECK(h.peak() == 100);
    CHECK_THROWS_AS(h.charge(1), interp::memory_budget_exceeded);
    CHECK(h.live() == 100);
}

TEST_CASE("budget: list of 50 then list of 50 fits a budget of 100 plus bookkeeping") {
    policy_overrides o;
    o.heap_budget_cells = 100;
    auto pol = make_policy(profile::native, o);
    auto ok = interp::execute(interp::parse("a = [0] * 49\nb = [0] * 49\n", "t.mpy"), pol);
    INFO(ok.describe() << ok.message);
    CHECK(ok.status == interp::run_status::ok);
    CHECK(ok.audit.peak_heap_cells <= 100);
    auto over = interp::execute(interp::parse("a = [0] * 50\nb = [0] * 50\nc = [0]\n", "t.mpy"), pol);
    CHECK(over.status == interp::run_status::memory_budget_exceeded);
}

TEST_CASE("binary-trees depth 8 under a 10^6 budget has a stable peak") {
    std::ifstream in(std::string(SEALPY_SUITE_DIR) + "/binary_trees.mpy");
    std::string src((std::istreambuf_iterator<char>(in)), {});
    policy_overrides o;
    o.heap_budget_cells = 1000000;
    auto pol = make_policy(profile::native, o);
    auto p = interp::parse(src, "binary_trees.mpy");
    interp::run_options opts;
    opts.globals["depth"] = 8;
    auto a = interp::execute(p, pol, opts);
    auto b = interp::execute(p, pol, opts);
    CHECK(a.status == interp::run_status::ok);
    CHECK(a.audit.peak_heap_cells > 0);
    CHECK(a.audit.peak_heap_cells <= 1000000);
    CHECK(a.audit.peak_heap_cells == b.audit.peak_heap_cells);
}
