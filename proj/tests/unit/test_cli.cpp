#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "sealpy/bench/bench.hpp"
#include "sealpy/cli/cli.hpp"
#include "sealpy/memcheck/ir.hpp"

using namespace sealpy;
using namespace sealpy::cli;

namespace {

namespace fs = std::filesystem;

struct invocation {
    int code;
    std::string out;
    std::string err;
};

invocation invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "sealpy");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

struct temp_dir {
    temp_dir() {
        path = fs::temp_directory_path() / ("sealpy_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~temp_dir() { fs::remove_all(path); }
    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name) << text;
        return (path / name).string();
    }
    fs::path path;
};

} // namespace

TEST_CASE("run exit codes") {
    temp_dir d;
    const auto fib = d.write("fib.mpy", "def fib(n):\n    if n < 2:\n        return n\n    return fib(n-1) + fib(n-2)\n"
                                        "print(fib(10))\n");
    auto r = invoke({"run", fib, "--profile", "enclave"});
    CHECK(r.code == exit_code::ok);
    CHECK(r.out == "55\n");
    CHECK(r.err.empty());

    r = invoke({"run", d.write("os.mpy", "x = 1\nimport os\n"), "--profile", "enclave"});
    CHECK(r.code == exit_code::guest_error);
    CHECK(r.err.find("os.mpy:2: ImportError") != std::string::npos);

    CHECK(invoke({"run", fib, "--profile", "enclave", "--baseline"}).code == exit_code::usage);
    CHECK(invoke({"run", fib, "--profile", "native", "--baseline"}).code == exit_code::ok);

    r = invoke({"run", d.write("partial.mpy", "print('before')\nprint([1][4])\n")});
    CHECK(r.code == exit_code::guest_error);
    CHECK(r.out == "before\n");
    CHECK(r.err.find(":2: IndexError") != std::string::npos);

    CHECK(invoke({"run", d.write("io.mpy", "read_file('/etc/hostname')\n")}).code == exit_code::policy);
    CHECK(invoke({"run", d.write("big.mpy", "x = [0] * 5000\n"), "--heap-cells", "100"}).code == exit_code::policy);
    CHECK(invoke({"run", d.write("syn.mpy", "class A: pass\n")}).code == exit_code::guest_error);

    const auto param = d.write("param.mpy", "print(depth * 2)\n");
    CHECK(invoke({"run", param, "--set", "depth=21"}).out == "42\n");
    CHECK(invoke({"run", param, "--set", "depth=x"}).code == exit_code::usage);
    CHECK(invoke({"run", param}).code == exit_code::guest_error);
    CHECK(invoke({"run", (d.path / "missing.mpy").string()}).code == exit_code::usage);
    CHECK(invoke({"run", fib, "--profile", "sgx"}).code == exit_code::usage);
    CHECK(invoke({"run", fib, "--bogus"}).code == exit_code::usage);
    CHECK(invoke({"run", fib, "--heap-cells", "0"}).code == exit_code::usage);
    CHECK(invoke({"run"}).code == exit_code::usage);
    CHECK(invoke({}).code == exit_code::usage);
    CHECK(invoke({"frobnicate"}).code == exit_code::usage);
}

TEST_CASE("run with a policy file") {
    temp_dir d;
    const auto env = d.write("env.mpy", "print(getenv('SEALPY_NO_SUCH_VAR'))\n");
    CHECK(invoke({"run", env, "--profile", "native"}).code == exit_code::policy);
    const auto allow = d.write("allow.policy", "profile = native\nallow_env = true\n");
    auto r = invoke({"run", env, "--policy", allow});
    CHECK(r.code == exit_code::ok);
    CHECK(r.out == "None\n");
    CHECK(invoke({"run", env, "--policy", d.write("bad.policy", "colour = red\n")}).code == exit_code::usage);
    CHECK(invoke({"run", env, "--policy", d.write("incons.policy", "profile = enclave\nallow_env = true\n")}).code ==
          exit_code::usage);
    CHECK(invoke({"run", env, "--policy", (d.path / "none.policy").string()}).code == exit_code::usage);
}

TEST_CASE("check exit codes") {
    temp_dir d;
    CHECK(invoke({"corpus", "--emit", (d.path / "c").string()}).code == exit_code::ok);
    auto r = invoke({"check", (d.path / "c" / "clean.ir").string()});
    CHECK(r.code == exit_code::ok);
    r = invoke({"check", (d.path / "c" / "dtoa_vuln.ir").string(), "--format", "json"});
    CHECK(r.code == exit_code::findings);
    auto doc = nlohmann::json::parse(r.out);
    REQUIRE(doc["findings"].size() == 1);
    CHECK(doc["findings"][0]["kind"] == "ShiftOverflow");
    CHECK(invoke({"check", d.write("garbage.ir", "this is not ir {{{\n")}).code == exit_code::guest_error);
    CHECK(invoke({"check", (d.path / "c" / "clean.ir").string(), "--format", "xml"}).code == exit_code::usage);
    CHECK(invoke({"check", (d.path / "missing.ir").string()}).code == exit_code::usage);
}

TEST_CASE("corpus exit codes") {
    temp_dir d;
    const auto dir = d.path / "out";
    CHECK(invoke({"corpus", "--emit", dir.string()}).code == exit_code::ok);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        ++files;
        if (e.path().extension() == ".ir") {
            std::ifstream in(e.path());
            std::string text((std::istreambuf_iterator<char>(in)), {});
            CHECK_NOTHROW(memcheck::parse_ir(text));
        }
    }
    CHECK(files >= 9);
    CHECK(invoke({"corpus", "--emit", dir.string()}).code == exit_code::usage);
    CHECK(invoke({"corpus", "--emit", dir.string(), "--force"}).code == exit_code::ok);
    CHECK(invoke({"corpus"}).code == exit_code::usage);
}

TEST_CASE("bench exit codes") {
    temp_dir d;
    const auto out = (d.path / "report.json").string();
    auto r = invoke({"bench", "--arms", "native/hardened", "--reps", "3", "--out", out});
    CHECK(r.code == exit_code::ok);
    REQUIRE(fs::exists(out));
    std::ifstream in(out);
    auto doc = nlohmann::json::parse(in);
    CHECK(doc.is_object());

    CHECK(invoke({"bench", "--suite", (d.path / "nope").string()}).code == exit_code::usage);
    CHECK(invoke({"bench", "--reps", "2"}).code == exit_code::usage);
    CHECK(invoke({"bench", "--arms", "native/turbo"}).code == exit_code::usage);

    const auto suite = d.path / "divergent";
    fs::create_directories(suite);
    std::ofstream(suite / "a.mpy") << "print(1)\n";
    std::ofstream(suite / "manifest.json")
        << R"({"cases":[{"name":"a","path":"a.mpy","params":{},"expected_digest":")" << bench::sha256_hex("0\n")
        << R"("}]})";
    r = invoke({"bench", "--suite", suite.string(), "--reps", "3"});
    CHECK(r.code == exit_code::gate_failed);
    CHECK(r.err.find("'a'") != std::string::npos);
}
