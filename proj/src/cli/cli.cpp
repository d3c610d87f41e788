#include "sealpy/cli/cli.hpp"

#include <charconv>
#include <filesystem>
#include <map>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "sealpy/bench/bench.hpp"
#include "sealpy/interp/interpreter.hpp"
#include "sealpy/memcheck/corpus.hpp"
#include "sealpy/memcheck/report.hpp"

#ifndef SEALPY_SUITE_DIR
#define SEALPY_SUITE_DIR "bench/suite"
#endif

namespace sealpy::cli {

namespace {

namespace fs = std::filesystem;

class usage_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw usage_error("cannot read " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

struct run_args {
    std::string file;
    std::string profile;
    std::string policy_file;
    std::size_t heap_cells = 0;
    bool baseline = false;
    std::vector<std::string> globals; // NAME=INT
};

std::map<std::string, std::int64_t> parse_globals(const std::vector<std::string>& items) {
    std::map<std::string, std::int64_t> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        std::int64_t v = 0;
        const char* end = item.data() + item.size();
        if (eq == std::string::npos || eq == 0 ||
            std::from_chars(item.data() + eq + 1, end, v) != std::from_chars_result{end, std::errc{}}) {
            throw usage_error("--set expects NAME=INTEGER, got '" + item + "'");
        }
        out[item.substr(0, eq)] = v;
    }
    return out;
}

int cmd_run(const run_args& a, std::ostream& out, std::ostream& err) {
    sandbox::profile prof = sandbox::profile::enclave;
    sandbox::policy_overrides o;
    if (!a.policy_file.empty()) {
        try {
            std::tie(prof, o) = sandbox::parse_policy_text(read_text(a.policy_file));
        } catch (const sandbox::policy_file_error& e) {
            throw usage_error(a.policy_file + ": " + e.what());
        }
    }
    if (a.profile == "enclave") prof = sandbox::profile::enclave;
    else if (a.profile == "native") prof = sandbox::profile::native;
    if (a.heap_cells != 0) o.heap_budget_cells = a.heap_cells;
    if (a.baseline) o.hardening = sandbox::hardening_mode::baseline;
    sandbox::policy pol = [&] {
        try {
            return sandbox::make_policy(prof, o);
        } catch (const sandbox::inconsistent_policy& e) {
            throw usage_error(std::string("inconsistent policy: ") + e.what());
        }
    }();
    const std::string source = read_text(a.file);
    interp::program prog;
    try {
        prog = interp::parse(source, a.file);
    } catch (const interp::syntax_error& e) {
        err << e.what() << "\n";
        return exit_code::guest_error;
    }
    interp::run_options opts;
    opts.globals = parse_globals(a.globals);
    const interp::run_result r = interp::execute(prog, pol, opts);
    out << r.audit.output;
    out.flush();
    switch (r.status) {
    case interp::run_status::ok: return exit_code::ok;
    case interp::run_status::guest_error: err << r.describe() << "\n"; return exit_code::guest_error;
    case interp::run_status::policy_violation:
    case interp::run_status::memory_budget_exceeded: err << r.describe() << "\n"; return exit_code::policy;
    case interp::run_status::step_limit_exceeded: err << r.describe() << "\n"; return exit_code::guest_error;
    }
    return exit_code::guest_error;
}

int cmd_check(const std::string& file, const std::string& format, std::ostream& out, std::ostream& err) {
    const std::string text = read_text(file);
    memcheck::analysis_result result;
    try {
        result = memcheck::analyze(memcheck::parse_ir(text));
    } catch (const memcheck::ir_syntax_error& e) {
        err << file << ": " << e.what() << "\n";
        return exit_code::guest_error;
    } catch (const memcheck::analysis_budget_exceeded& e) {
        err << file << ": " << e.what() << "\n";
        return exit_code::guest_error;
    }
    const bool any = !result.diagnostics.empty();
    out << memcheck::emit_report(std::move(result.diagnostics), result.stats,
                                 format == "json" ? memcheck::report_format::json : memcheck::report_format::text);
    return any ? exit_code::findings : exit_code::ok;
}

int cmd_bench(const std::string& suite, const std::string& arms_text, int reps, const std::string& out_file,
              std::ostream& out, std::ostream& err) {
    std::vector<bench::arm> arms;
    try {
        arms = arms_text.empty() ? bench::default_arms() : bench::parse_arms(arms_text);
    } catch (const std::invalid_argument& e) {
        throw usage_error(e.what());
    }
    bench::bench_report report;
    try {
        report = bench::run_suite(suite, arms, reps);
    } catch (const bench::correctness_gate_failed& e) {
        err << e.what() << "\n";
        return exit_code::gate_failed;
    } catch (const bench::suite_not_found& e) {
        throw usage_error(e.what());
    } catch (const bench::empty_suite& e) {
        throw usage_error(e.what());
    } catch (const std::invalid_argument& e) {
        throw usage_error(e.what());
    } catch (const sandbox::inconsistent_policy& e) {
        throw usage_error(std::string("inconsistent arm: ") + e.what());
    }
    out << bench::to_text(report);
    if (!out_file.empty()) {
        std::ofstream f(out_file, std::ios::binary);
        if (!f) throw usage_error("cannot write " + out_file);
        f << bench::to_json(report);
    }
    return exit_code::ok;
}

int cmd_corpus(const std::string& dir, bool force, std::ostream& out) {
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!fs::is_directory(dir, ec)) throw usage_error(dir + " exists and is not a directory");
        if (!fs::is_empty(dir, ec) && !force) throw usage_error(dir + " is not empty (use --force to overwrite)");
    }
    for (const auto& name : memcheck::generate_corpus(dir)) out << (fs::path(dir) / name).string() << "\n";
    return exit_code::ok;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sandboxed guest interpreter, memory-safety checker and benchmark harness", "sealpy"};
    app.require_subcommand(1);

    run_args ra;
    auto* run = app.add_subcommand("run", "Execute a guest program");
    run->add_option("file", ra.file, "Guest source file")->required();
    run->add_option("--profile", ra.profile, "Sandbox profile")->check(CLI::IsMember({"enclave", "native"}));
    run->add_option("--policy", ra.policy_file, "Policy file (key = value lines)");
    run->add_option("--heap-cells", ra.heap_cells, "Heap budget in cells")->check(CLI::PositiveNumber);
    run->add_flag("--baseline", ra.baseline, "Use the baseline collection access path");
    run->add_option("--set", ra.globals, "Bind an integer global before the run (NAME=INT, repeatable)");

    std::string ir_file;
    std::string format = "text";
    auto* check = app.add_subcommand("check", "Analyze an IR file for memory-safety bugs");
    check->add_option("ir_file", ir_file, "IR source file")->required();
    check->add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "json"}));

    std::string suite = SEALPY_SUITE_DIR;
    std::string arms;
    int reps = 5;
    std::string out_file;
    auto* bench = app.add_subcommand("bench", "Run the benchmark suite across measurement arms");
    bench->add_option("--suite", suite, "Suite directory holding manifest.json");
    bench->add_option("--arms", arms, "Comma separated profile/hardening pairs");
    bench->add_option("--reps", reps, "Timed repetitions per cell (odd, >= 3)");
    bench->add_option("--out", out_file, "Write the JSON report here");

    std::string emit_dir;
    bool force = false;
    auto* corpus = app.add_subcommand("corpus", "Write the memcheck corpus");
    corpus->add_option("--emit", emit_dir, "Target directory")->required();
    corpus->add_flag("--force", force, "Write into a non-empty directory");

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    if (!argv_rev.empty()) argv_rev.pop_back();
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_code::usage;
    }

    try {
        if (*run) return cmd_run(ra, out, err);
        if (*check) return cmd_check(ir_file, format, out, err);
        if (*bench) return cmd_bench(suite, arms, reps, out_file, out, err);
        if (*corpus) return cmd_corpus(emit_dir, force, out);
    } catch (const usage_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::usage;
    }
    return exit_code::usage;
}

} // namespace sealpy::cli
