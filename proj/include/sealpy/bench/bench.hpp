#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sealpy/interp/interpreter.hpp"
#include "sealpy/sandbox/policy.hpp"

namespace sealpy::bench {

// A measurement arm: one (profile, hardening) pair, spelled "native/hardened".
struct arm {
    sandbox::profile profile = sandbox::profile::native;
    sandbox::hardening_mode hardening = sandbox::hardening_mode::hardened;

    std::string name() const;
    friend bool operator==(const arm&, const arm&) = default;
};

// Throws std::invalid_argument on anything but "<enclave|native>/<hardened|baseline>".
arm parse_arm(std::string_view text);
// Comma separated list of arms; duplicates are rejected.
std::vector<arm> parse_arms(std::string_view text);
std::vector<arm> default_arms();

struct bench_case {
    std::string name;
    std::string path; // relative to the suite directory
    std::map<std::string, std::int64_t> params;
    std::string expected_digest; // lowercase hex SHA-256 of the output; empty skips the check
};

class suite_not_found : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class empty_suite : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class correctness_gate_failed : public std::runtime_error {
  public:
    correctness_gate_failed(std::string case_name, std::vector<std::string> arms, const std::string& detail);
    std::string case_name;
    std::vector<std::string> arms;
};

class unknown_arm : public std::runtime_error {
  public:
    explicit unknown_arm(const std::string& name);
};

// Reads suite_dir/manifest.json. Throws suite_not_found when the directory
// or manifest is missing and empty_suite when it lists no cases.
std::vector<bench_case> load_manifest(const std::filesystem::path& suite_dir);

std::string sha256_hex(std::string_view data);

struct cell {
    std::string case_name;
    arm arm_used;
    std::vector<double> seconds; // one per repetition, in run order
    double median_seconds = 0;
    double spread = 0; // max / min over repetitions
    interp::execution_audit counters; // output left empty
    std::string digest;
    // Allowed filesystem, env and dynamic-load entries over every run of this cell.
    std::size_t allowed_sensitive_accesses = 0;
};

struct bench_report {
    int repetitions = 0;
    std::vector<arm> arms;
    std::vector<bench_case> cases;
    std::vector<cell> cells; // case-major, arms in the order given

    const cell& at(std::string_view case_name, const arm& a) const;
    bool has_arm(const arm& a) const;
};

struct overhead_row {
    std::string case_name;
    double percent = 0;
};

struct overhead_table {
    arm a;
    arm b;
    std::vector<overhead_row> rows;
    double median_percent = 0;
};

struct suite_options {
    // Called after each timed run: (case, arm, repetition index).
    std::function<void(const std::string&, const arm&, int)> progress;
};

// Parses every case once, runs the correctness gate (one untimed run per
// case and arm, digests must agree with each other and with the manifest),
// then times `repetitions` runs per cell. repetitions must be odd and >= 3.
bench_report run_suite(const std::filesystem::path& suite_dir, const std::vector<arm>& arms, int repetitions,
                       const suite_options& options = {});

// overhead_percent(a over b) = 100 * (median_a - median_b) / median_b per
// case, plus the median over cases. Throws unknown_arm.
overhead_table compare_arms(const bench_report& report, const arm& a, const arm& b);

// Hardened over baseline and enclave over native, for the arms present.
std::vector<overhead_table> standard_comparisons(const bench_report& report);

std::string to_json(const bench_report& report);
std::string to_text(const bench_report& report);

} // namespace sealpy::bench
