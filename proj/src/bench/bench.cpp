#include "sealpy/bench/bench.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include "json.hpp"
#include <sstream>

#include "sealpy/interp/ast.hpp"

namespace sealpy::bench {

using nlohmann::json;

std::string arm::name() const {
    return std::string(sandbox::to_string(profile)) + "/" + std::string(collections::to_string(hardening));
}

arm parse_arm(std::string_view text) {
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) throw std::invalid_argument("arm must be profile/hardening: " + std::string(text));
    const auto p = text.substr(0, slash);
    const auto h = text.substr(slash + 1);
    arm a;
    if (p == "enclave") a.profile = sandbox::profile::enclave;
    else if (p == "native") a.profile = sandbox::profile::native;
    else throw std::invalid_argument("unknown profile in arm: " + std::string(text));
    if (h == "hardened") a.hardening = sandbox::hardening_mode::hardened;
    else if (h == "baseline") a.hardening = sandbox::hardening_mode::baseline;
    else throw std::invalid_argument("unknown hardening in arm: " + std::string(text));
    return a;
}

std::vector<arm> parse_arms(std::string_view text) {
    std::vector<arm> out;
    std::size_t b = 0;
    while (b <= text.size()) {
        const auto c = text.find(',', b);
        const auto part = text.substr(b, c == std::string_view::npos ? std::string_view::npos : c - b);
        const arm a = parse_arm(part);
        if (std::find(out.begin(), out.end(), a) != out.end()) {
            throw std::invalid_argument("duplicate arm: " + a.name());
        }
        out.push_back(a);
        b = c == std::string_view::npos ? text.size() + 1 : c + 1;
    }
    return out;
}

std::vector<arm> default_arms() {
    return {{sandbox::profile::native, sandbox::hardening_mode::hardened},
            {sandbox::profile::native, sandbox::hardening_mode::baseline},
            {sandbox::profile::enclave, sandbox::hardening_mode::hardened}};
}

namespace {

std::string join(const std::vector<std::string>& xs) {
    std::string out;
    for (const auto& x : xs) {
        if (!out.empty()) out += ", ";
        out += x;
    }
    return out;
}

} // namespace

correctness_gate_failed::correctness_gate_failed(std::string c, std::vector<std::string> a, const std::string& detail)
    : std::runtime_error("correctness gate failed for case '" + c + "' (arms: " + join(a) + "): " + detail),
      case_name(std::move(c)),
      arms(std::move(a)) {}

unknown_arm::unknown_arm(const std::string& name) : std::runtime_error("report has no arm " + name) {}

std::vector<bench_case> load_manifest(const std::filesystem::path& suite_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(suite_dir, ec)) throw suite_not_found("suite directory not found: " + suite_dir.string());
    const fs::path manifest = suite_dir / "manifest.json";
    std::ifstream in(manifest);
    if (!in) {
        if (fs::is_empty(suite_dir, ec)) throw empty_suite("suite directory is empty: " + suite_dir.string());
        throw suite_not_found("manifest.json not found in " + suite_dir.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed manifest " + manifest.string() + ": " + e.what());
    }
    std::vector<bench_case> out;
    try {
        for (const auto& c : doc.at("cases")) {
            bench_case bc;
            bc.name = c.at("name").get<std::string>();
            bc.path = c.at("path").get<std::string>();
            if (c.contains("params")) {
                for (const auto& [k, v] : c.at("params").items()) bc.params[k] = v.get<std::int64_t>();
            }
            if (c.contains("expected_digest")) bc.expected_digest = c.at("expected_digest").get<std::string>();
            out.push_back(std::move(bc));
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed manifest " + manifest.string() + ": " + e.what());
    }
    if (out.empty()) throw empty_suite("suite manifest lists no cases: " + manifest.string());
    return out;
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

const cell& bench_report::at(std::string_view case_name, const arm& a) const {
    for (const auto& c : cells) {
        if (c.case_name == case_name && c.arm_used == a) return c;
    }
    throw unknown_arm(a.name());
}

bool bench_report::has_arm(const arm& a) const { return std::find(arms.begin(), arms.end(), a) != arms.end(); }

namespace {

double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2;
}

std::size_t sensitive_allowed(const sandbox::host_access_log& log) {
    using sandbox::access_verdict;
    using sandbox::capability;
    return log.count(capability::filesystem, access_verdict::allowed) +
           log.count(capability::env, access_verdict::allowed) +
           log.count(capability::dynamic_load, access_verdict::allowed);
}

} // namespace

bench_report run_suite(const std::filesystem::path& suite_dir, const std::vector<arm>& arms, int repetitions,
                       const suite_options& options) {
    if (repetitions < 3 || repetitions % 2 == 0) {
        throw std::invalid_argument("repetitions must be odd and at least 3, got " + std::to_string(repetitions));
    }
    if (arms.empty()) throw std::invalid_argument("at least one arm is required");
    bench_report report;
    report.repetitions = repetitions;
    report.arms = arms;
    report.cases = load_manifest(suite_dir);

    std::vector<sandbox::policy> policies;
    for (const auto& a : arms) {
        sandbox::policy_overrides o;
        o.hardening = a.hardening;
        policies.push_back(sandbox::make_policy(a.profile, o));
    }

    std::vector<interp::program> programs;
    for (const auto& c : report.cases) {
        const auto path = suite_dir / c.path;
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read case source " + path.string());
        std::ostringstream text;
        text << in.rdbuf();
        programs.push_back(interp::parse(text.str(), c.path));
    }

    // Correctness gate: no timing is recorded unless every arm agrees.
    for (std::size_t ci = 0; ci < report.cases.size(); ++ci) {
        const bench_case& bc = report.cases[ci];
        interp::run_options opts;
        opts.globals = bc.params;
        std::map<std::string, std::vector<std::string>> by_digest;
        for (std::size_t ai = 0; ai < arms.size(); ++ai) {
            const interp::run_result r = interp::execute(programs[ci], policies[ai], opts);
            if (r.status != interp::run_status::ok) {
                throw correctness_gate_failed(bc.name, {arms[ai].name()}, r.describe());
            }
            cell out;
            out.case_name = bc.name;
            out.arm_used = arms[ai];
            out.digest = sha256_hex(r.audit.output);
            out.counters = r.audit;
            out.counters.output.clear();
            out.allowed_sensitive_accesses = sensitive_allowed(r.host_log);
            by_digest[out.digest].push_back(arms[ai].name());
            report.cells.push_back(std::move(out));
        }
        if (by_digest.size() > 1) {
            std::vector<std::string> names;
            for (const auto& a : arms) names.push_back(a.name());
            throw correctness_gate_failed(bc.name, names, "output digests differ across arms");
        }
        const std::string& digest = by_digest.begin()->first;
        if (!bc.expected_digest.empty() && digest != bc.expected_digest) {
            throw correctness_gate_failed(bc.name, by_digest.begin()->second,
                                          "digest " + digest + " does not match manifest " + bc.expected_digest);
        }
    }

    for (std::size_t ci = 0; ci < report.cases.size(); ++ci) {
        interp::run_options opts;
        opts.globals = report.cases[ci].params;
        for (std::size_t ai = 0; ai < arms.size(); ++ai) {
            cell& out = report.cells[ci * arms.size() + ai];
            for (int rep = 0; rep < repetitions; ++rep) {
                const auto t0 = std::chrono::steady_clock::now();
                const interp::run_result r = interp::execute(programs[ci], policies[ai], opts);
                const auto t1 = std::chrono::steady_clock::now();
                if (r.status != interp::run_status::ok || sha256_hex(r.audit.output) != out.digest) {
                    throw correctness_gate_failed(out.case_name, {arms[ai].name()},
                                                  "timed repetition diverged from the gate run");
                }
                out.allowed_sensitive_accesses += sensitive_allowed(r.host_log);
                out.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
                if (options.progress) options.progress(out.case_name, arms[ai], rep);
            }
            out.median_seconds = median_of(out.seconds);
            const auto [lo, hi] = std::minmax_element(out.seconds.begin(), out.seconds.end());
            out.spread = *lo > 0 ? *hi / *lo : 0;
        }
    }
    return report;
}

overhead_table compare_arms(const bench_report& report, const arm& a, const arm& b) {
    if (!report.has_arm(a)) throw unknown_arm(a.name());
    if (!report.has_arm(b)) throw unknown_arm(b.name());
    overhead_table t;
    t.a = a;
    t.b = b;
    std::vector<double> percents;
    for (const auto& c : report.cases) {
        const double ta = report.at(c.name, a).median_seconds;
        const double tb = report.at(c.name, b).median_seconds;
        const double pct = a == b ? 0.0 : 100.0 * (ta - tb) / tb;
        t.rows.push_back({c.name, pct});
        percents.push_back(pct);
    }
    t.median_percent = percents.empty() ? 0.0 : median_of(percents);
    return t;
}

std::vector<overhead_table> standard_comparisons(const bench_report& report) {
    using sandbox::hardening_mode;
    using sandbox::profile;
    const arm nh{profile::native, hardening_mode::hardened};
    const arm nb{profile::native, hardening_mode::baseline};
    const arm eh{profile::enclave, hardening_mode::hardened};
    std::vector<overhead_table> out;
    if (report.has_arm(nh) && report.has_arm(nb)) out.push_back(compare_arms(report, nh, nb));
    if (report.has_arm(eh) && report.has_arm(nh)) out.push_back(compare_arms(report, eh, nh));
    return out;
}

std::string to_json(const bench_report& report) {
    json doc;
    doc["repetitions"] = report.repetitions;
    doc["arms"] = json::array();
    for (const auto& a : report.arms) doc["arms"].push_back(a.name());
    doc["cases"] = json::array();
    for (const auto& c : report.cases) {
        json jc;
        jc["name"] = c.name;
        jc["path"] = c.path;
        jc["params"] = c.params;
        jc["expected_digest"] = c.expected_digest;
        jc["arms"] = json::object();
        for (const auto& a : report.arms) {
            const cell& x = report.at(c.name, a);
            jc["arms"][a.name()] = {
                {"median_seconds", x.median_seconds},
                {"spread", x.spread},
                {"seconds", x.seconds},
                {"digest", x.digest},
                {"bounds_checks_performed", x.counters.bounds_checks_performed},
                {"allocations", x.counters.allocations},
                {"peak_heap_cells", x.counters.peak_heap_cells},
                {"allowed_sensitive_accesses", x.allowed_sensitive_accesses},
            };
        }
        doc["cases"].push_back(std::move(jc));
    }
    doc["overheads"] = json::array();
    for (const auto& t : standard_comparisons(report)) {
        json jt;
        jt["arm"] = t.a.name();
        jt["over"] = t.b.name();
        jt["median_percent"] = t.median_percent;
        jt["per_case"] = json::object();
        for (const auto& r : t.rows) jt["per_case"][r.case_name] = r.percent;
        doc["overheads"].push_back(std::move(jt));
    }
    return doc.dump(2) + "\n";
}

std::string to_text(const bench_report& report) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-14s %-18s %12s %8s %14s %12s\n", "case", "arm", "median_ms", "spread",
                  "bounds_checks", "peak_cells");
    out += buf;
    for (const auto& c : report.cells) {
        std::snprintf(buf, sizeof buf, "%-14s %-18s %12.3f %8.3f %14llu %12zu\n", c.case_name.c_str(),
                      c.arm_used.name().c_str(), c.median_seconds * 1e3, c.spread,
                      static_cast<unsigned long long>(c.counters.bounds_checks_performed),
                      c.counters.peak_heap_cells);
        out += buf;
    }
    for (const auto& t : standard_comparisons(report)) {
        out += "\noverhead " + t.a.name() + " over " + t.b.name() + "\n";
        for (const auto& r : t.rows) {
            std::snprintf(buf, sizeof buf, "  %-14s %+8.2f%%\n", r.case_name.c_str(), r.percent);
            out += buf;
        }
        std::snprintf(buf, sizeof buf, "  %-14s %+8.2f%%\n", "median", t.median_percent);
        out += buf;
    }
    return out;
}

} // namespace sealpy::bench
