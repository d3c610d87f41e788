#include "doctest.h"

#include <boost/multiprecision/cpp_int.hpp>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "json.hpp"
#include "sealpy/bench/bench.hpp"

using namespace sealpy;
using namespace sealpy::bench;

namespace {

namespace fs = std::filesystem;

std::string repr(double d) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, d);
    std::string s(buf, r.ptr);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

// Independent reference outputs for the suite, written directly in C++.

std::string binary_trees_oracle(int depth) {
    // A complete tree of depth d has 2^(d+1) - 1 nodes.
    auto nodes = [](int d) { return (std::int64_t{1} << (d + 1)) - 1; };
    const int min_depth = 4, max_depth = std::max(min_depth + 2, depth);
    std::string out = "stretch tree of depth " + std::to_string(max_depth + 1) +
                      "\t check: " + std::to_string(nodes(max_depth + 1)) + "\n";
    for (int d = min_depth; d <= max_depth; d += 2) {
        const std::int64_t iterations = std::int64_t{1} << (max_depth - d + min_depth);
        out += std::to_string(iterations) + "\t trees of depth " + std::to_string(d) +
               "\t check: " + std::to_string(iterations * nodes(d)) + "\n";
    }
    return out + "long lived tree of depth " + std::to_string(max_depth) +
           "\t check: " + std::to_string(nodes(max_depth)) + "\n";
}

std::string fasta_oracle(int n) {
    const std::string alu = "GGCCGGGCGCGGTGGCTCACGCCTGTAATCCCAGCACTTTGGGAGGCCGAGGCGGGCGGATCACCTGAGGTCAGGAGTTCGAGA"
                            "CCAGCCTGGCCAACATGGTGAAACCCCGTCTCTACTAAAAATACAAAAATTAGCCGGGCGTGGTGGCGCGCGCCTGTAATCCCA"
                            "GCTACTCGGGAGGCTGAGGCAGGAGAATCGCTTGAACCCGGGAGGCGGAGGTTGCAGTGAGCCGAGATCGCGCCACTGCACTCC"
                            "AGCCTGGGCGACAGAGCGAGACTCCGTCTCAAAAA";
    const std::string iub = "acgtBDHKMNRSVWY";
    const std::vector<double> iub_p = {0.27, 0.12, 0.12, 0.27, 0.02, 0.02, 0.02, 0.02,
                                       0.02, 0.02, 0.02, 0.02, 0.02, 0.02, 0.02};
    const std::string homo = "acgt";
    const std::vector<double> homo_p = {0.3029549426680, 0.1979883004921, 0.1975473066391, 0.3015094502008};
    std::int64_t seed = 42;
    std::string out = ">ONE Homo sapiens alu\n";
    std::size_t pos = 0;
    for (int left = n * 2; left > 0; left -= 60) {
        for (int k = 0; k < std::min(60, left); ++k) {
            out += alu[pos];
            pos = (pos + 1) % alu.size();
        }
        out += "\n";
    }
    auto random_fasta = [&](const std::string& chars, const std::vector<double>& probs, int count) {
        std::vector<double> cum;
        double acc = 0.0;
        for (double p : probs) cum.push_back(acc += p);
        for (int left = count; left > 0; left -= 60) {
            for (int k = 0; k < std::min(60, left); ++k) {
                seed = (seed * 3877 + 29573) % 139968;
                const double r = 1.0 * static_cast<double>(seed) / 139968.0;
                std::size_t i = 0;
                while (i + 1 < cum.size() && r >= cum[i]) ++i;
                out += chars[i];
            }
            out += "\n";
        }
    };
    out += ">TWO IUB ambiguity codes\n";
    random_fasta(iub, iub_p, n * 3);
    out += ">THREE Homo sapiens frequency\n";
    random_fasta(homo, homo_p, n * 5);
    return out;
}

// Machin's formula in fixed point with 20 guard digits.
std::string pi_digit_string(int count) {
    using boost::multiprecision::cpp_int;
    const cpp_int scale = boost::multiprecision::pow(cpp_int(10), count + 20);
    auto arctan_inv = [&](int x) {
        cpp_int sum = 0, term = scale / x;
        const cpp_int x2 = x * x;
        for (int k = 1; term != 0; k += 2) {
            sum += ((k / 2) % 2 == 0 ? term : -term) / k;
            term /= x2;
        }
        return sum;
    };
    const cpp_int pi = 16 * arctan_inv(5) - 4 * arctan_inv(239);
    return pi.str().substr(0, static_cast<std::size_t>(count));
}

std::string pidigits_oracle(int count) {
    const std::string ds = pi_digit_string(count);
    std::string out;
    std::size_t i = 0;
    for (; i + 10 <= ds.size(); i += 10) out += ds.substr(i, 10) + "\t:" + std::to_string(i + 10) + "\n";
    if (i < ds.size()) {
        out += ds.substr(i) + std::string(10 - (ds.size() - i), ' ') + "\t:" + std::to_string(ds.size()) + "\n";
    }
    return out;
}

std::pair<double, double> nbody_energies(int steps, std::string* out) {
    const double pi = 3.14159265358979323, solar_mass = 4 * pi * pi, dpy = 365.24;
    struct body {
        double x, y, z, vx, vy, vz, m;
    };
    std::vector<body> bs = {
        {0, 0, 0, 0, 0, 0, solar_mass},
        {4.84143144246472090e+00, -1.16032004402742839e+00, -1.03622044471123109e-01, 1.66007664274403694e-03 * dpy,
         7.69901118419740425e-03 * dpy, -6.90460016972063023e-05 * dpy, 9.54791938424326609e-04 * solar_mass},
        {8.34336671824457987e+00, 4.12479856412430479e+00, -4.03523417114321381e-01, -2.76742510726862411e-03 * dpy,
         4.99852801234917238e-03 * dpy, 2.30417297573763929e-05 * dpy, 2.85885980666130812e-04 * solar_mass},
        {1.28943695621391310e+01, -1.51111514016986312e+01, -2.23307578892655734e-01, 2.96460137564761618e-03 * dpy,
         2.37847173959480950e-03 * dpy, -2.96589568540237556e-05 * dpy, 4.36624404335156298e-05 * solar_mass},
        {1.53796971148509165e+01, -2.59193146099879641e+01, 1.79258772950371181e-01, 2.68067772490389322e-03 * dpy,
         1.62824170038242295e-03 * dpy, -9.51592254519715870e-05 * dpy, 5.15138902046611451e-05 * solar_mass},
    };
    double px = 0, py = 0, pz = 0;
    for (auto& b : bs) {
        px += b.vx * b.m;
        py += b.vy * b.m;
        pz += b.vz * b.m;
    }
    bs[0].vx = -px / solar_mass;
    bs[0].vy = -py / solar_mass;
    bs[0].vz = -pz / solar_mass;
    auto energy = [&] {
        double e = 0;
        for (std::size_t i = 0; i < bs.size(); ++i) {
            const auto& b = bs[i];
            e += 0.5 * b.m * (b.vx * b.vx + b.vy * b.vy + b.vz * b.vz);
            for (std::size_t j = i + 1; j < bs.size(); ++j) {
                const auto& c = bs[j];
                const double dx = b.x - c.x, dy = b.y - c.y, dz = b.z - c.z;
                e -= (b.m * c.m) / std::pow(dx * dx + dy * dy + dz * dz, 0.5);
            }
        }
        return e;
    };
    const double before = energy();
    for (int s = 0; s < steps; ++s) {
        for (std::size_t i = 0; i < bs.size(); ++i) {
            auto& b = bs[i];
            for (std::size_t j = i + 1; j < bs.size(); ++j) {
                auto& c = bs[j];
                const double dx = b.x - c.x, dy = b.y - c.y, dz = b.z - c.z;
                const double d2 = dx * dx + dy * dy + dz * dz;
                const double mag = 0.01 / (d2 * std::pow(d2, 0.5));
                const double m1 = b.m * mag, m2 = c.m * mag;
                b.vx -= dx * m2;
                b.vy -= dy * m2;
                b.vz -= dz * m2;
                c.vx += dx * m1;
                c.vy += dy * m1;
                c.vz += dz * m1;
            }
        }
        for (auto& b : bs) {
            b.x += 0.01 * b.vx;
            b.y += 0.01 * b.vy;
            b.z += 0.01 * b.vz;
        }
    }
    const double after = energy();
    if (out) *out = repr(before) + "\n" + repr(after) + "\n";
    return {before, after};
}

struct temp_suite {
    temp_suite() {
        dir = fs::temp_directory_path() / ("sealpy_bench_" + std::to_string(std::random_device{}()));
        fs::create_directories(dir);
    }
    ~temp_suite() { fs::remove_all(dir); }
    void file(const std::string& name, const std::string& text) const { std::ofstream(dir / name) << text; }
    void manifest(std::vector<nlohmann::json> cases) const {
        nlohmann::json doc;
        doc["cases"] = nlohmann::json::array();
        for (auto& c : cases) doc["cases"].push_back(std::move(c));
        file("manifest.json", doc.dump());
    }
    fs::path dir;
};

nlohmann::json case_json(const std::string& name, const std::string& path, const std::string& digest = "") {
    return {{"name", name}, {"path", path}, {"params", nlohmann::json::object()}, {"expected_digest", digest}};
}

} // namespace

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("manifest digests match independent reference outputs") {
    auto cases = load_manifest(SEALPY_SUITE_DIR);
    REQUIRE(cases.size() == 4);
    for (const auto& c : cases) {
        std::string expected;
        if (c.name == "binary_trees") expected = binary_trees_oracle(static_cast<int>(c.params.at("depth")));
        else if (c.name == "fasta") expected = fasta_oracle(static_cast<int>(c.params.at("n")));
        else if (c.name == "pidigits") expected = pidigits_oracle(static_cast<int>(c.params.at("digits")));
        else if (c.name == "nbody") nbody_energies(static_cast<int>(c.params.at("steps")), &expected);
        INFO(c.name);
        REQUIRE(!expected.empty());
        CHECK(sha256_hex(expected) == c.expected_digest);
    }
}

TEST_CASE("reference oracles agree with published values") {
    CHECK(pi_digit_string(20) == "31415926535897932384");
    auto [before, after] = nbody_energies(1000, nullptr);
    CHECK(before == doctest::Approx(-0.169075164).epsilon(1e-9));
    CHECK(after == doctest::Approx(-0.169087605).epsilon(1e-9));
    CHECK(binary_trees_oracle(4).rfind("stretch tree of depth 7\t check: 255\n", 0) == 0);
}

TEST_CASE("arm parsing") {
    CHECK(parse_arm("enclave/hardened") == arm{sandbox::profile::enclave, sandbox::hardening_mode::hardened});
    CHECK(parse_arm("native/baseline").name() == "native/baseline");
    for (const char* bad : {"", "native", "sgx/hardened", "native/soft", "native/hardened/x"}) {
        CHECK_THROWS_AS(parse_arm(bad), std::invalid_argument);
    }
    CHECK(parse_arms("native/hardened,native/baseline").size() == 2);
    CHECK_THROWS_AS(parse_arms("native/hardened,native/hardened"), std::invalid_argument);
    CHECK(default_arms().size() == 3);
}

TEST_CASE("suite errors") {
    const auto arms = default_arms();
    CHECK_THROWS_AS(run_suite(SEALPY_SUITE_DIR, arms, 1), std::invalid_argument);
    CHECK_THROWS_AS(run_suite(SEALPY_SUITE_DIR, arms, 4), std::invalid_argument);
    CHECK_THROWS_AS(run_suite("/nonexistent/suite", arms, 3), suite_not_found);
    temp_suite empty;
    empty.manifest({});
    CHECK_THROWS_AS(run_suite(empty.dir, arms, 3), empty_suite);
    temp_suite none;
    CHECK_THROWS_AS(load_manifest(none.dir), empty_suite);
    none.file("a.mpy", "print(1)\n");
    CHECK_THROWS_AS(load_manifest(none.dir), suite_not_found);
}

TEST_CASE("correctness gate rejects divergent or failing cases before timing") {
    int timed = 0;
    suite_options opts;
    opts.progress = [&](const std::string&, const arm&, int) { ++timed; };

    temp_suite wrong;
    wrong.file("a.mpy", "print(1)\n");
    wrong.manifest({case_json("a", "a.mpy", sha256_hex("2\n"))});
    try {
        run_suite(wrong.dir, default_arms(), 3, opts);
        FAIL("gate passed");
    } catch (const correctness_gate_failed& e) {
        CHECK(e.case_name == "a");
    }

    temp_suite io;
    io.file("ok.mpy", "print(2)\n");
    io.file("io.mpy", "print(len(read_file('/etc/hostname')))\n");
    io.manifest({case_json("ok", "ok.mpy"), case_json("io", "io.mpy")});
    try {
        run_suite(io.dir, default_arms(), 3, opts);
        FAIL("gate passed");
    } catch (const correctness_gate_failed& e) {
        CHECK(e.case_name == "io");
        CHECK(std::find(e.arms.begin(), e.arms.end(), "enclave/hardened") != e.arms.end());
    }
    CHECK(timed == 0);
}

TEST_CASE("small suite report shape and comparisons") {
    temp_suite s;
    s.file("loop.mpy", "t = 0\nxs = [1, 2, 3]\nfor i in range(2000):\n    t += xs[i % 3]\nprint(t)\n");
    s.file("text.mpy", "s = ''\nfor i in range(100):\n    s += str(i)\nprint(len(s))\n");
    s.manifest({case_json("loop", "loop.mpy", sha256_hex("3999\n")), case_json("text", "text.mpy")});
    int progress = 0;
    suite_options opts;
    opts.progress = [&](const std::string&, const arm&, int) { ++progress; };
    auto report = run_suite(s.dir, default_arms(), 3, opts);
    CHECK(progress == 2 * 3 * 3);
    REQUIRE(report.cells.size() == 6);
    for (const auto& c : report.cells) {
        CHECK(c.seconds.size() == 3);
        std::vector<double> sorted = c.seconds;
        std::sort(sorted.begin(), sorted.end());
        CHECK(c.median_seconds == sorted[1]);
        CHECK(c.spread >= 1.0);
        CHECK(c.allowed_sensitive_accesses == 0);
        CHECK(c.digest == report.at(c.case_name, default_arms()[0]).digest);
    }
    const arm nb{sandbox::profile::native, sandbox::hardening_mode::baseline};
    const arm nh{sandbox::profile::native, sandbox::hardening_mode::hardened};
    CHECK(report.at("loop", nh).counters.bounds_checks_performed == 2000);
    CHECK(report.at("loop", nb).counters.bounds_checks_performed == 0);

    auto self = compare_arms(report, nh, nh);
    CHECK(self.median_percent == 0.0);
    for (const auto& r : self.rows) CHECK(r.percent == 0.0);
    CHECK_THROWS_AS(compare_arms(report, nh, arm{sandbox::profile::enclave, sandbox::hardening_mode::baseline}),
                    unknown_arm);
    CHECK(standard_comparisons(report).size() == 2);

    auto doc = nlohmann::json::parse(to_json(report));
    CHECK(doc.is_object());
    CHECK(to_text(report).find("loop") != std::string::npos);
}
