#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sealpy/memcheck/analyzer.hpp"
#include "sealpy/memcheck/corpus.hpp"
#include "sealpy/memcheck/ir.hpp"
#include "sealpy/memcheck/report.hpp"

using namespace sealpy::memcheck;

namespace {

const corpus_file& corpus(const std::string& name) {
    for (const auto& f : corpus_files()) {
        if (f.name == name) return f;
    }
    throw std::runtime_error("no corpus file " + name);
}

std::vector<diagnostic> check(const std::string& text) { return analyze(parse_ir(text)).diagnostics; }

// Concrete IR semantics used as the soundness oracle. Values are integers or
// object references; every memory bug stops the run.
struct concrete_value {
    bool is_ptr = false;
    std::int64_t num = 0;
    int obj = -1; // -1 is null
};

struct concrete_object {
    std::int64_t length = 0;
    int site = 0;
    bool freed = false;
    bool escaped = false;
    std::map<std::int64_t, std::int64_t> cells;
};

struct concrete_bug {
    int instruction;
    diagnostic_kind kind;
    auto operator<=>(const concrete_bug&) const = default;
};

std::vector<concrete_bug> run_concrete(const function& fn, const std::vector<std::int64_t>& args) {
    std::vector<concrete_value> vars(fn.variables.size());
    for (std::size_t i = 0; i < fn.params.size(); ++i) vars[fn.params[i].var] = {false, args.at(i), -1};
    std::vector<concrete_object> objects;
    auto val = [&](const operand& o) -> concrete_value {
        if (o.k == operand::kind::imm) return {false, o.imm, -1};
        if (o.k == operand::kind::null) return {true, 0, -1};
        return vars[o.var];
    };
    auto wrap = [](unsigned __int128 v) { return static_cast<std::int64_t>(static_cast<std::uint64_t>(v)); };

    int block = 0;
    for (int steps = 0; steps < 10000; ++steps) {
        const auto& blk = fn.blocks[block];
        int next = -1;
        for (const auto& ins : blk.instrs) {
            auto a = [&](int i) { return val(ins.args[i]); };
            auto access = [&](bool store) -> std::optional<concrete_bug> {
                const auto base = a(0);
                const auto over = store ? diagnostic_kind::buffer_overflow_write : diagnostic_kind::buffer_over_read;
                if (base.obj < 0) return concrete_bug{ins.index, diagnostic_kind::null_deref};
                auto& o = objects[base.obj];
                const std::int64_t idx = a(1).num;
                if (o.freed || idx < 0 || idx >= o.length) return concrete_bug{ins.index, over};
                return std::nullopt;
            };
            switch (ins.op) {
            case opcode::const_:
                vars[ins.dst] = ins.args[0].k == operand::kind::null ? concrete_value{true, 0, -1}
                                                                       : concrete_value{false, ins.args[0].imm, -1};
                break;
            case opcode::copy: vars[ins.dst] = a(0); break;
            case opcode::add: vars[ins.dst] = {false, wrap(static_cast<unsigned __int128>(a(0).num) + static_cast<std::uint64_t>(a(1).num)), -1}; break;
            case opcode::sub: vars[ins.dst] = {false, wrap(static_cast<std::uint64_t>(a(0).num) - static_cast<std::uint64_t>(a(1).num)), -1}; break;
            case opcode::mul: vars[ins.dst] = {false, wrap(static_cast<std::uint64_t>(a(0).num) * static_cast<std::uint64_t>(a(1).num)), -1}; break;
            case opcode::shl: {
                const std::int64_t amount = a(1).num;
                if (amount < 0 || amount > 63) return {{ins.index, diagnostic_kind::shift_overflow}};
                vars[ins.dst] = {false, static_cast<std::int64_t>(static_cast<std::uint64_t>(a(0).num) << amount), -1};
                break;
            }
            case opcode::cmp: {
                const auto x = a(0), y = a(1);
                bool r = false;
                if (x.is_ptr || y.is_ptr) {
                    const bool xn = x.is_ptr ? x.obj < 0 : x.num == 0;
                    const bool yn = y.is_ptr ? y.obj < 0 : y.num == 0;
                    const bool same = (xn && yn) || (x.is_ptr && y.is_ptr && x.obj == y.obj);
                    r = ins.cmp == cmp_kind::eq ? same : !same;
                } else {
                    switch (ins.cmp) {
                    case cmp_kind::lt: r = x.num < y.num; break;
                    case cmp_kind::le: r = x.num <= y.num; break;
                    case cmp_kind::eq: r = x.num == y.num; break;
                    case cmp_kind::ne: r = x.num != y.num; break;
                    }
                }
                vars[ins.dst] = {false, r ? 1 : 0, -1};
                break;
            }
            case opcode::alloc: {
                concrete_object o;
                o.length = std::max<std::int64_t>(0, a(0).num);
                o.site = ins.index;
                objects.push_back(o);
                vars[ins.dst] = {true, 0, static_cast<int>(objects.size()) - 1};
                break;
            }
            case opcode::free: {
                const auto p = a(0);
                if (p.obj < 0) return {{ins.index, diagnostic_kind::null_deref}};
                objects[p.obj].freed = true;
                break;
            }
            case opcode::load:
                if (auto bug = access(false)) return {*bug};
                vars[ins.dst] = {false, objects[a(0).obj].cells[a(1).num], -1};
                break;
            case opcode::store: {
                if (auto bug = access(true)) return {*bug};
                const auto v = a(2);
                if (v.is_ptr && v.obj >= 0) objects[v.obj].escaped = true;
                objects[a(0).obj].cells[a(1).num] = v.is_ptr ? 0 : v.num;
                break;
            }
            case opcode::call: throw std::logic_error("calls are not generated");
            case opcode::ret: {
                int returned = -1;
                if (!ins.args.empty() && a(0).is_ptr) returned = a(0).obj;
                std::vector<concrete_bug> leaks;
                for (std::size_t i = 0; i < objects.size(); ++i) {
                    const auto& o = objects[i];
                    if (!o.freed && !o.escaped && static_cast<int>(i) != returned) {
                        leaks.push_back({o.site, diagnostic_kind::memory_leak});
                    }
                }
                return leaks;
            }
            case opcode::br: next = a(0).is_ptr ? (a(0).obj >= 0 ? ins.then_block : ins.else_block)
                                                : (a(0).num != 0 ? ins.then_block : ins.else_block);
                break;
            case opcode::jmp: next = ins.then_block; break;
            }
        }
        if (next < 0) next = block + 1; // fallthrough
        block = next;
    }
    throw std::logic_error("concrete run did not terminate");
}

// Random well-formed program text. With `loops` set, jumps may go backwards.
std::string random_program(std::mt19937_64& rng, bool loops) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    std::ostringstream out;
    const int nblocks = pick(1, 6);
    const char* ints[] = {"i0", "i1", "i2", "i3"};
    const char* ptrs[] = {"p0", "p1", "p2"};
    const char* cmps[] = {"lt", "le", "eq", "ne"};
    auto int_operand = [&]() -> std::string {
        if (pick(0, 3) == 0) return std::to_string(pick(-2, 8));
        return ints[pick(0, 3)];
    };
    out << "fn f(a:int, b:int) {\nentry:\n";
    out << "  i0 = copy a\n  i1 = copy b\n  i2 = const " << pick(-2, 8) << "\n  i3 = const " << pick(0, 4) << "\n";
    for (const char* p : ptrs) {
        if (pick(0, 2) == 0) out << "  " << p << " = const null\n";
        else out << "  " << p << " = alloc " << int_operand() << "\n";
    }
    out << "  jmp B0\n";
    for (int b = 0; b < nblocks; ++b) {
        out << "B" << b << ":\n";
        const int n = pick(1, 5);
        for (int i = 0; i < n; ++i) {
            switch (pick(0, 10)) {
            case 0: out << "  " << ints[pick(0, 3)] << " = const " << pick(-3, 9) << "\n"; break;
            case 1: out << "  " << ints[pick(0, 3)] << " = add " << int_operand() << " " << int_operand() << "\n"; break;
            case 2: out << "  " << ints[pick(0, 3)] << " = sub " << int_operand() << " " << int_operand() << "\n"; break;
            case 3: out << "  " << ints[pick(0, 3)] << " = mul " << int_operand() << " " << int_operand() << "\n"; break;
            case 4: out << "  " << ints[pick(0, 3)] << " = shl " << int_operand() << " " << int_operand() << "\n"; break;
            case 5: out << "  " << ptrs[pick(0, 2)] << " = alloc " << int_operand() << "\n"; break;
            case 6: out << "  " << ptrs[pick(0, 2)] << " = copy " << ptrs[pick(0, 2)] << "\n"; break;
            case 7: out << "  free " << ptrs[pick(0, 2)] << "\n"; break;
            case 8: out << "  " << ints[pick(0, 3)] << " = load " << ptrs[pick(0, 2)] << " " << int_operand() << "\n"; break;
            case 9: out << "  store " << ptrs[pick(0, 2)] << " " << int_operand() << " " << int_operand() << "\n"; break;
            case 10: out << "  store " << ptrs[pick(0, 2)] << " " << int_operand() << " " << ptrs[pick(0, 2)] << "\n"; break;
            }
        }
        auto target = [&]() {
            if (loops && pick(0, 3) == 0) return "B" + std::to_string(pick(0, b));
            if (b + 1 >= nblocks) return std::string("done");
            return "B" + std::to_string(pick(b + 1, nblocks - 1));
        };
        switch (pick(0, 3)) {
        case 0: out << "  jmp " << target() << "\n"; break;
        case 1: {
            out << "  c = cmp " << cmps[pick(0, 3)] << " " << int_operand() << " " << int_operand() << "\n";
            out << "  br c " << target() << " " << target() << "\n";
            break;
        }
        case 2: {
            out << "  c = cmp " << (pick(0, 1) ? "eq" : "ne") << " " << ptrs[pick(0, 2)] << " null\n";
            out << "  br c " << target() << " " << target() << "\n";
            break;
        }
        case 3: out << "  br " << ints[pick(0, 3)] << " " << target() << " " << target() << "\n"; break;
        }
    }
    out << "done:\n";
    switch (pick(0, 2)) {
    case 0: out << "  ret\n"; break;
    case 1: out << "  ret " << ints[pick(0, 3)] << "\n"; break;
    case 2: out << "  ret " << ptrs[pick(0, 2)] << "\n"; break;
    }
    out << "}\n";
    return out.str();
}

} // namespace

TEST_CASE("parse_ir accepts the minimal function") {
    const auto prog = parse_ir("fn main() { ret }");
    REQUIRE(prog.functions.size() == 1);
    CHECK(prog.functions[0].blocks.size() == 1);
    CHECK(prog.functions[0].instruction_count() == 1);
}

TEST_CASE("parse_ir rejects malformed text with a line number") {
    try {
        parse_ir("fn main() {\nentry:\n  x = frob 1 2\n  ret\n}\n");
        FAIL("expected a syntax error");
    } catch (const ir_syntax_error& e) {
        CHECK(e.line == 3);
    }
    CHECK_THROWS_AS(parse_ir("fn main() {\nentry:\n  jmp nowhere\n}\n"), ir_syntax_error);
    CHECK_THROWS_AS(parse_ir("fn main() {\nentry:\n  ret\n"), ir_syntax_error);
    CHECK_THROWS_AS(parse_ir("fn main() {\nentry:\n  ret y\n}\n"), ir_syntax_error);
    CHECK_THROWS_AS(parse_ir("fn f(x:float) {\n  ret\n}\n"), ir_syntax_error);
    CHECK_THROWS_AS(parse_ir("garbage"), ir_syntax_error);
}

TEST_CASE("dtoa_vuln parses to one function with a shift and an allocation") {
    const auto prog = parse_ir(corpus("dtoa_vuln.ir").text);
    REQUIRE(prog.functions.size() == 1);
    int shl = 0, alloc = 0;
    for (const auto& b : prog.functions[0].blocks) {
        for (const auto& ins : b.instrs) {
            shl += ins.op == opcode::shl;
            alloc += ins.op == opcode::alloc;
        }
    }
    CHECK(shl == 1);
    CHECK(alloc == 1);
}

TEST_CASE("interval lattice identities") {
    const std::vector<interval> samples = {interval::bottom(), interval::top(), interval::constant(0),
                                           interval(-5, 7), interval(interval::neg_inf, 3),
                                           interval(2, interval::pos_inf)};
    for (const auto& s : samples) {
        CHECK(s.join(s) == s);
        CHECK(s.widen(s) == s);
        CHECK(s.meet(s) == s);
        for (const auto& t : samples) {
            CHECK(s.subset_of(s.join(t)));
            CHECK(t.subset_of(s.widen(s.join(t))));
        }
    }
    CHECK(interval(1, 2).widen(interval(1, 3)) == interval(1, interval::pos_inf));
    CHECK(interval(1, 2).widen(interval(0, 2)) == interval(interval::neg_inf, 2));
    CHECK((interval(interval::pos_inf - 1, interval::pos_inf - 1) + interval::constant(5)).is_top());
    CHECK(interval::constant(1).shl(interval(0, 63)).is_top());
    CHECK(interval::constant(1).shl(interval(2, 4)) == interval(4, 16));
}

TEST_CASE("pointer lattice identities") {
    const std::vector<pointer_value> samples = {pointer_value{}, pointer_value::null(), pointer_value::valid(3),
                                                pointer_value::unknown(),
                                                pointer_value::valid(1).join(pointer_value::null())};
    for (const auto& p : samples) {
        CHECK(p.join(p) == p);
        const abstract_value v{interval(0, 4), p};
        CHECK(v.join(v) == v);
    }
    CHECK(pointer_value::null().str() == "Null");
    CHECK(pointer_value::valid(1).str() == "NonNull");
    CHECK(pointer_value::valid(1).join(pointer_value::null()).str() == "MaybeNull");
    CHECK(pointer_value::valid(1).join(pointer_value::valid(2)).single_site() == std::nullopt);
}

TEST_CASE("listing-derived files reproduce the published findings") {
    auto d = check(corpus("dtoa_vuln.ir").text);
    REQUIRE(d.size() == 1);
    CHECK(d[0].kind == diagnostic_kind::shift_overflow);
    CHECK(d[0].line == corpus("dtoa_vuln.ir").expected.at(0).line);
    CHECK(check(corpus("dtoa_fixed.ir").text).empty());
    d = check(corpus("codemap_vuln.ir").text);
    REQUIRE(d.size() == 1);
    CHECK(d[0].kind == diagnostic_kind::null_deref);
    CHECK(check(corpus("codemap_fixed.ir").text).empty());
}

TEST_CASE("every corpus file yields exactly its expected findings") {
    for (const auto& f : corpus_files()) {
        CAPTURE(f.name);
        const auto d = check(f.text);
        std::multiset<std::pair<int, int>> got, want;
        for (const auto& x : d) got.insert({static_cast<int>(x.kind), x.line});
        for (const auto& x : f.expected) want.insert({static_cast<int>(x.kind), x.line});
        CHECK(got == want);
    }
}

TEST_CASE("generate_corpus writes the files and a manifest") {
    const auto dir = std::filesystem::temp_directory_path() / "sealpy_corpus_unit";
    std::filesystem::remove_all(dir);
    const auto names = generate_corpus(dir);
    CHECK(names.size() == 10);
    for (const auto& n : names) CHECK(std::filesystem::exists(dir / n));
    std::ifstream in(dir / "manifest.json");
    const auto manifest = nlohmann::json::parse(in);
    CHECK(manifest.size() == 9);
    int listing = 0;
    for (const auto& m : manifest) listing += m["listing_derived"].template get<bool>();
    CHECK(listing == 4);
    std::filesystem::remove_all(dir);
}

TEST_CASE("reports are stable in both formats") {
    analysis_stats stats{1, 4};
    CHECK(emit_report({}, stats, report_format::text) == "no findings\n");
    const auto empty = nlohmann::json::parse(emit_report({}, stats, report_format::json));
    CHECK(empty["findings"].empty());
    CHECK(empty["stats"]["iterations"] == 4);

    std::vector<diagnostic> d = {
        {diagnostic_kind::memory_leak, "g", 2, 9, "leak"},
        {diagnostic_kind::null_deref, "f", 5, 7, "null"},
        {diagnostic_kind::buffer_over_read, "f", 5, 7, "read"},
        {diagnostic_kind::shift_overflow, "f", 1, 3, "shift"},
    };
    CHECK(emit_report(d, stats, report_format::text) ==
          "f:1 (line 3): ShiftOverflow: shift\n"
          "f:5 (line 7): BufferOverRead: read\n"
          "f:5 (line 7): NullDeref: null\n"
          "g:2 (line 9): MemoryLeak: leak\n"
          "4 findings\n");
    const auto j = nlohmann::json::parse(emit_report(d, stats, report_format::json));
    REQUIRE(j["findings"].size() == 4);
    CHECK(j["findings"][0] == nlohmann::json{{"kind", "ShiftOverflow"},
                                             {"function", "f"},
                                             {"instruction", 1},
                                             {"line", 3},
                                             {"message", "shift"}});
    CHECK(j["findings"][3]["kind"] == "MemoryLeak");
}

TEST_CASE("analysis terminates on random programs with loops") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const auto text = random_program(rng, true);
        CAPTURE(text);
        const auto result = analyze(parse_ir(text));
        CHECK(result.stats.iterations < analysis_config{}.max_iterations);
    }
}

TEST_CASE("iteration budget is reported, not truncated") {
    analysis_config tight;
    tight.max_iterations = 2;
    CHECK_THROWS_AS(analyze(parse_ir(corpus("clean.ir").text), tight), analysis_budget_exceeded);
}

TEST_CASE("concrete agreement on loop-free programs") {
    std::mt19937_64 rng(11);
    int bugs_seen = 0;
    for (int i = 0; i < 600; ++i) {
        const auto text = random_program(rng, false);
        const auto prog = parse_ir(text);
        std::set<concrete_bug> flagged;
        for (const auto& d : analyze(prog).diagnostics) flagged.insert({d.instruction, d.kind});
        for (int a = -3; a <= 4; ++a) {
            for (int b = -3; b <= 4; ++b) {
                for (const auto& bug : run_concrete(prog.functions[0], {a, b})) {
                    ++bugs_seen;
                    if (!flagged.contains(bug)) {
                        CAPTURE(text);
                        CAPTURE(a);
                        CAPTURE(b);
                        CAPTURE(bug.instruction);
                        CAPTURE(to_string(bug.kind));
                        FAIL("concrete bug missed by the analyzer");
                    }
                }
            }
        }
    }
    CHECK(bugs_seen > 100);
}
