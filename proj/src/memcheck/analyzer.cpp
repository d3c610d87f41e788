#include "sealpy/memcheck/analyzer.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <tuple>

namespace sealpy::memcheck {

std::string_view to_string(diagnostic_kind kind) {
    switch (kind) {
    case diagnostic_kind::buffer_overflow_write: return "BufferOverflowWrite";
    case diagnostic_kind::buffer_over_read: return "BufferOverRead";
    case diagnostic_kind::null_deref: return "NullDeref";
    case diagnostic_kind::memory_leak: return "MemoryLeak";
    case diagnostic_kind::shift_overflow: return "ShiftOverflow";
    }
    return "?";
}

bool operator<(const diagnostic& a, const diagnostic& b) {
    return std::tie(a.function, a.instruction, a.kind) < std::tie(b.function, b.instruction, b.kind);
}

analysis_budget_exceeded::analysis_budget_exceeded(const std::string& fn, int iters)
    : std::runtime_error("analysis of '" + fn + "' exceeded " + std::to_string(iters) + " iterations"),
      function(fn), iterations(iters) {}

namespace {

struct site_state {
    interval length;
    bool may_unfreed = false;
    bool escaped = false;

    friend bool operator==(const site_state&, const site_state&) = default;
};

struct state {
    bool reachable = false;
    std::vector<abstract_value> vars;
    std::map<int, site_state> sites;

    friend bool operator==(const state&, const state&) = default;
};

state join_states(const state& a, const state& b, bool widen) {
    if (!a.reachable) return b;
    if (!b.reachable) return a;
    state out = a;
    for (std::size_t i = 0; i < out.vars.size(); ++i) {
        const auto joined = a.vars[i].join(b.vars[i]);
        out.vars[i].ptr = joined.ptr;
        out.vars[i].num = widen ? a.vars[i].num.widen(joined.num) : joined.num;
    }
    for (const auto& [site, info] : b.sites) {
        auto [it, inserted] = out.sites.try_emplace(site, info);
        if (inserted) continue;
        auto& mine = it->second;
        const interval joined = mine.length.join(info.length);
        mine.length = widen ? mine.length.widen(joined) : joined;
        mine.may_unfreed = mine.may_unfreed || info.may_unfreed;
        // leak reports need the site to escape on every path
        mine.escaped = mine.escaped && info.escaped;
    }
    return out;
}

class function_analyzer {
  public:
    function_analyzer(const function& fn, const analysis_config& config) : fn_(fn), config_(config) {}

    int run(std::vector<diagnostic>& out) {
        const std::size_t nblocks = fn_.blocks.size();
        in_.assign(nblocks, state{});
        joins_.assign(nblocks, 0);
        find_loop_heads();

        state entry;
        entry.reachable = true;
        entry.vars.assign(fn_.variables.size(), abstract_value{});
        for (const auto& p : fn_.params) {
            auto& v = entry.vars[static_cast<std::size_t>(p.var)];
            v.num = interval::top();
            if (p.type == value_type::addr) v.ptr = pointer_value::unknown();
        }
        in_[0] = entry;

        std::set<int> worklist{0};
        int iterations = 0;
        while (!worklist.empty()) {
            const int b = *worklist.begin();
            worklist.erase(worklist.begin());
            if (++iterations > config_.max_iterations) {
                throw analysis_budget_exceeded(fn_.name, config_.max_iterations);
            }
            const auto& blk = fn_.blocks[static_cast<std::size_t>(b)];
            state s = in_[static_cast<std::size_t>(b)];
            for (const auto& ins : blk.instrs) {
                if (!s.reachable) break;
                transfer(ins, s, false);
            }
            if (!s.reachable) continue;
            for (std::size_t i = 0; i < blk.successors.size(); ++i) {
                const int succ = blk.successors[i];
                state edge = refine_edge(blk, s, i);
                if (!edge.reachable) continue;
                auto& target = in_[static_cast<std::size_t>(succ)];
                state next;
                if (!target.reachable) {
                    next = std::move(edge);
                } else {
                    const bool widen = loop_head_[static_cast<std::size_t>(succ)] &&
                                       joins_[static_cast<std::size_t>(succ)] >= config_.widening_delay;
                    next = join_states(target, edge, widen);
                    ++joins_[static_cast<std::size_t>(succ)];
                }
                if (!(next == target)) {
                    target = std::move(next);
                    worklist.insert(succ);
                }
            }
        }

        // Report from the stable states only.
        for (std::size_t b = 0; b < nblocks; ++b) {
            state s = in_[b];
            for (const auto& ins : fn_.blocks[b].instrs) {
                if (!s.reachable) break;
                transfer(ins, s, true);
            }
        }
        for (const auto& [key, d] : found_) out.push_back(d);
        return iterations;
    }

  private:
    // Widening points: targets of DFS back edges. Every CFG cycle has one.
    void find_loop_heads() {
        const std::size_t n = fn_.blocks.size();
        loop_head_.assign(n, false);
        std::vector<int> color(n, 0); // 0 new, 1 on stack, 2 done
        std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
        color[0] = 1;
        while (!stack.empty()) {
            auto& [b, next] = stack.back();
            const auto& succs = fn_.blocks[static_cast<std::size_t>(b)].successors;
            if (next == succs.size()) {
                color[static_cast<std::size_t>(b)] = 2;
                stack.pop_back();
                continue;
            }
            const int t = succs[next++];
            if (color[static_cast<std::size_t>(t)] == 1) {
                loop_head_[static_cast<std::size_t>(t)] = true;
            } else if (color[static_cast<std::size_t>(t)] == 0) {
                color[static_cast<std::size_t>(t)] = 1;
                stack.push_back({t, 0});
            }
        }
    }

    abstract_value value_of(const state& s, const operand& op) const {
        switch (op.k) {
        case operand::kind::imm: return {interval::constant(op.imm), {}};
        case operand::kind::null: return {interval::constant(0), pointer_value::null()};
        case operand::kind::var: break;
        }
        const auto& v = s.vars[static_cast<std::size_t>(op.var)];
        if (v.num.is_bottom() && v.ptr.is_bottom()) {
            // read of a variable not assigned on this path
            return {interval::top(), pointer_value::unknown()};
        }
        return v;
    }

    void report(const instruction& ins, diagnostic_kind kind, std::string message, bool enabled) {
        if (!enabled) return;
        found_.try_emplace(std::pair{ins.index, kind},
                           diagnostic{kind, fn_.name, ins.index, ins.line, std::move(message)});
    }

    const std::string& var_name(const operand& op) const {
        static const std::string literal = "<literal>";
        if (!op.is_var()) return literal;
        return fn_.variables[static_cast<std::size_t>(op.var)];
    }

    void set(state& s, int var, abstract_value v) { s.vars[static_cast<std::size_t>(var)] = v; }

    // The site a pointer refers to on every path, if any.
    static std::optional<int> definite_site(const pointer_value& p) {
        if (p.may_null || p.may_freed || !p.may_valid) return std::nullopt;
        return p.single_site();
    }

    void escape(state& s, const abstract_value& v) {
        if (auto site = definite_site(v.ptr)) {
            if (auto it = s.sites.find(*site); it != s.sites.end()) it->second.escaped = true;
        }
    }

    void check_access(const instruction& ins, state& s, bool is_store, bool emit) {
        const operand& base = ins.args[0];
        const auto bv = value_of(s, base);
        const auto over_kind = is_store ? diagnostic_kind::buffer_overflow_write : diagnostic_kind::buffer_over_read;
        const char* verb = is_store ? "store to" : "load from";
        if (bv.ptr.may_null) {
            report(ins, diagnostic_kind::null_deref,
                   std::string(verb) + " '" + var_name(base) + "' which may be null (" + bv.ptr.str() + ")", emit);
        }
        if (bv.ptr.may_freed) {
            report(ins, over_kind, std::string(verb) + " '" + var_name(base) + "' after it may have been freed",
                   emit);
        }
        if (bv.ptr.may_valid) {
            const interval idx = value_of(s, ins.args[1]).num;
            for (const int site : bv.ptr.sites) {
                auto it = s.sites.find(site);
                if (it == s.sites.end()) continue;
                const interval& len = it->second.length;
                const bool in_bounds = !idx.is_bottom() && !len.is_bottom() && idx.lo() >= 0 &&
                                       idx.hi() != interval::pos_inf && idx.hi() < len.lo();
                if (!in_bounds) {
                    report(ins, over_kind,
                           std::string(verb) + " '" + var_name(base) + "' at index " + idx.str() +
                               " outside allocation of length " + len.str(),
                           emit);
                    break;
                }
            }
        }
        if (base.is_var()) {
            auto& cur = s.vars[static_cast<std::size_t>(base.var)].ptr;
            if (!cur.is_bottom()) {
                cur.may_null = false;
                cur.may_freed = false;
                if (cur.is_bottom()) s.reachable = false;
            }
        } else if (base.k == operand::kind::null) {
            s.reachable = false;
        }
    }

    void transfer(const instruction& ins, state& s, bool emit) {
        switch (ins.op) {
        case opcode::const_:
            if (ins.args[0].k == operand::kind::null) {
                set(s, ins.dst, {interval::constant(0), pointer_value::null()});
            } else {
                set(s, ins.dst, {interval::constant(ins.args[0].imm), {}});
            }
            break;
        case opcode::copy:
            set(s, ins.dst, value_of(s, ins.args[0]));
            break;
        case opcode::add:
            set(s, ins.dst, {value_of(s, ins.args[0]).num + value_of(s, ins.args[1]).num, {}});
            break;
        case opcode::sub:
            set(s, ins.dst, {value_of(s, ins.args[0]).num - value_of(s, ins.args[1]).num, {}});
            break;
        case opcode::mul:
            set(s, ins.dst, {value_of(s, ins.args[0]).num * value_of(s, ins.args[1]).num, {}});
            break;
        case opcode::shl: {
            const interval amount = value_of(s, ins.args[1]).num;
            if (!amount.subset_of(interval(0, 63))) {
                report(ins, diagnostic_kind::shift_overflow,
                       "shift amount '" + var_name(ins.args[1]) + "' in " + amount.str() +
                           " may fall outside [0, 63]: potential integer overflow",
                       emit);
            }
            set(s, ins.dst, {value_of(s, ins.args[0]).num.shl(amount), {}});
            break;
        }
        case opcode::cmp:
            set(s, ins.dst, {compare(s, ins.cmp, ins.args[0], ins.args[1]), {}});
            break;
        case opcode::alloc: {
            const interval size = value_of(s, ins.args[0]).num;
            interval length = size.meet(interval(0, interval::pos_inf));
            if (length.is_bottom()) length = interval::constant(0);
            auto [it, fresh] = s.sites.try_emplace(ins.index);
            auto& site = it->second;
            // a live pointer to an earlier object from this site keeps its length
            const bool older_live = !fresh && std::any_of(s.vars.begin(), s.vars.end(), [&](const abstract_value& v) {
                return v.ptr.may_valid && v.ptr.sites.contains(ins.index);
            });
            site.length = older_live ? site.length.join(length) : length;
            site.may_unfreed = true;
            site.escaped = false;
            set(s, ins.dst, {interval::top(), pointer_value::valid(ins.index)});
            break;
        }
        case opcode::free: {
            const operand& base = ins.args[0];
            const auto bv = value_of(s, base);
            if (bv.ptr.may_null) {
                report(ins, diagnostic_kind::null_deref,
                       "free of '" + var_name(base) + "' which may be null (" + bv.ptr.str() + ")", emit);
            }
            if (bv.ptr.may_valid) {
                const auto only = bv.ptr.single_site();
                if (only) {
                    if (auto it = s.sites.find(*only); it != s.sites.end()) it->second.may_unfreed = false;
                }
                for (auto& v : s.vars) {
                    if (!v.ptr.may_valid) continue;
                    auto escaped = [&](const pointer_value& p) {
                        return std::any_of(p.sites.begin(), p.sites.end(), [&](int site) {
                            auto it = s.sites.find(site);
                            return it != s.sites.end() && it->second.escaped;
                        });
                    };
                    const bool aliases =
                        std::any_of(v.ptr.sites.begin(), v.ptr.sites.end(),
                                    [&](int site) { return bv.ptr.sites.contains(site); }) ||
                        (bv.ptr.external && (v.ptr.external || escaped(v.ptr))) ||
                        (v.ptr.external && escaped(bv.ptr));
                    if (!aliases) continue;
                    v.ptr.may_freed = true;
                    // strong update when both sides name the same single object
                    if (only && v.ptr.single_site() == only) v.ptr.may_valid = false;
                }
            }
            if (base.is_var() && !bv.ptr.is_bottom()) {
                auto& cur = s.vars[static_cast<std::size_t>(base.var)].ptr;
                cur = pointer_value{false, true, false, bv.ptr.external, bv.ptr.sites};
            }
            break;
        }
        case opcode::load:
            check_access(ins, s, false, emit);
            if (s.reachable) set(s, ins.dst, {interval::top(), pointer_value::unknown()});
            break;
        case opcode::store:
            check_access(ins, s, true, emit);
            escape(s, value_of(s, ins.args[2]));
            break;
        case opcode::call:
            for (const auto& a : ins.args) escape(s, value_of(s, a));
            if (ins.dst >= 0) set(s, ins.dst, {interval::top(), pointer_value::unknown()});
            break;
        case opcode::ret: {
            std::optional<int> returned_site;
            if (!ins.args.empty()) {
                const auto rv = value_of(s, ins.args[0]);
                returned_site = definite_site(rv.ptr);
            }
            for (const auto& [site, info] : s.sites) {
                if (!info.may_unfreed || info.escaped || returned_site == site) continue;
                const instruction* alloc = fn_.instruction_at(site);
                diagnostic d{diagnostic_kind::memory_leak, fn_.name, site, alloc ? alloc->line : ins.line,
                             "allocation may be unfreed when the function returns at line " +
                                 std::to_string(ins.line)};
                if (emit) found_.try_emplace(std::pair{site, diagnostic_kind::memory_leak}, std::move(d));
            }
            break;
        }
        case opcode::br:
        case opcode::jmp:
            break;
        }
    }

    interval compare(const state& s, cmp_kind kind, const operand& a, const operand& b) const {
        const auto av = value_of(s, a);
        const auto bv = value_of(s, b);
        if (kind == cmp_kind::eq || kind == cmp_kind::ne) {
            if (auto p = null_test(s, a, b)) {
                const bool eq = kind == cmp_kind::eq;
                const pointer_value& ptr = p->first;
                if (ptr.may_null && !ptr.may_valid && !ptr.may_freed) return interval::constant(eq ? 1 : 0);
                if (!ptr.may_null) return interval::constant(eq ? 0 : 1);
                return interval(0, 1);
            }
        }
        const interval& x = av.num;
        const interval& y = bv.num;
        if (x.is_bottom() || y.is_bottom()) return interval(0, 1);
        switch (kind) {
        case cmp_kind::lt:
            if (x.hi() < y.lo()) return interval::constant(1);
            if (x.lo() >= y.hi()) return interval::constant(0);
            break;
        case cmp_kind::le:
            if (x.hi() <= y.lo()) return interval::constant(1);
            if (x.lo() > y.hi()) return interval::constant(0);
            break;
        case cmp_kind::eq:
        case cmp_kind::ne: {
            const bool eq = kind == cmp_kind::eq;
            if (x.is_singleton() && y.is_singleton() && x.lo() == y.lo()) return interval::constant(eq ? 1 : 0);
            if (x.meet(y).is_bottom()) return interval::constant(eq ? 0 : 1);
            break;
        }
        }
        return interval(0, 1);
    }

    // When one side is a pointer variable and the other is null (or 0),
    // returns the pointer and its variable index.
    std::optional<std::pair<pointer_value, int>> null_test(const state& s, const operand& a,
                                                           const operand& b) const {
        auto is_null_like = [](const operand& o) {
            return o.k == operand::kind::null || (o.k == operand::kind::imm && o.imm == 0);
        };
        auto ptr_var = [&](const operand& o) -> std::optional<std::pair<pointer_value, int>> {
            if (!o.is_var()) return std::nullopt;
            const auto v = value_of(s, o);
            if (v.ptr.is_bottom()) return std::nullopt;
            return std::pair{v.ptr, o.var};
        };
        if (is_null_like(b)) {
            if (auto p = ptr_var(a)) return p;
        }
        if (is_null_like(a)) {
            if (auto p = ptr_var(b)) return p;
        }
        return std::nullopt;
    }

    static std::int64_t dec(std::int64_t v) {
        return (v == interval::pos_inf || v == interval::neg_inf) ? v : v - 1;
    }
    static std::int64_t inc(std::int64_t v) {
        return (v == interval::pos_inf || v == interval::neg_inf) ? v : v + 1;
    }

    // Constrain state so that (a kind b) holds.
    void assume(state& s, cmp_kind kind, const operand& a, const operand& b) {
        if (kind == cmp_kind::eq || kind == cmp_kind::ne) {
            if (auto p = null_test(s, a, b)) {
                auto& ptr = s.vars[static_cast<std::size_t>(p->second)].ptr;
                if (kind == cmp_kind::eq) {
                    ptr.may_valid = false;
                    ptr.may_freed = false;
                    if (!ptr.may_null) s.reachable = false;
                } else {
                    ptr.may_null = false;
                    if (ptr.is_bottom()) s.reachable = false;
                }
                return;
            }
        }
        interval x = value_of(s, a).num;
        interval y = value_of(s, b).num;
        if (x.is_bottom() || y.is_bottom()) return;
        switch (kind) {
        case cmp_kind::lt:
            x = x.meet(interval(interval::neg_inf, dec(y.hi())));
            y = y.meet(interval(inc(x.is_bottom() ? 0 : x.lo()), interval::pos_inf));
            break;
        case cmp_kind::le:
            x = x.meet(interval(interval::neg_inf, y.hi()));
            y = y.meet(interval(x.is_bottom() ? 0 : x.lo(), interval::pos_inf));
            break;
        case cmp_kind::eq:
            x = x.meet(y);
            y = x;
            break;
        case cmp_kind::ne:
            if (y.is_singleton()) {
                if (x.lo() == y.lo()) x = x.meet(interval(inc(x.lo()), interval::pos_inf));
                else if (x.hi() == y.lo()) x = x.meet(interval(interval::neg_inf, dec(x.hi())));
            }
            if (x.is_singleton()) {
                if (y.lo() == x.lo()) y = y.meet(interval(inc(y.lo()), interval::pos_inf));
                else if (y.hi() == x.lo()) y = y.meet(interval(interval::neg_inf, dec(y.hi())));
            }
            break;
        }
        if (x.is_bottom() || y.is_bottom()) {
            s.reachable = false;
            return;
        }
        if (a.is_var() && s.vars[static_cast<std::size_t>(a.var)].ptr.is_bottom()) {
            s.vars[static_cast<std::size_t>(a.var)].num = x;
        }
        if (b.is_var() && s.vars[static_cast<std::size_t>(b.var)].ptr.is_bottom()) {
            s.vars[static_cast<std::size_t>(b.var)].num = y;
        }
    }

    static cmp_kind negate(cmp_kind k, bool& swap) {
        swap = false;
        switch (k) {
        case cmp_kind::lt: swap = true; return cmp_kind::le; // !(a < b)  <=>  b <= a
        case cmp_kind::le: swap = true; return cmp_kind::lt; // !(a <= b) <=>  b < a
        case cmp_kind::eq: return cmp_kind::ne;
        case cmp_kind::ne: return cmp_kind::eq;
        }
        return k;
    }

    state refine_edge(const basic_block& blk, const state& out, std::size_t succ_index) {
        state s = out;
        if (blk.instrs.empty() || blk.instrs.back().op != opcode::br) return s;
        const instruction& br = blk.instrs.back();
        const bool truth = succ_index == 0;
        if (br.then_block == br.else_block) return s;
        const operand& cond = br.args[0];
        if (!cond.is_var()) {
            const bool taken = cond.k == operand::kind::imm && cond.imm != 0;
            if (taken != truth) s.reachable = false;
            return s;
        }

        auto& cv = s.vars[static_cast<std::size_t>(cond.var)];
        if (!cv.ptr.is_bottom()) {
            // branching on an address: true means non-null
            if (truth) {
                cv.ptr.may_null = false;
            } else {
                cv.ptr.may_valid = false;
                cv.ptr.may_freed = false;
                if (!cv.ptr.may_null) s.reachable = false;
            }
            if (cv.ptr.is_bottom()) s.reachable = false;
            return s;
        }
        if (truth) {
            interval c = cv.num;
            if (c.is_singleton() && c.lo() == 0) {
                s.reachable = false;
                return s;
            }
            if (c.lo() == 0) c = interval(1, c.hi());
            else if (c.hi() == 0) c = interval(c.lo(), -1);
            cv.num = c;
        } else {
            cv.num = cv.num.meet(interval::constant(0));
            if (cv.num.is_bottom()) {
                s.reachable = false;
                return s;
            }
        }

        // Find the cmp defining the condition within this block, with its
        // operands untouched between the cmp and the branch.
        const auto& ins = blk.instrs;
        for (std::size_t i = ins.size() - 1; i-- > 0;) {
            if (ins[i].dst != cond.var) continue;
            if (ins[i].op != opcode::cmp) return s;
            const auto& a = ins[i].args[0];
            const auto& b = ins[i].args[1];
            for (std::size_t j = i + 1; j + 1 < ins.size(); ++j) {
                if ((a.is_var() && ins[j].dst == a.var) || (b.is_var() && ins[j].dst == b.var)) return s;
            }
            if (truth) {
                assume(s, ins[i].cmp, a, b);
            } else {
                bool swap = false;
                const cmp_kind k = negate(ins[i].cmp, swap);
                if (swap) assume(s, k, b, a);
                else assume(s, k, a, b);
            }
            return s;
        }
        return s;
    }

    const function& fn_;
    const analysis_config& config_;
    std::vector<state> in_;
    std::vector<int> joins_;
    std::vector<bool> loop_head_;
    std::map<std::pair<int, diagnostic_kind>, diagnostic> found_;
};

} // namespace

analysis_result analyze(const ir_program& program, const analysis_config& config) {
    analysis_result result;
    for (const auto& fn : program.functions) {
        function_analyzer fa(fn, config);
        result.stats.iterations += fa.run(result.diagnostics);
        ++result.stats.functions;
    }
    std::sort(result.diagnostics.begin(), result.diagnostics.end());
    return result;
}

} // namespace sealpy::memcheck
