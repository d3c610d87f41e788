#include "sealpy/interp/interpreter.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <new>
#include <sstream>
#include <unordered_map>

#include "sealpy/interp/value.hpp"
#include "sealpy/runtime/codec.hpp"
#include "sealpy/sandbox/modules.hpp"

namespace sealpy::interp {

std::string_view to_string(run_status s) {
    switch (s) {
    case run_status::ok: return "ok";
    case run_status::guest_error: return "guest-error";
    case run_status::policy_violation: return "policy-violation";
    case run_status::memory_budget_exceeded: return "memory-budget-exceeded";
    case run_status::step_limit_exceeded: return "step-limit-exceeded";
    }
    return "?";
}

std::string run_result::describe() const {
    if (status == run_status::ok) return "ok";
    if (status == run_status::guest_error && error) {
        std::string out = error->source_name;
        if (error->line > 0) out += ":" + std::to_string(error->line);
        out += ": ";
        out += to_string(error->kind);
        if (!error->message.empty()) out += ": " + error->message;
        return out;
    }
    return message;
}

// One parsed program taking part in a run: the main program or a module.
struct program_unit {
    std::shared_ptr<const program> keep;
    const program* prog = nullptr;
    std::vector<int> builtin_of; // symbol -> builtin id, or -1
    std::unordered_map<std::string_view, int> sym_index;
    scope_ref globals;

    int sym_of(std::string_view name) const {
        auto it = sym_index.find(name);
        return it == sym_index.end() ? -1 : it->second;
    }
};

namespace {

using collections::access_context;
using sandbox::capability;

enum builtin_id : int {
    b_len,
    b_range,
    b_print,
    b_str,
    b_int,
    b_float,
    b_abs,
    b_min,
    b_max,
    b_read_file,
    b_getenv,
    b_clock,
    b_zlib_compress,
    b_zlib_decompress,
    builtin_count,
};

constexpr std::string_view builtin_names[builtin_count] = {
    "len", "range", "print", "str", "int", "float", "abs", "min", "max", "read_file", "getenv", "clock",
    "__zlib_compress", "__zlib_decompress",
};

// Only embedded module code may name the codec intrinsics.
constexpr int first_intrinsic = b_zlib_compress;

[[noreturn]] void raise(guest_error_kind k, const std::string& msg) { throw guest_error(k, msg); }

[[noreturn]] void type_error(const std::string& msg) { raise(guest_error_kind::type_error, msg); }

std::string tname(const value& v) { return std::string(type_name(v)); }

bool is_int_like(const value& v) { return v.index() == 1 || v.index() == 2; }
bool is_number(const value& v) { return v.index() >= 1 && v.index() <= 3; }

std::int64_t as_int(const value& v) {
    return v.index() == 1 ? static_cast<std::int64_t>(std::get<bool>(v)) : std::get<std::int64_t>(v);
}

double as_double(const value& v) {
    switch (v.index()) {
    case 1: return std::get<bool>(v) ? 1.0 : 0.0;
    case 2: return static_cast<double>(std::get<std::int64_t>(v));
    default: return std::get<double>(v);
    }
}

[[noreturn]] void int_overflow() { raise(guest_error_kind::overflow_error, "integer overflow"); }

std::int64_t checked_pow(std::int64_t base, std::int64_t exp) {
    std::int64_t result = 1;
    while (exp > 0) {
        if (exp & 1) {
            if (__builtin_mul_overflow(result, base, &result)) int_overflow();
        }
        exp >>= 1;
        if (exp > 0 && __builtin_mul_overflow(base, base, &base)) int_overflow();
    }
    return result;
}

value int_arith(binary_op op, std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    switch (op) {
    case binary_op::add:
        if (__builtin_add_overflow(a, b, &r)) int_overflow();
        return r;
    case binary_op::sub:
        if (__builtin_sub_overflow(a, b, &r)) int_overflow();
        return r;
    case binary_op::mul:
        if (__builtin_mul_overflow(a, b, &r)) int_overflow();
        return r;
    case binary_op::div:
        if (b == 0) raise(guest_error_kind::zero_division_error, "division by zero");
        return static_cast<double>(a) / static_cast<double>(b);
    case binary_op::floordiv: {
        if (b == 0) raise(guest_error_kind::zero_division_error, "integer division or modulo by zero");
        if (a == std::numeric_limits<std::int64_t>::min() && b == -1) int_overflow();
        std::int64_t q = a / b;
        if (a % b != 0 && ((a < 0) != (b < 0))) --q;
        return q;
    }
    case binary_op::mod: {
        if (b == 0) raise(guest_error_kind::zero_division_error, "integer division or modulo by zero");
        if (b == -1) return std::int64_t{0};
        std::int64_t m = a % b;
        if (m != 0 && ((m < 0) != (b < 0))) m += b;
        return m;
    }
    case binary_op::pow:
        if (b < 0) {
            if (a == 0) raise(guest_error_kind::zero_division_error, "0.0 cannot be raised to a negative power");
            return std::pow(static_cast<double>(a), static_cast<double>(b));
        }
        return checked_pow(a, b);
    }
    return none_t{};
}

value float_arith(binary_op op, double a, double b) {
    switch (op) {
    case binary_op::add: return a + b;
    case binary_op::sub: return a - b;
    case binary_op::mul: return a * b;
    case binary_op::div:
        if (b == 0.0) raise(guest_error_kind::zero_division_error, "float division by zero");
        return a / b;
    case binary_op::floordiv:
    case binary_op::mod: {
        if (b == 0.0) {
            raise(guest_error_kind::zero_division_error,
                  op == binary_op::mod ? "float modulo" : "float floor division by zero");
        }
        double mod = std::fmod(a, b);
        double div = (a - mod) / b;
        if (mod != 0.0) {
            if ((b < 0) != (mod < 0)) {
                mod += b;
                div -= 1.0;
            }
        } else {
            mod = std::copysign(0.0, b);
        }
        double floordiv = 0;
        if (div != 0.0) {
            floordiv = std::floor(div);
            if (div - floordiv > 0.5) floordiv += 1.0;
        } else {
            floordiv = std::copysign(0.0, a / b);
        }
        return op == binary_op::mod ? mod : floordiv;
    }
    case binary_op::pow: {
        if (a == 0.0 && b < 0.0) raise(guest_error_kind::zero_division_error, "0.0 cannot be raised to a negative power");
        if (a < 0.0 && std::isfinite(b) && b != std::floor(b)) {
            raise(guest_error_kind::value_error, "negative number cannot be raised to a fractional power");
        }
        const double r = std::pow(a, b);
        if (std::isinf(r) && std::isfinite(a) && std::isfinite(b)) {
            raise(guest_error_kind::overflow_error, "float power result too large");
        }
        return r;
    }
    }
    return none_t{};
}

std::int64_t range_length(std::int64_t start, std::int64_t stop, std::int64_t step) {
    __int128 span = static_cast<__int128>(stop) - start;
    __int128 stride = step;
    if (stride < 0) {
        span = -span;
        stride = -stride;
    }
    if (span <= 0) return 0;
    const __int128 n = (span + stride - 1) / stride;
    if (n > std::numeric_limits<std::int64_t>::max()) raise(guest_error_kind::overflow_error, "range too large");
    return static_cast<std::int64_t>(n);
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\n\r\f\v");
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\n\r\f\v") - b + 1);
}

std::int64_t parse_int_text(const std::string& text) {
    std::string_view t = trim(text);
    bool neg = false;
    if (!t.empty() && (t.front() == '+' || t.front() == '-')) {
        neg = t.front() == '-';
        t.remove_prefix(1);
    }
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        std::string shown = text.size() > 64 ? text.substr(0, 64) + "..." : text;
        raise(guest_error_kind::value_error, "invalid literal for int() with base 10: '" + shown + "'");
    }
    // Accumulate negatively so INT64_MIN parses.
    std::int64_t acc = 0;
    for (const char c : t) {
        if (__builtin_mul_overflow(acc, 10, &acc) || __builtin_sub_overflow(acc, c - '0', &acc)) int_overflow();
    }
    if (!neg) {
        if (acc == std::numeric_limits<std::int64_t>::min()) int_overflow();
        acc = -acc;
    }
    return acc;
}

double parse_float_text(const std::string& text) {
    const std::string_view t = trim(text);
    std::string lower;
    for (const char c : t) lower += static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c);
    std::string_view body = lower;
    bool neg = false;
    if (!body.empty() && (body.front() == '+' || body.front() == '-')) {
        neg = body.front() == '-';
        body.remove_prefix(1);
    }
    if (body == "inf" || body == "infinity") return neg ? -HUGE_VAL : HUGE_VAL;
    if (body == "nan") return std::nan("");
    double d = 0;
    auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), d);
    const bool digits_only = !body.empty() && body.front() != '+' && body.front() != '-';
    if (!digits_only || p != body.data() + body.size() || (ec != std::errc() && ec != std::errc::result_out_of_range)) {
        std::string shown = text.size() > 64 ? text.substr(0, 64) + "..." : text;
        raise(guest_error_kind::value_error, "could not convert string to float: '" + shown + "'");
    }
    if (ec == std::errc::result_out_of_range) {
        // from_chars leaves d unset on range errors; recover the IEEE result.
        d = std::strtod(std::string(body).c_str(), nullptr);
    }
    return neg ? -d : d;
}

enum class flow { normal, ret, brk, cont };

struct frame {
    scope_ref scope;
    const def_stmt* def = nullptr; // null at module level
    program_unit* unit = nullptr;
    value ret;
};

class interpreter {
  public:
    interpreter(const sandbox::policy& p, const run_options& o, run_result& r)
        : policy_(p), opts_(o), result_(r), heap_(p.heap_budget_cells()), resolver_(p, r.host_log) {
        access_.mode = p.hardening();
        access_.observer = o.bounds_observer;
    }

    ~interpreter() {
        modules_.clear();
        for (auto& u : units_) u->globals.reset();
        heap_.teardown();
    }

    void run(const program& prog) {
        stack_base_ = reinterpret_cast<std::uintptr_t>(__builtin_frame_address(0));
        program_unit* unit = make_unit(nullptr, &prog, false);
        unit->globals = heap_.make<scope>(nullptr);
        for (const auto& [name, v] : opts_.globals) {
            const int sym = unit->sym_of(name);
            if (sym >= 0) unit->globals->set(sym, v);
        }
        frame fr{unit->globals, nullptr, unit, {}};
        exec_block(prog.body, fr);
    }

    void fill_audit() {
        result_.audit.bounds_checks_performed = access_.checks;
        result_.audit.allocations = heap_.allocations();
        result_.audit.peak_heap_cells = heap_.peak();
    }

  private:
    program_unit* make_unit(std::shared_ptr<const program> keep, const program* prog, bool embedded) {
        auto u = std::make_unique<program_unit>();
        u->keep = std::move(keep);
        u->prog = prog;
        u->builtin_of.assign(prog->symbols.size(), -1);
        for (std::size_t i = 0; i < prog->symbols.size(); ++i) {
            const std::string& name = prog->symbols[i];
            u->sym_index.emplace(name, static_cast<int>(i));
            for (int b = 0; b < builtin_count; ++b) {
                if (builtin_names[b] == name && (embedded || b < first_intrinsic)) u->builtin_of[i] = b;
            }
        }
        units_.push_back(std::move(u));
        return units_.back().get();
    }

    // ---- bookkeeping ----

    void tick() {
        ++steps_;
        if (opts_.max_steps != 0 && steps_ > opts_.max_steps) throw step_limit_exceeded(opts_.max_steps);
    }

    std::size_t room() const { return heap_.budget() - heap_.live(); }

    // Refuses a result of `cells` before the host builds it.
    void need(std::size_t cells) const {
        if (cells > room()) throw memory_budget_exceeded(cells, heap_.live(), heap_.budget());
    }

    void check_stack() const {
        const auto here = reinterpret_cast<std::uintptr_t>(__builtin_frame_address(0));
        if (stack_base_ > here && stack_base_ - here > opts_.max_stack_bytes) {
            raise(guest_error_kind::recursion_error, "maximum recursion depth exceeded");
        }
    }

    str_ref make_str(std::string s) { return heap_.make<str_obj>(std::move(s)); }

    // ---- statements ----

    flow exec_block(const block& b, frame& fr) {
        for (const auto& s : b) {
            const flow f = exec_stmt(*s, fr);
            if (f != flow::normal) return f;
        }
        return flow::normal;
    }

    flow exec_stmt(const stmt& s, frame& fr) {
        tick();
        try {
            return exec_stmt_inner(s, fr);
        } catch (guest_error& e) {
            if (e.line == 0) {
                e.line = s.line;
                e.source_name = fr.unit->prog->source_name;
            }
            throw;
        }
    }

    flow exec_stmt_inner(const stmt& s, frame& fr) {
        switch (s.kind) {
        case stmt_kind::expr: eval(*static_cast<const expr_stmt&>(s).value, fr); return flow::normal;
        case stmt_kind::assign: {
            const auto& a = static_cast<const assign_stmt&>(s);
            assign(*a.target, eval(*a.value, fr), fr);
            return flow::normal;
        }
        case stmt_kind::aug_assign: exec_aug_assign(static_cast<const aug_assign_stmt&>(s), fr); return flow::normal;
        case stmt_kind::if_: {
            const auto& i = static_cast<const if_stmt&>(s);
            if (truthy(eval(*i.cond, fr))) return exec_block(i.body, fr);
            return exec_block(i.orelse, fr);
        }
        case stmt_kind::while_: {
            const auto& w = static_cast<const while_stmt&>(s);
            while (truthy(eval(*w.cond, fr))) {
                tick();
                const flow f = exec_block(w.body, fr);
                if (f == flow::brk) break;
                if (f == flow::ret) return f;
            }
            return flow::normal;
        }
        case stmt_kind::for_: return exec_for(static_cast<const for_stmt&>(s), fr);
        case stmt_kind::def: {
            const auto& d = static_cast<const def_stmt&>(s);
            const std::string& name = fr.unit->prog->name_of(d.name);
            store(d.name, heap_.make<func_obj>(&d, fr.unit, fr.scope, name), fr);
            return flow::normal;
        }
        case stmt_kind::return_: {
            const auto& r = static_cast<const return_stmt&>(s);
            fr.ret = r.value ? eval(*r.value, fr) : value{none_t{}};
            return flow::ret;
        }
        case stmt_kind::import: {
            for (const int sym : static_cast<const import_stmt&>(s).names) {
                store(sym, import_module(fr.unit->prog->name_of(sym)), fr);
            }
            return flow::normal;
        }
        case stmt_kind::global:
        case stmt_kind::pass: return flow::normal;
        case stmt_kind::break_: return flow::brk;
        case stmt_kind::continue_: return flow::cont;
        }
        return flow::normal;
    }

    flow exec_for(const for_stmt& f, frame& fr) {
        const value seq = eval(*f.iterable, fr);
        flow result = flow::normal;
        iterate(seq, [&](value item) {
            tick();
            store(f.var, std::move(item), fr);
            const flow fl = exec_block(f.body, fr);
            if (fl == flow::brk) return false;
            if (fl == flow::ret) {
                result = flow::ret;
                return false;
            }
            return true;
        });
        return result;
    }

    // Calls fn(item) per element until it returns false. Lists and maps are
    // walked by position, so growth during the loop is seen and never
    // invalidates the walk.
    template <class F>
    void iterate(const value& seq, F&& fn) {
        switch (seq.index()) {
        case 4: {
            const str_ref s = std::get<str_ref>(seq);
            for (std::size_t i = 0; i < s->text.size(); ++i) {
                if (!fn(value{make_str(std::string(1, s->text[i]))})) return;
            }
            return;
        }
        case 5: {
            const list_ref l = std::get<list_ref>(seq);
            for (std::size_t i = 0; i < l->items.size(); ++i) {
                if (!fn(value{l->items[i]})) return;
            }
            return;
        }
        case 6: {
            const map_ref m = std::get<map_ref>(seq);
            for (std::size_t i = 0; i < m->size(); ++i) {
                if (!fn(value{m->entries()[i].first})) return;
            }
            return;
        }
        case 9: {
            const range_ref r = std::get<range_ref>(seq);
            const std::int64_t n = r->length();
            for (std::int64_t i = 0; i < n; ++i) {
                if (!fn(value{r->at(i)})) return;
            }
            return;
        }
        default: type_error("'" + tname(seq) + "' object is not iterable");
        }
    }

    bool declared_global(int sym, const frame& fr) const {
        return fr.def && std::find(fr.def->globals.begin(), fr.def->globals.end(), sym) != fr.def->globals.end();
    }

    void store(int sym, value v, frame& fr) {
        if (declared_global(sym, fr)) {
            fr.unit->globals->set(sym, std::move(v));
        } else {
            fr.scope->set(sym, std::move(v));
        }
    }

    value load(int sym, frame& fr) {
        if (const value* v = fr.scope->lookup(sym)) return *v;
        if (const int b = fr.unit->builtin_of[static_cast<std::size_t>(sym)]; b >= 0) return builtin_ref{b};
        raise(guest_error_kind::name_error, "name '" + fr.unit->prog->name_of(sym) + "' is not defined");
    }

    void assign(const expr& target, value v, frame& fr) {
        if (target.kind == expr_kind::name) {
            store(static_cast<const name_expr&>(target).sym, std::move(v), fr);
            return;
        }
        const auto& ix = static_cast<const index_expr&>(target);
        const value obj = eval(*ix.object, fr);
        const value key = eval(*ix.index, fr);
        set_item(obj, key, std::move(v));
    }

    void exec_aug_assign(const aug_assign_stmt& a, frame& fr) {
        if (a.target->kind == expr_kind::name) {
            const int sym = static_cast<const name_expr&>(*a.target).sym;
            value cur = load(sym, fr);
            value rhs = eval(*a.value, fr);
            store(sym, in_place(a.op, std::move(cur), rhs), fr);
            return;
        }
        const auto& ix = static_cast<const index_expr&>(*a.target);
        const value obj = eval(*ix.object, fr);
        const value key = eval(*ix.index, fr);
        value cur = get_item(obj, key);
        value rhs = eval(*a.value, fr);
        set_item(obj, key, in_place(a.op, std::move(cur), rhs));
    }

    // `+=` on a list extends it in place; every other case rebinds.
    value in_place(binary_op op, value cur, const value& rhs) {
        if (op == binary_op::add && cur.index() == 5) {
            const list_ref l = std::get<list_ref>(cur);
            if (rhs.index() == 5) {
                const std::vector<value> extra = std::get<list_ref>(rhs)->items;
                need(extra.size());
                for (const auto& v : extra) l->append(v);
            } else {
                iterate(rhs, [&](value item) {
                    l->append(std::move(item));
                    return true;
                });
            }
            return cur;
        }
        return arith(op, cur, rhs);
    }

    value import_module(const std::string& name) {
        if (auto it = modules_.find(name); it != modules_.end()) return it->second;
        const sandbox::resolved_module rm = resolver_.resolve(name);
        program_unit* unit = make_unit(rm.program, rm.program.get(), rm.embedded);
        unit->globals = heap_.make<scope>(nullptr);
        module_ref mod = heap_.make<module_obj>(name, unit, unit->globals);
        // Registered before the body runs, so a circular import sees the
        // partially initialized module.
        modules_.emplace(name, mod);
        if (depth_ + 1 >= opts_.max_call_depth) raise(guest_error_kind::recursion_error, "maximum recursion depth exceeded");
        check_stack();
        ++depth_;
        try {
            frame fr{unit->globals, nullptr, unit, {}};
            exec_block(unit->prog->body, fr);
        } catch (...) {
            --depth_;
            modules_.erase(name);
            throw;
        }
        --depth_;
        return mod;
    }

    // ---- expressions ----

    value eval(const expr& e, frame& fr) {
        switch (e.kind) {
        case expr_kind::int_lit: return static_cast<const int_lit&>(e).value;
        case expr_kind::float_lit: return static_cast<const float_lit&>(e).value;
        case expr_kind::str_lit: return make_str(static_cast<const str_lit&>(e).value);
        case expr_kind::bool_lit: return static_cast<const bool_lit&>(e).value;
        case expr_kind::none_lit: return none_t{};
        case expr_kind::name: return load(static_cast<const name_expr&>(e).sym, fr);
        case expr_kind::unary: return eval_unary(static_cast<const unary_expr&>(e), fr);
        case expr_kind::binary: {
            const auto& b = static_cast<const binary_expr&>(e);
            value lhs = eval(*b.lhs, fr);
            value rhs = eval(*b.rhs, fr);
            return arith(b.op, lhs, rhs);
        }
        case expr_kind::boolean: {
            const auto& b = static_cast<const bool_expr&>(e);
            value lhs = eval(*b.lhs, fr);
            const bool t = truthy(lhs);
            if (b.op == bool_op::and_ ? !t : t) return lhs;
            return eval(*b.rhs, fr);
        }
        case expr_kind::compare: return eval_compare(static_cast<const compare_expr&>(e), fr);
        case expr_kind::call: return eval_call(static_cast<const call_expr&>(e), fr);
        case expr_kind::index: {
            const auto& x = static_cast<const index_expr&>(e);
            const value obj = eval(*x.object, fr);
            const value key = eval(*x.index, fr);
            return get_item(obj, key);
        }
        case expr_kind::slice: return eval_slice(static_cast<const slice_expr&>(e), fr);
        case expr_kind::attribute: return eval_attribute(static_cast<const attribute_expr&>(e), fr);
        case expr_kind::list: {
            const auto& l = static_cast<const list_expr&>(e);
            std::vector<value> items;
            items.reserve(l.items.size());
            for (const auto& x : l.items) items.push_back(eval(*x, fr));
            return heap_.make<list_obj>(std::move(items));
        }
        case expr_kind::map: {
            const auto& m = static_cast<const map_expr&>(e);
            map_ref out = heap_.make<map_obj>();
            for (const auto& [k, v] : m.items) {
                value key = eval(*k, fr);
                value val = eval(*v, fr);
                collections::map_set(*out, key, std::move(val), access_);
            }
            return out;
        }
        }
        return none_t{};
    }

    value eval_unary(const unary_expr& u, frame& fr) {
        const value x = eval(*u.operand, fr);
        if (u.op == unary_op::not_) return !truthy(x);
        if (is_int_like(x)) {
            const std::int64_t i = as_int(x);
            if (u.op == unary_op::pos) return i;
            if (i == std::numeric_limits<std::int64_t>::min()) int_overflow();
            return -i;
        }
        if (x.index() == 3) return u.op == unary_op::pos ? std::get<double>(x) : -std::get<double>(x);
        type_error("bad operand type for unary " + std::string(to_string(u.op)) + ": '" + tname(x) + "'");
    }

    value arith(binary_op op, const value& a, const value& b) {
        if (is_int_like(a) && is_int_like(b)) return int_arith(op, as_int(a), as_int(b));
        if (is_number(a) && is_number(b)) return float_arith(op, as_double(a), as_double(b));
        if (op == binary_op::add) {
            if (a.index() == 4 && b.index() == 4) {
                const auto& x = std::get<str_ref>(a)->text;
                const auto& y = std::get<str_ref>(b)->text;
                need(x.size() + y.size());
                return make_str(x + y);
            }
            if (a.index() == 5 && b.index() == 5) {
                const auto& x = std::get<list_ref>(a)->items;
                const auto& y = std::get<list_ref>(b)->items;
                need(x.size() + y.size());
                std::vector<value> items;
                items.reserve(x.size() + y.size());
                items.insert(items.end(), x.begin(), x.end());
                items.insert(items.end(), y.begin(), y.end());
                return heap_.make<list_obj>(std::move(items));
            }
        }
        if (op == binary_op::mul) {
            if ((a.index() == 4 || a.index() == 5) && is_int_like(b)) return repeat(a, as_int(b));
            if ((b.index() == 4 || b.index() == 5) && is_int_like(a)) return repeat(b, as_int(a));
        }
        type_error("unsupported operand type(s) for " + std::string(to_string(op)) + ": '" + tname(a) + "' and '" +
                   tname(b) + "'");
    }

    value repeat(const value& seq, std::int64_t n) {
        if (n < 0) n = 0;
        const std::size_t len = seq.index() == 4 ? std::get<str_ref>(seq)->text.size()
                                                 : std::get<list_ref>(seq)->items.size();
        std::size_t total = 0;
        if (__builtin_mul_overflow(len, static_cast<std::uint64_t>(n), &total)) {
            throw memory_budget_exceeded(std::numeric_limits<std::size_t>::max(), heap_.live(), heap_.budget());
        }
        need(total);
        if (seq.index() == 4) {
            const auto& s = std::get<str_ref>(seq)->text;
            std::string out;
            out.reserve(total);
            for (std::int64_t i = 0; i < n && len != 0; ++i) out += s;
            return make_str(std::move(out));
        }
        const auto& xs = std::get<list_ref>(seq)->items;
        std::vector<value> out;
        out.reserve(total);
        for (std::int64_t i = 0; i < n && len != 0; ++i) out.insert(out.end(), xs.begin(), xs.end());
        return heap_.make<list_obj>(std::move(out));
    }

    bool compare(compare_op op, const value& a, const value& b) {
        switch (op) {
        case compare_op::eq: return equals(a, b);
        case compare_op::ne: return !equals(a, b);
        case compare_op::in: return contains(b, a);
        case compare_op::not_in: return !contains(b, a);
        default: break;
        }
        if (is_int_like(a) && is_int_like(b)) {
            const std::int64_t x = as_int(a), y = as_int(b);
            switch (op) {
            case compare_op::lt: return x < y;
            case compare_op::le: return x <= y;
            case compare_op::gt: return x > y;
            default: return x >= y;
            }
        }
        if (is_number(a) && is_number(b)) {
            // less_than compares mixed int/float exactly; NaN is unordered.
            switch (op) {
            case compare_op::lt: return less_than(a, b);
            case compare_op::gt: return less_than(b, a);
            case compare_op::le: return less_than(a, b) || equals(a, b);
            default: return less_than(b, a) || equals(a, b);
            }
        }
        switch (op) {
        case compare_op::lt: return less_than(a, b);
        case compare_op::gt: return less_than(b, a);
        case compare_op::le: return less_than(a, b) || equals(a, b);
        default: return less_than(b, a) || equals(a, b);
        }
    }

    bool contains(const value& container, const value& item) {
        switch (container.index()) {
        case 4: {
            if (item.index() != 4) {
                type_error("'in <string>' requires string as left operand, not " + tname(item));
            }
            return std::get<str_ref>(container)->text.find(std::get<str_ref>(item)->text) != std::string::npos;
        }
        case 5: {
            const auto& xs = std::get<list_ref>(container)->items;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                if (equals(xs[i], item)) return true;
            }
            return false;
        }
        case 6: return std::get<map_ref>(container)->find(item) != nullptr;
        case 9: {
            const auto& r = *std::get<range_ref>(container);
            if (!is_int_like(item)) {
                if (item.index() != 3) return false;
                const double d = std::get<double>(item);
                if (d != std::floor(d) || std::fabs(d) >= 9.2e18) return false;
                return contains(container, value{static_cast<std::int64_t>(d)});
            }
            const __int128 x = as_int(item);
            const __int128 off = x - r.start;
            if (r.step > 0 ? (x < r.start || x >= r.stop) : (x > r.start || x <= r.stop)) return false;
            return off % r.step == 0;
        }
        default: type_error("argument of type '" + tname(container) + "' is not iterable");
        }
    }

    value eval_compare(const compare_expr& c, frame& fr) {
        value lhs = eval(*c.first, fr);
        for (const auto& [op, rhs_expr] : c.rest) {
            value rhs = eval(*rhs_expr, fr);
            if (!compare(op, lhs, rhs)) return false;
            lhs = std::move(rhs);
        }
        return true;
    }

    std::int64_t index_of(const value& key, std::string_view what) {
        if (!is_int_like(key)) type_error(std::string(what) + " indices must be integers, not " + tname(key));
        return as_int(key);
    }

    value get_item(const value& obj, const value& key) {
        switch (obj.index()) {
        case 4: return collections::str_index(*std::get<str_ref>(obj), index_of(key, "string"), access_);
        case 5: return collections::list_get(*std::get<list_ref>(obj), index_of(key, "list"), access_);
        case 6: return collections::map_get(*std::get<map_ref>(obj), key, access_);
        default: type_error("'" + tname(obj) + "' object is not subscriptable");
        }
    }

    void set_item(const value& obj, const value& key, value v) {
        switch (obj.index()) {
        case 5: collections::list_set(*std::get<list_ref>(obj), index_of(key, "list"), std::move(v), access_); return;
        case 6: collections::map_set(*std::get<map_ref>(obj), key, std::move(v), access_); return;
        default: type_error("'" + tname(obj) + "' object does not support item assignment");
        }
    }

    std::optional<std::int64_t> slice_bound(const expr* e, frame& fr) {
        if (!e) return std::nullopt;
        const value v = eval(*e, fr);
        if (v.index() == 0) return std::nullopt;
        if (!is_int_like(v)) type_error("slice indices must be integers or None");
        return as_int(v);
    }

    value eval_slice(const slice_expr& s, frame& fr) {
        const value obj = eval(*s.object, fr);
        const auto lo = slice_bound(s.lower.get(), fr);
        const auto hi = slice_bound(s.upper.get(), fr);
        if (obj.index() == 5) return collections::list_slice(*std::get<list_ref>(obj), lo, hi, access_);
        if (obj.index() == 4) return collections::str_slice(*std::get<str_ref>(obj), lo, hi, access_);
        type_error("'" + tname(obj) + "' object is not subscriptable");
    }

    value eval_attribute(const attribute_expr& a, frame& fr) {
        const value obj = eval(*a.object, fr);
        const std::string& name = fr.unit->prog->name_of(a.sym);
        if (obj.index() == 8) {
            const module_ref& m = std::get<module_ref>(obj);
            const int sym = m->unit->sym_of(name);
            if (sym >= 0) {
                if (const value* v = m->globals->find_local(sym)) return *v;
            }
            raise(guest_error_kind::attribute_error, "module '" + m->name + "' has no attribute '" + name + "'");
        }
        if (obj.index() == 5 && name == "append") return heap_.make<method_obj>(std::get<list_ref>(obj));
        raise(guest_error_kind::attribute_error, "'" + tname(obj) + "' object has no attribute '" + name + "'");
    }

    value eval_call(const call_expr& c, frame& fr) {
        const value callee = eval(*c.callee, fr);
        std::vector<value> args;
        args.reserve(c.args.size());
        for (const auto& a : c.args) args.push_back(eval(*a, fr));
        switch (callee.index()) {
        case 7: return call_function(std::get<func_ref>(callee), args);
        case 10: return call_builtin(std::get<builtin_ref>(callee).id, args);
        case 11: {
            if (args.size() != 1) {
                type_error("append() takes exactly one argument (" + std::to_string(args.size()) + " given)");
            }
            std::get<method_ref>(callee)->self->append(std::move(args[0]));
            return none_t{};
        }
        default: type_error("'" + tname(callee) + "' object is not callable");
        }
    }

    value call_function(const func_ref& f, std::vector<value>& args) {
        const def_stmt& d = *f->def;
        if (args.size() != d.params.size()) {
            type_error(f->name + "() takes " + std::to_string(d.params.size()) + " positional argument" +
                       (d.params.size() == 1 ? "" : "s") + " but " + std::to_string(args.size()) +
                       (args.size() == 1 ? " was" : " were") + " given");
        }
        if (depth_ + 1 >= opts_.max_call_depth) raise(guest_error_kind::recursion_error, "maximum recursion depth exceeded");
        check_stack();
        frame callee{heap_.make<scope>(f->closure), &d, f->unit, {}};
        for (std::size_t i = 0; i < args.size(); ++i) callee.scope->set(d.params[i], std::move(args[i]));
        ++depth_;
        flow fl = flow::normal;
        try {
            fl = exec_block(d.body, callee);
        } catch (...) {
            --depth_;
            throw;
        }
        --depth_;
        return fl == flow::ret ? std::move(callee.ret) : value{none_t{}};
    }

    static void arity(std::string_view name, const std::vector<value>& args, std::size_t lo, std::size_t hi) {
        if (args.size() >= lo && args.size() <= hi) return;
        std::string expect = lo == hi ? "exactly " + std::to_string(lo)
                             : args.size() < lo ? "at least " + std::to_string(lo)
                                                : "at most " + std::to_string(hi);
        type_error(std::string(name) + "() takes " + expect + " argument" + (lo == hi && lo == 1 ? "" : "s") + " (" +
                   std::to_string(args.size()) + " given)");
    }

    value call_builtin(int id, std::vector<value>& args) {
        const std::string_view name = builtin_names[id];
        switch (id) {
        case b_len: {
            arity(name, args, 1, 1);
            const value& x = args[0];
            switch (x.index()) {
            case 4: return static_cast<std::int64_t>(std::get<str_ref>(x)->text.size());
            case 5: return static_cast<std::int64_t>(std::get<list_ref>(x)->items.size());
            case 6: return static_cast<std::int64_t>(std::get<map_ref>(x)->size());
            case 9: return std::get<range_ref>(x)->length();
            default: type_error("object of type '" + tname(x) + "' has no len()");
            }
        }
        case b_range: {
            arity(name, args, 1, 3);
            for (const auto& a : args) {
                if (!is_int_like(a)) type_error("'" + tname(a) + "' object cannot be interpreted as an integer");
            }
            std::int64_t start = 0, stop = 0, step = 1;
            if (args.size() == 1) {
                stop = as_int(args[0]);
            } else {
                start = as_int(args[0]);
                stop = as_int(args[1]);
                if (args.size() == 3) step = as_int(args[2]);
            }
            if (step == 0) raise(guest_error_kind::value_error, "range() arg 3 must not be zero");
            range_length(start, stop, step);
            return heap_.make<range_obj>(start, stop, step);
        }
        case b_print: {
            std::string line;
            for (std::size_t i = 0; i < args.size(); ++i) {
                if (i) line += ' ';
                line += to_str(args[i], room() - std::min(room(), line.size()));
            }
            line += '\n';
            // Captured output stays charged for the rest of the run.
            heap_.charge(line.size());
            result_.audit.output += line;
            return none_t{};
        }
        case b_str:
            arity(name, args, 0, 1);
            if (args.empty()) return make_str("");
            if (args[0].index() == 4) return args[0];
            return make_str(to_str(args[0], room()));
        case b_int: {
            arity(name, args, 0, 1);
            if (args.empty()) return std::int64_t{0};
            const value& x = args[0];
            if (is_int_like(x)) return as_int(x);
            if (x.index() == 3) {
                const double d = std::get<double>(x);
                if (std::isnan(d)) raise(guest_error_kind::value_error, "cannot convert float NaN to integer");
                if (std::isinf(d)) raise(guest_error_kind::overflow_error, "cannot convert float infinity to integer");
                const double t = std::trunc(d);
                if (t < -9223372036854775808.0 || t >= 9223372036854775808.0) int_overflow();
                return static_cast<std::int64_t>(t);
            }
            if (x.index() == 4) return parse_int_text(std::get<str_ref>(x)->text);
            type_error("int() argument must be a string or a number, not '" + tname(x) + "'");
        }
        case b_float: {
            arity(name, args, 0, 1);
            if (args.empty()) return 0.0;
            const value& x = args[0];
            if (is_number(x)) return as_double(x);
            if (x.index() == 4) return parse_float_text(std::get<str_ref>(x)->text);
            type_error("float() argument must be a string or a number, not '" + tname(x) + "'");
        }
        case b_abs: {
            arity(name, args, 1, 1);
            const value& x = args[0];
            if (is_int_like(x)) {
                const std::int64_t i = as_int(x);
                if (i == std::numeric_limits<std::int64_t>::min()) int_overflow();
                return i < 0 ? -i : i;
            }
            if (x.index() == 3) return std::fabs(std::get<double>(x));
            type_error("bad operand type for abs(): '" + tname(x) + "'");
        }
        case b_min:
        case b_max: {
            if (args.empty()) type_error(std::string(name) + " expected at least 1 argument, got 0");
            const bool want_max = id == b_max;
            std::optional<value> best;
            auto consider = [&](value v) {
                tick();
                if (!best || (want_max ? less_than(*best, v) : less_than(v, *best))) best = std::move(v);
                return true;
            };
            if (args.size() == 1) {
                iterate(args[0], consider);
            } else {
                for (auto& a : args) consider(std::move(a));
            }
            if (!best) raise(guest_error_kind::value_error, std::string(name) + "() arg is an empty sequence");
            return *best;
        }
        case b_read_file: {
            arity(name, args, 1, 1);
            if (args[0].index() != 4) type_error("read_file() argument must be str");
            const std::string path = std::get<str_ref>(args[0])->text;
            sandbox::check_host_capability(policy_, result_.host_log, capability::filesystem, path);
            std::ifstream in(path, std::ios::binary);
            if (!in) raise(guest_error_kind::os_error, "cannot open '" + path + "'");
            std::string text;
            char buf[4096];
            while (in.read(buf, sizeof buf) || in.gcount() > 0) {
                need(text.size() + static_cast<std::size_t>(in.gcount()));
                text.append(buf, static_cast<std::size_t>(in.gcount()));
            }
            return make_str(std::move(text));
        }
        case b_getenv: {
            arity(name, args, 1, 1);
            if (args[0].index() != 4) type_error("getenv() argument must be str");
            const std::string key = std::get<str_ref>(args[0])->text;
            sandbox::check_host_capability(policy_, result_.host_log, capability::env, key);
            const char* v = std::getenv(key.c_str());
            if (!v) return none_t{};
            need(std::char_traits<char>::length(v));
            return make_str(v);
        }
        case b_clock: {
            arity(name, args, 0, 0);
            sandbox::check_host_capability(policy_, result_.host_log, capability::clock, "monotonic");
            const auto t = std::chrono::steady_clock::now().time_since_epoch();
            return std::chrono::duration<double>(t).count();
        }
        case b_zlib_compress: {
            arity(name, args, 1, 1);
            if (args[0].index() != 4) type_error("compress() argument must be str");
            std::string out = runtime::codec_compress(std::get<str_ref>(args[0])->text);
            need(out.size());
            return make_str(std::move(out));
        }
        case b_zlib_decompress: {
            arity(name, args, 1, 1);
            if (args[0].index() != 4) type_error("decompress() argument must be str");
            const std::string& data = std::get<str_ref>(args[0])->text;
            if (data.size() >= runtime::codec::header_size) {
                std::uint64_t declared = 0;
                for (int i = 7; i >= 0; --i) {
                    declared = declared << 8 | static_cast<unsigned char>(data[4 + static_cast<std::size_t>(i)]);
                }
                if (declared > room()) throw memory_budget_exceeded(declared, heap_.live(), heap_.budget());
            }
            try {
                return make_str(runtime::codec_decompress(data, room()));
            } catch (const runtime::corrupt_stream& e) {
                raise(guest_error_kind::value_error, std::string("corrupt stream: ") + e.what());
            }
        }
        }
        type_error("unknown builtin");
    }

    const sandbox::policy& policy_;
    const run_options& opts_;
    run_result& result_;
    heap heap_;
    std::vector<std::unique_ptr<program_unit>> units_;
    std::unordered_map<std::string, module_ref> modules_;
    sandbox::module_resolver resolver_;
    access_context access_;
    std::uint64_t steps_ = 0;
    int depth_ = 0;
    std::uintptr_t stack_base_ = 0;
};

} // namespace

run_result execute(const program& prog, const sandbox::policy& policy, const run_options& options) {
    run_result r;
    {
        interpreter in(policy, options, r);
        try {
            in.run(prog);
        } catch (const guest_error& e) {
            r.status = run_status::guest_error;
            r.error = guest_failure{e.kind, e.what(), e.source_name.empty() ? prog.source_name : e.source_name, e.line};
        } catch (const sandbox::policy_violation& e) {
            r.status = run_status::policy_violation;
            r.message = e.what();
        } catch (const memory_budget_exceeded& e) {
            r.status = run_status::memory_budget_exceeded;
            r.message = e.what();
        } catch (const std::bad_alloc&) {
            r.status = run_status::memory_budget_exceeded;
            r.message = "host allocation failed";
        } catch (const step_limit_exceeded& e) {
            r.status = run_status::step_limit_exceeded;
            r.message = e.what();
        }
        in.fill_audit();
    }
    return r;
}

} // namespace sealpy::interp
