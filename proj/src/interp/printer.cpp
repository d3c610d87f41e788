#include <cstdio>

#include "sealpy/interp/ast.hpp"
#include "sealpy/interp/value.hpp"

namespace sealpy::interp {

namespace {

// Binding strength, loosest first; matches the parser's grammar levels.
enum prec : int { p_or = 1, p_and, p_not, p_compare, p_arith, p_term, p_unary, p_power, p_postfix, p_atom };

int precedence(const expr& e) {
    switch (e.kind) {
    case expr_kind::boolean: return static_cast<const bool_expr&>(e).op == bool_op::or_ ? p_or : p_and;
    case expr_kind::unary: return static_cast<const unary_expr&>(e).op == unary_op::not_ ? p_not : p_unary;
    case expr_kind::compare: return p_compare;
    case expr_kind::binary:
        switch (static_cast<const binary_expr&>(e).op) {
        case binary_op::add:
        case binary_op::sub: return p_arith;
        case binary_op::pow: return p_power;
        default: return p_term;
        }
    case expr_kind::call:
    case expr_kind::index:
    case expr_kind::slice:
    case expr_kind::attribute: return p_postfix;
    default: return p_atom;
    }
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (const char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        switch (ch) {
        case '\\': out += "\\\\"; break;
        case '"': out += "\\\""; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (c < 0x20 || c >= 0x7f) {
                char buf[5];
                std::snprintf(buf, sizeof buf, "\\x%02x", c);
                out += buf;
            } else {
                out += ch;
            }
        }
    }
    out += '"';
    return out;
}

class printer {
  public:
    explicit printer(const program& p) : p_(p) {}

    std::string run() {
        write_block(p_.body, 0);
        return std::move(out_);
    }

  private:
    void operand(const expr& e, int min_prec) {
        if (precedence(e) < min_prec) {
            out_ += '(';
            write(e);
            out_ += ')';
        } else {
            write(e);
        }
    }

    void write(const expr& e) {
        switch (e.kind) {
        case expr_kind::int_lit: out_ += std::to_string(static_cast<const int_lit&>(e).value); break;
        case expr_kind::float_lit: out_ += format_float(static_cast<const float_lit&>(e).value); break;
        case expr_kind::str_lit: out_ += quote(static_cast<const str_lit&>(e).value); break;
        case expr_kind::bool_lit: out_ += static_cast<const bool_lit&>(e).value ? "True" : "False"; break;
        case expr_kind::none_lit: out_ += "None"; break;
        case expr_kind::name: out_ += p_.name_of(static_cast<const name_expr&>(e).sym); break;
        case expr_kind::unary: {
            const auto& u = static_cast<const unary_expr&>(e);
            if (u.op == unary_op::not_) {
                out_ += "not ";
                operand(*u.operand, p_not);
            } else {
                out_ += to_string(u.op);
                operand(*u.operand, p_unary);
            }
            break;
        }
        case expr_kind::binary: {
            const auto& b = static_cast<const binary_expr&>(e);
            const int level = precedence(e);
            if (b.op == binary_op::pow) {
                operand(*b.lhs, p_postfix);
                out_ += " ** ";
                operand(*b.rhs, p_unary);
            } else {
                operand(*b.lhs, level);
                out_ += ' ';
                out_ += to_string(b.op);
                out_ += ' ';
                operand(*b.rhs, level + 1);
            }
            break;
        }
        case expr_kind::boolean: {
            const auto& b = static_cast<const bool_expr&>(e);
            const int level = precedence(e);
            operand(*b.lhs, level);
            out_ += b.op == bool_op::or_ ? " or " : " and ";
            operand(*b.rhs, level + 1);
            break;
        }
        case expr_kind::compare: {
            const auto& c = static_cast<const compare_expr&>(e);
            operand(*c.first, p_arith);
            for (const auto& [op, rhs] : c.rest) {
                out_ += ' ';
                out_ += to_string(op);
                out_ += ' ';
                operand(*rhs, p_arith);
            }
            break;
        }
        case expr_kind::call: {
            const auto& c = static_cast<const call_expr&>(e);
            operand(*c.callee, p_postfix);
            out_ += '(';
            for (std::size_t i = 0; i < c.args.size(); ++i) {
                if (i) out_ += ", ";
                write(*c.args[i]);
            }
            out_ += ')';
            break;
        }
        case expr_kind::index: {
            const auto& x = static_cast<const index_expr&>(e);
            operand(*x.object, p_postfix);
            out_ += '[';
            write(*x.index);
            out_ += ']';
            break;
        }
        case expr_kind::slice: {
            const auto& s = static_cast<const slice_expr&>(e);
            operand(*s.object, p_postfix);
            out_ += '[';
            if (s.lower) write(*s.lower);
            out_ += ':';
            if (s.upper) write(*s.upper);
            out_ += ']';
            break;
        }
        case expr_kind::attribute: {
            const auto& a = static_cast<const attribute_expr&>(e);
            operand(*a.object, p_postfix);
            out_ += '.';
            out_ += p_.name_of(a.sym);
            break;
        }
        case expr_kind::list: {
            const auto& l = static_cast<const list_expr&>(e);
            out_ += '[';
            for (std::size_t i = 0; i < l.items.size(); ++i) {
                if (i) out_ += ", ";
                write(*l.items[i]);
            }
            out_ += ']';
            break;
        }
        case expr_kind::map: {
            const auto& m = static_cast<const map_expr&>(e);
            out_ += '{';
            for (std::size_t i = 0; i < m.items.size(); ++i) {
                if (i) out_ += ", ";
                write(*m.items[i].first);
                out_ += ": ";
                write(*m.items[i].second);
            }
            out_ += '}';
            break;
        }
        }
    }

    void indent(int depth) { out_.append(static_cast<std::size_t>(depth) * 4, ' '); }

    void write_block(const block& b, int depth) {
        for (const auto& s : b) write_stmt(*s, depth);
    }

    void write_names(const std::vector<int>& names) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i) out_ += ", ";
            out_ += p_.name_of(names[i]);
        }
    }

    void write_if(const if_stmt& s, int depth, bool is_elif) {
        indent(depth);
        out_ += is_elif ? "elif " : "if ";
        write(*s.cond);
        out_ += ":\n";
        write_block(s.body, depth + 1);
        if (s.orelse.empty()) return;
        if (s.orelse.size() == 1 && s.orelse.front()->kind == stmt_kind::if_) {
            write_if(static_cast<const if_stmt&>(*s.orelse.front()), depth, true);
            return;
        }
        indent(depth);
        out_ += "else:\n";
        write_block(s.orelse, depth + 1);
    }

    void write_stmt(const stmt& s, int depth) {
        switch (s.kind) {
        case stmt_kind::if_: return write_if(static_cast<const if_stmt&>(s), depth, false);
        case stmt_kind::while_: {
            const auto& w = static_cast<const while_stmt&>(s);
            indent(depth);
            out_ += "while ";
            write(*w.cond);
            out_ += ":\n";
            write_block(w.body, depth + 1);
            return;
        }
        case stmt_kind::for_: {
            const auto& f = static_cast<const for_stmt&>(s);
            indent(depth);
            out_ += "for " + p_.name_of(f.var) + " in ";
            write(*f.iterable);
            out_ += ":\n";
            write_block(f.body, depth + 1);
            return;
        }
        case stmt_kind::def: {
            const auto& d = static_cast<const def_stmt&>(s);
            indent(depth);
            out_ += "def " + p_.name_of(d.name) + "(";
            write_names(d.params);
            out_ += "):\n";
            write_block(d.body, depth + 1);
            return;
        }
        default: break;
        }
        indent(depth);
        switch (s.kind) {
        case stmt_kind::expr: write(*static_cast<const expr_stmt&>(s).value); break;
        case stmt_kind::assign: {
            const auto& a = static_cast<const assign_stmt&>(s);
            write(*a.target);
            out_ += " = ";
            write(*a.value);
            break;
        }
        case stmt_kind::aug_assign: {
            const auto& a = static_cast<const aug_assign_stmt&>(s);
            write(*a.target);
            out_ += ' ';
            out_ += to_string(a.op);
            out_ += "= ";
            write(*a.value);
            break;
        }
        case stmt_kind::return_: {
            const auto& r = static_cast<const return_stmt&>(s);
            out_ += "return";
            if (r.value) {
                out_ += ' ';
                write(*r.value);
            }
            break;
        }
        case stmt_kind::import:
            out_ += "import ";
            write_names(static_cast<const import_stmt&>(s).names);
            break;
        case stmt_kind::global:
            out_ += "global ";
            write_names(static_cast<const global_stmt&>(s).names);
            break;
        case stmt_kind::break_: out_ += "break"; break;
        case stmt_kind::continue_: out_ += "continue"; break;
        case stmt_kind::pass: out_ += "pass"; break;
        default: break;
        }
        out_ += '\n';
    }

    const program& p_;
    std::string out_;
};

class comparer {
  public:
    comparer(const program& a, const program& b) : a_(a), b_(b) {}

    bool names(int x, int y) const { return a_.name_of(x) == b_.name_of(y); }

    bool names(const std::vector<int>& x, const std::vector<int>& y) const {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!names(x[i], y[i])) return false;
        }
        return true;
    }

    bool opt(const expr* x, const expr* y) const {
        if (!x || !y) return x == y;
        return same(*x, *y);
    }

    bool same(const expr& x, const expr& y) const {
        if (x.kind != y.kind) return false;
        switch (x.kind) {
        case expr_kind::int_lit: return static_cast<const int_lit&>(x).value == static_cast<const int_lit&>(y).value;
        case expr_kind::float_lit: {
            const double u = static_cast<const float_lit&>(x).value;
            const double v = static_cast<const float_lit&>(y).value;
            return u == v || (u != u && v != v);
        }
        case expr_kind::str_lit: return static_cast<const str_lit&>(x).value == static_cast<const str_lit&>(y).value;
        case expr_kind::bool_lit:
            return static_cast<const bool_lit&>(x).value == static_cast<const bool_lit&>(y).value;
        case expr_kind::none_lit: return true;
        case expr_kind::name:
            return names(static_cast<const name_expr&>(x).sym, static_cast<const name_expr&>(y).sym);
        case expr_kind::unary: {
            const auto& u = static_cast<const unary_expr&>(x);
            const auto& v = static_cast<const unary_expr&>(y);
            return u.op == v.op && same(*u.operand, *v.operand);
        }
        case expr_kind::binary: {
            const auto& u = static_cast<const binary_expr&>(x);
            const auto& v = static_cast<const binary_expr&>(y);
            return u.op == v.op && same(*u.lhs, *v.lhs) && same(*u.rhs, *v.rhs);
        }
        case expr_kind::boolean: {
            const auto& u = static_cast<const bool_expr&>(x);
            const auto& v = static_cast<const bool_expr&>(y);
            return u.op == v.op && same(*u.lhs, *v.lhs) && same(*u.rhs, *v.rhs);
        }
        case expr_kind::compare: {
            const auto& u = static_cast<const compare_expr&>(x);
            const auto& v = static_cast<const compare_expr&>(y);
            if (!same(*u.first, *v.first) || u.rest.size() != v.rest.size()) return false;
            for (std::size_t i = 0; i < u.rest.size(); ++i) {
                if (u.rest[i].first != v.rest[i].first || !same(*u.rest[i].second, *v.rest[i].second)) return false;
            }
            return true;
        }
        case expr_kind::call: {
            const auto& u = static_cast<const call_expr&>(x);
            const auto& v = static_cast<const call_expr&>(y);
            if (!same(*u.callee, *v.callee) || u.args.size() != v.args.size()) return false;
            for (std::size_t i = 0; i < u.args.size(); ++i) {
                if (!same(*u.args[i], *v.args[i])) return false;
            }
            return true;
        }
        case expr_kind::index: {
            const auto& u = static_cast<const index_expr&>(x);
            const auto& v = static_cast<const index_expr&>(y);
            return same(*u.object, *v.object) && same(*u.index, *v.index);
        }
        case expr_kind::slice: {
            const auto& u = static_cast<const slice_expr&>(x);
            const auto& v = static_cast<const slice_expr&>(y);
            return same(*u.object, *v.object) && opt(u.lower.get(), v.lower.get()) &&
                   opt(u.upper.get(), v.upper.get());
        }
        case expr_kind::attribute: {
            const auto& u = static_cast<const attribute_expr&>(x);
            const auto& v = static_cast<const attribute_expr&>(y);
            return names(u.sym, v.sym) && same(*u.object, *v.object);
        }
        case expr_kind::list: {
            const auto& u = static_cast<const list_expr&>(x);
            const auto& v = static_cast<const list_expr&>(y);
            if (u.items.size() != v.items.size()) return false;
            for (std::size_t i = 0; i < u.items.size(); ++i) {
                if (!same(*u.items[i], *v.items[i])) return false;
            }
            return true;
        }
        case expr_kind::map: {
            const auto& u = static_cast<const map_expr&>(x);
            const auto& v = static_cast<const map_expr&>(y);
            if (u.items.size() != v.items.size()) return false;
            for (std::size_t i = 0; i < u.items.size(); ++i) {
                if (!same(*u.items[i].first, *v.items[i].first) || !same(*u.items[i].second, *v.items[i].second)) {
                    return false;
                }
            }
            return true;
        }
        }
        return false;
    }

    bool same(const block& x, const block& y) const {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!same(*x[i], *y[i])) return false;
        }
        return true;
    }

    bool same(const stmt& x, const stmt& y) const {
        if (x.kind != y.kind) return false;
        switch (x.kind) {
        case stmt_kind::expr:
            return same(*static_cast<const expr_stmt&>(x).value, *static_cast<const expr_stmt&>(y).value);
        case stmt_kind::assign: {
            const auto& u = static_cast<const assign_stmt&>(x);
            const auto& v = static_cast<const assign_stmt&>(y);
            return same(*u.target, *v.target) && same(*u.value, *v.value);
        }
        case stmt_kind::aug_assign: {
            const auto& u = static_cast<const aug_assign_stmt&>(x);
            const auto& v = static_cast<const aug_assign_stmt&>(y);
            return u.op == v.op && same(*u.target, *v.target) && same(*u.value, *v.value);
        }
        case stmt_kind::if_: {
            const auto& u = static_cast<const if_stmt&>(x);
            const auto& v = static_cast<const if_stmt&>(y);
            return same(*u.cond, *v.cond) && same(u.body, v.body) && same(u.orelse, v.orelse);
        }
        case stmt_kind::while_: {
            const auto& u = static_cast<const while_stmt&>(x);
            const auto& v = static_cast<const while_stmt&>(y);
            return same(*u.cond, *v.cond) && same(u.body, v.body);
        }
        case stmt_kind::for_: {
            const auto& u = static_cast<const for_stmt&>(x);
            const auto& v = static_cast<const for_stmt&>(y);
            return names(u.var, v.var) && same(*u.iterable, *v.iterable) && same(u.body, v.body);
        }
        case stmt_kind::def: {
            const auto& u = static_cast<const def_stmt&>(x);
            const auto& v = static_cast<const def_stmt&>(y);
            return names(u.name, v.name) && names(u.params, v.params) && names(u.globals, v.globals) &&
                   same(u.body, v.body);
        }
        case stmt_kind::return_: {
            const auto& u = static_cast<const return_stmt&>(x);
            const auto& v = static_cast<const return_stmt&>(y);
            return opt(u.value.get(), v.value.get());
        }
        case stmt_kind::import:
            return names(static_cast<const import_stmt&>(x).names, static_cast<const import_stmt&>(y).names);
        case stmt_kind::global:
            return names(static_cast<const global_stmt&>(x).names, static_cast<const global_stmt&>(y).names);
        case stmt_kind::break_:
        case stmt_kind::continue_:
        case stmt_kind::pass: return true;
        }
        return false;
    }

  private:
    const program& a_;
    const program& b_;
};

} // namespace

std::string dump(const program& p) { return printer(p).run(); }

bool same_structure(const program& a, const program& b) { return comparer(a, b).same(a.body, b.body); }

} // namespace sealpy::interp
