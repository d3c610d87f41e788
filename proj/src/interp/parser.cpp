#include <algorithm>
#include <charconv>
#include <optional>
#include <unordered_map>

#include "sealpy/interp/ast.hpp"
#include "sealpy/interp/errors.hpp"

namespace sealpy::interp {

std::string_view to_string(unary_op op) {
    switch (op) {
    case unary_op::neg: return "-";
    case unary_op::pos: return "+";
    case unary_op::not_: return "not";
    }
    return "?";
}

std::string_view to_string(binary_op op) {
    switch (op) {
    case binary_op::add: return "+";
    case binary_op::sub: return "-";
    case binary_op::mul: return "*";
    case binary_op::div: return "/";
    case binary_op::floordiv: return "//";
    case binary_op::mod: return "%";
    case binary_op::pow: return "**";
    }
    return "?";
}

std::string_view to_string(bool_op op) { return op == bool_op::and_ ? "and" : "or"; }

std::string_view to_string(compare_op op) {
    switch (op) {
    case compare_op::eq: return "==";
    case compare_op::ne: return "!=";
    case compare_op::lt: return "<";
    case compare_op::le: return "<=";
    case compare_op::gt: return ">";
    case compare_op::ge: return ">=";
    case compare_op::in: return "in";
    case compare_op::not_in: return "not in";
    }
    return "?";
}

namespace {

enum class tok { name, integer, floating, string, op, newline, indent, dedent, end };

struct token {
    tok kind;
    std::string text; // identifier, operator spelling, or decoded string bytes
    std::int64_t ival = 0;
    double fval = 0;
    int line = 0;
    int column = 0;
};

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

class lexer {
  public:
    lexer(std::string_view src, const std::string& name) : src_(src), name_(name) {}

    std::vector<token> run() {
        indents_.push_back(0);
        while (pos_ < src_.size()) {
            if (at_line_start_ && depth_ == 0) {
                if (!indentation()) continue;
            }
            const char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
                advance();
            } else if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else if (c == '\n') {
                if (depth_ == 0) push(tok::newline, "", line_, col_);
                advance_line();
                // Inside brackets a new physical line continues the logical one.
                if (depth_ > 0) at_line_start_ = false;
            } else if (c == '\\') {
                advance();
                while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\r')) advance();
                if (pos_ >= src_.size() || src_[pos_] != '\n') fail(line_, col_, "unexpected character after line continuation");
                advance_line();
                at_line_start_ = false;
            } else if (is_ident_start(c)) {
                const int l = line_, col = col_;
                const std::size_t b = pos_;
                while (pos_ < src_.size() && is_ident_char(src_[pos_])) advance();
                push(tok::name, std::string(src_.substr(b, pos_ - b)), l, col);
            } else if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
                number();
            } else if (c == '\'' || c == '"') {
                string_literal();
            } else {
                op();
            }
        }
        if (!out_.empty() && out_.back().kind != tok::newline) push(tok::newline, "", line_, col_);
        if (depth_ != 0) fail(line_, col_, "unexpected end of input inside brackets");
        while (indents_.size() > 1) {
            indents_.pop_back();
            push(tok::dedent, "", line_, col_);
        }
        push(tok::end, "", line_, col_);
        return std::move(out_);
    }

  private:
    [[noreturn]] void fail(int line, int col, const std::string& msg) { throw syntax_error(name_, line, col, msg); }

    void advance() {
        ++pos_;
        ++col_;
    }
    void advance_line() {
        ++pos_;
        ++line_;
        col_ = 1;
        at_line_start_ = true;
    }
    void push(tok k, std::string text, int l, int c) {
        token t;
        t.kind = k;
        t.text = std::move(text);
        t.line = l;
        t.column = c;
        out_.push_back(std::move(t));
    }

    // Measures leading whitespace. Returns false for blank/comment lines,
    // which are consumed whole.
    bool indentation() {
        int width = 0;
        std::size_t p = pos_;
        while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
            width = src_[p] == '\t' ? (width / 8 + 1) * 8 : width + 1;
            ++p;
        }
        if (p < src_.size() && src_[p] == '\r') {
            std::size_t q = p + 1;
            if (q >= src_.size() || src_[q] == '\n') p = q;
        }
        if (p >= src_.size() || src_[p] == '\n' || src_[p] == '#') {
            while (p < src_.size() && src_[p] != '\n') ++p;
            pos_ = p;
            if (pos_ < src_.size()) advance_line();
            else at_line_start_ = false;
            return false;
        }
        col_ += static_cast<int>(p - pos_);
        pos_ = p;
        at_line_start_ = false;
        if (width > indents_.back()) {
            indents_.push_back(width);
            push(tok::indent, "", line_, col_);
        } else {
            while (width < indents_.back()) {
                indents_.pop_back();
                push(tok::dedent, "", line_, col_);
            }
            if (width != indents_.back()) fail(line_, col_, "unindent does not match any outer indentation level");
        }
        return true;
    }

    void number() {
        const int l = line_, col = col_;
        const std::size_t b = pos_;
        bool is_float = false;
        while (pos_ < src_.size() && is_digit(src_[pos_])) advance();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            is_float = true;
            advance();
            while (pos_ < src_.size() && is_digit(src_[pos_])) advance();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
            if (p < src_.size() && is_digit(src_[p])) {
                is_float = true;
                while (pos_ < p) advance();
                while (pos_ < src_.size() && is_digit(src_[pos_])) advance();
            }
        }
        if (pos_ < src_.size() && is_ident_char(src_[pos_])) fail(line_, col_, "invalid numeric literal");
        const std::string_view text = src_.substr(b, pos_ - b);
        token t;
        t.line = l;
        t.column = col;
        t.text = std::string(text);
        if (is_float) {
            t.kind = tok::floating;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), t.fval);
            if (ec != std::errc() || p != text.data() + text.size()) fail(l, col, "float literal out of range");
        } else {
            t.kind = tok::integer;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), t.ival);
            if (ec != std::errc() || p != text.data() + text.size()) fail(l, col, "integer literal too large");
        }
        out_.push_back(std::move(t));
    }

    void string_literal() {
        const int l = line_, col = col_;
        const char q = src_[pos_];
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == q && src_[pos_ + 2] == q) {
            fail(l, col, "unsupported construct: triple-quoted string");
        }
        advance();
        std::string out;
        while (true) {
            if (pos_ >= src_.size() || src_[pos_] == '\n') fail(l, col, "unterminated string literal");
            const char c = src_[pos_];
            if (c == q) {
                advance();
                break;
            }
            if (c != '\\') {
                out += c;
                advance();
                continue;
            }
            advance();
            if (pos_ >= src_.size()) fail(l, col, "unterminated string literal");
            const char e = src_[pos_];
            switch (e) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            case '0': out += '\0'; break;
            case '\\': out += '\\'; break;
            case '\'': out += '\''; break;
            case '"': out += '"'; break;
            case '\n':
                advance_line();
                at_line_start_ = false;
                continue;
            case 'x': {
                auto hex = [](char h) {
                    if (h >= '0' && h <= '9') return h - '0';
                    if (h >= 'a' && h <= 'f') return h - 'a' + 10;
                    if (h >= 'A' && h <= 'F') return h - 'A' + 10;
                    return -1;
                };
                if (pos_ + 2 >= src_.size() || hex(src_[pos_ + 1]) < 0 || hex(src_[pos_ + 2]) < 0) {
                    fail(line_, col_, "truncated \\xXX escape");
                }
                out += static_cast<char>(hex(src_[pos_ + 1]) * 16 + hex(src_[pos_ + 2]));
                advance();
                advance();
                break;
            }
            default:
                out += '\\';
                out += e;
                break;
            }
            advance();
        }
        push(tok::string, std::move(out), l, col);
    }

    void op() {
        static const char* const three[] = {"//=", "**="};
        static const char* const two[] = {"==", "!=", "<=", ">=", "//", "**", "+=", "-=", "*=", "/=", "%="};
        const int l = line_, col = col_;
        auto starts = [&](const char* s) { return src_.substr(pos_).starts_with(s); };
        for (const char* s : three) {
            if (starts(s)) {
                for (int i = 0; i < 3; ++i) advance();
                push(tok::op, s, l, col);
                return;
            }
        }
        for (const char* s : two) {
            if (starts(s)) {
                advance();
                advance();
                push(tok::op, s, l, col);
                return;
            }
        }
        const char c = src_[pos_];
        static const std::string_view singles = "+-*/%<>=()[]{},:.;";
        if (singles.find(c) == std::string_view::npos) {
            const auto u = static_cast<unsigned char>(c);
            fail(l, col, u >= 0x20 && u < 0x7f ? std::string("invalid character '") + c + "'"
                                               : "invalid byte 0x" + std::to_string(u));
        }
        if (c == '(' || c == '[' || c == '{') ++depth_;
        if (c == ')' || c == ']' || c == '}') {
            if (depth_ == 0) fail(l, col, std::string("unmatched '") + c + "'");
            --depth_;
        }
        advance();
        push(tok::op, std::string(1, c), l, col);
    }

    std::string_view src_;
    const std::string& name_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    int depth_ = 0;
    bool at_line_start_ = true;
    std::vector<int> indents_;
    std::vector<token> out_;
};

bool is_unsupported_keyword(std::string_view s) {
    static const std::string_view words[] = {"as",    "assert", "async",  "await",    "class", "del",
                                             "except", "finally", "from", "is",     "lambda", "nonlocal",
                                             "raise", "try",    "with",   "yield"};
    return std::find(std::begin(words), std::end(words), s) != std::end(words);
}

bool is_keyword(std::string_view s) {
    static const std::string_view words[] = {"and",  "break", "continue", "def",    "elif",  "else",
                                             "for",  "global", "if",      "import", "in",    "not",
                                             "or",   "pass",  "return",   "while",  "True",  "False",
                                             "None"};
    return is_unsupported_keyword(s) || std::find(std::begin(words), std::end(words), s) != std::end(words);
}

class parser {
  public:
    parser(std::vector<token> toks, std::string name) : toks_(std::move(toks)) { prog_.source_name = std::move(name); }

    program run() {
        while (!at(tok::end)) {
            if (at(tok::newline)) {
                ++pos_;
                continue;
            }
            statement(prog_.body);
        }
        return std::move(prog_);
    }

  private:
    struct depth_guard {
        explicit depth_guard(parser& p) : p_(p) {
            if (++p_.depth_ > max_parse_depth) p_.fail(p_.peek(), "too deeply nested");
        }
        ~depth_guard() { --p_.depth_; }
        parser& p_;
    };

    [[noreturn]] void fail(const token& t, const std::string& msg) {
        throw syntax_error(prog_.source_name, t.line, t.column, msg);
    }

    const token& peek(std::size_t ahead = 0) const {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }
    bool at(tok k) const { return peek().kind == k; }
    bool at_op(std::string_view s) const { return peek().kind == tok::op && peek().text == s; }
    bool at_name(std::string_view s) const { return peek().kind == tok::name && peek().text == s; }
    const token& next() {
        const token& t = peek();
        if (pos_ < toks_.size() - 1) ++pos_;
        return t;
    }
    bool accept_op(std::string_view s) {
        if (!at_op(s)) return false;
        ++pos_;
        return true;
    }
    bool accept_name(std::string_view s) {
        if (!at_name(s)) return false;
        ++pos_;
        return true;
    }
    void expect_op(std::string_view s) {
        if (!accept_op(s)) fail(peek(), "expected '" + std::string(s) + "', found " + describe(peek()));
    }
    void expect_newline() {
        if (at(tok::newline)) {
            ++pos_;
            return;
        }
        fail(peek(), "expected end of statement, found " + describe(peek()));
    }

    std::string describe(const token& t) {
        switch (t.kind) {
        case tok::name: return "'" + t.text + "'";
        case tok::integer:
        case tok::floating: return "number " + t.text;
        case tok::string: return "string literal";
        case tok::op: return "'" + t.text + "'";
        case tok::newline: return "end of line";
        case tok::indent: return "unexpected indent";
        case tok::dedent: return "dedent";
        case tok::end: return "end of input";
        }
        return "token";
    }

    int symbol(const std::string& name) {
        auto [it, inserted] = syms_.try_emplace(name, static_cast<int>(prog_.symbols.size()));
        if (inserted) prog_.symbols.push_back(name);
        return it->second;
    }

    int identifier() {
        const token& t = peek();
        if (t.kind != tok::name) fail(t, "expected identifier, found " + describe(t));
        if (is_unsupported_keyword(t.text)) fail(t, "unsupported construct '" + t.text + "'");
        if (is_keyword(t.text)) fail(t, "keyword '" + t.text + "' cannot be used as a name");
        ++pos_;
        return symbol(t.text);
    }

    template <class Node>
    expr_ptr finish(std::unique_ptr<Node> n, std::initializer_list<const expr*> kids) {
        int h = 0;
        for (const expr* k : kids) {
            if (k && k->height > h) h = k->height;
        }
        n->height = h + 1;
        if (n->height > max_expr_height) {
            throw syntax_error(prog_.source_name, n->line, n->column, "expression too deeply nested");
        }
        return n;
    }

    expr_ptr finish_many(std::unique_ptr<expr> n, int child_height) {
        n->height = child_height + 1;
        if (n->height > max_expr_height) {
            throw syntax_error(prog_.source_name, n->line, n->column, "expression too deeply nested");
        }
        return n;
    }

    // ---- statements ----

    void statement(block& out) {
        const token& t = peek();
        if (t.kind == tok::indent) fail(t, "unexpected indent");
        if (t.kind == tok::name) {
            if (t.text == "def") return def_statement(out);
            if (t.text == "if") return if_statement(out);
            if (t.text == "while") return while_statement(out);
            if (t.text == "for") return for_statement(out);
        }
        simple_line(out);
    }

    void simple_line(block& out) {
        simple_statement(out);
        while (accept_op(";")) {
            if (at(tok::newline)) break;
            simple_statement(out);
        }
        expect_newline();
    }

    void simple_statement(block& out) {
        const token& t = peek();
        const int l = t.line, c = t.column;
        if (t.kind == tok::name) {
            if (is_unsupported_keyword(t.text)) fail(t, "unsupported construct '" + t.text + "'");
            if (t.text == "return") {
                if (fn_depth_ == 0) fail(t, "'return' outside function");
                ++pos_;
                expr_ptr v;
                if (!at(tok::newline) && !at_op(";")) v = expression();
                out.push_back(std::make_unique<return_stmt>(std::move(v), l, c));
                return;
            }
            if (t.text == "pass" || t.text == "break" || t.text == "continue") {
                if (t.text != "pass" && loop_depth_ == 0) fail(t, "'" + t.text + "' outside loop");
                const stmt_kind k = t.text == "pass" ? stmt_kind::pass
                                    : t.text == "break" ? stmt_kind::break_
                                                        : stmt_kind::continue_;
                ++pos_;
                out.push_back(std::make_unique<simple_stmt>(k, l, c));
                return;
            }
            if (t.text == "import") {
                ++pos_;
                auto s = std::make_unique<import_stmt>(l, c);
                do {
                    s->names.push_back(identifier());
                    if (at_op(".")) fail(peek(), "unsupported construct: dotted module name");
                } while (accept_op(","));
                out.push_back(std::move(s));
                return;
            }
            if (t.text == "global") {
                ++pos_;
                auto s = std::make_unique<global_stmt>(l, c);
                do {
                    const int sym = identifier();
                    s->names.push_back(sym);
                    if (current_def_ && std::find(current_def_->params.begin(), current_def_->params.end(), sym) !=
                                            current_def_->params.end()) {
                        fail(t, "name '" + prog_.name_of(sym) + "' is parameter and global");
                    }
                    if (current_def_ && std::find(current_def_->globals.begin(), current_def_->globals.end(), sym) ==
                                            current_def_->globals.end()) {
                        current_def_->globals.push_back(sym);
                    }
                } while (accept_op(","));
                out.push_back(std::move(s));
                return;
            }
            if (t.text == "elif" || t.text == "else" || t.text == "def" || t.text == "if" || t.text == "while" ||
                t.text == "for") {
                fail(t, "unexpected '" + t.text + "'");
            }
        }
        expr_ptr e = expression();
        if (at_op("=")) {
            const token& eq = next();
            check_target(*e, eq);
            expr_ptr v = expression();
            if (at_op("=")) fail(peek(), "unsupported construct: chained assignment");
            out.push_back(std::make_unique<assign_stmt>(std::move(e), std::move(v), l, c));
            return;
        }
        static const std::pair<std::string_view, binary_op> aug[] = {
            {"+=", binary_op::add},       {"-=", binary_op::sub}, {"*=", binary_op::mul}, {"/=", binary_op::div},
            {"//=", binary_op::floordiv}, {"%=", binary_op::mod}, {"**=", binary_op::pow}};
        for (const auto& [spelling, op] : aug) {
            if (at_op(spelling)) {
                const token& opt = next();
                check_target(*e, opt);
                expr_ptr v = expression();
                out.push_back(std::make_unique<aug_assign_stmt>(op, std::move(e), std::move(v), l, c));
                return;
            }
        }
        if (at_op(",")) fail(peek(), "unsupported construct: tuple");
        out.push_back(std::make_unique<expr_stmt>(std::move(e), l, c));
    }

    void check_target(const expr& e, const token& at) {
        if (e.kind == expr_kind::name || e.kind == expr_kind::index) return;
        if (e.kind == expr_kind::slice) fail(at, "unsupported construct: slice assignment");
        if (e.kind == expr_kind::attribute) fail(at, "unsupported construct: attribute assignment");
        fail(at, "cannot assign to expression");
    }

    void suite(block& out) {
        depth_guard guard(*this);
        expect_op(":");
        if (!at(tok::newline)) {
            simple_line(out);
            return;
        }
        ++pos_;
        if (!at(tok::indent)) fail(peek(), "expected an indented block");
        ++pos_;
        while (!at(tok::dedent) && !at(tok::end)) {
            if (at(tok::newline)) {
                ++pos_;
                continue;
            }
            statement(out);
        }
        if (at(tok::dedent)) ++pos_;
    }

    void def_statement(block& out) {
        const token& t = next();
        auto d = std::make_unique<def_stmt>(t.line, t.column);
        d->name = identifier();
        expect_op("(");
        if (!at_op(")")) {
            do {
                if (at_op(")")) break;
                const token& pt = peek();
                const int p = identifier();
                if (std::find(d->params.begin(), d->params.end(), p) != d->params.end()) {
                    fail(pt, "duplicate parameter '" + prog_.name_of(p) + "'");
                }
                d->params.push_back(p);
            } while (accept_op(","));
        }
        expect_op(")");
        def_stmt* outer = current_def_;
        const int outer_loops = loop_depth_;
        current_def_ = d.get();
        loop_depth_ = 0;
        ++fn_depth_;
        suite(d->body);
        --fn_depth_;
        loop_depth_ = outer_loops;
        current_def_ = outer;
        out.push_back(std::move(d));
    }

    void if_statement(block& out) {
        const token& t = next();
        auto s = std::make_unique<if_stmt>(t.line, t.column);
        s->cond = expression();
        suite(s->body);
        if (at_name("elif")) {
            if_statement(s->orelse);
        } else if (accept_name("else")) {
            suite(s->orelse);
        }
        out.push_back(std::move(s));
    }

    void while_statement(block& out) {
        const token& t = next();
        auto s = std::make_unique<while_stmt>(t.line, t.column);
        s->cond = expression();
        ++loop_depth_;
        suite(s->body);
        --loop_depth_;
        if (at_name("else")) fail(peek(), "unsupported construct: loop else clause");
        out.push_back(std::move(s));
    }

    void for_statement(block& out) {
        const token& t = next();
        auto s = std::make_unique<for_stmt>(t.line, t.column);
        s->var = identifier();
        if (at_op(",")) fail(peek(), "unsupported construct: tuple");
        if (!accept_name("in")) fail(peek(), "expected 'in'");
        s->iterable = expression();
        ++loop_depth_;
        suite(s->body);
        --loop_depth_;
        if (at_name("else")) fail(peek(), "unsupported construct: loop else clause");
        out.push_back(std::move(s));
    }

    // ---- expressions ----

    expr_ptr expression() {
        depth_guard guard(*this);
        expr_ptr e = or_test();
        if (at_name("if")) fail(peek(), "unsupported construct: conditional expression");
        if (at_name("for")) fail(peek(), "unsupported construct: comprehension");
        return e;
    }

    expr_ptr or_test() {
        expr_ptr e = and_test();
        while (at_name("or")) {
            const token& t = next();
            expr_ptr rhs = and_test();
            auto n = std::make_unique<bool_expr>(bool_op::or_, std::move(e), std::move(rhs), t.line, t.column);
            const expr* a = n->lhs.get();
            const expr* b = n->rhs.get();
            e = finish(std::move(n), {a, b});
        }
        return e;
    }

    expr_ptr and_test() {
        expr_ptr e = not_test();
        while (at_name("and")) {
            const token& t = next();
            expr_ptr rhs = not_test();
            auto n = std::make_unique<bool_expr>(bool_op::and_, std::move(e), std::move(rhs), t.line, t.column);
            const expr* a = n->lhs.get();
            const expr* b = n->rhs.get();
            e = finish(std::move(n), {a, b});
        }
        return e;
    }

    expr_ptr not_test() {
        if (at_name("not")) {
            depth_guard guard(*this);
            const token& t = next();
            expr_ptr x = not_test();
            auto n = std::make_unique<unary_expr>(unary_op::not_, std::move(x), t.line, t.column);
            const expr* k = n->operand.get();
            return finish(std::move(n), {k});
        }
        return comparison();
    }

    std::optional<compare_op> comparison_op() {
        if (peek().kind == tok::op) {
            const auto& s = peek().text;
            if (s == "==") return compare_op::eq;
            if (s == "!=") return compare_op::ne;
            if (s == "<") return compare_op::lt;
            if (s == "<=") return compare_op::le;
            if (s == ">") return compare_op::gt;
            if (s == ">=") return compare_op::ge;
        }
        if (at_name("in")) return compare_op::in;
        if (at_name("not") && peek(1).kind == tok::name && peek(1).text == "in") return compare_op::not_in;
        if (at_name("is")) fail(peek(), "unsupported construct 'is'");
        return std::nullopt;
    }

    expr_ptr comparison() {
        expr_ptr first = arith();
        auto op = comparison_op();
        if (!op) return first;
        const int l = first->line, c = first->column;
        auto n = std::make_unique<compare_expr>(std::move(first), l, c);
        int h = n->first->height;
        while (op) {
            next();
            if (*op == compare_op::not_in) next();
            expr_ptr rhs = arith();
            h = std::max(h, rhs->height);
            n->rest.emplace_back(*op, std::move(rhs));
            op = comparison_op();
        }
        return finish_many(std::move(n), h);
    }

    expr_ptr arith() {
        expr_ptr e = term();
        while (at_op("+") || at_op("-")) {
            const token& t = next();
            const binary_op op = t.text == "+" ? binary_op::add : binary_op::sub;
            expr_ptr rhs = term();
            auto n = std::make_unique<binary_expr>(op, std::move(e), std::move(rhs), t.line, t.column);
            const expr* a = n->lhs.get();
            const expr* b = n->rhs.get();
            e = finish(std::move(n), {a, b});
        }
        return e;
    }

    expr_ptr term() {
        expr_ptr e = factor();
        while (at_op("*") || at_op("/") || at_op("//") || at_op("%")) {
            const token& t = next();
            const binary_op op = t.text == "*"    ? binary_op::mul
                                 : t.text == "/"  ? binary_op::div
                                 : t.text == "//" ? binary_op::floordiv
                                                  : binary_op::mod;
            expr_ptr rhs = factor();
            auto n = std::make_unique<binary_expr>(op, std::move(e), std::move(rhs), t.line, t.column);
            const expr* a = n->lhs.get();
            const expr* b = n->rhs.get();
            e = finish(std::move(n), {a, b});
        }
        return e;
    }

    expr_ptr factor() {
        if (at_op("-") || at_op("+")) {
            depth_guard guard(*this);
            const token& t = next();
            expr_ptr x = factor();
            auto n = std::make_unique<unary_expr>(t.text == "-" ? unary_op::neg : unary_op::pos, std::move(x), t.line,
                                                  t.column);
            const expr* k = n->operand.get();
            return finish(std::move(n), {k});
        }
        return power();
    }

    expr_ptr power() {
        expr_ptr base = postfix();
        if (at_op("**")) {
            depth_guard guard(*this);
            const token& t = next();
            expr_ptr ex = factor();
            auto n = std::make_unique<binary_expr>(binary_op::pow, std::move(base), std::move(ex), t.line, t.column);
            const expr* a = n->lhs.get();
            const expr* b = n->rhs.get();
            return finish(std::move(n), {a, b});
        }
        return base;
    }

    expr_ptr postfix() {
        expr_ptr e = atom();
        while (true) {
            const token& t = peek();
            if (accept_op("(")) {
                auto call = std::make_unique<call_expr>(std::move(e), t.line, t.column);
                int h = call->callee->height;
                if (!at_op(")")) {
                    do {
                        if (at_op(")")) break;
                        call->args.push_back(expression());
                        h = std::max(h, call->args.back()->height);
                        if (at_op("=")) fail(peek(), "unsupported construct: keyword argument");
                    } while (accept_op(","));
                }
                expect_op(")");
                e = finish_many(std::move(call), h);
            } else if (accept_op("[")) {
                expr_ptr lo, hi;
                bool is_slice = false;
                if (!at_op(":")) lo = expression();
                if (accept_op(":")) {
                    is_slice = true;
                    if (!at_op("]")) hi = expression();
                    if (at_op(":")) fail(peek(), "unsupported construct: slice step");
                }
                if (!is_slice && !lo) fail(peek(), "expected index expression");
                expect_op("]");
                if (is_slice) {
                    auto n = std::make_unique<slice_expr>(std::move(e), std::move(lo), std::move(hi), t.line, t.column);
                    const expr* a = n->object.get();
                    const expr* b = n->lower.get();
                    const expr* c = n->upper.get();
                    e = finish(std::move(n), {a, b, c});
                } else {
                    auto n = std::make_unique<index_expr>(std::move(e), std::move(lo), t.line, t.column);
                    const expr* a = n->object.get();
                    const expr* b = n->index.get();
                    e = finish(std::move(n), {a, b});
                }
            } else if (accept_op(".")) {
                const int sym = identifier();
                auto n = std::make_unique<attribute_expr>(std::move(e), sym, t.line, t.column);
                const expr* a = n->object.get();
                e = finish(std::move(n), {a});
            } else {
                return e;
            }
        }
    }

    expr_ptr atom() {
        const token& t = peek();
        switch (t.kind) {
        case tok::integer:
            ++pos_;
            return std::make_unique<int_lit>(t.ival, t.line, t.column);
        case tok::floating:
            ++pos_;
            return std::make_unique<float_lit>(t.fval, t.line, t.column);
        case tok::string: {
            ++pos_;
            std::string s = t.text;
            while (at(tok::string)) s += next().text;
            return std::make_unique<str_lit>(std::move(s), t.line, t.column);
        }
        case tok::name:
            if (t.text == "True" || t.text == "False") {
                ++pos_;
                return std::make_unique<bool_lit>(t.text == "True", t.line, t.column);
            }
            if (t.text == "None") {
                ++pos_;
                return std::make_unique<none_lit>(t.line, t.column);
            }
            return std::make_unique<name_expr>(identifier(), t.line, t.column);
        case tok::op:
            if (t.text == "(") {
                depth_guard guard(*this);
                ++pos_;
                if (at_op(")")) fail(peek(), "unsupported construct: tuple");
                expr_ptr e = expression();
                if (at_op(",")) fail(peek(), "unsupported construct: tuple");
                expect_op(")");
                return e;
            }
            if (t.text == "[") {
                depth_guard guard(*this);
                ++pos_;
                auto n = std::make_unique<list_expr>(t.line, t.column);
                int h = 0;
                while (!at_op("]")) {
                    n->items.push_back(expression());
                    h = std::max(h, n->items.back()->height);
                    if (!accept_op(",")) break;
                }
                expect_op("]");
                return finish_many(std::move(n), h);
            }
            if (t.text == "{") {
                depth_guard guard(*this);
                ++pos_;
                auto n = std::make_unique<map_expr>(t.line, t.column);
                int h = 0;
                while (!at_op("}")) {
                    expr_ptr k = expression();
                    expect_op(":");
                    expr_ptr v = expression();
                    h = std::max({h, k->height, v->height});
                    n->items.emplace_back(std::move(k), std::move(v));
                    if (!accept_op(",")) break;
                }
                expect_op("}");
                return finish_many(std::move(n), h);
            }
            break;
        default: break;
        }
        fail(t, "unexpected " + describe(t));
    }

    std::vector<token> toks_;
    std::size_t pos_ = 0;
    program prog_;
    std::unordered_map<std::string, int> syms_;
    int depth_ = 0;
    int fn_depth_ = 0;
    int loop_depth_ = 0;
    def_stmt* current_def_ = nullptr;
};

} // namespace

program parse(std::string_view source, std::string source_name) {
    lexer lx(source, source_name);
    auto toks = lx.run();
    return parser(std::move(toks), std::move(source_name)).run();
}

} // namespace sealpy::interp
