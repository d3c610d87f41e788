#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>

#include "sealpy/memcheck/ir.hpp"

namespace sealpy::memcheck {

ir_syntax_error::ir_syntax_error(int line_, const std::string& message)
    : std::runtime_error("line " + std::to_string(line_) + ": " + message), line(line_) {}

int function::instruction_count() const {
    int n = 0;
    for (const auto& b : blocks) n += static_cast<int>(b.instrs.size());
    return n;
}

const instruction* function::instruction_at(int index) const {
    for (const auto& b : blocks) {
        for (const auto& ins : b.instrs) {
            if (ins.index == index) return &ins;
        }
    }
    return nullptr;
}

std::string_view to_string(opcode op) {
    switch (op) {
    case opcode::const_: return "const";
    case opcode::copy: return "copy";
    case opcode::add: return "add";
    case opcode::sub: return "sub";
    case opcode::mul: return "mul";
    case opcode::shl: return "shl";
    case opcode::cmp: return "cmp";
    case opcode::br: return "br";
    case opcode::jmp: return "jmp";
    case opcode::alloc: return "alloc";
    case opcode::free: return "free";
    case opcode::load: return "load";
    case opcode::store: return "store";
    case opcode::call: return "call";
    case opcode::ret: return "ret";
    }
    return "?";
}

namespace {

struct token {
    enum class kind { ident, number, punct } k;
    std::string text;
    std::int64_t number = 0;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

std::vector<token> tokenize(std::string_view text, int line) {
    std::vector<token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
        } else if (ident_start(c)) {
            std::size_t j = i;
            while (j < text.size() && ident_char(text[j])) ++j;
            out.push_back({token::kind::ident, std::string(text.substr(i, j - i))});
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '-' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            std::size_t j = i + 1;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            std::int64_t v = 0;
            auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + j, v);
            if (ec != std::errc{} || ptr != text.data() + j) {
                throw ir_syntax_error(line, "integer literal out of range");
            }
            out.push_back({token::kind::number, std::string(text.substr(i, j - i)), v});
            i = j;
        } else if (std::string_view("(),:{}=").find(c) != std::string_view::npos) {
            out.push_back({token::kind::punct, std::string(1, c)});
            ++i;
        } else {
            throw ir_syntax_error(line, std::string("unexpected character '") + c + "'");
        }
    }
    return out;
}

const std::map<std::string, opcode, std::less<>> value_ops = {
    {"const", opcode::const_}, {"copy", opcode::copy}, {"add", opcode::add},
    {"sub", opcode::sub},      {"mul", opcode::mul},   {"shl", opcode::shl},
    {"cmp", opcode::cmp},      {"alloc", opcode::alloc}, {"load", opcode::load},
    {"call", opcode::call},
};

bool is_terminator(opcode op) { return op == opcode::br || op == opcode::jmp || op == opcode::ret; }

class function_builder {
  public:
    function_builder(std::string name, int line) {
        fn_.name = std::move(name);
        fn_.line = line;
    }

    function& fn() { return fn_; }

    int variable(const std::string& name) {
        auto [it, inserted] = var_ids_.try_emplace(name, static_cast<int>(fn_.variables.size()));
        if (inserted) fn_.variables.push_back(name);
        return it->second;
    }

    void add_param(const std::string& name, value_type t, int line) {
        if (var_ids_.contains(name)) throw ir_syntax_error(line, "duplicate parameter '" + name + "'");
        const int v = variable(name);
        fn_.params.push_back({v, t});
        defined_.insert(v);
    }

    void start_block(const std::string& label, int line) {
        if (labels_.contains(label)) throw ir_syntax_error(line, "duplicate block label '" + label + "'");
        labels_[label] = static_cast<int>(fn_.blocks.size());
        fn_.blocks.push_back(basic_block{label, {}, {}});
        terminated_ = false;
    }

    void add(instruction ins, std::vector<std::pair<std::string, int>> targets = {}) {
        if (fn_.blocks.empty()) start_block("entry", ins.line);
        if (terminated_) {
            throw ir_syntax_error(ins.line, "instruction after block terminator");
        }
        ins.index = next_index_++;
        if (ins.dst >= 0) defined_.insert(ins.dst);
        for (const auto& a : ins.args) {
            if (a.is_var()) used_.emplace(a.var, ins.line);
        }
        for (auto& t : targets) {
            pending_.push_back({static_cast<int>(fn_.blocks.size()) - 1,
                                static_cast<int>(fn_.blocks.back().instrs.size()), t.first, t.second});
        }
        terminated_ = is_terminator(ins.op);
        fn_.blocks.back().instrs.push_back(std::move(ins));
    }

    function finish(int line) {
        if (fn_.blocks.empty()) throw ir_syntax_error(line, "function '" + fn_.name + "' has no blocks");
        if (!terminated_) throw ir_syntax_error(line, "last block of '" + fn_.name + "' has no terminator");
        for (const auto& p : pending_) {
            auto it = labels_.find(p.label);
            if (it == labels_.end()) throw ir_syntax_error(p.line, "unknown block '" + p.label + "'");
            auto& ins = fn_.blocks[static_cast<std::size_t>(p.block)].instrs[static_cast<std::size_t>(p.instr)];
            if (ins.then_block < 0) {
                ins.then_block = it->second;
            } else {
                ins.else_block = it->second;
            }
        }
        for (const auto& [var, use_line] : used_) {
            if (!defined_.contains(var)) {
                throw ir_syntax_error(use_line, "variable '" + fn_.variables[static_cast<std::size_t>(var)] +
                                                    "' is never assigned");
            }
        }
        for (std::size_t b = 0; b < fn_.blocks.size(); ++b) {
            auto& blk = fn_.blocks[b];
            if (!blk.instrs.empty() && is_terminator(blk.instrs.back().op)) {
                const auto& last = blk.instrs.back();
                if (last.op == opcode::br) {
                    blk.successors = {last.then_block, last.else_block};
                } else if (last.op == opcode::jmp) {
                    blk.successors = {last.then_block};
                }
            } else if (b + 1 < fn_.blocks.size()) {
                blk.successors = {static_cast<int>(b + 1)};
            }
        }
        return std::move(fn_);
    }

  private:
    struct pending_target {
        int block;
        int instr;
        std::string label;
        int line;
    };

    function fn_;
    std::map<std::string, int> var_ids_;
    std::map<std::string, int> labels_;
    std::vector<pending_target> pending_;
    std::set<int> defined_;
    std::multimap<int, int> used_;
    bool terminated_ = false;
    int next_index_ = 0;
};

class line_parser {
  public:
    line_parser(std::vector<token> toks, int line) : toks_(std::move(toks)), line_(line) {}

    bool at_end() const { return pos_ >= toks_.size(); }
    const token& peek() const {
        if (at_end()) throw ir_syntax_error(line_, "unexpected end of line");
        return toks_[pos_];
    }
    bool peek_punct(char c) const {
        return !at_end() && toks_[pos_].k == token::kind::punct && toks_[pos_].text[0] == c;
    }
    token next() {
        const token& t = peek();
        ++pos_;
        return t;
    }
    void expect_punct(char c) {
        if (!peek_punct(c)) throw ir_syntax_error(line_, std::string("expected '") + c + "'");
        ++pos_;
    }
    std::string ident() {
        token t = next();
        if (t.k != token::kind::ident) throw ir_syntax_error(line_, "expected identifier, got '" + t.text + "'");
        return t.text;
    }
    void expect_end() {
        if (!at_end()) throw ir_syntax_error(line_, "unexpected '" + peek().text + "'");
    }
    std::size_t remaining() const { return toks_.size() - pos_; }
    std::vector<token> rest() const { return {toks_.begin() + static_cast<long>(pos_), toks_.end()}; }
    int line() const { return line_; }

  private:
    std::vector<token> toks_;
    std::size_t pos_ = 0;
    int line_;
};

operand parse_operand(line_parser& p, function_builder& fb) {
    token t = p.next();
    if (t.k == token::kind::number) return operand{operand::kind::imm, -1, t.number};
    if (t.k == token::kind::ident) {
        if (t.text == "null") return operand{operand::kind::null, -1, 0};
        return operand{operand::kind::var, fb.variable(t.text), 0};
    }
    throw ir_syntax_error(p.line(), "expected operand, got '" + t.text + "'");
}

operand parse_var(line_parser& p, function_builder& fb) {
    const std::string name = p.ident();
    if (name == "null") throw ir_syntax_error(p.line(), "expected variable, got 'null'");
    return operand{operand::kind::var, fb.variable(name), 0};
}

void parse_call_args(line_parser& p, function_builder& fb, instruction& ins) {
    ins.callee = p.ident();
    p.expect_punct('(');
    if (!p.peek_punct(')')) {
        ins.args.push_back(parse_operand(p, fb));
        while (p.peek_punct(',')) {
            p.expect_punct(',');
            ins.args.push_back(parse_operand(p, fb));
        }
    }
    p.expect_punct(')');
}

void parse_instruction(line_parser& p, function_builder& fb) {
    instruction ins;
    ins.line = p.line();
    std::vector<std::pair<std::string, int>> targets;
    const std::string head = p.ident();

    if (p.peek_punct('=')) {
        p.expect_punct('=');
        if (head == "null") throw ir_syntax_error(p.line(), "cannot assign to 'null'");
        ins.dst = fb.variable(head);
        const std::string opname = p.ident();
        auto it = value_ops.find(opname);
        if (it == value_ops.end()) throw ir_syntax_error(p.line(), "unknown opcode '" + opname + "'");
        ins.op = it->second;
        switch (ins.op) {
        case opcode::const_: {
            token t = p.next();
            if (t.k == token::kind::number) {
                ins.args.push_back(operand{operand::kind::imm, -1, t.number});
            } else if (t.k == token::kind::ident && t.text == "null") {
                ins.args.push_back(operand{operand::kind::null, -1, 0});
            } else {
                throw ir_syntax_error(p.line(), "const expects an integer or null");
            }
            break;
        }
        case opcode::copy:
        case opcode::alloc:
            ins.args.push_back(parse_operand(p, fb));
            break;
        case opcode::add:
        case opcode::sub:
        case opcode::mul:
        case opcode::shl:
            ins.args.push_back(parse_operand(p, fb));
            ins.args.push_back(parse_operand(p, fb));
            break;
        case opcode::cmp: {
            const std::string kind = p.ident();
            if (kind == "lt") ins.cmp = cmp_kind::lt;
            else if (kind == "le") ins.cmp = cmp_kind::le;
            else if (kind == "eq") ins.cmp = cmp_kind::eq;
            else if (kind == "ne") ins.cmp = cmp_kind::ne;
            else throw ir_syntax_error(p.line(), "unknown comparison '" + kind + "'");
            ins.args.push_back(parse_operand(p, fb));
            ins.args.push_back(parse_operand(p, fb));
            break;
        }
        case opcode::load:
            ins.args.push_back(parse_var(p, fb));
            ins.args.push_back(parse_operand(p, fb));
            break;
        case opcode::call:
            parse_call_args(p, fb, ins);
            break;
        default:
            throw ir_syntax_error(p.line(), "opcode '" + opname + "' does not produce a value");
        }
    } else if (head == "br") {
        ins.op = opcode::br;
        ins.args.push_back(parse_operand(p, fb));
        targets.emplace_back(p.ident(), p.line());
        targets.emplace_back(p.ident(), p.line());
    } else if (head == "jmp") {
        ins.op = opcode::jmp;
        targets.emplace_back(p.ident(), p.line());
    } else if (head == "free") {
        ins.op = opcode::free;
        ins.args.push_back(parse_var(p, fb));
    } else if (head == "store") {
        ins.op = opcode::store;
        ins.args.push_back(parse_var(p, fb));
        ins.args.push_back(parse_operand(p, fb));
        ins.args.push_back(parse_operand(p, fb));
    } else if (head == "call") {
        ins.op = opcode::call;
        parse_call_args(p, fb, ins);
    } else if (head == "ret") {
        ins.op = opcode::ret;
        if (!p.at_end()) ins.args.push_back(parse_operand(p, fb));
    } else {
        throw ir_syntax_error(p.line(), "unknown opcode '" + head + "'");
    }
    p.expect_end();
    fb.add(std::move(ins), std::move(targets));
}

value_type parse_type(const std::string& t, int line) {
    if (t == "int") return value_type::int_;
    if (t == "addr") return value_type::addr;
    throw ir_syntax_error(line, "unknown type '" + t + "'");
}

std::string_view strip(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

} // namespace

ir_program parse_ir(std::string_view source) {
    ir_program prog;
    std::optional<function_builder> current;
    std::set<std::string> names;
    int line_no = 0;

    auto finish_function = [&](int line) {
        function fn = current->finish(line);
        if (!names.insert(fn.name).second) throw ir_syntax_error(fn.line, "duplicate function '" + fn.name + "'");
        prog.functions.push_back(std::move(fn));
        current.reset();
    };

    std::size_t start = 0;
    while (start <= source.size()) {
        std::size_t end = source.find('\n', start);
        if (end == std::string_view::npos) end = source.size();
        std::string_view raw = source.substr(start, end - start);
        start = end + 1;
        ++line_no;

        if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        raw = strip(raw);
        if (raw.empty()) {
            if (end == source.size()) break;
            continue;
        }
        line_parser p(tokenize(raw, line_no), line_no);

        if (!current) {
            if (p.ident() != "fn") throw ir_syntax_error(line_no, "expected 'fn'");
            current.emplace(p.ident(), line_no);
            p.expect_punct('(');
            if (!p.peek_punct(')')) {
                while (true) {
                    const std::string pname = p.ident();
                    p.expect_punct(':');
                    current->add_param(pname, parse_type(p.ident(), line_no), line_no);
                    if (!p.peek_punct(',')) break;
                    p.expect_punct(',');
                }
            }
            p.expect_punct(')');
            p.expect_punct('{');
            if (p.at_end()) continue;
            // single-line body: fn f() { ret }
            auto rest = p.rest();
            if (rest.back().k != token::kind::punct || rest.back().text != "}") {
                throw ir_syntax_error(line_no, "expected '}' closing a one-line function");
            }
            rest.pop_back();
            if (!rest.empty()) {
                line_parser inner(std::move(rest), line_no);
                parse_instruction(inner, *current);
            }
            finish_function(line_no);
            continue;
        }

        if (p.peek_punct('}')) {
            p.expect_punct('}');
            p.expect_end();
            finish_function(line_no);
            continue;
        }
        if (p.remaining() == 2 && p.peek().k == token::kind::ident) {
            const std::string label = p.ident();
            if (p.peek_punct(':')) {
                current->start_block(label, line_no);
                continue;
            }
            line_parser again(tokenize(raw, line_no), line_no);
            parse_instruction(again, *current);
            continue;
        }
        parse_instruction(p, *current);
        if (end == source.size()) break;
    }
    if (current) throw ir_syntax_error(line_no, "unterminated function '" + current->fn().name + "'");
    return prog;
}

} // namespace sealpy::memcheck
