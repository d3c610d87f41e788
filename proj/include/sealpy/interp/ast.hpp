#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sealpy::interp {

enum class expr_kind {
    int_lit,
    float_lit,
    str_lit,
    bool_lit,
    none_lit,
    name,
    unary,
    binary,
    boolean,
    compare,
    call,
    index,
    slice,
    attribute,
    list,
    map,
};

enum class unary_op { neg, pos, not_ };
enum class binary_op { add, sub, mul, div, floordiv, mod, pow };
enum class bool_op { and_, or_ };
enum class compare_op { eq, ne, lt, le, gt, ge, in, not_in };

std::string_view to_string(unary_op op);
std::string_view to_string(binary_op op);
std::string_view to_string(bool_op op);
std::string_view to_string(compare_op op);

struct expr {
    expr(expr_kind k, int l, int c) : kind(k), line(l), column(c) {}
    virtual ~expr() = default;

    const expr_kind kind;
    int line;
    int column;
    int height = 1; // longest path to a leaf, counting this node
};

using expr_ptr = std::unique_ptr<expr>;

struct int_lit final : expr {
    int_lit(std::int64_t v, int l, int c) : expr(expr_kind::int_lit, l, c), value(v) {}
    std::int64_t value;
};

struct float_lit final : expr {
    float_lit(double v, int l, int c) : expr(expr_kind::float_lit, l, c), value(v) {}
    double value;
};

struct str_lit final : expr {
    str_lit(std::string v, int l, int c) : expr(expr_kind::str_lit, l, c), value(std::move(v)) {}
    std::string value;
};

struct bool_lit final : expr {
    bool_lit(bool v, int l, int c) : expr(expr_kind::bool_lit, l, c), value(v) {}
    bool value;
};

struct none_lit final : expr {
    none_lit(int l, int c) : expr(expr_kind::none_lit, l, c) {}
};

struct name_expr final : expr {
    name_expr(int s, int l, int c) : expr(expr_kind::name, l, c), sym(s) {}
    int sym;
};

struct unary_expr final : expr {
    unary_expr(unary_op o, expr_ptr x, int l, int c) : expr(expr_kind::unary, l, c), op(o), operand(std::move(x)) {}
    unary_op op;
    expr_ptr operand;
};

struct binary_expr final : expr {
    binary_expr(binary_op o, expr_ptr a, expr_ptr b, int l, int c)
        : expr(expr_kind::binary, l, c), op(o), lhs(std::move(a)), rhs(std::move(b)) {}
    binary_op op;
    expr_ptr lhs, rhs;
};

struct bool_expr final : expr {
    bool_expr(bool_op o, expr_ptr a, expr_ptr b, int l, int c)
        : expr(expr_kind::boolean, l, c), op(o), lhs(std::move(a)), rhs(std::move(b)) {}
    bool_op op;
    expr_ptr lhs, rhs;
};

// a < b <= c: `first` then (op, operand) pairs, evaluated pairwise with short circuit.
struct compare_expr final : expr {
    compare_expr(expr_ptr f, int l, int c) : expr(expr_kind::compare, l, c), first(std::move(f)) {}
    expr_ptr first;
    std::vector<std::pair<compare_op, expr_ptr>> rest;
};

struct call_expr final : expr {
    call_expr(expr_ptr f, int l, int c) : expr(expr_kind::call, l, c), callee(std::move(f)) {}
    expr_ptr callee;
    std::vector<expr_ptr> args;
};

struct index_expr final : expr {
    index_expr(expr_ptr o, expr_ptr i, int l, int c)
        : expr(expr_kind::index, l, c), object(std::move(o)), index(std::move(i)) {}
    expr_ptr object, index;
};

// object[lower:upper]; either bound may be null.
struct slice_expr final : expr {
    slice_expr(expr_ptr o, expr_ptr lo, expr_ptr hi, int l, int c)
        : expr(expr_kind::slice, l, c), object(std::move(o)), lower(std::move(lo)), upper(std::move(hi)) {}
    expr_ptr object, lower, upper;
};

struct attribute_expr final : expr {
    attribute_expr(expr_ptr o, int s, int l, int c) : expr(expr_kind::attribute, l, c), object(std::move(o)), sym(s) {}
    expr_ptr object;
    int sym;
};

struct list_expr final : expr {
    list_expr(int l, int c) : expr(expr_kind::list, l, c) {}
    std::vector<expr_ptr> items;
};

struct map_expr final : expr {
    map_expr(int l, int c) : expr(expr_kind::map, l, c) {}
    std::vector<std::pair<expr_ptr, expr_ptr>> items;
};

enum class stmt_kind {
    expr,
    assign,
    aug_assign,
    if_,
    while_,
    for_,
    def,
    return_,
    import,
    global,
    break_,
    continue_,
    pass,
};

struct stmt {
    stmt(stmt_kind k, int l, int c) : kind(k), line(l), column(c) {}
    virtual ~stmt() = default;

    const stmt_kind kind;
    int line;
    int column;
};

using stmt_ptr = std::unique_ptr<stmt>;
using block = std::vector<stmt_ptr>;

struct expr_stmt final : stmt {
    expr_stmt(expr_ptr e, int l, int c) : stmt(stmt_kind::expr, l, c), value(std::move(e)) {}
    expr_ptr value;
};

// target is a name_expr or an index_expr.
struct assign_stmt final : stmt {
    assign_stmt(expr_ptr t, expr_ptr v, int l, int c)
        : stmt(stmt_kind::assign, l, c), target(std::move(t)), value(std::move(v)) {}
    expr_ptr target, value;
};

struct aug_assign_stmt final : stmt {
    aug_assign_stmt(binary_op o, expr_ptr t, expr_ptr v, int l, int c)
        : stmt(stmt_kind::aug_assign, l, c), op(o), target(std::move(t)), value(std::move(v)) {}
    binary_op op;
    expr_ptr target, value;
};

// elif chains nest as an orelse holding a single if_stmt.
struct if_stmt final : stmt {
    if_stmt(int l, int c) : stmt(stmt_kind::if_, l, c) {}
    expr_ptr cond;
    block body;
    block orelse;
};

struct while_stmt final : stmt {
    while_stmt(int l, int c) : stmt(stmt_kind::while_, l, c) {}
    expr_ptr cond;
    block body;
};

struct for_stmt final : stmt {
    for_stmt(int l, int c) : stmt(stmt_kind::for_, l, c) {}
    int var = -1;
    expr_ptr iterable;
    block body;
};

struct def_stmt final : stmt {
    def_stmt(int l, int c) : stmt(stmt_kind::def, l, c) {}
    int name = -1;
    std::vector<int> params;
    block body;
    // Names declared `global` anywhere in the body (nested defs excluded).
    std::vector<int> globals;
};

struct return_stmt final : stmt {
    return_stmt(expr_ptr v, int l, int c) : stmt(stmt_kind::return_, l, c), value(std::move(v)) {}
    expr_ptr value; // may be null
};

struct import_stmt final : stmt {
    import_stmt(int l, int c) : stmt(stmt_kind::import, l, c) {}
    std::vector<int> names;
};

struct global_stmt final : stmt {
    global_stmt(int l, int c) : stmt(stmt_kind::global, l, c) {}
    std::vector<int> names;
};

struct simple_stmt final : stmt {
    simple_stmt(stmt_kind k, int l, int c) : stmt(k, l, c) {}
};

struct program {
    std::string source_name;
    block body;
    // Identifier table; AST nodes refer to names by index.
    std::vector<std::string> symbols;

    const std::string& name_of(int sym) const { return symbols.at(static_cast<std::size_t>(sym)); }
};

// Nesting limits; deeper input is a SyntaxError. The height limit bounds
// every recursive walk over an expression tree.
inline constexpr int max_parse_depth = 100;
inline constexpr int max_expr_height = 200;

// Throws syntax_error with line and column.
program parse(std::string_view source, std::string source_name);

// Canonical source text; parse(dump(p)) is structurally equal to p.
std::string dump(const program& p);

// Tree equality ignoring positions; names compare by spelling.
bool same_structure(const program& a, const program& b);

} // namespace sealpy::interp
