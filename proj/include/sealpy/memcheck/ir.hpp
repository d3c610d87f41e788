#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sealpy::memcheck {

enum class value_type { int_, addr };

enum class opcode {
    const_, // x = const N | x = const null
    copy,   // x = copy y
    add,
    sub,
    mul,
    shl,
    cmp,   // x = cmp lt|le|eq|ne y z
    br,    // br x THEN ELSE
    jmp,   // jmp BLOCK
    alloc, // p = alloc x
    free,  // free p
    load,  // x = load p i
    store, // store p i x
    call,  // [x =] call NAME(args)
    ret,   // ret [x]
};

enum class cmp_kind { lt, le, eq, ne };

struct operand {
    enum class kind { var, imm, null } k = kind::imm;
    int var = -1; // index into function::variables
    std::int64_t imm = 0;

    bool is_var() const noexcept { return k == kind::var; }
};

struct instruction {
    opcode op = opcode::ret;
    int dst = -1; // variable index, -1 when none
    std::vector<operand> args;
    cmp_kind cmp = cmp_kind::eq;
    int then_block = -1; // br target / jmp target
    int else_block = -1;
    std::string callee;
    int index = 0; // position within the function, counted across blocks
    int line = 0;
};

struct basic_block {
    std::string label;
    std::vector<instruction> instrs;
    std::vector<int> successors;
};

struct parameter {
    int var = -1;
    value_type type = value_type::int_;
};

struct function {
    std::string name;
    std::vector<parameter> params;
    std::vector<std::string> variables;
    std::vector<basic_block> blocks; // blocks[0] is the entry
    int line = 0;

    int instruction_count() const;
    const instruction* instruction_at(int index) const;
};

struct ir_program {
    std::vector<function> functions;
};

class ir_syntax_error : public std::runtime_error {
  public:
    ir_syntax_error(int line, const std::string& message);
    int line;
};

ir_program parse_ir(std::string_view source);

std::string_view to_string(opcode op);

} // namespace sealpy::memcheck
