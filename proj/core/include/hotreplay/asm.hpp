#pragma once

#include <string>
#include <vector>

#include "hotreplay/image.hpp"
#include "hotreplay/vm.hpp"

namespace hotreplay {

// Small assembler producing FunctionObjects. Register operands are 0..15,
// or asm_sp (16) for the stack pointer. Internal control flow assembles to
// pc-relative displacements; symbol references become relocations.
constexpr uint8_t asm_sp = kSpReg;

class FunctionBuilder {
 public:
  explicit FunctionBuilder(std::string name) : name_(std::move(name)) {}

  using Label = int;
  Label make_label();
  void bind(Label l);

  void ldi(uint8_t rd, int64_t imm);  // imm must fit in i32
  void ldi64(uint8_t rd, uint64_t value);
  void ldi_sym(uint8_t rd, const std::string& symbol);
  void mov(uint8_t rd, uint8_t ra);

  void add(uint8_t rd, uint8_t ra, uint8_t rb) { alu(Op::ADD, rd, ra, rb); }
  void sub(uint8_t rd, uint8_t ra, uint8_t rb) { alu(Op::SUB, rd, ra, rb); }
  void mul(uint8_t rd, uint8_t ra, uint8_t rb) { alu(Op::MUL, rd, ra, rb); }
  void div(uint8_t rd, uint8_t ra, uint8_t rb) { alu(Op::DIV, rd, ra, rb); }
  void and_(uint8_t rd, uint8_t ra, uint8_t rb) { alu(Op::AND, rd, ra, rb); }
  void or_(uint8_t rd, uint8_t ra, uint8_t rb) { alu(Op::OR, rd, ra, rb); }
  void xor_(uint8_t rd, uint8_t ra, uint8_t rb) { alu(Op::XOR, rd, ra, rb); }
  void shl(uint8_t rd, uint8_t ra, uint8_t rb) { alu(Op::SHL, rd, ra, rb); }
  void shr(uint8_t rd, uint8_t ra, uint8_t rb) { alu(Op::SHR, rd, ra, rb); }

  void addi(uint8_t rd, uint8_t ra, int32_t imm) { alui(Op::ADD, rd, ra, imm); }
  void subi(uint8_t rd, uint8_t ra, int32_t imm) { alui(Op::SUB, rd, ra, imm); }
  void muli(uint8_t rd, uint8_t ra, int32_t imm) { alui(Op::MUL, rd, ra, imm); }
  void divi(uint8_t rd, uint8_t ra, int32_t imm) { alui(Op::DIV, rd, ra, imm); }
  void andi(uint8_t rd, uint8_t ra, int32_t imm) { alui(Op::AND, rd, ra, imm); }
  void ori(uint8_t rd, uint8_t ra, int32_t imm) { alui(Op::OR, rd, ra, imm); }
  void xori(uint8_t rd, uint8_t ra, int32_t imm) { alui(Op::XOR, rd, ra, imm); }
  void shli(uint8_t rd, uint8_t ra, int32_t imm) { alui(Op::SHL, rd, ra, imm); }
  void shri(uint8_t rd, uint8_t ra, int32_t imm) { alui(Op::SHR, rd, ra, imm); }

  void ld(uint8_t rd, uint8_t base, int32_t off);
  void st(uint8_t src, uint8_t base, int32_t off);

  void jmp(Label l);
  void beq(uint8_t a, uint8_t b, Label l) { branch(Op::BEQ, a, b, l); }
  void bne(uint8_t a, uint8_t b, Label l) { branch(Op::BNE, a, b, l); }
  void blt(uint8_t a, uint8_t b, Label l) { branch(Op::BLT, a, b, l); }  // unsigned a < b

  void callt(const std::string& symbol);
  void calld(const std::string& symbol);
  void ret();
  void halt();

  size_t instruction_count() const { return code_.size(); }
  FunctionObject finish();

 private:
  void alu(Op op, uint8_t rd, uint8_t ra, uint8_t rb);
  void alui(Op op, uint8_t rd, uint8_t ra, int32_t imm);
  void branch(Op op, uint8_t a, uint8_t b, Label l);
  void emit(const Instruction& in) { code_.push_back(in); }

  struct Fixup {
    size_t index;
    Label label;
  };
  struct SymFixup {
    size_t index;
    std::string symbol;
    RelocKind kind;
  };

  std::string name_;
  std::vector<Instruction> code_;
  std::vector<int64_t> label_pos_;  // -1 until bound
  std::vector<Fixup> fixups_;
  std::vector<SymFixup> sym_fixups_;
};

}  // namespace hotreplay
