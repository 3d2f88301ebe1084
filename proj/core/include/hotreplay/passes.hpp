#pragma once

#include <string>
#include <vector>

#include "hotreplay/image.hpp"
#include "hotreplay/vm.hpp"

// Transformation passes over decoded function bodies. Exposed separately
// from the optimizer facade so each pass can be unit-tested on small
// fixtures.

namespace hotreplay::opt {

struct IrInst {
  Instruction ins;
  int target = -1;            // branch/JMP destination as an instruction index
  std::string reloc_symbol;   // imm is symbolic when non-empty
  RelocKind reloc_kind = RelocKind::AbsAddr32;

  bool is_branch() const {
    return ins.op == Op::BEQ || ins.op == Op::BNE || ins.op == Op::BLT;
  }
  bool is_control() const {
    return is_branch() || ins.op == Op::JMP || ins.op == Op::CALLT || ins.op == Op::CALLD ||
           ins.op == Op::RET || ins.op == Op::HALT;
  }
};

struct IrProgram {
  std::vector<IrInst> code;
};

IrProgram ir_decode(const FunctionObject& fo);
FunctionObject ir_encode(const IrProgram& prog, const std::string& name);

// Each pass returns true when it changed the program.
bool pass_const_fold(IrProgram& p);
bool pass_dead_code_elim(IrProgram& p);
bool pass_strength_reduce(IrProgram& p);
bool pass_peephole(IrProgram& p);
bool pass_redundant_load_elim(IrProgram& p);
bool pass_fast_helper(IrProgram& p);  // soft_div -> div_fast, memfill -> memfill_fast
bool pass_branch_straighten(IrProgram& p);
bool pass_loop_unroll(IrProgram& p, int factor);
bool pass_schedule_greedy(IrProgram& p);
bool pass_spill_heavy(IrProgram& p);
bool pass_code_align_pad(IrProgram& p);
bool pass_bounds_check_hoist(IrProgram& p);

}  // namespace hotreplay::opt
