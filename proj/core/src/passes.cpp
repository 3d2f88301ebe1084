#include "hotreplay/passes.hpp"

#include <algorithm>
#include <cstring>
#include <optional>
#include <unordered_map>

namespace hotreplay::opt {

namespace {

constexpr int kAllRegs = kSpReg + 1;  // r0..r15 + sp

bool is_alu(Op op) {
  return op == Op::ADD || op == Op::SUB || op == Op::MUL || op == Op::DIV || op == Op::AND ||
         op == Op::OR || op == Op::XOR || op == Op::SHL || op == Op::SHR;
}

bool is_commutative(Op op) {
  return op == Op::ADD || op == Op::MUL || op == Op::AND || op == Op::OR || op == Op::XOR;
}

// Explicit register fields. Calls/HALT clobber everything and are handled
// by callers as barriers.
int def_reg(const Instruction& in) {
  switch (in.op) {
    case Op::LDI:
    case Op::MOV:
    case Op::LD:
      return in.rd;
    default:
      if (is_alu(in.op)) return in.rd;
      return -1;
  }
}

void use_regs(const Instruction& in, int out[2]) {
  out[0] = out[1] = -1;
  switch (in.op) {
    case Op::MOV:
    case Op::LD:
      out[0] = in.ra;
      return;
    case Op::ST:
    case Op::BEQ:
    case Op::BNE:
    case Op::BLT:
      out[0] = in.rd;
      out[1] = in.ra;
      return;
    default:
      if (is_alu(in.op)) {
        out[0] = in.ra;
        if (!in.use_imm) out[1] = in.rb;
      }
      return;
  }
}

bool is_barrier(Op op) {
  return op == Op::CALLT || op == Op::CALLD || op == Op::HALT;
}

std::vector<bool> leader_mask(const IrProgram& p) {
  std::vector<bool> lead(p.code.size(), false);
  if (!p.code.empty()) lead[0] = true;
  for (size_t i = 0; i < p.code.size(); ++i) {
    const IrInst& in = p.code[i];
    if (in.target >= 0 && size_t(in.target) < p.code.size()) lead[in.target] = true;
    if (in.is_control() && i + 1 < p.code.size()) lead[i + 1] = true;
  }
  return lead;
}

// Drops tombstoned instructions; branch targets are remapped to the first
// surviving instruction at or after the old target.
bool compact(IrProgram& p, const std::vector<bool>& dead) {
  size_t n = p.code.size();
  bool any = false;
  for (size_t i = 0; i < n; ++i) any = any || dead[i];
  if (!any) return false;

  std::vector<int> newidx(n + 1, 0);
  int k = 0;
  for (size_t i = 0; i < n; ++i) {
    newidx[i] = k;
    if (!dead[i]) ++k;
  }
  newidx[n] = k;

  std::vector<IrInst> out;
  out.reserve(k);
  for (size_t i = 0; i < n; ++i) {
    if (dead[i]) continue;
    IrInst in = p.code[i];
    if (in.target >= 0) {
      int t = newidx[in.target];
      if (t >= k) throw Error(Error::Code::PassInternal, "branch retarget past end");
      in.target = t;
    }
    out.push_back(std::move(in));
  }
  p.code = std::move(out);
  return true;
}

bool fits_i32(int64_t v) { return v >= INT32_MIN && v <= INT32_MAX; }

std::optional<uint64_t> eval_alu(Op op, uint64_t x, uint64_t y) {
  switch (op) {
    case Op::ADD: return x + y;
    case Op::SUB: return x - y;
    case Op::MUL: return x * y;
    case Op::DIV:
      if (y == 0) return std::nullopt;  // runtime halt must survive
      return x / y;
    case Op::AND: return x & y;
    case Op::OR: return x | y;
    case Op::XOR: return x ^ y;
    case Op::SHL: return x << (y & 63);
    case Op::SHR: return x >> (y & 63);
    default: return std::nullopt;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// IR <-> object code
// ---------------------------------------------------------------------------

IrProgram ir_decode(const FunctionObject& fo) {
  fo.validate();
  std::vector<Instruction> ins = decode_all(fo.code);
  IrProgram p;
  p.code.resize(ins.size());
  for (size_t i = 0; i < ins.size(); ++i) {
    p.code[i].ins = ins[i];
    const Instruction& in = ins[i];
    if (in.op == Op::JMP || in.op == Op::BEQ || in.op == Op::BNE || in.op == Op::BLT) {
      int64_t t = int64_t(i) + 1 + int64_t(in.imm) / kInstrBytes;
      if (in.imm % kInstrBytes != 0 || t < 0 || t >= int64_t(ins.size())) {
        throw Error(Error::Code::PassInternal, "branch target outside function");
      }
      p.code[i].target = int(t);
      p.code[i].ins.imm = 0;
    }
  }
  for (const auto& rel : fo.relocations) {
    IrInst& in = p.code[rel.offset / kInstrBytes];
    in.reloc_symbol = rel.symbol;
    in.reloc_kind = rel.kind;
  }
  return p;
}

FunctionObject ir_encode(const IrProgram& prog, const std::string& name) {
  std::vector<Instruction> ins(prog.code.size());
  FunctionObject fo;
  fo.name = name;
  for (size_t i = 0; i < prog.code.size(); ++i) {
    ins[i] = prog.code[i].ins;
    if (prog.code[i].target >= 0) {
      int64_t disp = (int64_t(prog.code[i].target) - int64_t(i) - 1) * kInstrBytes;
      if (!fits_i32(disp)) throw Error(Error::Code::PassInternal, "displacement overflow");
      ins[i].imm = int32_t(disp);
    }
    if (!prog.code[i].reloc_symbol.empty()) {
      fo.relocations.push_back(
          {uint32_t(i * kInstrBytes), prog.code[i].reloc_symbol, prog.code[i].reloc_kind});
      fo.referenced_symbols.insert(prog.code[i].reloc_symbol);
    }
  }
  fo.code = encode_all(ins);
  fo.validate();
  return fo;
}

// ---------------------------------------------------------------------------
// Constant folding / propagation
// ---------------------------------------------------------------------------

bool pass_const_fold(IrProgram& p) {
  bool changed = false;
  std::vector<bool> lead = leader_mask(p);
  std::vector<bool> dead(p.code.size(), false);

  uint64_t known_val[kAllRegs];
  bool known[kAllRegs];
  auto reset = [&] { std::fill(known, known + kAllRegs, false); };
  reset();

  for (size_t i = 0; i < p.code.size(); ++i) {
    if (lead[i]) reset();
    IrInst& ir = p.code[i];
    Instruction& in = ir.ins;

    if (is_barrier(in.op)) {
      reset();
      continue;
    }
    if (!ir.reloc_symbol.empty()) {
      // Symbolic immediates are opaque until link time.
      if (int d = def_reg(in); d >= 0) known[d] = false;
      continue;
    }

    switch (in.op) {
      case Op::LDI:
        known[in.rd] = true;
        known_val[in.rd] = uint64_t(int64_t(in.imm));
        break;
      case Op::MOV:
        if (known[in.ra]) {
          known[in.rd] = true;
          known_val[in.rd] = known_val[in.ra];
          if (fits_i32(int64_t(known_val[in.ra]))) {
            in = {Op::LDI, in.rd, 0, 0, false, int32_t(int64_t(known_val[in.ra]))};
            changed = true;
          }
        } else {
          known[in.rd] = false;
        }
        break;
      case Op::LD:
        known[in.rd] = false;
        break;
      case Op::ST:
        break;
      case Op::BEQ:
      case Op::BNE:
      case Op::BLT:
        if (known[in.rd] && known[in.ra]) {
          uint64_t x = known_val[in.rd], y = known_val[in.ra];
          bool taken = in.op == Op::BEQ ? x == y : in.op == Op::BNE ? x != y : x < y;
          if (taken) {
            in = {Op::JMP, 0, 0, 0, false, 0};
          } else {
            dead[i] = true;
            ir.target = -1;
          }
          changed = true;
        }
        break;
      default:
        if (is_alu(in.op)) {
          // Prefer immediate operands when the register value is known.
          if (!in.use_imm && known[in.rb] && fits_i32(int64_t(known_val[in.rb]))) {
            in.use_imm = true;
            in.imm = int32_t(int64_t(known_val[in.rb]));
            in.rb = 0;
            changed = true;
          } else if (!in.use_imm && known[in.ra] && !known[in.rb] && is_commutative(in.op) &&
                     fits_i32(int64_t(known_val[in.ra]))) {
            in.use_imm = true;
            in.imm = int32_t(int64_t(known_val[in.ra]));
            in.ra = in.rb;
            in.rb = 0;
            changed = true;
          }
          bool a_known = known[in.ra];
          bool b_known = in.use_imm || known[in.rb];
          if (a_known && b_known) {
            uint64_t y = in.use_imm ? uint64_t(int64_t(in.imm)) : known_val[in.rb];
            if (auto v = eval_alu(in.op, known_val[in.ra], y)) {
              known[in.rd] = true;
              known_val[in.rd] = *v;
              if (fits_i32(int64_t(*v))) {
                in = {Op::LDI, in.rd, 0, 0, false, int32_t(int64_t(*v))};
                changed = true;
              }
              break;
            }
          }
          known[in.rd] = false;
        }
        break;
    }
  }
  compact(p, dead);
  return changed;
}

// ---------------------------------------------------------------------------
// Register-level dead code elimination (never removes stores)
// ---------------------------------------------------------------------------

namespace {

struct Block {
  size_t begin, end;             // [begin, end)
  std::vector<size_t> succ;
};

std::vector<Block> build_blocks(const IrProgram& p, std::vector<size_t>& block_of) {
  std::vector<bool> lead = leader_mask(p);
  std::vector<Block> blocks;
  block_of.assign(p.code.size(), 0);
  for (size_t i = 0; i < p.code.size(); ++i) {
    if (lead[i]) blocks.push_back({i, i + 1, {}});
    blocks.back().end = i + 1;
    block_of[i] = blocks.size() - 1;
  }
  for (auto& b : blocks) {
    const IrInst& last = p.code[b.end - 1];
    if (last.ins.op == Op::RET || last.ins.op == Op::HALT) continue;
    if (last.ins.op == Op::JMP) {
      b.succ.push_back(block_of[last.target]);
      continue;
    }
    if (last.is_branch()) b.succ.push_back(block_of[last.target]);
    if (b.end < p.code.size()) b.succ.push_back(block_of[b.end]);
  }
  return blocks;
}

using LiveSet = uint32_t;  // bit per register, r0..r15 + sp
constexpr LiveSet kAllLive = (1u << kAllRegs) - 1;

LiveSet instr_uses(const Instruction& in) {
  if (is_barrier(in.op)) return kAllLive;
  if (in.op == Op::RET) return (1u << 0) | (1u << kSpReg);
  int u[2];
  use_regs(in, u);
  LiveSet s = 0;
  if (u[0] >= 0) s |= 1u << u[0];
  if (u[1] >= 0) s |= 1u << u[1];
  return s;
}

LiveSet instr_defs(const Instruction& in) {
  if (is_barrier(in.op)) return kAllLive;
  if (in.op == Op::RET) return 1u << kSpReg;
  int d = def_reg(in);
  return d >= 0 ? (1u << d) : 0;
}

bool dce_once(IrProgram& p) {
  if (p.code.empty()) return false;
  std::vector<size_t> block_of;
  std::vector<Block> blocks = build_blocks(p, block_of);

  std::vector<LiveSet> use_b(blocks.size(), 0), def_b(blocks.size(), 0);
  for (size_t b = 0; b < blocks.size(); ++b) {
    LiveSet use = 0, def = 0;
    for (size_t i = blocks[b].begin; i < blocks[b].end; ++i) {
      use |= instr_uses(p.code[i].ins) & ~def;
      def |= instr_defs(p.code[i].ins);
    }
    use_b[b] = use;
    def_b[b] = def;
  }

  std::vector<LiveSet> live_out(blocks.size(), 0), live_in(blocks.size(), 0);
  bool moved = true;
  while (moved) {
    moved = false;
    for (size_t b = blocks.size(); b-- > 0;) {
      LiveSet out = 0;
      for (size_t s : blocks[b].succ) out |= live_in[s];
      LiveSet in = use_b[b] | (out & ~def_b[b]);
      if (out != live_out[b] || in != live_in[b]) {
        live_out[b] = out;
        live_in[b] = in;
        moved = true;
      }
    }
  }

  std::vector<bool> dead(p.code.size(), false);
  bool changed = false;
  for (size_t b = 0; b < blocks.size(); ++b) {
    LiveSet live = live_out[b];
    for (size_t i = blocks[b].end; i-- > blocks[b].begin;) {
      const Instruction& in = p.code[i].ins;
      // DIV stays: removing one could erase a divide-by-zero halt.
      bool removable = (in.op == Op::LDI || in.op == Op::MOV || in.op == Op::LD ||
                        (is_alu(in.op) && in.op != Op::DIV)) &&
                       in.rd != kSpReg && p.code[i].reloc_symbol.empty();
      if (removable && !(live & (1u << in.rd))) {
        dead[i] = true;
        changed = true;
        continue;
      }
      live = (live & ~instr_defs(in)) | instr_uses(in);
    }
  }
  compact(p, dead);
  return changed;
}

}  // namespace

bool pass_dead_code_elim(IrProgram& p) {
  bool changed = false;
  while (dce_once(p)) changed = true;
  return changed;
}

// ---------------------------------------------------------------------------
// Strength reduction
// ---------------------------------------------------------------------------

bool pass_strength_reduce(IrProgram& p) {
  bool changed = false;
  for (auto& ir : p.code) {
    Instruction& in = ir.ins;
    if (!ir.reloc_symbol.empty() || !in.use_imm) continue;
    if (in.op != Op::MUL && in.op != Op::DIV) continue;
    int64_t c = int64_t(in.imm);
    if (c == 1) {
      in = {Op::MOV, in.rd, in.ra, 0, false, 0};
      changed = true;
      continue;
    }
    if (c < 2 || (c & (c - 1)) != 0) continue;
    int shift = 0;
    while ((int64_t(1) << shift) < c) ++shift;
    in = {in.op == Op::MUL ? Op::SHL : Op::SHR, in.rd, in.ra, 0, true, shift};
    changed = true;
  }
  return changed;
}

// ---------------------------------------------------------------------------
// Peephole combining
// ---------------------------------------------------------------------------

bool pass_peephole(IrProgram& p) {
  bool changed = false;
  std::vector<bool> lead = leader_mask(p);
  std::vector<bool> dead(p.code.size(), false);

  for (size_t i = 0; i < p.code.size(); ++i) {
    IrInst& ir = p.code[i];
    Instruction& in = ir.ins;
    if (!ir.reloc_symbol.empty()) continue;

    if (in.op == Op::MOV && in.rd == in.ra) {
      dead[i] = true;
      changed = true;
      continue;
    }
    if (is_alu(in.op) && !in.use_imm && in.ra == in.rb &&
        (in.op == Op::XOR || in.op == Op::SUB)) {
      in = {Op::LDI, in.rd, 0, 0, false, 0};
      changed = true;
      continue;
    }
    if (is_alu(in.op) && in.use_imm) {
      int64_t c = int64_t(in.imm);
      bool to_mov = false, to_zero = false;
      switch (in.op) {
        case Op::ADD:
        case Op::SUB:
        case Op::OR:
        case Op::XOR:
        case Op::SHL:
        case Op::SHR:
          to_mov = c == 0;
          break;
        case Op::MUL:
          to_mov = c == 1;
          to_zero = c == 0;
          break;
        case Op::AND:
          to_zero = c == 0;
          to_mov = c == -1;
          break;
        default:
          break;
      }
      if (to_zero) {
        in = {Op::LDI, in.rd, 0, 0, false, 0};
        changed = true;
        continue;
      }
      if (to_mov) {
        if (in.rd == in.ra) {
          dead[i] = true;
        } else {
          in = {Op::MOV, in.rd, in.ra, 0, false, 0};
        }
        changed = true;
        continue;
      }
    }
    // Overwritten immediate load.
    if (in.op == Op::LDI && i + 1 < p.code.size() && !lead[i + 1] &&
        p.code[i + 1].ins.op == Op::LDI && p.code[i + 1].ins.rd == in.rd) {
      dead[i] = true;
      changed = true;
      continue;
    }
  }
  compact(p, dead);
  return changed;
}

// ---------------------------------------------------------------------------
// Redundant load elimination (block local, alias conservative)
// ---------------------------------------------------------------------------

bool pass_redundant_load_elim(IrProgram& p) {
  bool changed = false;
  std::vector<bool> lead = leader_mask(p);
  std::vector<bool> dead(p.code.size(), false);

  struct Avail {
    uint8_t base;
    uint64_t base_ver;
    int32_t off;
    uint8_t reg;
    uint64_t reg_ver;
  };
  std::vector<Avail> avail;
  uint64_t ver[kAllRegs];

  auto reset = [&] {
    avail.clear();
    std::fill(ver, ver + kAllRegs, 0);
  };
  reset();

  for (size_t i = 0; i < p.code.size(); ++i) {
    if (lead[i]) reset();
    IrInst& ir = p.code[i];
    Instruction& in = ir.ins;

    if (is_barrier(in.op) || in.op == Op::RET) {
      reset();
      continue;
    }

    if (in.op == Op::LD && ir.reloc_symbol.empty()) {
      const Avail* hit = nullptr;
      for (const Avail& a : avail) {
        if (a.base == in.ra && a.base_ver == ver[in.ra] && a.off == in.imm &&
            a.reg_ver == ver[a.reg]) {
          hit = &a;
          break;
        }
      }
      if (hit) {
        changed = true;
        if (hit->reg == in.rd) {
          dead[i] = true;
          continue;
        }
        in = {Op::MOV, in.rd, hit->reg, 0, false, 0};
        ++ver[in.rd];
        continue;
      }
      uint8_t rd = in.rd, ra = in.ra;
      int32_t off = in.imm;
      ++ver[rd];
      avail.erase(std::remove_if(avail.begin(), avail.end(),
                                 [&](const Avail& a) {
                                   return a.reg_ver != ver[a.reg] || a.base_ver != ver[a.base];
                                 }),
                  avail.end());
      if (rd != ra) avail.push_back({ra, ver[ra], off, rd, ver[rd]});
      continue;
    }

    if (in.op == Op::ST && ir.reloc_symbol.empty()) {
      // A store may alias anything tracked under a different base register;
      // same-base entries survive when the offsets are provably disjoint.
      avail.erase(std::remove_if(avail.begin(), avail.end(),
                                 [&](const Avail& a) {
                                   if (a.base != in.ra || a.base_ver != ver[in.ra]) return true;
                                   int64_t d = int64_t(a.off) - int64_t(in.imm);
                                   return d > -8 && d < 8;
                                 }),
                  avail.end());
      avail.push_back({in.ra, ver[in.ra], in.imm, in.rd, ver[in.rd]});
      continue;
    }

    int d = def_reg(in);
    if (d >= 0) {
      ++ver[d];
      avail.erase(std::remove_if(avail.begin(), avail.end(),
                                 [&](const Avail& a) {
                                   return a.reg_ver != ver[a.reg] || a.base_ver != ver[a.base];
                                 }),
                  avail.end());
    }
  }
  compact(p, dead);
  return changed;
}

// ---------------------------------------------------------------------------
// Fast helper substitution
// ---------------------------------------------------------------------------

bool pass_fast_helper(IrProgram& p) {
  bool changed = false;
  for (auto& ir : p.code) {
    if (ir.ins.op != Op::CALLT || ir.reloc_symbol.empty()) continue;
    if (ir.reloc_symbol == "soft_div") {
      ir.reloc_symbol = "div_fast";
      changed = true;
    } else if (ir.reloc_symbol == "memfill") {
      ir.reloc_symbol = "memfill_fast";
      changed = true;
    }
  }
  return changed;
}

// ---------------------------------------------------------------------------
// Branch straightening
// ---------------------------------------------------------------------------

bool pass_branch_straighten(IrProgram& p) {
  bool changed = false;
  for (size_t i = 0; i < p.code.size(); ++i) {
    IrInst& ir = p.code[i];
    if (ir.target < 0) continue;
    int t = ir.target;
    for (int hops = 0; hops < 64; ++hops) {
      const IrInst& ti = p.code[t];
      if (ti.ins.op != Op::JMP || ti.target == t) break;
      t = ti.target;
    }
    if (t != ir.target) {
      ir.target = t;
      changed = true;
    }
  }
  std::vector<bool> dead(p.code.size(), false);
  for (size_t i = 0; i < p.code.size(); ++i) {
    if (p.code[i].target == int(i) + 1 &&
        (p.code[i].ins.op == Op::JMP || p.code[i].is_branch())) {
      dead[i] = true;
      changed = true;
    }
  }
  compact(p, dead);
  return changed;
}

// ---------------------------------------------------------------------------
// Loop unrolling
// ---------------------------------------------------------------------------

namespace {

struct LoopMatch {
  size_t header;      // first body instruction
  size_t add_idx;     // ADD ri, ri, #1
  size_t latch;       // BLT ri, rn, header
  uint8_t ri, rn;
  bool ri_read_in_body = false;      // body reads ri other than as LD/ST base
  bool ri_base_in_body = false;      // body uses ri as LD/ST base
  // Registers whose only body write is a single self-increment and whose
  // other uses are all LD/ST bases: their increments can fold into scaled
  // offsets across copies.
  struct Stride {
    uint8_t reg;
    size_t add_idx;
    int64_t step;
  };
  std::vector<Stride> strides;
};

std::vector<bool> target_mask(const IrProgram& p) {
  std::vector<bool> t(p.code.size(), false);
  for (const auto& ir : p.code) {
    if (ir.target >= 0) t[ir.target] = true;
  }
  return t;
}

int find_scratch(const IrProgram& p) {
  bool used[kAllRegs] = {false};
  used[0] = true;  // return value
  used[kSpReg] = true;
  for (const auto& ir : p.code) {
    const Instruction& in = ir.ins;
    int u[2];
    use_regs(in, u);
    if (u[0] >= 0) used[u[0]] = true;
    if (u[1] >= 0) used[u[1]] = true;
    int d = def_reg(in);
    if (d >= 0) used[d] = true;
    if (in.op == Op::ST || ir.is_branch()) used[in.rd] = true;
  }
  for (int r = 15; r >= 1; --r) {
    if (!used[r]) return r;
  }
  return -1;
}

std::optional<LoopMatch> match_counted_loop(const IrProgram& p, size_t latch) {
  const IrInst& bl = p.code[latch];
  if (bl.ins.op != Op::BLT || bl.target < 0 || size_t(bl.target) >= latch) return std::nullopt;
  size_t header = size_t(bl.target);
  if (latch < 2 || header > latch - 1) return std::nullopt;

  LoopMatch m;
  m.header = header;
  m.latch = latch;
  m.ri = bl.ins.rd;
  m.rn = bl.ins.ra;
  m.add_idx = latch - 1;
  const Instruction& add = p.code[m.add_idx].ins;
  if (add.op != Op::ADD || !add.use_imm || add.imm != 1 || add.rd != m.ri || add.ra != m.ri) {
    return std::nullopt;
  }
  if (m.ri == m.rn || m.ri == kSpReg) return std::nullopt;
  if (m.add_idx <= header) return std::nullopt;  // empty body

  // The body must be straight-line with a single entry (fallthrough into
  // the header) and the latch as its only back edge.
  for (size_t i = 0; i < p.code.size(); ++i) {
    const IrInst& ir = p.code[i];
    if (ir.target >= 0 && size_t(ir.target) >= header && size_t(ir.target) <= m.latch) {
      if (i != latch || size_t(ir.target) != header) return std::nullopt;
    }
  }

  struct WriteInfo {
    int count = 0;
    size_t idx = 0;
    int64_t step = 0;
    bool is_self_step = false;
    bool other_use = false;   // read outside LD/ST base position
    bool base_use = false;
  };
  WriteInfo info[kAllRegs];

  for (size_t i = header; i < m.add_idx; ++i) {
    const IrInst& ir = p.code[i];
    const Instruction& in = ir.ins;
    if (ir.is_control()) return std::nullopt;
    if (in.op == Op::LD || in.op == Op::ST) {
      info[in.ra].base_use = true;
    }
    int u[2];
    use_regs(in, u);
    for (int k = 0; k < 2; ++k) {
      if (u[k] < 0) continue;
      if ((in.op == Op::LD || in.op == Op::ST) && k == (in.op == Op::LD ? 0 : 1)) continue;
      info[u[k]].other_use = true;
    }
    int d = def_reg(in);
    if (d >= 0) {
      WriteInfo& w = info[d];
      w.count++;
      w.idx = i;
      bool self_step = (in.op == Op::ADD || in.op == Op::SUB) && in.use_imm && in.ra == uint8_t(d);
      w.is_self_step = self_step;
      if (self_step) w.step = in.op == Op::ADD ? int64_t(in.imm) : -int64_t(in.imm);
    }
  }
  if (info[m.rn].count > 0 || info[m.ri].count > 0) return std::nullopt;
  if (info[kSpReg].count > 0) return std::nullopt;
  if (m.latch + 1 >= p.code.size()) return std::nullopt;  // need a landing pad
  m.ri_read_in_body = info[m.ri].other_use;
  m.ri_base_in_body = info[m.ri].base_use;

  for (int r = 0; r < kAllRegs; ++r) {
    WriteInfo& w = info[r];
    if (w.count == 1 && w.is_self_step && !w.other_use && w.base_use && r != m.ri) {
      m.strides.push_back({uint8_t(r), w.idx, w.step});
    }
  }
  return m;
}

}  // namespace

bool pass_loop_unroll(IrProgram& p, int factor) {
  if (factor <= 1) return false;
  int scratch = find_scratch(p);
  if (scratch < 0) return false;

  bool changed = false;
  for (int rounds = 0; rounds < 16; ++rounds) {
    std::optional<LoopMatch> match;
    for (size_t i = 0; i < p.code.size() && !match; ++i) {
      match = match_counted_loop(p, i);
    }
    if (!match) break;
    const LoopMatch& m = *match;
    const int k = factor;

    // Copies can fold a register's self-increment into scaled offsets only
    // when the grown offsets still encode.
    auto stride_of = [&](uint8_t reg) -> const LoopMatch::Stride* {
      for (const auto& s : m.strides) {
        if (s.reg == reg) return &s;
      }
      return nullptr;
    };
    bool fold_ri = !m.ri_read_in_body;  // ri as base handled via offset + j
    bool offsets_ok = true;
    for (size_t i = m.header; i < m.add_idx && offsets_ok; ++i) {
      const Instruction& in = p.code[i].ins;
      if (in.op != Op::LD && in.op != Op::ST) continue;
      const LoopMatch::Stride* s = stride_of(in.ra);
      int64_t step = s ? s->step : (in.ra == m.ri && fold_ri ? 1 : 0);
      int64_t worst = int64_t(in.imm) + step * (k - 1);
      if (!fits_i32(worst)) offsets_ok = false;
    }
    if (!offsets_ok) break;

    std::vector<IrInst> out;
    std::vector<int> remap(p.code.size() + 1, -1);
    constexpr int kNew = 1 << 28;  // targets >= kNew index the output directly

    auto copy_outside = [&](size_t from, size_t to) {
      for (size_t i = from; i < to; ++i) {
        remap[i] = int(out.size());
        out.push_back(p.code[i]);
      }
    };

    auto emit = [&](IrInst ir) {
      out.push_back(std::move(ir));
      return int(out.size()) - 1 + kNew;
    };
    auto plain = [&](Instruction in) {
      IrInst ir;
      ir.ins = in;
      return emit(std::move(ir));
    };

    copy_outside(0, m.header);

    // Peeled first iteration keeps the loop's do-while contract.
    remap[m.header] = int(out.size());
    for (size_t i = m.header; i <= m.add_idx; ++i) out.push_back(p.code[i]);

    size_t head_check = out.size();
    plain({Op::BLT, m.ri, m.rn, 0, false, 0});   // continue? -> filled below
    size_t exit_jmp0 = out.size();
    plain({Op::JMP, 0, 0, 0, false, 0});

    size_t head = out.size();
    plain({Op::ADD, uint8_t(scratch), m.ri, 0, true, int32_t(k - 1)});
    size_t blt_main = out.size();
    plain({Op::BLT, uint8_t(scratch), m.rn, 0, false, 0});
    size_t jmp_rem = out.size();
    plain({Op::JMP, 0, 0, 0, false, 0});

    out[head_check].target = int(head) + kNew;

    size_t main_start = out.size();
    for (int j = 0; j < k; ++j) {
      for (size_t i = m.header; i < m.add_idx; ++i) {
        IrInst ir = p.code[i];
        Instruction& in = ir.ins;
        bool is_folded_step = false;
        for (const auto& s : m.strides) {
          if (s.add_idx == i) is_folded_step = true;
        }
        if (is_folded_step) continue;  // combined increment emitted after the copies
        if (in.op == Op::LD || in.op == Op::ST) {
          if (const LoopMatch::Stride* s = stride_of(in.ra)) {
            in.imm += int32_t(s->step * j);
          } else if (in.ra == m.ri && fold_ri) {
            in.imm += int32_t(j);
          }
        }
        emit(std::move(ir));
      }
      if (!fold_ri) plain({Op::ADD, m.ri, m.ri, 0, true, 1});
    }
    for (const auto& s : m.strides) {
      int64_t total = s.step * k;
      plain({total >= 0 ? Op::ADD : Op::SUB, s.reg, s.reg, 0, true,
             int32_t(total >= 0 ? total : -total)});
    }
    if (fold_ri) plain({Op::ADD, m.ri, m.ri, 0, true, int32_t(k)});
    plain({Op::JMP, 0, 0, 0, false, 0});
    out.back().target = int(head) + kNew;
    out[blt_main].target = int(main_start) + kNew;

    // Remainder: the original loop, while-style.
    size_t rem = out.size();
    out[jmp_rem].target = int(rem) + kNew;
    size_t rem_check = out.size();
    plain({Op::BLT, m.ri, m.rn, 0, false, 0});
    size_t rem_exit = out.size();
    plain({Op::JMP, 0, 0, 0, false, 0});
    size_t rbody = out.size();
    out[rem_check].target = int(rbody) + kNew;
    for (size_t i = m.header; i <= m.add_idx; ++i) out.push_back(p.code[i]);
    plain({Op::JMP, 0, 0, 0, false, 0});
    out.back().target = int(rem) + kNew;

    size_t exit_pos = out.size();
    out[exit_jmp0].target = int(exit_pos) + kNew;
    out[rem_exit].target = int(exit_pos) + kNew;

    copy_outside(m.latch + 1, p.code.size());
    remap[p.code.size()] = int(out.size());
    // Anything that used to target the latch's fallthrough.
    if (remap[m.latch + 1] < 0) remap[m.latch + 1] = int(exit_pos);

    for (auto& ir : out) {
      if (ir.target < 0) continue;
      if (ir.target >= kNew) {
        ir.target -= kNew;
      } else {
        int t = remap[ir.target];
        if (t < 0) throw Error(Error::Code::PassInternal, "unroll: dangling branch target");
        ir.target = t;
      }
    }
    p.code = std::move(out);
    changed = true;
  }
  return changed;
}

// ---------------------------------------------------------------------------
// Greedy scheduling: pull an independent ALU instruction between ST;LD
// pairs to break the forwarding stall.
// ---------------------------------------------------------------------------

bool pass_schedule_greedy(IrProgram& p) {
  bool changed = false;
  std::vector<bool> lead = leader_mask(p);
  for (size_t i = 0; i + 1 < p.code.size(); ++i) {
    if (p.code[i].ins.op != Op::ST || p.code[i + 1].ins.op != Op::LD) continue;
    if (lead[i + 1]) continue;
    for (size_t j = i + 2; j < p.code.size(); ++j) {
      if (lead[j]) break;
      const IrInst& cj = p.code[j];
      if (cj.is_control()) break;
      const Instruction& c = cj.ins;
      bool movable = (c.op == Op::LDI || c.op == Op::MOV || (is_alu(c.op) && c.op != Op::DIV)) &&
                     cj.reloc_symbol.empty();
      if (!movable) continue;
      LiveSet cdefs = instr_defs(c), cuses = instr_uses(c);
      bool ok = true;
      for (size_t x = i + 1; x < j && ok; ++x) {
        const Instruction& xi = p.code[x].ins;
        LiveSet xdefs = instr_defs(xi), xuses = instr_uses(xi);
        if ((cdefs & (xuses | xdefs)) || (cuses & xdefs)) ok = false;
      }
      if (!ok) continue;
      IrInst moved = p.code[j];
      p.code.erase(p.code.begin() + long(j));
      p.code.insert(p.code.begin() + long(i + 1), std::move(moved));
      changed = true;
      ++i;  // past the inserted instruction
      break;
    }
  }
  return changed;
}

// ---------------------------------------------------------------------------
// Deliberately pessimizing spill-everything allocation
// ---------------------------------------------------------------------------

bool pass_spill_heavy(IrProgram& p) {
  if (p.code.empty()) return false;
  constexpr int32_t kFrame = 128;  // one slot per general register
  std::vector<IrInst> out;
  std::vector<int> remap(p.code.size() + 1, 0);

  auto plain = [&](Instruction in) {
    IrInst ir;
    ir.ins = in;
    out.push_back(std::move(ir));
  };

  plain({Op::SUB, kSpReg, kSpReg, 0, true, kFrame});
  for (size_t i = 0; i < p.code.size(); ++i) {
    remap[i] = int(out.size());
    const IrInst& ir = p.code[i];
    if (ir.ins.op == Op::RET) {
      plain({Op::ADD, kSpReg, kSpReg, 0, true, kFrame});
    }
    out.push_back(ir);
    if (is_alu(ir.ins.op) && ir.ins.rd < kNumRegs) {
      int32_t slot = int32_t(ir.ins.rd) * 8;
      plain({Op::ST, ir.ins.rd, kSpReg, 0, false, slot});
      plain({Op::LD, ir.ins.rd, kSpReg, 0, false, slot});
    }
  }
  remap[p.code.size()] = int(out.size());
  for (auto& ir : out) {
    if (ir.target >= 0) ir.target = remap[ir.target];
  }
  p.code = std::move(out);
  return true;
}

// ---------------------------------------------------------------------------
// Alignment padding before branch targets
// ---------------------------------------------------------------------------

bool pass_code_align_pad(IrProgram& p) {
  std::vector<bool> tgt = target_mask(p);
  bool any = false;
  std::vector<IrInst> out;
  std::vector<int> remap(p.code.size() + 1, 0);
  for (size_t i = 0; i < p.code.size(); ++i) {
    if (tgt[i]) {
      while (out.size() % 2 != 0) {
        IrInst nop;
        nop.ins = {Op::MOV, 0, 0, 0, false, 0};
        out.push_back(nop);
        any = true;
      }
    }
    remap[i] = int(out.size());
    out.push_back(p.code[i]);
  }
  remap[p.code.size()] = int(out.size());
  if (!any) return false;
  for (auto& ir : out) {
    if (ir.target >= 0) ir.target = remap[ir.target];
  }
  p.code = std::move(out);
  return true;
}

// ---------------------------------------------------------------------------
// Bounds-check hoisting by loop versioning
// ---------------------------------------------------------------------------

bool pass_bounds_check_hoist(IrProgram& p) {
  int scratch = find_scratch(p);
  if (scratch < 0) return false;

  // Pattern: counted loop whose body opens with
  //   BLT ri, rlim, +2 ; JMP abort
  // where rlim is loop invariant. A guarded fast copy drops the per
  // iteration check; the guard falls back to the original loop.
  for (size_t latch = 0; latch < p.code.size(); ++latch) {
    const IrInst& bl = p.code[latch];
    if (bl.ins.op != Op::BLT || bl.target < 0 || size_t(bl.target) >= latch) continue;
    size_t header = size_t(bl.target);
    uint8_t ri = bl.ins.rd, rn = bl.ins.ra;
    if (latch < header + 4) continue;
    const Instruction& add = p.code[latch - 1].ins;
    if (add.op != Op::ADD || !add.use_imm || add.imm != 1 || add.rd != ri || add.ra != ri) continue;

    const IrInst& chk = p.code[header];
    const IrInst& jab = p.code[header + 1];
    if (chk.ins.op != Op::BLT || chk.ins.rd != ri || chk.target != int(header) + 2) continue;
    if (jab.ins.op != Op::JMP || jab.target < 0) continue;
    size_t abort_t = size_t(jab.target);
    if (abort_t >= header && abort_t <= latch) continue;
    uint8_t rlim = chk.ins.ra;

    // Single entry, single outer back edge, invariant operands, no calls.
    // Inner loops are fine as long as their control stays inside the body.
    bool ok = true;
    for (size_t i = 0; i < p.code.size() && ok; ++i) {
      const IrInst& ir = p.code[i];
      if (ir.target >= 0 && size_t(ir.target) > header && size_t(ir.target) <= latch &&
          !(i >= header && i <= latch)) {
        ok = false;
      }
      if (ir.target >= 0 && size_t(ir.target) == header && i != latch) ok = false;
    }
    for (size_t i = header; i <= latch && ok; ++i) {
      const IrInst& ir = p.code[i];
      const Instruction& in = ir.ins;
      if (in.op == Op::CALLT || in.op == Op::CALLD || in.op == Op::RET || in.op == Op::HALT) {
        ok = false;
        break;
      }
      int d = def_reg(in);
      if (d >= 0 && (d == rlim || d == rn || d == scratch)) ok = false;
      if (i != latch - 1 && d >= 0 && d == ri) ok = false;
      if (i == header || i == header + 1 || i == latch) continue;
      if ((ir.is_branch() || in.op == Op::JMP) &&
          !(ir.target > int(header) + 1 && size_t(ir.target) <= latch)) {
        ok = false;
      }
    }
    if (!ok) continue;

    std::vector<IrInst> out;
    std::vector<int> remap(p.code.size() + 1, -1);
    constexpr int kNew = 1 << 28;
    auto plain = [&](Instruction in) {
      IrInst ir;
      ir.ins = in;
      out.push_back(std::move(ir));
      return int(out.size()) - 1 + kNew;
    };

    for (size_t i = 0; i < header; ++i) {
      remap[i] = int(out.size());
      out.push_back(p.code[i]);
    }

    // Guard: i0 < lim and n-1 < lim, else run the original loop.
    size_t g1 = out.size();
    plain({Op::BLT, ri, rlim, 0, false, 0});
    size_t to_orig1 = out.size();
    plain({Op::JMP, 0, 0, 0, false, 0});
    size_t g2 = out.size();
    out[g1].target = int(g2) + kNew;
    plain({Op::SUB, uint8_t(scratch), rn, 0, true, 1});
    size_t g3 = out.size();
    plain({Op::BLT, uint8_t(scratch), rlim, 0, false, 0});
    size_t to_orig2 = out.size();
    plain({Op::JMP, 0, 0, 0, false, 0});

    // Fast copy: body without the leading check pair. Inner control is
    // rebased onto the copy.
    size_t fast_header = out.size();
    out[g3].target = int(fast_header) + kNew;
    for (size_t i = header + 2; i <= latch; ++i) {
      IrInst ir = p.code[i];
      if (i == latch) {
        ir.target = int(fast_header) + kNew;
      } else if (ir.target >= 0) {
        ir.target = int(fast_header + (size_t(ir.target) - (header + 2))) + kNew;
      }
      out.push_back(std::move(ir));
    }
    size_t to_exit = out.size();
    plain({Op::JMP, 0, 0, 0, false, 0});

    // Original loop, entered when the guard fails.
    size_t orig = out.size();
    out[to_orig1].target = int(orig) + kNew;
    out[to_orig2].target = int(orig) + kNew;
    for (size_t i = header; i <= latch; ++i) {
      remap[i] = int(out.size());
      out.push_back(p.code[i]);
    }

    size_t exit_pos = out.size();
    out[to_exit].target = int(exit_pos) + kNew;
    for (size_t i = latch + 1; i < p.code.size(); ++i) {
      remap[i] = int(out.size());
      out.push_back(p.code[i]);
    }
    remap[p.code.size()] = int(out.size());
    if (remap[latch + 1] < 0) remap[latch + 1] = int(exit_pos);

    for (auto& ir : out) {
      if (ir.target < 0) continue;
      if (ir.target >= kNew) {
        ir.target -= kNew;
      } else {
        int t = remap[ir.target];
        if (t < 0) throw Error(Error::Code::PassInternal, "hoist: dangling branch target");
        ir.target = t;
      }
    }
    p.code = std::move(out);
    return true;  // one loop per enable keeps the transform auditable
  }
  return false;
}

}  // namespace hotreplay::opt
