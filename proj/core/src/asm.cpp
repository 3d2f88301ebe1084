#include "hotreplay/asm.hpp"

#include <limits>

namespace hotreplay {

namespace {
bool fits_i32(int64_t v) {
  return v >= std::numeric_limits<int32_t>::min() && v <= std::numeric_limits<int32_t>::max();
}
}  // namespace

FunctionBuilder::Label FunctionBuilder::make_label() {
  label_pos_.push_back(-1);
  return Label(label_pos_.size() - 1);
}

void FunctionBuilder::bind(Label l) { label_pos_[l] = int64_t(code_.size()); }

void FunctionBuilder::ldi(uint8_t rd, int64_t imm) {
  if (!fits_i32(imm)) throw Error(Error::Code::Internal, "ldi immediate out of range");
  emit({Op::LDI, rd, 0, 0, false, int32_t(imm)});
}

void FunctionBuilder::ldi64(uint8_t rd, uint64_t value) {
  int64_t sv = int64_t(value);
  if (fits_i32(sv)) {
    ldi(rd, sv);
    return;
  }
  // Built from 16-bit chunks so every immediate stays a non-negative i32.
  ldi(rd, int64_t((value >> 48) & 0xffff));
  for (int shift = 32; shift >= 0; shift -= 16) {
    shli(rd, rd, 16);
    uint32_t chunk = uint32_t((value >> shift) & 0xffff);
    if (chunk != 0) ori(rd, rd, int32_t(chunk));
  }
}

void FunctionBuilder::ldi_sym(uint8_t rd, const std::string& symbol) {
  sym_fixups_.push_back({code_.size(), symbol, RelocKind::AbsAddr32});
  emit({Op::LDI, rd, 0, 0, false, 0});
}

void FunctionBuilder::mov(uint8_t rd, uint8_t ra) { emit({Op::MOV, rd, ra, 0, false, 0}); }

void FunctionBuilder::alu(Op op, uint8_t rd, uint8_t ra, uint8_t rb) {
  emit({op, rd, ra, rb, false, 0});
}

void FunctionBuilder::alui(Op op, uint8_t rd, uint8_t ra, int32_t imm) {
  emit({op, rd, ra, 0, true, imm});
}

void FunctionBuilder::ld(uint8_t rd, uint8_t base, int32_t off) {
  emit({Op::LD, rd, base, 0, false, off});
}

void FunctionBuilder::st(uint8_t src, uint8_t base, int32_t off) {
  emit({Op::ST, src, base, 0, false, off});
}

void FunctionBuilder::jmp(Label l) {
  fixups_.push_back({code_.size(), l});
  emit({Op::JMP, 0, 0, 0, false, 0});
}

void FunctionBuilder::branch(Op op, uint8_t a, uint8_t b, Label l) {
  fixups_.push_back({code_.size(), l});
  emit({op, a, b, 0, false, 0});
}

void FunctionBuilder::callt(const std::string& symbol) {
  sym_fixups_.push_back({code_.size(), symbol, RelocKind::TableIndex});
  emit({Op::CALLT, 0, 0, 0, false, 0});
}

void FunctionBuilder::calld(const std::string& symbol) {
  sym_fixups_.push_back({code_.size(), symbol, RelocKind::AbsAddr32});
  emit({Op::CALLD, 0, 0, 0, false, 0});
}

void FunctionBuilder::ret() { emit({Op::RET, 0, 0, 0, false, 0}); }
void FunctionBuilder::halt() { emit({Op::HALT, 0, 0, 0, false, 0}); }

FunctionObject FunctionBuilder::finish() {
  for (const auto& f : fixups_) {
    if (label_pos_[f.label] < 0) throw Error(Error::Code::Internal, "unbound label in " + name_);
    int64_t disp = (label_pos_[f.label] - int64_t(f.index) - 1) * kInstrBytes;
    if (!fits_i32(disp)) throw Error(Error::Code::Internal, "branch displacement out of range");
    code_[f.index].imm = int32_t(disp);
  }
  FunctionObject fo;
  fo.name = name_;
  fo.code = encode_all(code_);
  for (const auto& sf : sym_fixups_) {
    fo.relocations.push_back({uint32_t(sf.index * kInstrBytes), sf.symbol, sf.kind});
    fo.referenced_symbols.insert(sf.symbol);
  }
  fo.validate();
  return fo;
}

}  // namespace hotreplay
