#include "hotreplay/image.hpp"

#include <algorithm>
#include <cstring>

namespace hotreplay {

namespace {

constexpr char kMagic[4] = {'H', 'R', 'I', 'M'};
constexpr uint16_t kVersion = 1;

uint64_t align_up(uint64_t v, uint64_t a) { return (v + a - 1) / a * a; }

// Serialized form minus the trailing digest.
std::vector<uint8_t> payload(const ProgramImage& img) {
  ByteWriter w;
  w.bytes(reinterpret_cast<const uint8_t*>(kMagic), 4);
  w.u16(kVersion);
  w.u64(img.layout.code_base);
  w.u64(img.layout.call_table_base);
  w.u64(img.layout.globals_base);
  w.u64(img.layout.heap_base);
  w.u64(img.layout.stack_base);
  w.u64(img.layout.hot_region_capacity);
  w.u32(uint32_t(img.segments.size()));
  for (const auto& s : img.segments) {
    w.u8(uint8_t(s.region.kind));
    w.u64(s.region.start);
    w.u64(s.region.length);
    w.u64(s.bytes.size());
    w.bytes(s.bytes);
  }
  w.u32(uint32_t(img.call_table.slots.size()));
  for (const auto& [sym, addr] : img.call_table.slots) {
    w.str(sym);
    w.u64(addr);
  }
  w.u32(uint32_t(img.symbols.size()));
  for (const auto& [name, info] : img.symbols) {
    w.str(name);
    w.u64(info.addr);
    w.u64(info.size);
  }
  w.str(img.benchmark);
  w.str(img.hot_function);
  w.str(img.build_meta.transformation_set);
  w.u64(img.entry);
  w.u64(img.hot_entry);
  w.u64(img.hot_size);
  return w.take();
}

}  // namespace

void FunctionObject::validate() const {
  for (const auto& r : relocations) {
    if (r.offset % kInstrBytes != 0 || r.offset + kInstrBytes > code.size()) {
      throw Error(Error::Code::Internal, name + ": relocation offset out of range");
    }
    if (!referenced_symbols.count(r.symbol)) {
      throw Error(Error::Code::Internal, name + ": relocated symbol not referenced");
    }
  }
  if (code.size() % kInstrBytes != 0) {
    throw Error(Error::Code::Internal, name + ": ragged code size");
  }
}

const SymbolInfo& ProgramImage::symbol(const std::string& name) const {
  auto it = symbols.find(name);
  if (it == symbols.end()) throw Error(Error::Code::UnresolvedSymbol, "no symbol " + name);
  return it->second;
}

uint64_t default_hot_capacity(uint64_t baseline_hot_size) {
  return align_up(baseline_hot_size, kPageSize) + kPageSize;
}

std::vector<CodeExtent> big_function_extents(const ProgramImage& img, const CostModel& cost) {
  const Segment* code = nullptr;
  for (const auto& s : img.segments) {
    if (s.region.kind == RegionKind::Code && s.region.start == img.layout.code_base) code = &s;
  }
  std::vector<CodeExtent> out;
  if (!code) return out;
  for (const auto& [name, info] : img.symbols) {
    if (!code->region.contains(info.addr)) continue;
    if (info.size > cost.fetch_threshold_bytes) {
      out.push_back({info.addr, info.addr + info.size});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const CodeExtent& a, const CodeExtent& b) { return a.start < b.start; });
  return out;
}

ProgramImage link(const std::vector<FunctionObject>& objects, const BenchmarkManifest& manifest,
                  const LayoutSpec& layout, const std::string& set_text) {
  const FunctionObject* hot = nullptr;
  for (const auto& o : objects) {
    o.validate();
    if (o.name == manifest.hot_function) hot = &o;
  }
  if (!hot) throw Error(Error::Code::UnresolvedSymbol, "hot function missing: " + manifest.hot_function);
  if (hot->size() > layout.hot_region_capacity) {
    throw Error(Error::Code::HotRegionOverflow,
                manifest.hot_function + " is " + std::to_string(hot->size()) + " bytes, capacity " +
                    std::to_string(layout.hot_region_capacity));
  }

  ProgramImage img;
  img.benchmark = manifest.name;
  img.layout = layout;
  img.hot_function = manifest.hot_function;
  img.hot_entry = layout.code_base;
  img.hot_size = hot->size();
  img.build_meta.transformation_set = set_text;

  // Hot function first, zero-padded to its reserved capacity so the next
  // function always starts from the same offset; then everything else in
  // declaration order.
  img.symbols[hot->name] = {layout.code_base, hot->size()};
  Vaddr cursor = layout.code_base + layout.hot_region_capacity;
  for (const auto& o : objects) {
    if (&o == hot) continue;
    if (img.symbols.count(o.name)) {
      throw Error(Error::Code::Internal, "duplicate function " + o.name);
    }
    img.symbols[o.name] = {cursor, o.size()};
    cursor += o.size();
  }
  Vaddr stub_addr = align_up(cursor, kPageSize);
  img.symbols[kReplayHaltSymbol] = {stub_addr, kInstrBytes};
  Vaddr code_end = stub_addr + kPageSize;
  if (code_end > layout.call_table_base) {
    throw Error(Error::Code::Internal, "code overflows into call table");
  }

  for (const auto& o : objects) {
    img.call_table.slots.emplace_back(o.name, img.symbols[o.name].addr);
  }

  // Data anchors guest code loads through ldi_sym.
  img.symbols["__globals"] = {layout.globals_base, manifest.globals_len};
  img.symbols["__heap"] = {layout.heap_base, manifest.heap_len};
  img.symbols["__stack"] = {layout.stack_base, manifest.stack_len};

  // Emit code bytes and resolve relocations.
  Segment code_seg;
  code_seg.region = {layout.code_base, code_end - layout.code_base, RegionKind::Code};
  code_seg.bytes.assign(code_seg.region.length, 0);
  auto place = [&](const FunctionObject& o) {
    uint64_t base_off = img.symbols[o.name].addr - layout.code_base;
    std::memcpy(code_seg.bytes.data() + base_off, o.code.data(), o.code.size());
    for (const auto& rel : o.relocations) {
      uint32_t value;
      if (rel.kind == RelocKind::AbsAddr32) {
        auto it = img.symbols.find(rel.symbol);
        if (it == img.symbols.end()) {
          throw Error(Error::Code::UnresolvedSymbol, o.name + " references " + rel.symbol);
        }
        if (it->second.addr > 0xffffffffull) {
          throw Error(Error::Code::Internal, "symbol beyond 32-bit immediate range");
        }
        value = uint32_t(it->second.addr);
      } else {
        int slot = img.call_table.find(rel.symbol);
        if (slot < 0) {
          throw Error(Error::Code::UnresolvedSymbol, o.name + " calls " + rel.symbol + " (no slot)");
        }
        value = uint32_t(slot);
      }
      uint8_t* at = code_seg.bytes.data() + base_off + rel.offset + 4;
      at[0] = uint8_t(value);
      at[1] = uint8_t(value >> 8);
      at[2] = uint8_t(value >> 16);
      at[3] = uint8_t(value >> 24);
    }
  };
  for (const auto& o : objects) place(o);
  {
    Instruction haltish{Op::HALT, 0, 0, 0, false, 0};
    encode(haltish, code_seg.bytes.data() + (stub_addr - layout.code_base));
  }
  img.segments.push_back(std::move(code_seg));

  Segment table_seg;
  uint64_t table_bytes = align_up(std::max<uint64_t>(img.call_table.slots.size() * 8, 8), kPageSize);
  table_seg.region = {layout.call_table_base, table_bytes, RegionKind::Code};
  table_seg.bytes.assign(table_bytes, 0);
  for (size_t i = 0; i < img.call_table.slots.size(); ++i) {
    uint64_t addr = img.call_table.slots[i].second;
    std::memcpy(table_seg.bytes.data() + i * 8, &addr, 8);
  }
  img.segments.push_back(std::move(table_seg));

  auto data_seg = [&](Vaddr base, uint64_t len, RegionKind kind) {
    Segment s;
    s.region = {base, align_up(std::max<uint64_t>(len, 1), kPageSize), kind};
    img.segments.push_back(std::move(s));
  };
  data_seg(layout.globals_base, manifest.globals_len, RegionKind::Globals);
  data_seg(layout.heap_base, manifest.heap_len, RegionKind::Heap);
  data_seg(layout.stack_base, manifest.stack_len, RegionKind::Stack);

  // Disjointness across the whole plan.
  std::vector<Region> rs;
  for (const auto& s : img.segments) rs.push_back(s.region);
  std::sort(rs.begin(), rs.end(), [](const Region& a, const Region& b) { return a.start < b.start; });
  for (size_t i = 1; i < rs.size(); ++i) {
    if (rs[i - 1].end() > rs[i].start) throw Error(Error::Code::Internal, "segments overlap");
  }

  img.entry = img.symbol(manifest.entry_function).addr;
  img.build_meta.content_digest = Sha256::of(payload(img));
  return img;
}

bool verify_layout(const ProgramImage& a, const ProgramImage& b) {
  if (!(a.layout == b.layout)) return false;
  if (a.segments.size() != b.segments.size()) return false;
  for (size_t i = 0; i < a.segments.size(); ++i) {
    const Region& ra = a.segments[i].region;
    const Region& rb = b.segments[i].region;
    if (ra.kind != rb.kind || ra.start != rb.start || ra.length != rb.length) return false;
  }
  if (!(a.call_table == b.call_table)) return false;
  if (a.symbols.size() != b.symbols.size()) return false;
  for (auto ia = a.symbols.begin(), ib = b.symbols.begin(); ia != a.symbols.end(); ++ia, ++ib) {
    if (ia->first != ib->first || ia->second.addr != ib->second.addr) return false;
  }
  return a.entry == b.entry && a.hot_entry == b.hot_entry;
}

Sha256::Digest layout_digest(const ProgramImage& img) {
  ByteWriter w;
  w.str("HRLD1");
  w.u64(img.layout.code_base);
  w.u64(img.layout.call_table_base);
  w.u64(img.layout.globals_base);
  w.u64(img.layout.heap_base);
  w.u64(img.layout.stack_base);
  w.u64(img.layout.hot_region_capacity);
  for (const auto& s : img.segments) {
    w.u8(uint8_t(s.region.kind));
    w.u64(s.region.start);
    w.u64(s.region.length);
  }
  for (const auto& [sym, addr] : img.call_table.slots) {
    w.str(sym);
    w.u64(addr);
  }
  for (const auto& [name, info] : img.symbols) {
    w.str(name);
    w.u64(info.addr);  // sizes excluded: the hot body may differ
  }
  w.u64(img.entry);
  w.u64(img.hot_entry);
  return Sha256::of(w.data());
}

ProcessState load(const ProgramImage& img, const BenchmarkManifest& manifest,
                  const CostModel* cost) {
  if (Sha256::of(payload(img)) != img.build_meta.content_digest) {
    throw Error(Error::Code::DigestMismatch, "image content digest mismatch");
  }
  const CostModel* cm = cost ? cost : &default_cost_model();

  auto store = std::make_shared<FrameStore>();
  AddressSpace space(store);
  const Segment* stack_seg = nullptr;
  for (const auto& s : img.segments) {
    if (s.region.kind == RegionKind::Code) {
      space.map_region_bytes(s.region, s.bytes);
      space.set_protection(s.region.start, s.region.length, Protection::Read);
    } else {
      space.map_region(s.region);
      if (!s.bytes.empty()) space.host_write(s.region.start, s.bytes);
      if (s.region.kind == RegionKind::Stack) stack_seg = &s;
    }
  }
  if (!stack_seg) throw Error(Error::Code::Internal, "image has no stack segment");
  if (!manifest.globals_init.empty()) space.host_write(img.layout.globals_base, manifest.globals_init);
  if (!manifest.heap_init.empty()) space.host_write(img.layout.heap_base, manifest.heap_init);

  ProcessState p(std::move(space));
  p.cost = cm;
  p.regs.pc = img.entry;
  p.regs.sp = stack_seg->region.end() - 64;
  p.call_table_base = img.layout.call_table_base;
  p.call_table_slots = uint32_t(img.call_table.slots.size());
  p.big_functions = big_function_extents(img, *cm);
  return p;
}

std::vector<uint8_t> serialize_image(const ProgramImage& img) {
  std::vector<uint8_t> out = payload(img);
  Sha256::Digest d = Sha256::of(out);
  out.insert(out.end(), d.begin(), d.end());
  return out;
}

ProgramImage deserialize_image(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 38) throw Error(Error::Code::Truncated, "image file too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(Error::Code::BadMagic, "not an image file");
  }
  Sha256::Digest want;
  std::memcpy(want.data(), bytes.data() + bytes.size() - 32, 32);
  if (Sha256::of(bytes.data(), bytes.size() - 32) != want) {
    throw Error(Error::Code::DigestMismatch, "image file digest mismatch");
  }

  ByteReader r(bytes.data(), bytes.size() - 32);
  r.bytes(4);
  uint16_t ver = r.u16();
  if (ver != kVersion) throw Error(Error::Code::BadVersion, "image version " + std::to_string(ver));

  ProgramImage img;
  img.layout.code_base = r.u64();
  img.layout.call_table_base = r.u64();
  img.layout.globals_base = r.u64();
  img.layout.heap_base = r.u64();
  img.layout.stack_base = r.u64();
  img.layout.hot_region_capacity = r.u64();
  uint32_t nseg = r.u32();
  for (uint32_t i = 0; i < nseg; ++i) {
    Segment s;
    s.region.kind = RegionKind(r.u8());
    s.region.start = r.u64();
    s.region.length = r.u64();
    uint64_t blob = r.u64();
    s.bytes = r.bytes(blob);
    img.segments.push_back(std::move(s));
  }
  uint32_t nslots = r.u32();
  for (uint32_t i = 0; i < nslots; ++i) {
    std::string sym = r.str();
    Vaddr addr = r.u64();
    img.call_table.slots.emplace_back(std::move(sym), addr);
  }
  uint32_t nsym = r.u32();
  for (uint32_t i = 0; i < nsym; ++i) {
    std::string name = r.str();
    SymbolInfo info;
    info.addr = r.u64();
    info.size = r.u64();
    img.symbols[name] = info;
  }
  img.benchmark = r.str();
  img.hot_function = r.str();
  img.build_meta.transformation_set = r.str();
  img.entry = r.u64();
  img.hot_entry = r.u64();
  img.hot_size = r.u64();
  img.build_meta.content_digest = want;
  if (r.remaining() != 0) throw Error(Error::Code::Truncated, "trailing bytes in image file");
  return img;
}

}  // namespace hotreplay
