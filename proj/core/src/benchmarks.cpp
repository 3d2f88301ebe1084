#include "hotreplay/benchmarks.hpp"

#include <algorithm>

#include "hotreplay/asm.hpp"
#include "hotreplay/rng.hpp"

// Guest code conventions:
//   - arguments in r1..r5, result in r0
//   - called routines clobber r0..r7 only
//   - hot functions keep cross-call state in r8..r15
//   - main keeps nothing live in registers across a call
// Code finds its data through the "__globals" / "__heap" symbols the
// linker resolves to the layout bases.

namespace hotreplay::bench {

namespace {

constexpr int64_t kValueMask = 0xffffff;  // keeps data well inside soft_div's domain

// x = x * 1103515245 + 12345; value = x & kValueMask
void emit_fill(FunctionBuilder& b, uint8_t ptr, uint8_t count, uint8_t state, uint8_t idx,
               uint8_t tmp) {
  auto loop = b.make_label();
  b.ldi(idx, 0);
  b.bind(loop);
  b.muli(state, state, 1103515245);
  b.addi(state, state, 12345);
  b.andi(tmp, state, kValueMask);
  b.st(tmp, ptr, 0);
  b.addi(ptr, ptr, 8);
  b.addi(idx, idx, 1);
  b.blt(idx, count, loop);
}

// r0 ^= (value * 3 + r0 rotl-ish); cheap order-sensitive fold
void emit_checksum(FunctionBuilder& b, uint8_t ptr, uint8_t count, uint8_t idx, uint8_t tmp) {
  auto loop = b.make_label();
  b.ldi(0, 0);
  b.ldi(idx, 0);
  b.bind(loop);
  b.ld(tmp, ptr, 0);
  b.xor_(0, 0, tmp);
  b.muli(0, 0, 31);
  b.addi(0, 0, 17);
  b.addi(ptr, ptr, 8);
  b.addi(idx, idx, 1);
  b.blt(idx, count, loop);
}

FunctionObject make_soft_div() {
  // Restoring division, branch-free conditional subtract. Valid for
  // a < 2^63, 0 < b < 2^62 (the manifest input domains stay far inside).
  FunctionBuilder b("soft_div");
  auto loop = b.make_label();
  b.ldi(0, 0);   // quotient
  b.ldi(3, 0);   // remainder
  b.ldi(4, 64);  // bits left
  b.ldi(7, 0);   // zero
  b.bind(loop);
  b.subi(4, 4, 1);
  b.shr(5, 1, 4);
  b.andi(5, 5, 1);
  b.shli(3, 3, 1);
  b.or_(3, 3, 5);
  b.shli(0, 0, 1);
  b.sub(5, 3, 2);
  b.shri(5, 5, 63);  // lt = rem < b
  b.subi(6, 5, 1);   // mask: lt ? 0 : ~0
  b.and_(6, 2, 6);
  b.sub(3, 3, 6);
  b.xori(5, 5, 1);   // ge bit
  b.or_(0, 0, 5);
  b.bne(4, 7, loop);
  b.ret();
  return b.finish();
}

FunctionObject make_memfill() {
  // r1 = dst, r2 = value, r3 = word count
  FunctionBuilder b("memfill");
  auto head = b.make_label();
  auto body = b.make_label();
  auto done = b.make_label();
  b.mov(4, 1);
  b.ldi(5, 0);
  b.bind(head);
  b.blt(5, 3, body);
  b.jmp(done);
  b.bind(body);
  b.st(2, 4, 0);
  b.addi(4, 4, 8);
  b.addi(5, 5, 1);
  b.jmp(head);
  b.bind(done);
  b.mov(0, 3);
  b.ret();
  return b.finish();
}

std::vector<uint8_t> pack_words(const std::vector<uint64_t>& ws) {
  std::vector<uint8_t> out(ws.size() * 8);
  for (size_t i = 0; i < ws.size(); ++i) {
    for (int k = 0; k < 8; ++k) out[i * 8 + k] = uint8_t(ws[i] >> (8 * k));
  }
  return out;
}

// --------------------------------------------------------------------------
// fir: dense multiply-accumulate over a signal window
// --------------------------------------------------------------------------

constexpr uint64_t kFirN = 2000;
constexpr uint64_t kFirTaps = 16;

BenchmarkManifest make_fir(uint64_t seed) {
  BenchmarkManifest m;
  m.name = "fir";
  m.hot_function = "fir_apply";
  m.expected_full_runs = "one filter pass over a 2000-sample signal, 16 taps";
  m.input_seed = seed;

  uint64_t n_out = kFirN - kFirTaps;

  {
    FunctionBuilder b("main");
    // globals: [0]=n [8]=taps [16]=seed [24]=n_out
    b.ldi_sym(9, "__globals");
    b.ld(2, 9, 0);
    b.ld(4, 9, 16);
    b.ldi_sym(8, "__heap");
    emit_fill(b, 8, 2, 4, 5, 6);  // signal
    b.ldi_sym(9, "__globals");
    b.ld(2, 9, 8);                 // taps
    emit_fill(b, 8, 2, 4, 5, 6);   // coefficients follow the signal
    // fir_apply(sig, coef, out, n_out, taps)
    b.ldi_sym(9, "__globals");
    b.ldi_sym(1, "__heap");
    b.ldi(7, int64_t(kFirN * 8));
    b.add(2, 1, 7);                // coef = heap + n*8
    b.addi(3, 2, int32_t(kFirTaps * 8));
    b.ld(4, 9, 24);
    b.ld(5, 9, 8);
    b.callt("fir_apply");
    // checksum over out
    b.ldi_sym(8, "__heap");
    b.addi(8, 8, int32_t((kFirN + kFirTaps) * 8));
    b.ldi_sym(9, "__globals");
    b.ld(2, 9, 24);
    emit_checksum(b, 8, 2, 5, 6);
    b.halt();
    m.objects.push_back(b.finish());
  }
  {
    FunctionBuilder b("fir_apply");
    // r1=sig r2=coef r3=out r4=n_out r5=taps
    auto outer = b.make_label();
    auto inner = b.make_label();
    b.mov(9, 1);    // signal cursor
    b.mov(8, 3);    // out cursor
    b.ldi(7, 0);    // i
    b.bind(outer);
    b.ldi(10, 0);   // acc
    b.mov(12, 9);
    b.mov(13, 2);
    b.ldi(11, 0);   // j
    b.bind(inner);
    b.ld(6, 12, 0);
    b.ld(0, 13, 0);
    b.mul(6, 6, 0);
    b.add(10, 10, 6);
    b.addi(12, 12, 8);
    b.addi(13, 13, 8);
    b.addi(11, 11, 1);
    b.blt(11, 5, inner);
    b.st(10, 8, 0);
    b.addi(8, 8, 8);
    b.addi(9, 9, 8);
    b.addi(7, 7, 1);
    b.blt(7, 4, outer);
    b.mov(0, 10);
    b.ret();
    m.objects.push_back(b.finish());
  }

  m.globals_len = kPageSize;
  m.heap_len = pages_for((kFirN + kFirTaps + n_out) * 8) * kPageSize;
  Rng rng = Rng::derive(seed, 0x11);
  m.globals_init = pack_words({kFirN, kFirTaps, rng.next(), n_out});
  LayoutSpec lay;  // defaults; observable sits inside the heap
  m.observable = {lay.heap_base + (kFirN + kFirTaps) * 8, n_out * 8, RegionKind::Heap};
  return m;
}

// --------------------------------------------------------------------------
// bubblesort: the single-invocation-dominant benchmark
// --------------------------------------------------------------------------

constexpr uint64_t kSortN = 192;

BenchmarkManifest make_bubblesort(uint64_t seed) {
  BenchmarkManifest m;
  m.name = "bubblesort";
  m.hot_function = "bubble_sort";
  m.expected_full_runs = "sorts one 192-element array; all work in a single invocation";
  m.input_seed = seed;

  {
    FunctionBuilder b("main");
    // globals: [0]=n [8]=seed
    b.ldi_sym(9, "__globals");
    b.ld(2, 9, 0);
    b.ld(4, 9, 8);
    b.ldi_sym(8, "__heap");
    emit_fill(b, 8, 2, 4, 5, 6);
    b.ldi_sym(1, "__heap");
    b.ldi_sym(9, "__globals");
    b.ld(2, 9, 0);
    b.callt("bubble_sort");
    b.ldi_sym(8, "__heap");
    b.ldi_sym(9, "__globals");
    b.ld(2, 9, 0);
    emit_checksum(b, 8, 2, 5, 6);
    b.halt();
    m.objects.push_back(b.finish());
  }
  {
    FunctionBuilder b("bubble_sort");
    // r1=arr r2=n
    auto outer = b.make_label();
    auto inner = b.make_label();
    auto noswap = b.make_label();
    b.subi(12, 2, 1);
    b.ldi(7, 0);
    b.bind(outer);
    b.mov(9, 1);
    b.ldi(8, 0);
    b.bind(inner);
    b.ld(10, 9, 0);
    b.ld(11, 9, 8);
    b.blt(10, 11, noswap);
    b.st(11, 9, 0);
    b.st(10, 9, 8);
    b.bind(noswap);
    b.addi(9, 9, 8);
    b.addi(8, 8, 1);
    b.blt(8, 12, inner);
    b.addi(7, 7, 1);
    b.blt(7, 12, outer);
    b.mov(0, 2);
    b.ret();
    m.objects.push_back(b.finish());
  }

  m.globals_len = kPageSize;
  m.heap_len = pages_for(kSortN * 8) * kPageSize;
  Rng rng = Rng::derive(seed, 0x22);
  m.globals_init = pack_words({kSortN, rng.next()});
  LayoutSpec lay;
  m.observable = {lay.heap_base, kSortN * 8, RegionKind::Heap};
  return m;
}

// --------------------------------------------------------------------------
// fft: butterfly-style passes over a window of a large mapped heap
// --------------------------------------------------------------------------

constexpr uint64_t kFftWindowWords = 8192;  // 16 pages
constexpr uint64_t kFftPasses = 8;
constexpr uint64_t kFftHeapPages = 2200;
constexpr int kFftPairs = 16;  // per block: 32 words
constexpr uint64_t kFftStripWords = 512;
constexpr uint64_t kFftStripOff = kFftWindowWords * 8;

BenchmarkManifest make_fft(uint64_t seed) {
  BenchmarkManifest m;
  m.name = "fft";
  m.hot_function = "fft_pass";
  m.expected_full_runs = "8 butterfly passes over a 64 KiB window of a 9 MiB heap";
  m.input_seed = seed;

  {
    FunctionBuilder b("main");
    // globals: [0]=window_words [8]=seed [16]=passes [24]=blocks [32]=strip_words
    b.ldi_sym(9, "__globals");
    b.ld(2, 9, 0);
    b.ld(4, 9, 8);
    b.ldi_sym(8, "__heap");
    emit_fill(b, 8, 2, 4, 5, 6);
    b.ldi_sym(1, "__heap");
    b.ldi_sym(9, "__globals");
    b.ld(2, 9, 24);
    b.ld(3, 9, 16);
    b.ldi_sym(4, "__heap");
    b.addi(4, 4, int32_t(kFftStripOff));
    b.callt("fft_pass");
    b.ldi_sym(8, "__heap");
    b.ldi(2, 64);
    emit_checksum(b, 8, 2, 5, 6);
    b.halt();
    m.objects.push_back(b.finish());
  }
  {
    FunctionBuilder b("fft_pass");
    // r1=buf r2=blocks r3=passes r4=strip; one block = 32 words, 16 pairs
    auto pass_loop = b.make_label();
    auto block_loop = b.make_label();
    b.mov(10, 1);   // buf base
    b.mov(11, 2);   // blocks
    b.mov(12, 3);   // passes
    b.mov(14, 4);   // strip
    b.ldi(13, 0);   // pass index
    b.bind(pass_loop);
    // clear the per-pass sketch strip through the generic fill routine
    b.mov(1, 14);
    b.ldi(2, 0);
    b.ldi(3, int64_t(kFftStripWords));
    b.callt("memfill");
    b.mov(8, 10);  // cursor
    b.ldi(9, 0);   // block index
    b.bind(block_loop);
    for (int i = 0; i < kFftPairs; ++i) {
      int32_t lo = int32_t(i * 8);
      int32_t hi = int32_t((i + kFftPairs) * 8);
      b.ld(4, 8, lo);
      b.ld(5, 8, hi);
      b.add(6, 4, 5);
      b.sub(7, 4, 5);
      b.muli(7, 7, 31);
      b.xori(7, 7, 0x5a5a);
      b.st(6, 8, lo);
      b.st(7, 8, hi);
    }
    b.muli(4, 9, 8);  // sketch slot
    b.add(4, 14, 4);
    b.st(7, 4, 0);
    b.addi(8, 8, int32_t(kFftPairs * 2 * 8));
    b.addi(9, 9, 1);
    b.blt(9, 11, block_loop);
    b.addi(13, 13, 1);
    b.blt(13, 12, pass_loop);
    b.mov(0, 13);
    b.ret();
    m.objects.push_back(b.finish());
  }
  m.objects.push_back(make_memfill());

  m.globals_len = kPageSize;
  m.heap_len = kFftHeapPages * kPageSize;
  Rng rng = Rng::derive(seed, 0x33);
  m.globals_init = pack_words({kFftWindowWords, rng.next(), kFftPasses,
                               kFftWindowWords / (2 * kFftPairs), kFftStripWords});
  LayoutSpec lay;
  m.observable = {lay.heap_base, kFftStripOff + kFftStripWords * 8, RegionKind::Heap};
  return m;
}

// --------------------------------------------------------------------------
// huffman: byte histogram + code-length sketch over a large-heap window
// --------------------------------------------------------------------------

constexpr uint64_t kHuffWindowWords = 7168;  // 14 pages
constexpr uint64_t kHuffHeapPages = 2400;
constexpr uint64_t kHuffPasses = 2;
constexpr uint64_t kHuffCountsOff = kHuffWindowWords * 8;  // page aligned

BenchmarkManifest make_huffman(uint64_t seed) {
  BenchmarkManifest m;
  m.name = "huffman";
  m.hot_function = "huff_count";
  m.expected_full_runs = "2 histogram passes over a 56 KiB window of a 9.8 MiB heap";
  m.input_seed = seed;

  {
    FunctionBuilder b("main");
    // globals: [0]=window_words [8]=seed [16]=passes
    b.ldi_sym(9, "__globals");
    b.ld(2, 9, 0);
    b.ld(4, 9, 8);
    b.ldi_sym(8, "__heap");
    emit_fill(b, 8, 2, 4, 5, 6);
    b.ldi_sym(1, "__heap");
    b.ldi_sym(9, "__globals");
    b.ld(2, 9, 0);
    b.ldi_sym(3, "__heap");
    b.addi(3, 3, int32_t(kHuffCountsOff));
    b.ld(4, 9, 16);
    b.callt("huff_count");
    b.ldi_sym(8, "__heap");
    b.addi(8, 8, int32_t(kHuffCountsOff));
    b.ldi(2, 256);
    emit_checksum(b, 8, 2, 5, 6);
    b.halt();
    m.objects.push_back(b.finish());
  }
  {
    FunctionBuilder b("huff_count");
    // r1=buf r2=n r3=counts r4=passes
    auto pass_loop = b.make_label();
    auto word_loop = b.make_label();
    auto len_loop = b.make_label();
    b.mov(8, 1);
    b.mov(9, 2);
    b.mov(10, 3);
    b.mov(15, 4);
    // counts = 0
    b.mov(1, 10);
    b.ldi(2, 0);
    b.ldi(3, 256);
    b.callt("memfill");
    b.ldi(14, 0);  // pass
    b.bind(pass_loop);
    b.mov(11, 8);  // p
    b.ldi(12, 0);  // i
    b.bind(word_loop);
    b.ld(4, 11, 0);
    for (int byte = 0; byte < 4; ++byte) {
      if (byte == 0) {
        b.andi(5, 4, 255);
      } else {
        b.shri(5, 4, byte * 8);
        b.andi(5, 5, 255);
      }
      b.shli(5, 5, 3);
      b.add(5, 10, 5);
      b.ld(6, 5, 0);
      b.addi(6, 6, 1);
      b.st(6, 5, 0);
    }
    b.addi(11, 11, 8);
    b.addi(12, 12, 1);
    b.blt(12, 9, word_loop);
    b.addi(14, 14, 1);
    b.blt(14, 15, pass_loop);
    // code-length sketch: r0 = sum over counts of a shift fold
    b.mov(11, 10);
    b.ldi(12, 0);
    b.ldi(0, 0);
    b.ldi(13, 256);
    b.bind(len_loop);
    b.ld(4, 11, 0);
    b.shri(5, 4, 4);
    b.xor_(4, 4, 5);
    b.add(0, 0, 4);
    b.addi(11, 11, 8);
    b.addi(12, 12, 1);
    b.blt(12, 13, len_loop);
    b.ret();
    m.objects.push_back(b.finish());
  }
  m.objects.push_back(make_memfill());

  m.globals_len = kPageSize;
  m.heap_len = kHuffHeapPages * kPageSize;
  Rng rng = Rng::derive(seed, 0x44);
  m.globals_init = pack_words({kHuffWindowWords, rng.next(), kHuffPasses});
  LayoutSpec lay;
  m.observable = {lay.heap_base + kHuffCountsOff, 256 * 8, RegionKind::Heap};
  return m;
}

// --------------------------------------------------------------------------
// crc: table-driven word checksum in bounds-checked chunks
// --------------------------------------------------------------------------

constexpr uint64_t kCrcWords = 18432;  // 36 pages
constexpr uint64_t kCrcChunk = 64;
constexpr uint64_t kCrcTableOff = kCrcWords * 8;
constexpr uint64_t kCrcRingOff = kCrcTableOff + 256 * 8;

BenchmarkManifest make_crc(uint64_t seed) {
  BenchmarkManifest m;
  m.name = "crc";
  m.hot_function = "crc_blocks";
  m.expected_full_runs = "table CRC over 144 KiB in 64-word bounds-checked chunks";
  m.input_seed = seed;

  {
    FunctionBuilder b("main");
    // globals: [0]=words [8]=seed [16]=chunk_limit [24]=poly
    b.ldi_sym(9, "__globals");
    b.ld(2, 9, 0);
    b.ld(4, 9, 8);
    b.ldi_sym(8, "__heap");
    emit_fill(b, 8, 2, 4, 5, 6);
    // build table[i] = 8 steps of (t>>1) ^ (poly & -(t&1))
    {
      auto outer = b.make_label();
      auto inner = b.make_label();
      b.ldi_sym(9, "__globals");
      b.ld(7, 9, 24);  // poly
      b.ldi_sym(8, "__heap");
      b.addi(8, 8, int32_t(kCrcTableOff));
      b.ldi(5, 0);  // i
      b.bind(outer);
      b.mov(4, 5);  // t
      b.ldi(6, 0);  // k
      b.bind(inner);
      b.andi(3, 4, 1);
      b.ldi(2, 0);
      b.sub(3, 2, 3);  // -(t&1)
      b.and_(3, 3, 7);
      b.shri(4, 4, 1);
      b.xor_(4, 4, 3);
      b.addi(6, 6, 1);
      b.ldi(2, 8);
      b.blt(6, 2, inner);
      b.st(4, 8, 0);
      b.addi(8, 8, 8);
      b.addi(5, 5, 1);
      b.ldi(2, 256);
      b.blt(5, 2, outer);
    }
    // crc_blocks(buf, chunks, table, chunk_limit, ring)
    b.ldi_sym(1, "__heap");
    b.ldi_sym(9, "__globals");
    b.ld(2, 9, 0);
    b.divi(2, 2, int32_t(kCrcChunk));  // chunk count
    b.ldi_sym(3, "__heap");
    b.addi(3, 3, int32_t(kCrcTableOff));
    b.ld(4, 9, 16);
    b.ldi_sym(5, "__heap");
    b.addi(5, 5, int32_t(kCrcRingOff));
    b.callt("crc_blocks");
    b.ldi_sym(8, "__heap");
    b.addi(8, 8, int32_t(kCrcRingOff));
    b.ldi(2, 64);
    emit_checksum(b, 8, 2, 5, 6);
    b.halt();
    m.objects.push_back(b.finish());
  }
  {
    FunctionBuilder b("crc_blocks");
    // r1=buf r2=chunks r3=table r4=chunk_limit r5=ring
    auto chunk_loop = b.make_label();
    auto chunk_ok = b.make_label();
    auto abort = b.make_label();
    auto word_loop = b.make_label();
    auto done = b.make_label();
    b.mov(8, 1);    // p
    b.mov(9, 2);    // chunks
    b.mov(10, 3);   // table
    b.mov(11, 4);   // limit
    b.mov(12, 5);   // ring
    b.ldi(1, int64_t(kCrcChunk));  // words per chunk
    b.ldi(13, 0);   // chunk index
    b.ldi(0, -1);   // crc state
    b.bind(chunk_loop);
    // bounds check: chunk index against the declared limit
    b.blt(13, 11, chunk_ok);
    b.jmp(abort);
    b.bind(chunk_ok);
    b.ldi(14, 0);  // word in chunk
    b.bind(word_loop);
    b.ld(4, 8, 0);
    b.xor_(5, 0, 4);
    b.andi(5, 5, 255);
    b.shli(5, 5, 3);
    b.add(5, 10, 5);
    b.ld(6, 5, 0);
    b.shri(0, 0, 8);
    b.xor_(0, 0, 6);
    // ring[word & 63] = crc
    b.andi(7, 14, 63);
    b.muli(7, 7, 8);  // strength-reduction target
    b.add(7, 12, 7);
    b.st(0, 7, 0);
    b.addi(8, 8, 8);
    b.addi(14, 14, 1);
    b.blt(14, 1, word_loop);
    b.addi(13, 13, 1);
    b.blt(13, 9, chunk_loop);
    b.jmp(done);
    b.bind(abort);
    b.ldi(0, 0);
    b.bind(done);
    b.ret();
    m.objects.push_back(b.finish());
  }

  m.globals_len = kPageSize;
  m.heap_len = pages_for(kCrcRingOff + 64 * 8) * kPageSize;
  Rng rng = Rng::derive(seed, 0x55);
  m.globals_init =
      pack_words({kCrcWords, rng.next(), kCrcWords / kCrcChunk, 0xedb88320ull});
  LayoutSpec lay;
  m.observable = {lay.heap_base + kCrcRingOff, 64 * 8, RegionKind::Heap};
  return m;
}

// --------------------------------------------------------------------------
// divloop: hot function is ~1% of the run (100 invocations, first captured)
// --------------------------------------------------------------------------

constexpr uint64_t kDivN = 12;
constexpr uint64_t kDivReps = 100;

BenchmarkManifest make_divloop(uint64_t seed) {
  BenchmarkManifest m;
  m.name = "divloop";
  m.hot_function = "div_norm";
  m.expected_full_runs = "normalizes a 12-element vector 100 times; capture takes the first call";
  m.input_seed = seed;

  {
    FunctionBuilder b("main");
    // globals: [0]=n [8]=seed [16]=divisor [24]=reps
    auto rep_loop = b.make_label();
    b.ldi_sym(9, "__globals");
    b.ld(2, 9, 0);
    b.ld(4, 9, 8);
    b.ldi_sym(8, "__heap");
    emit_fill(b, 8, 2, 4, 5, 6);
    b.ldi(10, 0);  // rep — main loop counter lives across calls in r10? reloaded below
    b.st(10, 9, 32);  // reps live in globals scratch, not in registers
    b.bind(rep_loop);
    b.ldi_sym(1, "__heap");
    b.ldi_sym(9, "__globals");
    b.ld(2, 9, 0);
    b.ldi_sym(3, "__heap");
    b.ld(4, 9, 0);
    b.muli(4, 4, 8);
    b.add(3, 3, 4);  // out = heap + n*8
    b.ld(4, 9, 16);
    b.callt("div_norm");
    b.ldi_sym(9, "__globals");
    b.ld(10, 9, 32);
    b.addi(10, 10, 1);
    b.st(10, 9, 32);
    b.ld(11, 9, 24);
    b.blt(10, 11, rep_loop);
    b.ldi_sym(8, "__heap");
    b.ldi_sym(9, "__globals");
    b.ld(2, 9, 0);
    b.muli(4, 2, 8);
    b.add(8, 8, 4);
    emit_checksum(b, 8, 2, 5, 6);
    b.halt();
    m.objects.push_back(b.finish());
  }
  {
    FunctionBuilder b("div_norm");
    // r1=arr r2=n r3=out r4=divisor
    auto loop = b.make_label();
    b.mov(8, 1);
    b.mov(9, 3);
    b.mov(10, 2);
    b.mov(11, 4);
    b.ldi(12, 0);   // i
    b.ldi(13, 0);   // acc
    b.bind(loop);
    b.ld(1, 8, 0);
    b.mov(2, 11);
    b.callt("soft_div");
    b.divi(14, 0, 8);  // strength-reduction target
    b.add(14, 14, 0);
    b.st(14, 9, 0);
    b.add(13, 13, 14);
    b.addi(8, 8, 8);
    b.addi(9, 9, 8);
    b.addi(12, 12, 1);
    b.blt(12, 10, loop);
    b.mov(0, 13);
    b.ret();
    m.objects.push_back(b.finish());
  }
  m.objects.push_back(make_soft_div());

  m.globals_len = kPageSize;
  m.heap_len = pages_for(2 * kDivN * 8) * kPageSize;
  Rng rng = Rng::derive(seed, 0x66);
  uint64_t divisor = 3 + rng.below(995);
  m.globals_init = pack_words({kDivN, rng.next(), divisor, kDivReps, 0});
  LayoutSpec lay;
  m.observable = {lay.heap_base + kDivN * 8, kDivN * 8, RegionKind::Heap};
  return m;
}

}  // namespace

std::vector<std::string> bundled_names() {
  return {"fir", "bubblesort", "fft", "huffman", "crc", "divloop"};
}

bool is_bundled(const std::string& name) {
  auto names = bundled_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

bool is_large_heap(const std::string& name) { return name == "fft" || name == "huffman"; }

BenchmarkManifest make_benchmark(const std::string& name, uint64_t input_seed) {
  if (name == "fir") return make_fir(input_seed);
  if (name == "bubblesort") return make_bubblesort(input_seed);
  if (name == "fft") return make_fft(input_seed);
  if (name == "huffman") return make_huffman(input_seed);
  if (name == "crc") return make_crc(input_seed);
  if (name == "divloop") return make_divloop(input_seed);
  throw Error(Error::Code::Usage, "unknown benchmark: " + name);
}

}  // namespace hotreplay::bench
