#pragma once

// Data-parallel inner loops. Every kernel has a portable scalar reference and,
// on x86-64, an AVX2 variant. The variant is picked once at startup from the
// CPU features; ANISOPERC_KERNELS=scalar|avx2 forces a choice.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace anisoperc::kernels {

struct PhiloxKey {
    std::uint32_t k0 = 0;
    std::uint32_t k1 = 0;
};

// Philox4x32-10 over counters (first_block + i, c2, c3) for i < nblocks.
// out receives 4 * nblocks words; block i occupies out[4i .. 4i+3].
using PhiloxFillFn = void (*)(PhiloxKey key, std::uint64_t first_block, std::uint32_t c2,
                              std::uint32_t c3, std::size_t nblocks, std::uint32_t* out);

// bits[i / 64] bit (i % 64) = labels[i] < (i < split ? thr_lo : thr_hi).
// Thresholds live in [0, 2^32]; 2^32 opens everything. bits must hold
// ceil(n / 64) words and is fully overwritten.
using ThresholdBitsFn = void (*)(const std::uint32_t* labels, std::size_t n, std::size_t split,
                                 std::uint64_t thr_lo, std::uint64_t thr_hi, std::uint64_t* bits);

using DotFn = double (*)(const double* a, const double* b, std::size_t n);

struct KernelTable {
    std::string_view name;
    PhiloxFillFn philox_fill;
    ThresholdBitsFn threshold_bits;
    DotFn dot;
};

const KernelTable& scalar_table();
// nullptr when the AVX2 build is absent or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();
const KernelTable& active();

// Single-block reference used by the sequential stream.
void philox4x32_10(PhiloxKey key, const std::uint32_t ctr_in[4], std::uint32_t out[4]);

}  // namespace anisoperc::kernels
