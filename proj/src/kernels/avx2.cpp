// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cstdint>

#include "anisoperc/kernels.hpp"

namespace anisoperc::kernels::avx2 {

namespace {

struct PhiloxLanes {
    __m256i c0, c1, c2, c3;
};

inline void philox_round(PhiloxLanes& x, __m256i k0, __m256i k1, __m256i mul0, __m256i mul1, __m256i lo32) {
    const __m256i p0 = _mm256_mul_epu32(x.c0, mul0);
    const __m256i p1 = _mm256_mul_epu32(x.c2, mul1);
    const __m256i n0 = _mm256_xor_si256(_mm256_xor_si256(_mm256_srli_epi64(p1, 32), x.c1), k0);
    const __m256i n1 = _mm256_and_si256(p1, lo32);
    const __m256i n2 = _mm256_xor_si256(_mm256_xor_si256(_mm256_srli_epi64(p0, 32), x.c3), k1);
    const __m256i n3 = _mm256_and_si256(p0, lo32);
    x.c0 = n0;
    x.c1 = n1;
    x.c2 = n2;
    x.c3 = n3;
}

// Four blocks per pass, one block per 64-bit lane (value in the low half).
void philox_fill(PhiloxKey key, std::uint64_t first_block, std::uint32_t c2, std::uint32_t c3, std::size_t nblocks,
                 std::uint32_t* out) {
    const __m256i mul0 = _mm256_set1_epi64x(0xD2511F53);
    const __m256i mul1 = _mm256_set1_epi64x(0xCD9E8D57);
    const __m256i lo32 = _mm256_set1_epi64x(0xFFFFFFFF);
    std::size_t i = 0;
    for (; i + 4 <= nblocks; i += 4) {
        const std::uint64_t b = first_block + i;
        PhiloxLanes x;
        x.c0 = _mm256_set_epi64x(static_cast<std::uint32_t>(b + 3), static_cast<std::uint32_t>(b + 2),
                                 static_cast<std::uint32_t>(b + 1), static_cast<std::uint32_t>(b));
        x.c1 = _mm256_set_epi64x((b + 3) >> 32, (b + 2) >> 32, (b + 1) >> 32, b >> 32);
        x.c2 = _mm256_set1_epi64x(c2);
        x.c3 = _mm256_set1_epi64x(c3);
        std::uint32_t k0 = key.k0, k1 = key.k1;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                k0 += 0x9E3779B9u;
                k1 += 0xBB67AE85u;
            }
            philox_round(x, _mm256_set1_epi64x(k0), _mm256_set1_epi64x(k1), mul0, mul1, lo32);
        }
        const __m256i w01 = _mm256_or_si256(x.c0, _mm256_slli_epi64(x.c1, 32));
        const __m256i w23 = _mm256_or_si256(x.c2, _mm256_slli_epi64(x.c3, 32));
        const __m256i lo = _mm256_unpacklo_epi64(w01, w23);
        const __m256i hi = _mm256_unpackhi_epi64(w01, w23);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + 4 * i), _mm256_permute2x128_si256(lo, hi, 0x20));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + 4 * i + 8), _mm256_permute2x128_si256(lo, hi, 0x31));
    }
    if (i < nblocks) scalar_table().philox_fill(key, first_block + i, c2, c3, nblocks - i, out + 4 * i);
}

inline std::uint64_t threshold_word(const std::uint32_t* labels, std::uint64_t thr) {
    if (thr > 0xFFFFFFFFull) return ~std::uint64_t{0};
    const __m256i sign = _mm256_set1_epi32(static_cast<int>(0x80000000u));
    const __m256i t = _mm256_xor_si256(_mm256_set1_epi32(static_cast<int>(static_cast<std::uint32_t>(thr))), sign);
    std::uint64_t word = 0;
    for (int j = 0; j < 8; ++j) {
        const __m256i v = _mm256_xor_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(labels + 8 * j)), sign);
        const __m256i lt = _mm256_cmpgt_epi32(t, v);
        const auto mask = static_cast<std::uint32_t>(_mm256_movemask_ps(_mm256_castsi256_ps(lt)));
        word |= std::uint64_t{mask} << (8 * j);
    }
    return word;
}

void threshold_bits(const std::uint32_t* labels, std::size_t n, std::size_t split, std::uint64_t thr_lo,
                    std::uint64_t thr_hi, std::uint64_t* bits) {
    const std::size_t full_words = n / 64;
    for (std::size_t w = 0; w < full_words; ++w) {
        const std::size_t begin = 64 * w;
        if (begin + 64 <= split) {
            bits[w] = threshold_word(labels + begin, thr_lo);
        } else if (begin >= split) {
            bits[w] = threshold_word(labels + begin, thr_hi);
        } else {
            std::uint64_t word = 0;
            for (std::size_t i = 0; i < 64; ++i) {
                const std::uint64_t thr = begin + i < split ? thr_lo : thr_hi;
                if (labels[begin + i] < thr) word |= std::uint64_t{1} << i;
            }
            bits[w] = word;
        }
    }
    if (n % 64 != 0) {
        std::uint64_t word = 0;
        for (std::size_t i = 64 * full_words; i < n; ++i) {
            const std::uint64_t thr = i < split ? thr_lo : thr_hi;
            if (labels[i] < thr) word |= std::uint64_t{1} << (i % 64);
        }
        bits[full_words] = word;
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
    double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

}  // namespace

const KernelTable& table() {
    static const KernelTable t{"avx2", &philox_fill, &threshold_bits, &dot};
    return t;
}

}  // namespace anisoperc::kernels::avx2
