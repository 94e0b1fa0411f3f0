#include <cstdint>

#include "anisoperc/kernels.hpp"

namespace anisoperc::kernels {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

void philox_fill_scalar(PhiloxKey key, std::uint64_t first_block, std::uint32_t c2, std::uint32_t c3,
                        std::size_t nblocks, std::uint32_t* out) {
    for (std::size_t i = 0; i < nblocks; ++i) {
        const std::uint64_t b = first_block + i;
        const std::uint32_t ctr[4] = {static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32), c2, c3};
        philox4x32_10(key, ctr, out + 4 * i);
    }
}

void threshold_bits_scalar(const std::uint32_t* labels, std::size_t n, std::size_t split, std::uint64_t thr_lo,
                           std::uint64_t thr_hi, std::uint64_t* bits) {
    const std::size_t words = (n + 63) / 64;
    for (std::size_t w = 0; w < words; ++w) bits[w] = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t thr = i < split ? thr_lo : thr_hi;
        if (labels[i] < thr) bits[i / 64] |= std::uint64_t{1} << (i % 64);
    }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

}  // namespace

void philox4x32_10(PhiloxKey key, const std::uint32_t ctr_in[4], std::uint32_t out[4]) {
    std::uint32_t c0 = ctr_in[0], c1 = ctr_in[1], c2 = ctr_in[2], c3 = ctr_in[3];
    std::uint32_t k0 = key.k0, k1 = key.k1;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        const std::uint64_t p0 = std::uint64_t{kMul0} * c0;
        const std::uint64_t p1 = std::uint64_t{kMul1} * c2;
        const std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
        const std::uint32_t n1 = static_cast<std::uint32_t>(p1);
        const std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
        const std::uint32_t n3 = static_cast<std::uint32_t>(p0);
        c0 = n0;
        c1 = n1;
        c2 = n2;
        c3 = n3;
    }
    out[0] = c0;
    out[1] = c1;
    out[2] = c2;
    out[3] = c3;
}

const KernelTable& scalar_table() {
    static const KernelTable table{"scalar", &philox_fill_scalar, &threshold_bits_scalar, &dot_scalar};
    return table;
}

}  // namespace anisoperc::kernels
