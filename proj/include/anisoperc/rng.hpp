#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "anisoperc/kernels.hpp"

namespace anisoperc {

inline constexpr std::string_view kGeneratorName = "philox4x32-10";

// Third counter word: which consumer owns the stream. Combined with the
// replicate index (second counter word) and the master seed (key) this gives
// every replicate and purpose an independent, order-free stream.
enum class StreamPurpose : std::uint32_t {
    edge_labels = 0,
    insertion_order = 1,
    bootstrap = 2,
    site_order = 3,
};

inline kernels::PhiloxKey key_from_seed(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

// open iff label < threshold, label uniform on [0, 2^32).
std::uint64_t probability_threshold(double prob);

// Sequential view of one Philox stream.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint32_t replicate, StreamPurpose purpose)
        : key_(key_from_seed(seed)), replicate_(replicate), purpose_(static_cast<std::uint32_t>(purpose)) {}

    std::uint32_t next_u32() {
        if (used_ == 4) refill();
        return buffer_[used_++];
    }
    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on [0, n), n >= 1 (Lemire's multiply-and-reject).
    std::uint32_t bounded(std::uint32_t n) {
        std::uint64_t m = std::uint64_t{next_u32()} * n;
        auto low = static_cast<std::uint32_t>(m);
        if (low < n) {
            const std::uint32_t floor = (0u - n) % n;
            while (low < floor) {
                m = std::uint64_t{next_u32()} * n;
                low = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

private:
    void refill() {
        const std::uint32_t ctr[4] = {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                      replicate_, purpose_};
        kernels::philox4x32_10(key_, ctr, buffer_.data());
        ++block_;
        used_ = 0;
    }

    kernels::PhiloxKey key_;
    std::uint32_t replicate_;
    std::uint32_t purpose_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
};

}  // namespace anisoperc
