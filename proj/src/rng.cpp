#include "anisoperc/rng.hpp"

#include <cmath>

namespace anisoperc {

std::uint64_t probability_threshold(double prob) {
    if (!(prob > 0.0)) return 0;
    if (prob >= 1.0) return std::uint64_t{1} << 32;
    return static_cast<std::uint64_t>(std::floor(std::ldexp(prob, 32)));
}

}  // namespace anisoperc
