#include <cstdlib>
#include <string>

#include "anisoperc/errors.hpp"
#include "anisoperc/kernels.hpp"

namespace anisoperc::kernels {

#if defined(ANISOPERC_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif

const KernelTable* avx2_table() {
#if defined(ANISOPERC_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &avx2::table() : nullptr;
#else
    return nullptr;
#endif
}

namespace {

const KernelTable& select() {
    const char* forced = std::getenv("ANISOPERC_KERNELS");
    const std::string choice = forced ? forced : "auto";
    if (choice == "scalar") return scalar_table();
    if (choice == "avx2") {
        if (const KernelTable* t = avx2_table()) return *t;
        throw ConfigError("ANISOPERC_KERNELS=avx2 but AVX2/FMA is unavailable");
    }
    if (choice != "auto") throw ConfigError("ANISOPERC_KERNELS must be auto, scalar or avx2");
    if (const KernelTable* t = avx2_table()) return *t;
    return scalar_table();
}

}  // namespace

const KernelTable& active() {
    static const KernelTable& table = select();
    return table;
}

}  // namespace anisoperc::kernels
