#include "hinf/simd.hpp"

#include "hinf/errors.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace hinf::simd {

#if defined(HINF_BUILD_AVX2)
const KernelTable& avx2_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(HINF_BUILD_AVX2)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* initial_table() {
    const char* env = std::getenv("HINF_SIMD");
    const std::string want = env ? env : "";
    if (want == "scalar") return &scalar_kernels();
    if (const KernelTable* t = avx2_kernels()) return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

} // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

const KernelTable* avx2_kernels() {
#if defined(HINF_BUILD_AVX2)
    static const bool ok = cpu_has_avx2();
    return ok ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

bool available(Isa isa) {
    return isa == Isa::Scalar || (isa == Isa::Avx2 && avx2_kernels() != nullptr);
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) {
    if (isa == Isa::Scalar) {
        current().store(&scalar_kernels(), std::memory_order_release);
        return;
    }
    const KernelTable* t = avx2_kernels();
    if (!t) throw InvalidInput("SIMD variant not available: " + std::string(isa_name(isa)));
    current().store(t, std::memory_order_release);
}

} // namespace hinf::simd
