#include <cstdlib>
#include <stdexcept>
#include <string>

#include "dglcb/kernels.hpp"

namespace dglcb::kernels {

namespace {

constexpr KernelTable kScalar{Isa::scalar, &scalar::glm_moments, &scalar::count_missing};
constexpr KernelTable kAvx2{Isa::avx2, &avx2::glm_moments, &avx2::count_missing};

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* detect() {
    if (const char* env = std::getenv("DGLCB_ISA"); env != nullptr && std::string(env) == "scalar") {
        return &kScalar;
    }
    return isa_available(Isa::avx2) ? &kAvx2 : &kScalar;
}

const KernelTable*& current() {
    static const KernelTable* table = detect();
    return table;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) {
    if (isa == Isa::scalar) return true;
    static const bool avx2 = avx2::compiled() && cpu_has_avx2();
    return avx2;
}

const KernelTable& table_for(Isa isa) {
    if (!isa_available(isa)) {
        throw std::runtime_error("kernel variant '" + std::string(isa_name(isa)) + "' is not available on this CPU");
    }
    return isa == Isa::avx2 ? kAvx2 : kScalar;
}

const KernelTable& active() { return *current(); }
Isa active_isa() { return current()->isa; }

void force_isa(Isa isa) { current() = &table_for(isa); }

}  // namespace dglcb::kernels
