#pragma once

// Data-parallel inner loops with a scalar reference implementation and an
// AVX2/FMA variant. The variant is chosen once at startup from CPUID; set
// DGLCB_ISA=scalar in the environment to force the reference path.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "dglcb/types.hpp"

namespace dglcb::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// Samples in column-major (structure-of-arrays) layout: coordinate j of
/// sample i lives at x[j * stride + i].
struct GlmBatch {
    LinkKind link = LinkKind::logistic;
    double clamp = 30.0;
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t stride = 0;
    const double* x = nullptr;
    const double* y = nullptr;
};

/// Negative log-likelihood sum_i [m(u_i) - y_i u_i], its gradient
/// sum_i (g(u_i) - y_i) x_i and Hessian sum_i g'(u_i) x_i x_i^T, with
/// u_i = clamp(x_i . theta). The Hessian is packed row-major upper triangle,
/// d(d+1)/2 entries.
struct GlmMoments {
    double objective = 0.0;
    double* gradient = nullptr;  // d entries
    double* hessian = nullptr;   // d(d+1)/2 entries
};

using GlmMomentsFn = void (*)(const GlmBatch& batch, const double* theta, GlmMoments& out);

/// Number of s in [1, t-1] with s + delays[s-1] >= t, i.e. rewards still
/// missing at the start of round t. `delays` must hold at least t-1 entries.
using CountMissingFn = std::size_t (*)(std::span<const std::int64_t> delays, std::int64_t t);

struct KernelTable {
    Isa isa;
    GlmMomentsFn glm_moments;
    CountMissingFn count_missing;
};

bool isa_available(Isa isa);
const KernelTable& table_for(Isa isa);

/// Kernel table in use by the library.
const KernelTable& active();
Isa active_isa();

/// Overrides the runtime choice (tests, benchmarks). Throws if unavailable.
void force_isa(Isa isa);

namespace scalar {
void glm_moments(const GlmBatch& batch, const double* theta, GlmMoments& out);
std::size_t count_missing(std::span<const std::int64_t> delays, std::int64_t t);
}  // namespace scalar

namespace avx2 {
bool compiled();
void glm_moments(const GlmBatch& batch, const double* theta, GlmMoments& out);
std::size_t count_missing(std::span<const std::int64_t> delays, std::int64_t t);
}  // namespace avx2

}  // namespace dglcb::kernels
