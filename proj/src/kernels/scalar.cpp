#include <algorithm>

#include "dglcb/kernels.hpp"
#include "link_scalar.hpp"

namespace dglcb::kernels::scalar {

void glm_moments(const GlmBatch& batch, const double* theta, GlmMoments& out) {
    const std::size_t d = batch.d;
    const std::size_t packed = d * (d + 1) / 2;
    std::fill(out.gradient, out.gradient + d, 0.0);
    std::fill(out.hessian, out.hessian + packed, 0.0);
    double objective = 0.0;

    for (std::size_t i = 0; i < batch.n; ++i) {
        double u = 0.0;
        for (std::size_t j = 0; j < d; ++j) u += batch.x[j * batch.stride + i] * theta[j];
        u = std::clamp(u, -batch.clamp, batch.clamp);
        const detail::LinkEval e = detail::eval_link(batch.link, u);
        const double y = batch.y[i];
        objective += e.cumulant - y * u;
        const double r = e.mean - y;
        std::size_t k = 0;
        for (std::size_t a = 0; a < d; ++a) {
            const double xa = batch.x[a * batch.stride + i];
            out.gradient[a] += r * xa;
            const double wa = e.slope * xa;
            for (std::size_t b = a; b < d; ++b) out.hessian[k++] += wa * batch.x[b * batch.stride + i];
        }
    }
    out.objective = objective;
}

std::size_t count_missing(std::span<const std::int64_t> delays, std::int64_t t) {
    std::size_t count = 0;
    for (std::int64_t s = 1; s < t; ++s) {
        if (s + delays[static_cast<std::size_t>(s - 1)] >= t) ++count;
    }
    return count;
}

}  // namespace dglcb::kernels::scalar
