#pragma once

#include <algorithm>
#include <cmath>

#include "dglcb/types.hpp"

namespace dglcb::kernels::detail {

struct LinkEval {
    double mean;        // g(u)
    double slope;       // g'(u)
    double cumulant;    // m(u), with m' = g
};

inline LinkEval eval_link(LinkKind link, double u) {
    switch (link) {
        case LinkKind::linear:
            return {u, 1.0, 0.5 * u * u};
        case LinkKind::logistic: {
            const double e = std::exp(-std::abs(u));
            const double inv = 1.0 / (1.0 + e);
            const double mean = u >= 0.0 ? inv : e * inv;
            return {mean, e * inv * inv, std::max(u, 0.0) + std::log1p(e)};
        }
        case LinkKind::poisson: {
            const double e = std::exp(u);
            return {e, e, e};
        }
    }
    return {0.0, 0.0, 0.0};
}

}  // namespace dglcb::kernels::detail
