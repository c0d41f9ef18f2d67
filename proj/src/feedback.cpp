#include "dglcb/feedback.hpp"

#include <string>

#include "dglcb/delay.hpp"

namespace dglcb {

void FeedbackBuffer::push(std::int64_t s, Vector x, int arm, double y, std::int64_t delay) {
    if (s != now_) {
        throw std::invalid_argument("FeedbackBuffer::push: round " + std::to_string(s) + " pushed at round " +
                                    std::to_string(now_));
    }
    if (s == last_push_) throw std::invalid_argument("FeedbackBuffer::push: round " + std::to_string(s) + " pushed twice");
    if (delay < 0) throw std::invalid_argument("FeedbackBuffer::push: negative delay");
    last_push_ = s;
    const std::int64_t due = s + std::min(delay, kDelayCap);
    pending_[due].push_back(FeedbackTuple{s, std::move(x), arm, y});
    ++pending_count_;
    ++pushes_;
}

AdvanceResult FeedbackBuffer::advance() {
    ++now_;
    AdvanceResult result;
    const std::int64_t horizon = now_ - 1;
    auto it = pending_.begin();
    while (it != pending_.end() && it->first <= horizon) {
        for (auto& tuple : it->second) result.arrivals.push_back(std::move(tuple));
        it = pending_.erase(it);
    }
    pending_count_ -= result.arrivals.size();
    arrived_total_ += result.arrivals.size();
    if (retain_arrived_) arrived_.insert(arrived_.end(), result.arrivals.begin(), result.arrivals.end());

    // Every push happened at a round <= now - 1, so all pending entries count.
    const auto by_pending = static_cast<std::int64_t>(pending_count_);
    const auto by_arrived = static_cast<std::int64_t>(pushes_) - static_cast<std::int64_t>(arrived_total_);
    if (by_pending != by_arrived) {
        throw FeedbackInvariantError("FeedbackBuffer: pending count " + std::to_string(by_pending) +
                                     " disagrees with pushes minus arrivals " + std::to_string(by_arrived));
    }
    g_t_ = by_pending;
    g_star_ = std::max(g_star_, g_t_);
    result.g_t = g_t_;
    return result;
}

}  // namespace dglcb
