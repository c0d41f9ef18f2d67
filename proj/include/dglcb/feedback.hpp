#pragma once

// Delayed-information bookkeeping. A reward from round s with delay D_s is
// usable from round s + D_s + 1 on: it joins the arrived set T_t once
// s + D_s <= t - 1, and counts towards G_t while s + D_s >= t.

#include <cstdint>
#include <map>
#include <vector>

#include "dglcb/types.hpp"

namespace dglcb {

struct FeedbackTuple {
    std::int64_t s = 0;
    Vector x;
    int arm = 0;
    double y = 0.0;
};

struct PendingEntry {
    FeedbackTuple tuple;
    std::int64_t due = 0;
};

struct AdvanceResult {
    /// Tuples newly revealed at the end of the round that just closed.
    std::vector<FeedbackTuple> arrivals;
    /// Missing count at the start of the new round.
    std::int64_t g_t = 0;
};

class FeedbackBuffer {
public:
    /// Starts at round 1 with nothing pending.
    FeedbackBuffer() = default;

    std::int64_t now() const { return now_; }

    /// Queues the outcome of round s. Requires s == now() and at most one push per round.
    void push(std::int64_t s, Vector x, int arm, double y, std::int64_t delay);

    /// Closes round now(): increments now, reveals every entry with due <= now - 1.
    AdvanceResult advance();

    std::size_t pending_count() const { return pending_count_; }
    std::size_t arrived_count() const { return arrived_total_; }
    std::size_t push_count() const { return pushes_; }

    /// Arrived tuples in arrival order (ties by round index).
    const std::vector<FeedbackTuple>& arrived() const { return arrived_; }

    /// G at the current round (the value returned by the last advance).
    std::int64_t g_t() const { return g_t_; }
    std::int64_t g_star() const { return g_star_; }

    /// Drop arrived tuples once their consumer has copied them (keeps counts).
    void set_retain_arrived(bool retain) { retain_arrived_ = retain; }

private:
    std::int64_t now_ = 1;
    std::int64_t last_push_ = 0;
    std::map<std::int64_t, std::vector<FeedbackTuple>> pending_;
    std::size_t pending_count_ = 0;
    std::size_t pushes_ = 0;
    std::size_t arrived_total_ = 0;
    std::vector<FeedbackTuple> arrived_;
    bool retain_arrived_ = true;
    std::int64_t g_t_ = 0;
    std::int64_t g_star_ = 0;
};

/// Thrown when the buffer's two independent missing counts disagree.
class FeedbackInvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace dglcb
