#include <algorithm>
#include <set>
#include <vector>

#include "doctest.h"

#include "dglcb/feedback.hpp"

using namespace dglcb;

namespace {

Vector e1() { return Vector::Unit(2, 0); }

// Runs the buffer over a delay sequence, returning G_t for t = 1..n+1 and the
// arrived round sets T_t.
struct Replay {
    std::vector<std::int64_t> g;
    std::vector<std::set<std::int64_t>> arrived;
};

Replay replay(const std::vector<std::int64_t>& delays) {
    FeedbackBuffer buf;
    Replay out;
    out.g.push_back(buf.g_t());
    std::set<std::int64_t> seen;
    out.arrived.push_back(seen);
    for (std::size_t i = 0; i < delays.size(); ++i) {
        const auto s = static_cast<std::int64_t>(i) + 1;
        buf.push(s, e1(), 0, static_cast<double>(s), delays[i]);
        const AdvanceResult r = buf.advance();
        for (const auto& tuple : r.arrivals) seen.insert(tuple.s);
        out.g.push_back(r.g_t);
        out.arrived.push_back(seen);
    }
    return out;
}

}  // namespace

TEST_SUITE("feedback") {

TEST_CASE("zero delay arrives next round") {
    FeedbackBuffer buf;
    buf.push(1, e1(), 0, 1.0, 0);
    const AdvanceResult r = buf.advance();
    CHECK(buf.now() == 2);
    REQUIRE(r.arrivals.size() == 1);
    CHECK(r.arrivals[0].s == 1);
    CHECK(r.g_t == 0);
}

TEST_CASE("round 3 with delay 2 is pending at t = 5 and arrived at t = 6") {
    FeedbackBuffer buf;
    for (std::int64_t s = 1; s <= 2; ++s) {
        buf.push(s, e1(), 0, 0.0, 0);
        buf.advance();
    }
    buf.push(3, e1(), 0, 0.0, 2);
    CHECK(buf.advance().arrivals.empty());  // now 4
    const AdvanceResult at5 = buf.advance();
    CHECK(buf.now() == 5);
    CHECK(at5.arrivals.empty());
    CHECK(at5.g_t == 1);
    const AdvanceResult at6 = buf.advance();
    CHECK(buf.now() == 6);
    REQUIRE(at6.arrivals.size() == 1);
    CHECK(at6.arrivals[0].s == 3);
    CHECK(at6.g_t == 0);
}

TEST_CASE("push preconditions") {
    FeedbackBuffer buf;
    CHECK_THROWS_AS(buf.push(2, e1(), 0, 0.0, 0), std::invalid_argument);
    buf.push(1, e1(), 0, 0.0, 0);
    CHECK_THROWS_AS(buf.push(1, e1(), 0, 0.0, 0), std::invalid_argument);
    buf.advance();
    CHECK_THROWS_AS(buf.push(2, e1(), 0, 0.0, -1), std::invalid_argument);
}

TEST_CASE("G_t examples") {
    const Replay r = replay({0, 0, 3});
    CHECK(r.g[3] == 1);  // index t-1 holds G_t

    const Replay zeros = replay(std::vector<std::int64_t>(50, 0));
    for (auto g : zeros.g) CHECK(g == 0);

    FeedbackBuffer idle;
    for (int i = 0; i < 5; ++i) {
        const AdvanceResult a = idle.advance();
        CHECK(a.arrivals.empty());
        CHECK(a.g_t == 0);
    }
}

TEST_CASE("replay matches the indicator definitions") {
    Rng rng(3);
    std::geometric_distribution<std::int64_t> geo(0.2);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<std::int64_t> delays(200);
        for (auto& d : delays) d = geo(rng);
        const Replay r = replay(delays);
        std::int64_t g_star = 0;
        for (std::int64_t t = 1; t <= 201; ++t) {
            std::int64_t g = 0;
            std::set<std::int64_t> arrived;
            for (std::int64_t s = 1; s < t; ++s) {
                if (s + delays[static_cast<std::size_t>(s - 1)] >= t) ++g;
                else arrived.insert(s);
            }
            CHECK(r.g[static_cast<std::size_t>(t - 1)] == g);
            CHECK(r.arrived[static_cast<std::size_t>(t - 1)] == arrived);
            CHECK(g <= t - 1);
            g_star = std::max(g_star, g);
        }
        for (std::size_t t = 1; t < r.arrived.size(); ++t) {
            CHECK(std::includes(r.arrived[t].begin(), r.arrived[t].end(), r.arrived[t - 1].begin(),
                                r.arrived[t - 1].end()));
        }
        CHECK(replay(delays).arrived == r.arrived);
        FeedbackBuffer buf;
        for (std::size_t i = 0; i < delays.size(); ++i) {
            buf.push(static_cast<std::int64_t>(i) + 1, e1(), 0, 0.0, delays[i]);
            buf.advance();
            CHECK(buf.pending_count() + buf.arrived_count() == buf.push_count());
        }
        // G_T* covers rounds 1..T, the last advance reports G_{T+1}.
        std::int64_t g_star_all = 0;
        for (auto g : r.g) g_star_all = std::max(g_star_all, g);
        CHECK(buf.g_star() == g_star_all);
    }
}

TEST_CASE("bounded delays keep G_t below d_max") {
    Rng rng(5);
    std::uniform_int_distribution<std::int64_t> draw(0, 4);
    std::vector<std::int64_t> delays(1000);
    for (auto& d : delays) d = draw(rng);
    for (auto g : replay(delays).g) CHECK(g <= 4);
}

TEST_CASE("counts survive dropping arrived tuples") {
    FeedbackBuffer buf;
    buf.set_retain_arrived(false);
    for (std::int64_t s = 1; s <= 10; ++s) {
        buf.push(s, e1(), 0, 0.0, s % 3);
        buf.advance();
    }
    CHECK(buf.arrived().empty());
    CHECK(buf.arrived_count() + buf.pending_count() == 10);
}

}
