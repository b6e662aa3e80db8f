#include <vector>

#include "doctest.h"
#include "qcd/schedule.hpp"

using qcd::ExplorationSchedule;

namespace {

// Independent enumeration of the block-tail times up to `horizon`.
std::vector<bool> enumerate(std::uint64_t w, std::uint64_t q, std::uint64_t horizon) {
    std::vector<bool> in(horizon + 1, false);
    for (std::uint64_t m = 1; m * w < horizon + w; ++m)
        for (std::uint64_t j = 1; j <= q; ++j) {
            const std::uint64_t t = m * w + w - q + j;
            if (t <= horizon) in[t] = true;
        }
    return in;
}

bool density_holds(const std::vector<bool>& in, std::uint64_t w, std::uint64_t q) {
    const std::uint64_t horizon = in.size() - 1;
    for (std::uint64_t t = 1; t <= std::min(w, horizon); ++t)
        if (in[t]) return false;
    std::uint64_t count = 0;
    for (std::uint64_t n = 1; w + n <= horizon; ++n) {
        if (in[w + n]) ++count;
        if (count * w > n * q) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("block-tail membership examples") {
    const auto s = ExplorationSchedule::block_tail(10, 1);
    CHECK(s.is_exploration(20));
    CHECK_FALSE(s.is_exploration(11));
    CHECK(s.is_exploration(30));
    CHECK_FALSE(s.is_exploration(10));
    const auto s3 = ExplorationSchedule::block_tail(10, 3);
    CHECK(s3.is_exploration(18));
    CHECK(s3.is_exploration(19));
    CHECK(s3.is_exploration(20));
    CHECK_FALSE(s3.is_exploration(17));
    for (std::uint64_t n = 1; n <= 10; ++n) CHECK_FALSE(s3.is_exploration(n));
}

TEST_CASE("block-tail matches brute-force enumeration") {
    for (std::uint64_t w : {2, 5, 10, 20, 50})
        for (std::uint64_t q = 1; q < w && q <= 5; ++q) {
            const auto s = ExplorationSchedule::block_tail(w, q);
            const auto in = enumerate(w, q, 2000);
            REQUIRE(density_holds(in, w, q));
            std::uint64_t per_block = 0;
            for (std::uint64_t n = 1; n <= 2000; ++n) {
                CHECK(s.is_exploration(n) == in[n]);
                if (n > w && s.is_exploration(n)) ++per_block;
                if (n > w && n % w == 0) {
                    CHECK(per_block == q);
                    per_block = 0;
                }
            }
            CHECK(validate_schedule(s, 10000));
        }
}

TEST_CASE("validate_schedule rejects violations") {
    CHECK_FALSE(validate_schedule(ExplorationSchedule::explicit_list(10, 1, {11, 12}), 100));
    CHECK_FALSE(validate_schedule(ExplorationSchedule::explicit_list(10, 1, {5}), 100));
    CHECK(validate_schedule(ExplorationSchedule::explicit_list(10, 1, {20, 30, 40}), 100));
    CHECK(validate_schedule(ExplorationSchedule::explicit_list(10, 2, {19, 20}), 100));
    // a time at the very start of the first block already breaks the prefix bound
    CHECK_FALSE(validate_schedule(ExplorationSchedule::explicit_list(10, 1, {11}), 100));
    CHECK(validate_schedule(ExplorationSchedule::block_tail(10, 1), 10000));
    CHECK(validate_schedule(ExplorationSchedule::block_tail(20, 1), 10000));
}

TEST_CASE("explicit list membership and invalid budgets") {
    const auto s = ExplorationSchedule::explicit_list(10, 2, {40, 20, 20, 30});
    CHECK(s.times() == std::vector<std::uint64_t>{20, 30, 40});
    CHECK(s.is_exploration(30));
    CHECK_FALSE(s.is_exploration(31));
    CHECK_THROWS_AS(ExplorationSchedule::block_tail(10, 0), std::invalid_argument);
    CHECK_THROWS_AS(ExplorationSchedule::block_tail(10, 10), std::invalid_argument);
    CHECK_THROWS_AS(ExplorationSchedule::block_tail(0, 1), std::invalid_argument);
}
