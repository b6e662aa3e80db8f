#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qcd {

/// Deterministic set of exploration times, at most q per length-w block
/// after the initial window.
///
/// The default BlockTail construction places the q slots at the end of each
/// block [m*w + 1, (m+1)*w] for m >= 1:
///     N = { m*w + w - q + j : m >= 1, 1 <= j <= q }.
/// End placement is what keeps the cumulative count
///     #{ i in N : w < i <= w + n } <= (n / w) * q
/// valid for every prefix length n, including n < w.
class ExplorationSchedule {
public:
    enum class Kind { BlockTail, ExplicitList };

    /// BlockTail schedule; requires 1 <= q < w.
    static ExplorationSchedule block_tail(std::uint64_t w, std::uint64_t q);
    /// Explicit exploration times (sorted and de-duplicated on construction).
    /// The list is not checked against the density constraint here; call
    /// validate_schedule() for that.
    static ExplorationSchedule explicit_list(std::uint64_t w, std::uint64_t q, std::vector<std::uint64_t> times);

    Kind kind() const noexcept { return kind_; }
    std::uint64_t window() const noexcept { return w_; }
    std::uint64_t budget() const noexcept { return q_; }
    const std::vector<std::uint64_t>& times() const noexcept { return times_; }

    /// Whether time n (1-based) is an exploration time. Always false for n <= w.
    bool is_exploration(std::uint64_t n) const noexcept;

private:
    ExplorationSchedule(Kind kind, std::uint64_t w, std::uint64_t q, std::vector<std::uint64_t> times)
        : kind_(kind), w_(w), q_(q), times_(std::move(times)) {}

    Kind kind_;
    std::uint64_t w_;
    std::uint64_t q_;
    std::vector<std::uint64_t> times_;
};

/// Brute-force check of the cumulative density constraint for every prefix
/// n = 1..horizon, and that no exploration time lies in 1..w.
bool validate_schedule(const ExplorationSchedule& schedule, std::uint64_t horizon);

}  // namespace qcd
