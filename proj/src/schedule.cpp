#include "qcd/schedule.hpp"

#include <algorithm>

namespace qcd {

ExplorationSchedule ExplorationSchedule::block_tail(std::uint64_t w, std::uint64_t q) {
    if (w == 0) throw std::invalid_argument("exploration schedule: w must be positive");
    if (q == 0 || q >= w) throw std::invalid_argument("exploration schedule: need 1 <= q < w");
    return ExplorationSchedule(Kind::BlockTail, w, q, {});
}

ExplorationSchedule ExplorationSchedule::explicit_list(std::uint64_t w, std::uint64_t q,
                                                       std::vector<std::uint64_t> times) {
    if (w == 0) throw std::invalid_argument("exploration schedule: w must be positive");
    if (q == 0 || q >= w) throw std::invalid_argument("exploration schedule: need 1 <= q < w");
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    return ExplorationSchedule(Kind::ExplicitList, w, q, std::move(times));
}

bool ExplorationSchedule::is_exploration(std::uint64_t n) const noexcept {
    if (n <= w_) return false;
    if (kind_ == Kind::ExplicitList) return std::binary_search(times_.begin(), times_.end(), n);
    // position within its block [m*w + 1, (m+1)*w], 1-based
    const std::uint64_t pos = (n - 1) % w_ + 1;
    return pos > w_ - q_;
}

bool validate_schedule(const ExplorationSchedule& schedule, std::uint64_t horizon) {
    const std::uint64_t w = schedule.window();
    const std::uint64_t q = schedule.budget();
    for (std::uint64_t n = 1; n <= w; ++n)
        if (schedule.is_exploration(n)) return false;
    if (schedule.kind() == ExplorationSchedule::Kind::ExplicitList && !schedule.times().empty() &&
        schedule.times().front() <= w)
        return false;
    std::uint64_t count = 0;
    for (std::uint64_t n = 1; n <= horizon; ++n) {
        if (schedule.is_exploration(w + n)) ++count;
        // count <= n*q/w, kept in integers
        if (count * w > n * q) return false;
    }
    return true;
}

}  // namespace qcd
