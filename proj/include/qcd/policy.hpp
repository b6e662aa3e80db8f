#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qcd/estimator.hpp"
#include "qcd/model.hpp"
#include "qcd/rng.hpp"
#include "qcd/schedule.hpp"
#include "qcd/tables.hpp"

namespace qcd {

/// How WCC picks among actions when exploiting the current estimate.
enum class ActionRule {
    /// a*(theta_hat), smallest ActionId among maximizers.
    Argmax,
    /// Among the maximizers of I_a^{theta_hat}, the action with the largest
    /// window average (unobserved actions rank last), then smallest id.
    LargestAverageAmongArgmax,
};

/// Windowed Chernoff-CuSum sensing: uniform actions for n <= w and at
/// exploration times, otherwise the KL-maximizing action for the windowed
/// MLE of the post-change parameter.
struct WccPolicy {
    ExplorationSchedule schedule;
    ActionRule action_rule = ActionRule::LargestAverageAmongArgmax;
    TieBreakRule tie_break = TieBreakRule::LargestWindowAverage;
};

/// Per-channel CuSum-style sampling for the multichannel model: stay on a
/// channel while its running LLR is in (0, b); on hitting 0 forget it and
/// move to the next channel cyclically.
struct GreedyPolicy {
    /// nullopt draws the starting channel uniformly at random.
    std::optional<ActionId> initial;
};

/// Knows the true post-change parameter and always plays a*(theta).
struct OraclePolicy {
    ParamId theta;
    /// Stopping is allowed only for n > w.
    std::uint64_t w = 0;
};

/// Uniform actions every step; the detector still uses the windowed MLE.
struct UniformPolicy {
    std::uint64_t w = 1;
    TieBreakRule tie_break = TieBreakRule::LargestWindowAverage;
};

using PolicySpec = std::variant<WccPolicy, GreedyPolicy, OraclePolicy, UniformPolicy>;

std::string policy_kind_name(const PolicySpec& spec);
/// Window length w of the policy (0 for greedy).
std::uint64_t policy_window(const PolicySpec& spec);
/// Exploration budget q (0 for non-WCC policies).
std::uint64_t policy_budget(const PolicySpec& spec);

class PolicyError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Checks a spec against a model: ids in range, Greedy only on the
/// multichannel model, and a WCC schedule that passes validate_schedule()
/// up to `horizon`. Throws PolicyError.
void validate_policy(const PolicySpec& spec, const Model& model, std::uint64_t horizon = 100000);

/// Per-replication policy state.
class SensingPolicy {
public:
    SensingPolicy(const PolicySpec& spec, const Model& model, const DivergenceTables& tables);

    std::uint64_t window() const noexcept { return window_; }

    /// Forces the actions of steps 1..w (worst-case-over-initial-actions
    /// evaluation). Ignored by greedy and oracle.
    void force_initial_actions(std::span<const ActionId> actions);

    /// Chooses the action for time n and, for estimating policies at n > w,
    /// computes theta_hat_n from the window (data up to n-1 only).
    ActionId next_action(std::uint64_t n, Rng& rng);

    /// Parameter whose LLR drives the detector at the current step:
    /// theta_hat_n for WCC/Uniform, the true theta for Oracle, nullopt for
    /// greedy or before the window fills.
    std::optional<ParamId> current_estimate() const noexcept { return estimate_; }
    bool explored() const noexcept { return explored_; }

    /// Incorporates (a, x) observed at time n.
    void update(std::uint64_t n, ActionId a, const Observation& x);

    /// Greedy state.
    double greedy_sum() const noexcept { return greedy_sum_; }
    ActionId greedy_channel() const noexcept { return greedy_channel_; }
    /// Greedy LLR increment of channel a at x, using the channel's known
    /// post-change mean.
    double greedy_increment(ActionId a, const Observation& x) const noexcept;

    const SlidingWindow* window_view() const noexcept { return mle_ ? &mle_->window() : nullptr; }

private:
    ActionId uniform(Rng& rng) const;
    ActionId exploit(ParamId theta_hat) const;

    PolicySpec spec_;
    const Model* model_;
    const DivergenceTables* tables_;
    const MultichannelGaussianModel* multichannel_ = nullptr;
    std::uint64_t window_ = 0;
    std::optional<IncrementalMle> mle_;
    std::vector<ActionId> forced_;
    std::optional<ParamId> estimate_;
    bool explored_ = false;

    bool greedy_started_ = false;
    ActionId greedy_channel_{};
    double greedy_sum_ = 0.0;
};

}  // namespace qcd
