#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qcd/model.hpp"
#include "qcd/tables.hpp"

namespace qcd {

/// FIFO of the most recent (action, observation) pairs, at most `capacity`
/// long. Also tracks, per action, the count and sum of the first observation
/// component of the entries currently in the window.
class SlidingWindow {
public:
    struct Entry {
        ActionId action;
        Observation obs;
    };

    SlidingWindow(std::size_t capacity, std::size_t num_actions);

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return size_; }
    bool full() const noexcept { return size_ == capacity_; }

    /// Appends an entry; returns the evicted oldest entry when already full.
    std::optional<Entry> push(ActionId a, const Observation& x);

    /// i-th entry, oldest first.
    const Entry& operator[](std::size_t i) const noexcept { return buffer_[(head_ + i) % capacity_]; }

    std::size_t count(ActionId a) const noexcept { return counts_[a.index]; }
    /// Window average of action a's observations; nullopt when unobserved.
    std::optional<double> average(ActionId a) const noexcept;
    std::size_t num_actions() const noexcept { return counts_.size(); }

private:
    std::size_t capacity_;
    std::vector<Entry> buffer_;
    std::size_t head_ = 0;
    std::size_t size_ = 0;
    std::vector<std::size_t> counts_;
    std::vector<double> sums_;
};

enum class TieBreakRule {
    /// Smallest ParamId among the tied maximizers.
    SmallestId,
    /// Prefer parameters affecting the action with the largest window
    /// average, then smallest ParamId.
    LargestWindowAverage,
};

struct MleResult {
    ParamId theta_hat;
    std::vector<double> scores;
    bool tied = false;
};

class EstimatorError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Two scores this close to the maximum are treated as tied.
inline constexpr double kScoreTieTolerance = 1e-12;

/// Resolves a tie between candidate parameters using the window. With
/// LargestWindowAverage, observed actions are visited in decreasing order of
/// window average (ties to the smaller action); each one that splits the
/// candidate set (some but not all candidates have I_a^theta > 0) narrows it
/// to the candidates it affects. The smallest remaining ParamId wins.
ParamId break_tie(const SlidingWindow& window, const DivergenceTables& tables, std::span<const ParamId> candidates,
                  TieBreakRule rule);

/// break_tie() with the LargestWindowAverage rule.
ParamId multichannel_tiebreak(const SlidingWindow& window, const DivergenceTables& tables,
                              std::span<const ParamId> candidates);

/// Windowed maximum-likelihood estimate by direct summation over the window:
/// scores[theta] = sum over entries of log f_{a_m}^theta(x_m).
/// Throws EstimatorError when the window is not full.
MleResult windowed_mle(const SlidingWindow& window, const Model& model, const DivergenceTables& tables,
                       TieBreakRule rule);

/// Same estimator with scores maintained incrementally: each push adds the
/// newest entry's log-likelihood per parameter and subtracts the evicted
/// one's. Scores are recomputed from scratch every kRefreshInterval pushes
/// to bound floating-point drift.
class IncrementalMle {
public:
    static constexpr std::size_t kRefreshInterval = 4096;

    IncrementalMle(const Model& model, std::size_t window, std::size_t num_actions);

    /// Pushes into both the owned window and the scores.
    void push(ActionId a, const Observation& x);

    const SlidingWindow& window() const noexcept { return window_; }
    std::span<const double> scores() const noexcept { return scores_; }

    struct Estimate {
        ParamId theta_hat;
        bool tied = false;
    };
    /// Throws EstimatorError when the window is not full.
    Estimate estimate(const DivergenceTables& tables, TieBreakRule rule) const;

private:
    void add_scores(ActionId a, const Observation& x, double sign);
    void refresh();

    const Model* model_;
    SlidingWindow window_;
    std::vector<double> scores_;
    std::size_t pushes_since_refresh_ = 0;
    mutable std::vector<ParamId> candidates_;
};

}  // namespace qcd
