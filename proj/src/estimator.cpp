#include "qcd/estimator.hpp"

#include <algorithm>
#include <numeric>

namespace qcd {

SlidingWindow::SlidingWindow(std::size_t capacity, std::size_t num_actions)
    : capacity_(capacity), counts_(num_actions, 0), sums_(num_actions, 0.0) {
    if (capacity == 0) throw std::invalid_argument("sliding window capacity must be positive");
    buffer_.resize(capacity);
}

std::optional<SlidingWindow::Entry> SlidingWindow::push(ActionId a, const Observation& x) {
    std::optional<Entry> evicted;
    if (size_ == capacity_) {
        evicted = buffer_[head_];
        counts_[evicted->action.index] -= 1;
        sums_[evicted->action.index] -= evicted->obs.front();
        // An emptied slot gets an exact zero sum back.
        if (counts_[evicted->action.index] == 0) sums_[evicted->action.index] = 0.0;
        buffer_[head_] = Entry{a, x};
        head_ = (head_ + 1) % capacity_;
    } else {
        buffer_[(head_ + size_) % capacity_] = Entry{a, x};
        ++size_;
    }
    counts_[a.index] += 1;
    sums_[a.index] += x.front();
    return evicted;
}

std::optional<double> SlidingWindow::average(ActionId a) const noexcept {
    if (counts_[a.index] == 0) return std::nullopt;
    return sums_[a.index] / static_cast<double>(counts_[a.index]);
}

ParamId break_tie(const SlidingWindow& window, const DivergenceTables& tables, std::span<const ParamId> candidates,
                  TieBreakRule rule) {
    if (candidates.empty()) throw EstimatorError("break_tie: empty candidate set");
    if (candidates.size() == 1) return candidates.front();
    std::vector<ParamId> remaining(candidates.begin(), candidates.end());
    if (rule == TieBreakRule::LargestWindowAverage) {
        struct Observed {
            ActionId action;
            double average;
        };
        std::vector<Observed> observed;
        for (std::uint32_t a = 0; a < window.num_actions(); ++a)
            if (auto avg = window.average(ActionId{a})) observed.push_back({ActionId{a}, *avg});
        std::stable_sort(observed.begin(), observed.end(),
                         [](const Observed& l, const Observed& r) { return l.average > r.average; });
        for (const auto& [action, avg] : observed) {
            std::vector<ParamId> affected;
            for (auto theta : remaining)
                if (tables.kl(action, theta) > 0.0) affected.push_back(theta);
            if (!affected.empty() && affected.size() < remaining.size()) remaining = std::move(affected);
            if (remaining.size() == 1) break;
        }
    }
    return *std::min_element(remaining.begin(), remaining.end());
}

ParamId multichannel_tiebreak(const SlidingWindow& window, const DivergenceTables& tables,
                              std::span<const ParamId> candidates) {
    return break_tie(window, tables, candidates, TieBreakRule::LargestWindowAverage);
}

namespace {

// Shared argmax + tie resolution over a score vector.
IncrementalMle::Estimate resolve(std::span<const double> scores, const SlidingWindow& window,
                                 const DivergenceTables& tables, TieBreakRule rule, std::vector<ParamId>& candidates) {
    const double best = *std::max_element(scores.begin(), scores.end());
    candidates.clear();
    for (std::uint32_t t = 0; t < scores.size(); ++t)
        if (scores[t] >= best - kScoreTieTolerance) candidates.push_back(ParamId{t});
    if (candidates.size() == 1) return {candidates.front(), false};
    return {break_tie(window, tables, candidates, rule), true};
}

}  // namespace

MleResult windowed_mle(const SlidingWindow& window, const Model& model, const DivergenceTables& tables,
                       TieBreakRule rule) {
    if (!window.full()) throw EstimatorError("windowed_mle called before the window is full");
    MleResult result;
    const std::size_t params = model.num_params();
    result.scores.assign(params, 0.0);
    for (std::size_t i = 0; i < window.size(); ++i) {
        const auto& entry = window[i];
        for (std::uint32_t t = 0; t < params; ++t)
            result.scores[t] += model.log_density(entry.action, Regime::post(ParamId{t}), entry.obs);
    }
    std::vector<ParamId> candidates;
    const auto est = resolve(result.scores, window, tables, rule, candidates);
    result.theta_hat = est.theta_hat;
    result.tied = est.tied;
    return result;
}

IncrementalMle::IncrementalMle(const Model& model, std::size_t window, std::size_t num_actions)
    : model_(&model), window_(window, num_actions), scores_(model.num_params(), 0.0) {
    candidates_.reserve(model.num_params());
}

void IncrementalMle::add_scores(ActionId a, const Observation& x, double sign) {
    thread_local std::vector<double> terms;
    terms.resize(scores_.size());
    model_->log_density_all(a, x, terms);
    for (std::size_t t = 0; t < scores_.size(); ++t) scores_[t] += sign * terms[t];
}

void IncrementalMle::refresh() {
    std::fill(scores_.begin(), scores_.end(), 0.0);
    for (std::size_t i = 0; i < window_.size(); ++i) add_scores(window_[i].action, window_[i].obs, 1.0);
    pushes_since_refresh_ = 0;
}

void IncrementalMle::push(ActionId a, const Observation& x) {
    if (auto evicted = window_.push(a, x)) add_scores(evicted->action, evicted->obs, -1.0);
    add_scores(a, x, 1.0);
    if (++pushes_since_refresh_ >= kRefreshInterval) refresh();
}

IncrementalMle::Estimate IncrementalMle::estimate(const DivergenceTables& tables, TieBreakRule rule) const {
    if (!window_.full()) throw EstimatorError("windowed MLE requested before the window is full");
    return resolve(scores_, window_, tables, rule, candidates_);
}

}  // namespace qcd
