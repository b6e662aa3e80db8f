#include "qcd/policy.hpp"

#include <algorithm>

namespace qcd {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string policy_kind_name(const PolicySpec& spec) {
    return std::visit(Overloaded{[](const WccPolicy&) { return std::string("wcc"); },
                                 [](const GreedyPolicy&) { return std::string("greedy"); },
                                 [](const OraclePolicy&) { return std::string("oracle"); },
                                 [](const UniformPolicy&) { return std::string("uniform"); }},
                      spec);
}

std::uint64_t policy_window(const PolicySpec& spec) {
    return std::visit(Overloaded{[](const WccPolicy& p) { return p.schedule.window(); },
                                 [](const GreedyPolicy&) { return std::uint64_t{0}; },
                                 [](const OraclePolicy& p) { return p.w; },
                                 [](const UniformPolicy& p) { return p.w; }},
                      spec);
}

std::uint64_t policy_budget(const PolicySpec& spec) {
    if (const auto* wcc = std::get_if<WccPolicy>(&spec)) return wcc->schedule.budget();
    return 0;
}

void validate_policy(const PolicySpec& spec, const Model& model, std::uint64_t horizon) {
    std::visit(Overloaded{
                   [&](const WccPolicy& p) {
                       if (!validate_schedule(p.schedule, horizon))
                           throw PolicyError("exploration schedule violates the per-window budget");
                   },
                   [&](const GreedyPolicy& p) {
                       if (dynamic_cast<const MultichannelGaussianModel*>(&model) == nullptr)
                           throw PolicyError("greedy policy requires the multichannel Gaussian model");
                       if (p.initial && p.initial->index >= model.num_actions())
                           throw PolicyError("greedy initial channel out of range");
                   },
                   [&](const OraclePolicy& p) {
                       if (p.theta.index >= model.num_params()) throw PolicyError("oracle theta out of range");
                   },
                   [&](const UniformPolicy& p) {
                       if (p.w == 0) throw PolicyError("uniform policy needs w >= 1");
                   }},
               spec);
}

SensingPolicy::SensingPolicy(const PolicySpec& spec, const Model& model, const DivergenceTables& tables)
    : spec_(spec), model_(&model), tables_(&tables), window_(policy_window(spec)) {
    multichannel_ = dynamic_cast<const MultichannelGaussianModel*>(&model);
    if (std::holds_alternative<WccPolicy>(spec_) || std::holds_alternative<UniformPolicy>(spec_)) {
        if (window_ == 0) throw PolicyError("windowed policies need w >= 1");
        mle_.emplace(model, window_, model.num_actions());
    }
    if (std::holds_alternative<GreedyPolicy>(spec_) && multichannel_ == nullptr)
        throw PolicyError("greedy policy requires the multichannel Gaussian model");
}

void SensingPolicy::force_initial_actions(std::span<const ActionId> actions) {
    if (actions.size() != window_) throw PolicyError("forced initial actions must cover exactly w steps");
    for (auto a : actions)
        if (a.index >= model_->num_actions()) throw PolicyError("forced initial action out of range");
    forced_.assign(actions.begin(), actions.end());
}

ActionId SensingPolicy::uniform(Rng& rng) const {
    return ActionId{rng.uniform_index(static_cast<std::uint32_t>(model_->num_actions()))};
}

ActionId SensingPolicy::exploit(ParamId theta_hat) const {
    const auto& wcc = std::get<WccPolicy>(spec_);
    if (wcc.action_rule == ActionRule::Argmax) return tables_->best_action(theta_hat);
    const auto maximizers = tables_->maximizing_actions(theta_hat);
    if (maximizers.size() == 1) return maximizers.front();
    const SlidingWindow& window = mle_->window();
    std::optional<ActionId> best;
    double best_avg = 0.0;
    for (auto a : maximizers) {
        const auto avg = window.average(a);
        if (avg && (!best || *avg > best_avg)) {
            best = a;
            best_avg = *avg;
        }
    }
    return best.value_or(maximizers.front());
}

ActionId SensingPolicy::next_action(std::uint64_t n, Rng& rng) {
    explored_ = false;
    return std::visit(
        Overloaded{
            [&](const WccPolicy& p) {
                if (n <= window_) {
                    estimate_.reset();
                    return forced_.empty() ? uniform(rng) : forced_[n - 1];
                }
                estimate_ = mle_->estimate(*tables_, p.tie_break).theta_hat;
                if (p.schedule.is_exploration(n)) {
                    explored_ = true;
                    return uniform(rng);
                }
                return exploit(*estimate_);
            },
            [&](const GreedyPolicy& p) {
                if (!greedy_started_) {
                    greedy_channel_ = p.initial ? *p.initial : uniform(rng);
                    greedy_started_ = true;
                }
                return greedy_channel_;
            },
            [&](const OraclePolicy& p) {
                estimate_ = p.theta;
                return tables_->best_action(p.theta);
            },
            [&](const UniformPolicy& p) {
                if (n <= window_) {
                    estimate_.reset();
                    return forced_.empty() ? uniform(rng) : forced_[n - 1];
                }
                estimate_ = mle_->estimate(*tables_, p.tie_break).theta_hat;
                return uniform(rng);
            }},
        spec_);
}

double SensingPolicy::greedy_increment(ActionId a, const Observation& x) const noexcept {
    const double m = multichannel_->means()[a.index];
    return m * x.front() - 0.5 * m * m;
}

void SensingPolicy::update(std::uint64_t /*n*/, ActionId a, const Observation& x) {
    if (mle_) {
        mle_->push(a, x);
        return;
    }
    if (std::holds_alternative<GreedyPolicy>(spec_)) {
        greedy_sum_ += greedy_increment(a, x);
        if (greedy_sum_ <= 0.0) {
            greedy_sum_ = 0.0;
            greedy_channel_ = ActionId{static_cast<std::uint32_t>((a.index + 1) % model_->num_actions())};
        }
    }
}

}  // namespace qcd
