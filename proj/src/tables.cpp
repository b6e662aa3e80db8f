#include "qcd/tables.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace qcd {

DivergenceTables::DivergenceTables(const Model& model)
    : model_(&model), actions_(model.num_actions()), params_(model.num_params()) {
    if (actions_ < 2) throw ModelError("model needs at least two actions");
    if (params_ < 1) throw ModelError("model needs at least one post-change parameter");

    kl_.resize(actions_ * params_);
    for (std::uint32_t a = 0; a < actions_; ++a) {
        for (std::uint32_t t = 0; t < params_; ++t) {
            const double value = model.kl(ActionId{a}, ParamId{t});
            if (!std::isfinite(value)) throw ModelError("non-finite KL divergence in model");
            kl_[a * params_ + t] = value;
        }
    }

    const bool dense = params_ <= kDenseParamLimit;
    if (dense) {
        cross_.resize(actions_ * params_ * params_);
        bhat_.resize(actions_ * params_ * params_);
        for (std::uint32_t a = 0; a < actions_; ++a) {
            for (std::uint32_t t = 0; t < params_; ++t) {
                for (std::uint32_t u = 0; u < params_; ++u) {
                    const std::size_t i = (a * params_ + t) * params_ + u;
                    if (t == u) {
                        cross_[i] = kl_[a * params_ + t];
                        bhat_[i] = 1.0;
                    } else {
                        cross_[i] = model.cross_drift(ActionId{a}, ParamId{t}, ParamId{u});
                        bhat_[i] = model.bhattacharyya(ActionId{a}, ParamId{t}, ParamId{u});
                    }
                }
            }
        }
    }

    kl_max_.resize(params_);
    best_action_.resize(params_);
    for (std::uint32_t t = 0; t < params_; ++t) {
        std::uint32_t best = 0;
        for (std::uint32_t a = 1; a < actions_; ++a)
            if (kl_[a * params_ + t] > kl_[best * params_ + t]) best = a;
        best_action_[t] = ActionId{best};
        kl_max_[t] = kl_[best * params_ + t];
    }
    maximizers_.resize(params_);
    for (std::uint32_t t = 0; t < params_; ++t)
        for (std::uint32_t a = 0; a < actions_; ++a)
            if (kl_[a * params_ + t] >= kl_max_[t] - 1e-12) maximizers_[t].push_back(ActionId{a});

    for (std::uint32_t t = 0; t < params_; ++t)
        for (std::uint32_t u = 0; u < params_; ++u)
            if (t != u) rho_ = std::max(rho_, bhattacharyya_avg(ParamId{t}, ParamId{u}));

    for (std::uint32_t a = 0; a < actions_; ++a)
        for (std::uint32_t t = 0; t < params_; ++t)
            second_moment_ = std::max(second_moment_, model.llr_second_moment(ActionId{a}, ParamId{t}));
    if (!std::isfinite(second_moment_)) throw ModelError("non-finite LLR second moment in model");
}

double DivergenceTables::bhattacharyya_avg(ParamId theta, ParamId u) const {
    if (theta == u) return 1.0;
    double sum = 0.0;
    for (std::uint32_t a = 0; a < actions_; ++a) sum += bhattacharyya(ActionId{a}, theta, u);
    return sum / static_cast<double>(actions_);
}

ValidationReport validate_assumptions(const Model& model, const DivergenceTables& tables, double tol) {
    ValidationReport report;
    const auto params = tables.num_params();
    const auto actions = tables.num_actions();
    report.num_params = params;
    report.detectable.assign(params, false);
    report.separable.assign(params * params, true);

    for (std::uint32_t t = 0; t < params; ++t) {
        for (std::uint32_t a = 0; a < actions; ++a)
            if (tables.kl(ActionId{a}, ParamId{t}) > tol) report.detectable[t] = true;
        if (!report.detectable[t])
            report.failures.push_back("no action detects the change under " + model.param_name(ParamId{t}));
    }
    for (std::uint32_t t = 0; t < params; ++t) {
        for (std::uint32_t u = 0; u < params; ++u) {
            if (t == u) continue;
            bool any = false;
            for (std::uint32_t a = 0; a < actions && !any; ++a)
                any = tables.kl_between(ActionId{a}, ParamId{t}, ParamId{u}) > tol;
            report.separable[t * params + u] = any;
            if (!any)
                report.failures.push_back("no action separates " + model.param_name(ParamId{t}) + " from " +
                                          model.param_name(ParamId{u}));
        }
    }
    report.passed = report.failures.empty();
    return report;
}

void write_tables_csv(std::ostream& out, const Model& model, const DivergenceTables& tables) {
    out << "action,theta,I,is_best\n";
    const auto old_precision = out.precision(12);
    for (std::uint32_t a = 0; a < tables.num_actions(); ++a) {
        for (std::uint32_t t = 0; t < tables.num_params(); ++t) {
            const ActionId action{a};
            const ParamId theta{t};
            out << model.action_name(action) << ",\"" << model.param_name(theta) << "\","
                << tables.kl(action, theta) << ',' << (tables.best_action(theta) == action ? 1 : 0) << '\n';
        }
    }
    out.precision(old_precision);
}

}  // namespace qcd
