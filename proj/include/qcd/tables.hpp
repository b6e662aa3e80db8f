#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qcd/model.hpp"

namespace qcd {

/// Precomputed divergence quantities of a model. Immutable after
/// construction; shared read-only by every replication.
///
/// The [action x theta x theta] tensors are materialized only up to
/// kDenseParamLimit parameters; larger parameter spaces (e.g. all 1023
/// subsets of 10 channels) answer those queries from the model, which must
/// then outlive the tables.
class DivergenceTables {
public:
    static constexpr std::size_t kDenseParamLimit = 128;

    explicit DivergenceTables(const Model& model);

    std::size_t num_actions() const noexcept { return actions_; }
    std::size_t num_params() const noexcept { return params_; }

    /// I_a^theta = D(f_a^theta || f_a^pre).
    double kl(ActionId a, ParamId theta) const noexcept { return kl_[a.index * params_ + theta.index]; }
    /// I^theta = max_a I_a^theta.
    double kl_max(ParamId theta) const noexcept { return kl_max_[theta.index]; }
    /// a*(theta); ties break toward the smallest ActionId.
    ActionId best_action(ParamId theta) const noexcept { return best_action_[theta.index]; }
    /// B_a(theta, u).
    double cross_drift(ActionId a, ParamId theta, ParamId u) const {
        if (cross_.empty()) return theta == u ? kl(a, theta) : model_->cross_drift(a, theta, u);
        return cross_[(a.index * params_ + theta.index) * params_ + u.index];
    }
    /// D(f_a^theta || f_a^u).
    double kl_between(ActionId a, ParamId theta, ParamId u) const {
        return kl(a, theta) - cross_drift(a, theta, u);
    }
    /// rho(theta, u, a); the diagonal holds 1.
    double bhattacharyya(ActionId a, ParamId theta, ParamId u) const {
        if (bhat_.empty()) return theta == u ? 1.0 : model_->bhattacharyya(a, theta, u);
        return bhat_[(a.index * params_ + theta.index) * params_ + u.index];
    }
    /// rho(theta, u), averaged over actions; 1 on the diagonal.
    double bhattacharyya_avg(ParamId theta, ParamId u) const;
    /// max_{theta != u} rho(theta, u); 0 when there is a single parameter.
    double rho() const noexcept { return rho_; }
    /// Max second moment of the LLR over (a, theta).
    double second_moment() const noexcept { return second_moment_; }

    /// Actions attaining I^theta within 1e-12, ascending.
    std::span<const ActionId> maximizing_actions(ParamId theta) const noexcept { return maximizers_[theta.index]; }

private:
    const Model* model_;
    std::size_t actions_;
    std::size_t params_;
    std::vector<double> kl_;
    std::vector<double> kl_max_;
    std::vector<ActionId> best_action_;
    std::vector<std::vector<ActionId>> maximizers_;
    std::vector<double> cross_;
    std::vector<double> bhat_;
    double rho_ = 0.0;
    double second_moment_ = 0.0;
};

struct ValidationReport {
    /// Per theta: some action has I_a^theta > tol.
    std::vector<bool> detectable;
    /// Row-major [theta][u]: some action has D(f_a^theta || f_a^u) > tol.
    /// Diagonal entries are true.
    std::vector<bool> separable;
    std::size_t num_params = 0;
    bool passed = false;
    std::vector<std::string> failures;
};

/// Checks that every post-change law is detectable by some action and every
/// pair of post-change laws is separable by some action.
ValidationReport validate_assumptions(const Model& model, const DivergenceTables& tables, double tol = 1e-12);

/// CSV rows "action,theta,I,is_best" with 1-based action labels from the
/// model's naming.
void write_tables_csv(std::ostream& out, const Model& model, const DivergenceTables& tables);

}  // namespace qcd
