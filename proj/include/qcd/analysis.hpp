#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qcd/model.hpp"
#include "qcd/tables.hpp"

namespace qcd {

/// log(gamma) / I^theta, the first-order delay asymptote. Domain error
/// unless gamma > 1 and I_theta > 0.
double asymptotic_lower_bound(double gamma, double I_theta);

struct MleErrorBound {
    double value = 0.0;
    /// value >= 1, so the bound says nothing.
    bool vacuous = false;
};

/// (|Theta| - 1) * rho^q. Domain error unless 0 < rho < 1 and q >= 1.
MleErrorBound mle_error_bound(std::size_t n_params, double rho, std::uint64_t q);

struct DriftBounds {
    double J = 0.0;
    std::vector<double> K;
    /// I^theta - J rho^q: lower bound on the drift at exploitation times.
    double exploit = 0.0;
    /// mean_a (I_a^theta - K_a rho^q): lower bound at exploration times.
    double explore = 0.0;
    /// Smallest q >= 1 making both bounds strictly positive; 0 if none.
    std::uint64_t min_positive_q = 1;
};

DriftBounds drift_bounds(const DivergenceTables& tables, ParamId theta, std::uint64_t q);

/// Non-asymptotic bound on the expected hitting time of level b by a
/// process whose increments have conditional mean >= mu_star off the
/// exploration set, <= mu always, and second moment <= v:
///     K = v / (mu_star (1 - q/w)),  C = max(K, sqrt(K), sqrt(K mu)),
///     E[tau_b] <= (b + w mu + C (1 + sqrt(b) + sqrt(w))) / (mu_star (1 - q/w)).
/// mu_low (the exploration-time drift) must be positive for the hypotheses
/// to hold but does not enter the formula. Domain error when mu_star <= 0,
/// mu_low <= 0, q >= w, or b <= 0.
double hitting_time_bound(double b, std::uint64_t w, std::uint64_t q, double mu_star, double mu_low, double mu,
                          double v);

struct TheoryReport {
    std::string theta_name;
    double I_theta = 0.0;
    std::string best_action;
    double rho = 0.0;
    double second_moment = 0.0;
    std::uint64_t w = 0;
    std::uint64_t q = 0;
    std::vector<std::pair<double, double>> lower_bounds;  // (gamma, log gamma / I)
    MleErrorBound mle_error;
    DriftBounds drift;
    /// Hitting-time bound for the WCC instantiation at each b = log gamma,
    /// nullopt when the drift bounds are not both positive at this q.
    std::vector<std::pair<double, std::optional<double>>> hitting_time;
};

TheoryReport build_theory_report(const Model& model, const DivergenceTables& tables, ParamId theta,
                                 std::uint64_t w, std::uint64_t q, const std::vector<double>& gammas);

void print_theory_report(std::ostream& out, const TheoryReport& report);
std::string theory_report_json(const TheoryReport& report);

}  // namespace qcd
