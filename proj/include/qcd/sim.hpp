#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcd/detector.hpp"
#include "qcd/model.hpp"
#include "qcd/policy.hpp"
#include "qcd/tables.hpp"

namespace qcd {

/// Immutable state shared by every replication.
struct SimContext {
    const Model& model;
    const DivergenceTables& tables;
};

struct Scenario {
    ParamId true_theta{};
    /// Change-point nu >= 1; nullopt means the change never happens.
    std::optional<std::uint64_t> change_point;
    std::uint64_t horizon_cap = 10'000'000;

    /// Observation at time n is drawn from the pre-change law iff n < nu.
    Regime regime(std::uint64_t n) const noexcept {
        return change_point && n >= *change_point ? Regime::post(true_theta) : Regime::pre_change();
    }
};

/// One step as seen by an optional trace hook.
struct StepTrace {
    std::uint64_t n = 0;
    ActionId action{};
    Observation obs;
    std::optional<ParamId> estimate;
    bool explored = false;
    /// NaN when no statistic was updated at this step.
    double llr = 0.0;
    double W = 0.0;
    double R = 1.0;
};

struct EpisodeOptions {
    /// Forced actions for steps 1..w (empty = policy's own choice).
    std::span<const ActionId> initial_actions;
    /// When false the episode runs to horizon_cap regardless of the
    /// statistic (used by the martingale check).
    bool stopping_enabled = true;
    /// Count steps where R < exp(W).
    bool check_dominance = false;
    std::function<void(const StepTrace&)> trace;
};

struct TrialRecord {
    std::uint64_t seed = 0;
    /// Stopping time, or horizon_cap when censored.
    std::uint64_t stop_time = 0;
    bool censored = false;
    /// (T - nu + 1)^+ for post-change scenarios that stopped.
    std::optional<std::uint64_t> delay;
    std::optional<ParamId> theta_hat_at_stop;
    std::uint64_t exploration_count = 0;
    /// Statistic at the last step (W for CuSum/greedy).
    double final_statistic = 0.0;
    double final_sr = 1.0;
    /// Statistic at stop minus b; NaN when censored.
    double overshoot = 0.0;
    bool sr_saturated = false;
    std::uint64_t dominance_violations = 0;
};

class SimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Detector spec matching a policy: greedy gets the single-channel rule,
/// everything else the windowed CuSum with w = policy_window(policy).
DetectorSpec make_detector(const PolicySpec& policy, double threshold_b);

/// Runs one episode. Deterministic given (inputs, seed).
TrialRecord run_episode(const SimContext& ctx, const Scenario& scenario, const PolicySpec& policy,
                        const DetectorSpec& detector, std::uint64_t seed, const EpisodeOptions& options = {});

/// Everything needed to run a batch of independent replications.
struct ReplicationTask {
    Scenario scenario;
    PolicySpec policy;
    DetectorSpec detector;
    std::uint64_t seed_base = 0;
    std::vector<ActionId> initial_actions;
    bool stopping_enabled = true;
    bool check_dominance = false;
};

/// Replication i uses the key derive_trial_seed(seed_base, i). Results are
/// indexed by replication, so output is independent of scheduling.
std::vector<TrialRecord> run_replications(const SimContext& ctx, const ReplicationTask& task, std::uint64_t reps,
                                          int workers);

/// Single-threaded reference for run_replications().
std::vector<TrialRecord> run_replications_serial(const SimContext& ctx, const ReplicationTask& task,
                                                 std::uint64_t reps);

struct Summary {
    std::uint64_t reps = 0;
    std::uint64_t censored = 0;
    std::optional<double> mean;
    /// Needs at least two contributing trials.
    std::optional<double> stderr_;
};

/// Mean stopping time; censored trials contribute horizon_cap (a lower bound).
Summary summarize_mtfa(std::span<const TrialRecord> records);
/// Mean delay over trials that stopped; censored trials are only counted.
Summary summarize_delay(std::span<const TrialRecord> records);

enum class Metric { Mtfa, Delay };
std::string metric_name(Metric metric);

struct PolicySetting {
    std::string label;
    PolicySpec spec;
};

/// One row of the sweep CSV.
struct SweepRow {
    double gamma = 0.0;
    double b = 0.0;
    std::string policy;
    std::uint64_t w = 0;
    std::uint64_t q = 0;
    std::optional<std::uint64_t> nu;
    std::uint64_t reps = 0;
    std::uint64_t censored = 0;
    std::optional<double> mean;
    std::optional<double> stderr_;
    Metric metric = Metric::Delay;
    std::string error;
};

/// Mean time to false alarm at b = log(gamma). Requires reps >= 100.
SweepRow estimate_mtfa(const SimContext& ctx, const PolicySetting& setting, ParamId true_theta, double gamma,
                       std::uint64_t reps, std::uint64_t seed_base, int workers,
                       std::uint64_t horizon_cap = 10'000'000);

struct WorstCaseOptions {
    bool enabled = false;
    /// Exhaustive enumeration of |A|^w assignments is allowed up to this size.
    std::uint64_t enumeration_budget = 4096;
    /// When > 0, evaluates this many random assignments instead.
    std::uint64_t sampled_assignments = 0;
};

class WorstCaseBudgetError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct DelayEstimate {
    SweepRow row;
    /// Worst-case mode: the initial actions attaining the reported maximum.
    std::vector<ActionId> worst_initial_actions;
    std::uint64_t assignments_evaluated = 1;
};

/// Mean detection delay with the change at nu. In worst-case mode the mean is
/// computed for each fixed assignment of the first w actions and the
/// maximum is reported.
DelayEstimate estimate_delay(const SimContext& ctx, const PolicySetting& setting, ParamId true_theta, double gamma,
                             std::uint64_t nu, std::uint64_t reps, std::uint64_t seed_base, int workers,
                             const WorstCaseOptions& worst_case = {}, std::uint64_t horizon_cap = 10'000'000);

struct SweepConfig {
    ParamId true_theta{};
    std::vector<double> gammas;
    std::vector<PolicySetting> policies;
    std::uint64_t reps = 1000;
    /// nullopt runs the no-change scenario and reports MTFA.
    std::optional<std::uint64_t> nu = 1;
    std::uint64_t seed_base = 0;
    int workers = 1;
    std::uint64_t horizon_cap = 10'000'000;
    /// Adds one "asymptote" row per gamma holding log(gamma) / I^theta.
    bool include_asymptote = true;
};

/// Cartesian product gammas x policies. All rows share seed_base. A row that
/// throws is recorded with its error message and the sweep continues.
std::vector<SweepRow> sweep(const SimContext& ctx, const SweepConfig& config,
                            const std::function<void(const SweepRow&)>& on_row = {});

inline constexpr const char* kSweepCsvHeader = "gamma,b,policy,w,q,nu,reps,censored,mean_stat,stderr,metric";

/// Writes `# ` prefixed comment lines, the header and one line per row.
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows, std::span<const std::string> comments = {});

/// One JSON object per trial.
void write_trials_jsonl(std::ostream& out, std::span<const TrialRecord> records, const Model& model,
                        const std::string& label, double gamma);

/// Mean of R_n - n at n = w + steps under the no-change regime, for the
/// martingale check E[R_n - n] = 1 - w.
struct MartingaleCheck {
    double mean = 0.0;
    double stderr_ = 0.0;
    double expected = 0.0;
    std::uint64_t reps = 0;
    bool passed = false;
};
MartingaleCheck martingale_check(const SimContext& ctx, const PolicySpec& policy, ParamId true_theta,
                                 std::uint64_t steps, std::uint64_t reps, std::uint64_t seed_base, int workers,
                                 double tolerance_se = 3.0);

}  // namespace qcd
