#include "qcd/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qcd {

namespace {

std::string fmt_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

Summary summarize(const std::vector<double>& values, std::uint64_t reps, std::uint64_t censored) {
    Summary s;
    s.reps = reps;
    s.censored = censored;
    if (values.empty()) return s;
    // Two-pass mean/variance in index order keeps the result independent of
    // how replications were scheduled.
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    s.mean = mean;
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double var = ss / static_cast<double>(values.size() - 1);
        s.stderr_ = std::sqrt(var / static_cast<double>(values.size()));
    }
    return s;
}

}  // namespace

DetectorSpec make_detector(const PolicySpec& policy, double threshold_b) {
    DetectorSpec spec;
    spec.threshold_b = threshold_b;
    spec.w = policy_window(policy);
    spec.kind = std::holds_alternative<GreedyPolicy>(policy) ? DetectorSpec::Kind::GreedySingleChannel
                                                              : DetectorSpec::Kind::WindowedCusum;
    return spec;
}

TrialRecord run_episode(const SimContext& ctx, const Scenario& scenario, const PolicySpec& policy_spec,
                        const DetectorSpec& detector, std::uint64_t seed, const EpisodeOptions& options) {
    validate_detector(detector);
    const bool greedy = std::holds_alternative<GreedyPolicy>(policy_spec);
    if (greedy != (detector.kind == DetectorSpec::Kind::GreedySingleChannel))
        throw SimError("greedy policy and greedy detector must be paired");
    if (detector.w < policy_window(policy_spec))
        throw SimError("detector window must not be shorter than the policy window");
    if (scenario.change_point && *scenario.change_point == 0) throw SimError("change point must be >= 1");

    Rng rng(seed);
    SensingPolicy policy(policy_spec, ctx.model, ctx.tables);
    if (!options.initial_actions.empty()) policy.force_initial_actions(options.initial_actions);

    DetectorState state;
    TrialRecord record;
    record.seed = seed;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    for (std::uint64_t n = 1; n <= scenario.horizon_cap; ++n) {
        const ActionId a = policy.next_action(n, rng);
        const Observation x = ctx.model.sample(a, scenario.regime(n), rng);
        if (policy.explored()) ++record.exploration_count;

        double llr = nan;
        bool stop = false;
        if (greedy) {
            policy.update(n, a, x);
            state.W = policy.greedy_sum();
            stop = should_stop(detector, state, n);
        } else {
            const auto estimate = policy.current_estimate();
            if (n > detector.w && estimate) {
                llr = ctx.model.log_likelihood_ratio(a, *estimate, x);
                cusum_step(state, llr);
                sr_step(state, std::exp(llr));
                if (options.check_dominance && !(state.R >= std::exp(state.W))) ++record.dominance_violations;
                stop = should_stop(detector, state, n);
            }
            policy.update(n, a, x);
        }

        if (options.trace) {
            StepTrace step;
            step.n = n;
            step.action = a;
            step.obs = x;
            step.estimate = policy.current_estimate();
            step.explored = policy.explored();
            step.llr = llr;
            step.W = state.W;
            step.R = state.R;
            options.trace(step);
        }

        if (stop && options.stopping_enabled) {
            record.stop_time = n;
            record.theta_hat_at_stop = policy.current_estimate();
            record.overshoot = state.W - detector.threshold_b;
            if (detector.kind == DetectorSpec::Kind::ShiryaevRoberts)
                record.overshoot = std::log(state.R) - detector.threshold_b;
            break;
        }
        if (n == scenario.horizon_cap) {
            record.stop_time = n;
            record.censored = true;
            record.overshoot = nan;
            record.theta_hat_at_stop = policy.current_estimate();
        }
    }

    record.final_statistic = state.W;
    record.final_sr = state.R;
    record.sr_saturated = state.sr_saturated;
    if (scenario.change_point && !record.censored) {
        const std::uint64_t nu = *scenario.change_point;
        record.delay = record.stop_time + 1 >= nu ? record.stop_time + 1 - nu : 0;
    }
    return record;
}

namespace {

TrialRecord run_one(const SimContext& ctx, const ReplicationTask& task, std::uint64_t i) {
    EpisodeOptions options;
    options.initial_actions = task.initial_actions;
    options.stopping_enabled = task.stopping_enabled;
    options.check_dominance = task.check_dominance;
    return run_episode(ctx, task.scenario, task.policy, task.detector, derive_trial_seed(task.seed_base, i), options);
}

}  // namespace

std::vector<TrialRecord> run_replications_serial(const SimContext& ctx, const ReplicationTask& task,
                                                 std::uint64_t reps) {
    std::vector<TrialRecord> out;
    out.reserve(reps);
    for (std::uint64_t i = 0; i < reps; ++i) out.push_back(run_one(ctx, task, i));
    return out;
}

std::vector<TrialRecord> run_replications(const SimContext& ctx, const ReplicationTask& task, std::uint64_t reps,
                                          int workers) {
    if (workers <= 1) return run_replications_serial(ctx, task, reps);
    std::vector<TrialRecord> out(reps);
    std::vector<std::exception_ptr> errors(reps);
    const auto count = static_cast<std::int64_t>(reps);
#pragma omp parallel for schedule(dynamic, 8) num_threads(workers)
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            out[i] = run_one(ctx, task, static_cast<std::uint64_t>(i));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    // lowest failing index wins, as in the serial kernel
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
    return out;
}

Summary summarize_mtfa(std::span<const TrialRecord> records) {
    std::vector<double> values;
    values.reserve(records.size());
    std::uint64_t censored = 0;
    for (const auto& r : records) {
        values.push_back(static_cast<double>(r.stop_time));
        if (r.censored) ++censored;
    }
    return summarize(values, records.size(), censored);
}

Summary summarize_delay(std::span<const TrialRecord> records) {
    std::vector<double> values;
    values.reserve(records.size());
    std::uint64_t censored = 0;
    for (const auto& r : records) {
        if (r.censored) {
            ++censored;
            continue;
        }
        if (r.delay) values.push_back(static_cast<double>(*r.delay));
    }
    return summarize(values, records.size(), censored);
}

std::string metric_name(Metric metric) { return metric == Metric::Mtfa ? "mtfa" : "delay"; }

namespace {

SweepRow make_row(const PolicySetting& setting, double gamma, std::optional<std::uint64_t> nu, std::uint64_t reps) {
    SweepRow row;
    row.gamma = gamma;
    row.b = threshold_for_mtfa(gamma);
    row.policy = setting.label;
    row.w = policy_window(setting.spec);
    row.q = policy_budget(setting.spec);
    row.nu = nu;
    row.reps = reps;
    row.metric = nu ? Metric::Delay : Metric::Mtfa;
    return row;
}

void fill(SweepRow& row, const Summary& s) {
    row.censored = s.censored;
    row.mean = s.mean;
    row.stderr_ = s.stderr_;
}

}  // namespace

SweepRow estimate_mtfa(const SimContext& ctx, const PolicySetting& setting, ParamId true_theta, double gamma,
                       std::uint64_t reps, std::uint64_t seed_base, int workers, std::uint64_t horizon_cap) {
    if (reps < 100) throw std::invalid_argument("estimate_mtfa needs at least 100 replications");
    SweepRow row = make_row(setting, gamma, std::nullopt, reps);
    ReplicationTask task{Scenario{true_theta, std::nullopt, horizon_cap}, setting.spec,
                         make_detector(setting.spec, row.b), seed_base, {}};
    const auto records = run_replications(ctx, task, reps, workers);
    fill(row, summarize_mtfa(records));
    return row;
}

DelayEstimate estimate_delay(const SimContext& ctx, const PolicySetting& setting, ParamId true_theta, double gamma,
                             std::uint64_t nu, std::uint64_t reps, std::uint64_t seed_base, int workers,
                             const WorstCaseOptions& worst_case, std::uint64_t horizon_cap) {
    if (nu == 0) throw std::invalid_argument("change point must be >= 1");
    DelayEstimate result;
    result.row = make_row(setting, gamma, nu, reps);
    ReplicationTask task{Scenario{true_theta, nu, horizon_cap}, setting.spec,
                         make_detector(setting.spec, result.row.b), seed_base, {}};

    const std::uint64_t w = policy_window(setting.spec);
    const bool windowed =
        std::holds_alternative<WccPolicy>(setting.spec) || std::holds_alternative<UniformPolicy>(setting.spec);
    if (!worst_case.enabled || !windowed) {
        fill(result.row, summarize_delay(run_replications(ctx, task, reps, workers)));
        return result;
    }

    // Forced actions for steps nu..nu+w-1 only make sense with nu = 1 here.
    if (nu != 1) throw std::invalid_argument("worst-case initial-action mode requires nu = 1");
    const auto k = static_cast<std::uint64_t>(ctx.model.num_actions());
    std::uint64_t total = 1;
    bool overflow = false;
    for (std::uint64_t i = 0; i < w && !overflow; ++i) {
        if (total > worst_case.enumeration_budget / k + 1) overflow = true;
        total *= k;
    }
    overflow = overflow || total > worst_case.enumeration_budget;

    std::vector<std::vector<ActionId>> assignments;
    if (worst_case.sampled_assignments > 0) {
        Rng rng(splitmix64(seed_base ^ 0x5deece66dULL));
        for (std::uint64_t j = 0; j < worst_case.sampled_assignments; ++j) {
            std::vector<ActionId> actions(w);
            for (auto& a : actions) a = ActionId{rng.uniform_index(static_cast<std::uint32_t>(k))};
            assignments.push_back(std::move(actions));
        }
    } else if (overflow) {
        throw WorstCaseBudgetError("enumerating all |A|^w initial action assignments exceeds the budget of " +
                                   std::to_string(worst_case.enumeration_budget) +
                                   "; pass --initial-action-samples N to evaluate a sampled subset");
    } else {
        for (std::uint64_t code = 0; code < total; ++code) {
            std::vector<ActionId> actions(w);
            std::uint64_t c = code;
            for (auto& a : actions) {
                a = ActionId{static_cast<std::uint32_t>(c % k)};
                c /= k;
            }
            assignments.push_back(std::move(actions));
        }
    }

    std::optional<Summary> worst;
    for (auto& actions : assignments) {
        task.initial_actions = actions;
        const auto summary = summarize_delay(run_replications(ctx, task, reps, workers));
        if (summary.mean && (!worst || !worst->mean || *summary.mean > *worst->mean)) {
            worst = summary;
            result.worst_initial_actions = actions;
        }
    }
    result.assignments_evaluated = assignments.size();
    if (worst) fill(result.row, *worst);
    return result;
}

std::vector<SweepRow> sweep(const SimContext& ctx, const SweepConfig& config,
                            const std::function<void(const SweepRow&)>& on_row) {
    std::vector<SweepRow> rows;
    const std::optional<std::uint64_t> nu = config.nu;
    for (double gamma : config.gammas) {
        for (const auto& setting : config.policies) {
            SweepRow row;
            try {
                row = make_row(setting, gamma, nu, config.reps);
                validate_policy(setting.spec, ctx.model);
                ReplicationTask task{Scenario{config.true_theta, nu, config.horizon_cap}, setting.spec,
                                     make_detector(setting.spec, row.b), config.seed_base, {}};
                const auto records = run_replications(ctx, task, config.reps, config.workers);
                fill(row, nu ? summarize_delay(records) : summarize_mtfa(records));
            } catch (const std::exception& e) {
                row.policy = setting.label;
                row.gamma = gamma;
                row.metric = nu ? Metric::Delay : Metric::Mtfa;
                row.nu = nu;
                row.reps = config.reps;
                row.mean.reset();
                row.stderr_.reset();
                row.error = e.what();
            }
            if (on_row) on_row(row);
            rows.push_back(std::move(row));
        }
        if (config.include_asymptote && nu && gamma > 1.0) {
            SweepRow row;
            row.gamma = gamma;
            row.b = std::log(gamma);
            row.policy = "asymptote";
            row.nu = nu;
            row.metric = Metric::Delay;
            row.mean = row.b / ctx.tables.kl_max(config.true_theta);
            if (on_row) on_row(row);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows, std::span<const std::string> comments) {
    for (const auto& c : comments) out << "# " << c << '\n';
    out << kSweepCsvHeader << '\n';
    for (const auto& r : rows) {
        out << fmt_double(r.gamma) << ',' << fmt_double(r.b) << ',' << r.policy << ',' << r.w << ',' << r.q << ','
            << (r.nu ? std::to_string(*r.nu) : std::string("inf")) << ',' << r.reps << ',' << r.censored << ','
            << (r.mean ? fmt_double(*r.mean) : std::string("NA")) << ','
            << (r.stderr_ ? fmt_double(*r.stderr_) : std::string("NA")) << ',' << metric_name(r.metric) << '\n';
    }
}

void write_trials_jsonl(std::ostream& out, std::span<const TrialRecord> records, const Model& model,
                        const std::string& label, double gamma) {
    for (const auto& r : records) {
        out << "{\"policy\":\"" << label << "\",\"gamma\":" << fmt_double(gamma) << ",\"seed\":" << r.seed
            << ",\"stop_time\":" << r.stop_time << ",\"censored\":" << (r.censored ? "true" : "false")
            << ",\"delay\":" << (r.delay ? std::to_string(*r.delay) : std::string("null"))
            << ",\"theta_hat_at_stop\":"
            << (r.theta_hat_at_stop ? "\"" + model.param_name(*r.theta_hat_at_stop) + "\"" : std::string("null"))
            << ",\"exploration_count\":" << r.exploration_count << ",\"overshoot\":"
            << (std::isfinite(r.overshoot) ? fmt_double(r.overshoot) : std::string("null")) << "}\n";
    }
}

MartingaleCheck martingale_check(const SimContext& ctx, const PolicySpec& policy, ParamId true_theta,
                                 std::uint64_t steps, std::uint64_t reps, std::uint64_t seed_base, int workers,
                                 double tolerance_se) {
    const std::uint64_t w = policy_window(policy);
    const std::uint64_t horizon = w + steps;
    ReplicationTask task{Scenario{true_theta, std::nullopt, horizon}, policy, make_detector(policy, 1.0), seed_base,
                         {}};
    task.stopping_enabled = false;
    const auto records = run_replications(ctx, task, reps, workers);
    std::vector<double> values;
    values.reserve(records.size());
    for (const auto& r : records) values.push_back(r.final_sr - static_cast<double>(horizon));
    const auto s = summarize(values, reps, 0);
    MartingaleCheck check;
    check.reps = reps;
    check.expected = 1.0 - static_cast<double>(w);
    check.mean = s.mean.value_or(std::numeric_limits<double>::quiet_NaN());
    check.stderr_ = s.stderr_.value_or(std::numeric_limits<double>::quiet_NaN());
    check.passed = std::abs(check.mean - check.expected) <= tolerance_se * check.stderr_;
    return check;
}

}  // namespace qcd
