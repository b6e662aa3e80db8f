// qcd-sense: quickest change detection with controlled sensing.
//
//   qcd-sense kl-table --config cfg.json
//   qcd-sense mtfa     --config cfg.json [--reps N] [--seed S] [--workers N]
//   qcd-sense delay    --config cfg.json [--worst-case-initial-actions [--initial-action-samples N]]
//   qcd-sense sweep    --config cfg.json
//   qcd-sense verify   --config cfg.json

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qcd/analysis.hpp"
#include "qcd/config.hpp"
#include "qcd/sim.hpp"
#include "qcd/tables.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitValidation = 2;
constexpr int kExitCheck = 3;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> reps;
    std::optional<int> workers;
    std::optional<std::string> out;
    bool worst_case = false;
    std::uint64_t initial_action_samples = 0;
};

/// Everything a subcommand needs once the config is loaded.
struct Session {
    qcd::RunConfig cfg;
    std::unique_ptr<qcd::MultichannelGaussianModel> model;
    std::unique_ptr<qcd::DivergenceTables> tables;
    qcd::ParamId theta{};
    int workers = 1;
    fs::path out_dir;

    qcd::SimContext context() const { return {*model, *tables}; }
};

Session open_session(const Options& opt) {
    Session s;
    s.cfg = qcd::load_config(opt.config);
    if (opt.seed) s.cfg.sim.seed_base = *opt.seed;
    if (opt.reps) {
        if (*opt.reps < 1) throw qcd::ValidationError("--reps must be at least 1");
        s.cfg.sim.reps = *opt.reps;
    }
    if (opt.out) s.cfg.output.dir = *opt.out;
    // --workers beats the environment, which beats the config file.
    s.workers = opt.workers ? std::max(1, *opt.workers) : qcd::resolve_workers(s.cfg.sim.workers);
    s.model = qcd::build_model(s.cfg.model);
    s.tables = std::make_unique<qcd::DivergenceTables>(*s.model);
    s.theta = qcd::resolve_true_theta(s.cfg.model, *s.model);
    const auto report = qcd::validate_assumptions(*s.model, *s.tables);
    if (!report.passed) {
        std::string msg = "model assumptions fail:";
        for (const auto& f : report.failures) msg += "\n  " + f;
        throw qcd::ValidationError(msg);
    }
    s.out_dir = s.cfg.output.dir;
    return s;
}

std::ofstream open_output(const Session& s, const std::string& name) {
    std::error_code ec;
    fs::create_directories(s.out_dir, ec);
    if (ec) throw qcd::ConfigError("cannot create output directory '" + s.out_dir.string() + "': " + ec.message());
    const auto path = s.out_dir / name;
    std::ofstream out(path);
    if (!out) throw qcd::ConfigError("cannot write '" + path.string() + "'");
    return out;
}

std::vector<std::string> header_comments(const Session& s, const std::string& command) {
    std::vector<std::string> lines{"qcd-sense " + command};
    for (auto& line : qcd::describe_config(s.cfg)) lines.push_back(std::move(line));
    lines.push_back("true_theta.I = " + std::to_string(s.tables->kl_max(s.theta)));
    return lines;
}

std::vector<qcd::PolicySetting> sweep_settings(const Session& s) {
    std::vector<qcd::PolicySetting> out;
    if (s.cfg.sweep_policies.empty()) {
        out.push_back(qcd::build_policy(s.cfg.policy, *s.model, s.theta));
    } else {
        for (const auto& p : s.cfg.sweep_policies) out.push_back(qcd::build_policy(p, *s.model, s.theta));
    }
    return out;
}

std::vector<double> require_gammas(const Session& s) {
    if (s.cfg.detector.gammas.empty()) throw qcd::ValidationError("detector.gamma (or detector.b) is empty");
    return s.cfg.detector.gammas;
}

void print_rows(const std::vector<qcd::SweepRow>& rows) {
    std::printf("%-14s %-8s %-22s %6s %8s %14s %12s %s\n", "gamma", "b", "policy", "w", "censored", "mean",
                "stderr", "metric");
    for (const auto& r : rows) {
        std::printf("%-14.6g %-8.4g %-22s %6llu %8llu ", r.gamma, r.b, r.policy.c_str(),
                    static_cast<unsigned long long>(r.w), static_cast<unsigned long long>(r.censored));
        if (r.mean)
            std::printf("%14.6g ", *r.mean);
        else
            std::printf("%14s ", "NA");
        if (r.stderr_)
            std::printf("%12.4g ", *r.stderr_);
        else
            std::printf("%12s ", "NA");
        std::printf("%s%s%s\n", qcd::metric_name(r.metric).c_str(), r.error.empty() ? "" : "  ERROR: ",
                    r.error.c_str());
    }
}

void dump_trials(const Session& s, const qcd::PolicySetting& setting, double gamma, std::optional<std::uint64_t> nu,
                 std::ostream& out) {
    const auto ctx = s.context();
    qcd::ReplicationTask task{qcd::Scenario{s.theta, nu, s.cfg.detector.horizon_cap}, setting.spec,
                              qcd::make_detector(setting.spec, qcd::threshold_for_mtfa(gamma)), s.cfg.sim.seed_base,
                              {}};
    const auto records = qcd::run_replications(ctx, task, s.cfg.sim.reps, s.workers);
    qcd::write_trials_jsonl(out, records, *s.model, setting.label, gamma);
}

int cmd_kl_table(const Options& opt) {
    const auto s = open_session(opt);
    qcd::write_tables_csv(std::cout, *s.model, *s.tables);
    auto out = open_output(s, "kl_table.csv");
    qcd::write_tables_csv(out, *s.model, *s.tables);
    std::cout << "I^theta for true theta " << s.model->param_name(s.theta) << " = " << s.tables->kl_max(s.theta)
              << " at action " << s.model->action_name(s.tables->best_action(s.theta)) << "\n";
    return kExitOk;
}

int finish_rows(const Session& s, const std::vector<qcd::SweepRow>& rows, const std::string& command,
                const std::string& file) {
    print_rows(rows);
    auto out = open_output(s, file);
    const auto comments = header_comments(s, command);
    qcd::write_sweep_csv(out, rows, comments);
    std::cout << "wrote " << (s.out_dir / file).string() << "\n";
    for (const auto& r : rows)
        if (!r.error.empty()) return kExitCheck;
    return kExitOk;
}

int cmd_mtfa(const Options& opt) {
    const auto s = open_session(opt);
    if (s.cfg.sim.reps < 100) throw qcd::ValidationError("mtfa needs --reps >= 100");
    const auto setting = qcd::build_policy(s.cfg.policy, *s.model, s.theta);
    std::vector<qcd::SweepRow> rows;
    std::optional<std::ofstream> trials;
    if (s.cfg.output.trials_jsonl) trials = open_output(s, "mtfa_trials.jsonl");
    for (double gamma : require_gammas(s)) {
        rows.push_back(qcd::estimate_mtfa(s.context(), setting, s.theta, gamma, s.cfg.sim.reps, s.cfg.sim.seed_base,
                                          s.workers, s.cfg.detector.horizon_cap));
        if (trials) dump_trials(s, setting, gamma, std::nullopt, *trials);
    }
    return finish_rows(s, rows, "mtfa", "mtfa.csv");
}

int cmd_delay(const Options& opt) {
    const auto s = open_session(opt);
    if (!s.cfg.sim.nu) throw qcd::ValidationError("delay needs a finite sim.nu");
    const auto setting = qcd::build_policy(s.cfg.policy, *s.model, s.theta);
    qcd::WorstCaseOptions wc;
    wc.enabled = opt.worst_case;
    wc.enumeration_budget = s.cfg.sim.worst_case_budget;
    wc.sampled_assignments = opt.initial_action_samples;
    std::vector<qcd::SweepRow> rows;
    std::optional<std::ofstream> trials;
    if (s.cfg.output.trials_jsonl) trials = open_output(s, "delay_trials.jsonl");
    for (double gamma : require_gammas(s)) {
        const auto est = qcd::estimate_delay(s.context(), setting, s.theta, gamma, *s.cfg.sim.nu, s.cfg.sim.reps,
                                             s.cfg.sim.seed_base, s.workers, wc, s.cfg.detector.horizon_cap);
        rows.push_back(est.row);
        if (wc.enabled && !est.worst_initial_actions.empty()) {
            std::cout << "gamma " << gamma << ": worst of " << est.assignments_evaluated << " initial assignments:";
            for (auto a : est.worst_initial_actions) std::cout << ' ' << s.model->action_name(a);
            std::cout << "\n";
        }
        if (trials) dump_trials(s, setting, gamma, s.cfg.sim.nu, *trials);
    }
    return finish_rows(s, rows, wc.enabled ? "delay --worst-case-initial-actions" : "delay", "delay.csv");
}

int cmd_sweep(const Options& opt) {
    const auto s = open_session(opt);
    qcd::SweepConfig sc;
    sc.true_theta = s.theta;
    sc.gammas = s.cfg.detector.gammas;
    sc.policies = sweep_settings(s);
    sc.reps = s.cfg.sim.reps;
    sc.nu = s.cfg.sim.nu;
    sc.seed_base = s.cfg.sim.seed_base;
    sc.workers = s.workers;
    sc.horizon_cap = s.cfg.detector.horizon_cap;
    const auto rows = qcd::sweep(s.context(), sc, [](const qcd::SweepRow& r) {
        std::fprintf(stderr, "  gamma=%-10.4g %-22s %s\n", r.gamma, r.policy.c_str(),
                     r.error.empty() ? "done" : r.error.c_str());
    });
    return finish_rows(s, rows, "sweep", "sweep.csv");
}

int cmd_verify(const Options& opt) {
    const auto s = open_session(opt);
    bool ok = true;
    auto status = [&](const char* name, bool passed, const std::string& detail) {
        std::printf("[%s] %-24s %s\n", passed ? "PASS" : "FAIL", name, detail.c_str());
        ok = ok && passed;
    };

    const auto assumptions = qcd::validate_assumptions(*s.model, *s.tables);
    status("assumptions", assumptions.passed,
           std::to_string(assumptions.num_params) + " parameters, detectable and pairwise separable");

    const auto setting = qcd::build_policy(s.cfg.policy, *s.model, s.theta);
    std::uint64_t w = qcd::policy_window(setting.spec);
    std::uint64_t q = qcd::policy_budget(setting.spec);
    if (const auto* wcc = std::get_if<qcd::WccPolicy>(&setting.spec)) {
        const std::uint64_t horizon = 100000;
        status("schedule", qcd::validate_schedule(wcc->schedule, horizon),
               "w=" + std::to_string(w) + " q=" + std::to_string(q) + " to horizon " + std::to_string(horizon));
    }

    if (w >= 1 && !std::holds_alternative<qcd::GreedyPolicy>(setting.spec)) {
        const auto mc = qcd::martingale_check(s.context(), setting.spec, s.theta, s.cfg.sim.martingale_steps,
                                              s.cfg.sim.martingale_reps, s.cfg.sim.seed_base, s.workers);
        char detail[160];
        std::snprintf(detail, sizeof detail, "E[R_n - n] = %.4f +/- %.4f (expected %.0f, %llu reps)", mc.mean,
                      mc.stderr_, mc.expected, static_cast<unsigned long long>(mc.reps));
        status("martingale", mc.passed, detail);
    }

    const auto gammas = s.cfg.detector.gammas;
    const auto report = qcd::build_theory_report(*s.model, *s.tables, s.theta, w, q == 0 ? 1 : q, gammas);
    std::ostringstream text;
    qcd::print_theory_report(text, report);
    std::cout << text.str();
    auto out = open_output(s, "theory.json");
    out << qcd::theory_report_json(report) << "\n";
    std::cout << "wrote " << (s.out_dir / "theory.json").string() << "\n";
    return ok ? kExitOk : kExitCheck;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quickest change detection with controlled sensing"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "JSON run configuration")->required();
        sub->add_option("--seed", opt.seed, "seed_base override");
        sub->add_option("--reps", opt.reps, "replications per setting");
        sub->add_option("--workers", opt.workers, "worker threads (overrides QCD_SENSE_WORKERS)");
        sub->add_option("--out", opt.out, "output directory");
    };
    auto* kl = app.add_subcommand("kl-table", "print and write the I_a^theta table");
    auto* mtfa = app.add_subcommand("mtfa", "Monte Carlo mean time to false alarm");
    auto* delay = app.add_subcommand("delay", "Monte Carlo detection delay");
    auto* sweep = app.add_subcommand("sweep", "gamma x policy delay sweep");
    auto* verify = app.add_subcommand("verify", "assumption, schedule and martingale checks plus theory report");
    for (auto* sub : {kl, mtfa, delay, sweep, verify}) add_common(sub);
    delay->add_flag("--worst-case-initial-actions", opt.worst_case,
                    "report the max mean delay over fixed assignments of the first w actions");
    delay->add_option("--initial-action-samples", opt.initial_action_samples,
                      "evaluate this many random initial assignments instead of enumerating all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*kl) return cmd_kl_table(opt);
        if (*mtfa) return cmd_mtfa(opt);
        if (*delay) return cmd_delay(opt);
        if (*sweep) return cmd_sweep(opt);
        if (*verify) return cmd_verify(opt);
    } catch (const qcd::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const qcd::WorstCaseBudgetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const qcd::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const qcd::ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheck;
    }
    return kExitOk;
}
