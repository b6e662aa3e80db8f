// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qcd/analysis.hpp"
#include "qcd/estimator.hpp"
#include "qcd/model.hpp"
#include "qcd/policy.hpp"
#include "qcd/rng.hpp"
#include "qcd/schedule.hpp"
#include "qcd/sim.hpp"
#include "qcd/tables.hpp"
#include "support.hpp"

namespace {

using namespace qcd;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSeed = 20240101;

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %2d %-28s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int max_workers() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

PolicySpec wcc(std::uint64_t w, std::uint64_t q = 1) { return WccPolicy{ExplorationSchedule::block_tail(w, q)}; }

struct Setup {
    MultichannelGaussianModel model = testing::reduced_model();
    DivergenceTables tables{model};
    ParamId target = model.find_param({0, 1, 2});
    SimContext ctx() const { return {model, tables}; }
};

void divergences(const Setup& s) {
    const auto t0 = Clock::now();
    const testing::GaussianOracle oracle;
    // The oracle only sees channel means; distinct mean pairs are few.
    std::map<std::pair<double, double>, double> kl_cache, cross_cache, bc_cache;
    auto memo = [](auto& cache, double m, double u, auto&& f) {
        auto [it, fresh] = cache.try_emplace({m, u}, 0.0);
        if (fresh) it->second = f();
        return it->second;
    };
    double worst = 0.0;
    std::size_t compared = 0;
    for (std::uint32_t a = 0; a < s.model.num_actions(); ++a) {
        const ActionId act{a};
        for (std::uint32_t t = 0; t < s.model.num_params(); ++t) {
            const ParamId th{t};
            const double m = s.model.mean(act, th);
            const double kl = memo(kl_cache, m, 0.0, [&] { return oracle.kl(m, 0.0); });
            worst = std::max(worst, std::abs(kl - s.tables.kl(act, th)));
            ++compared;
            for (std::uint32_t u = 0; u < s.model.num_params(); ++u) {
                const ParamId other{u};
                const double mu = s.model.mean(act, other);
                const double cross = memo(cross_cache, m, mu, [&] { return oracle.cross(m, mu, 0.0); });
                const double bc = memo(bc_cache, m, mu, [&] { return oracle.bhattacharyya(m, mu); });
                worst = std::max(worst, std::abs(cross - s.tables.cross_drift(act, th, other)));
                worst = std::max(worst, std::abs(bc - s.tables.bhattacharyya(act, th, other)));
                compared += 2;
            }
        }
    }
    const double secs = seconds_since(t0);
    report(1, "divergence tables", worst <= 1e-6 && secs < 1.0,
           fmt("%zu entries, max |closed - quadrature| = %.2e (tol 1e-6), %.3f s (limit 1 s)", compared, worst, secs));
}

void martingale(const Setup& s) {
    const auto t0 = Clock::now();
    const auto mc = martingale_check(s.ctx(), wcc(10), s.target, 50, 100000, kSeed, max_workers(), 3.0);
    const double secs = seconds_since(t0);
    report(2, "SR martingale", mc.passed && secs < 60.0,
           fmt("E[R_n - n] at n = w + 50: %.3f +- %.3f, expected %.1f (3 s.e.), %llu reps, %.1f s", mc.mean,
               mc.stderr_, mc.expected, static_cast<unsigned long long>(mc.reps), secs));
}

void mtfa(const Setup& s) {
    const auto t0 = Clock::now();
    const PolicySetting setting{"wcc-w10", wcc(10)};
    bool ok = true;
    std::string detail;
    for (double gamma : {20.0, 50.0, 100.0}) {
        const SweepRow row = estimate_mtfa(s.ctx(), setting, s.target, gamma, 10000, kSeed, max_workers());
        const double lower = *row.mean - 2.326 * *row.stderr_;
        ok = ok && lower >= gamma;
        detail += fmt("gamma %g: %.1f +- %.1f (99%% lower %.1f); ", gamma, *row.mean, *row.stderr_, lower);
    }
    const double secs = seconds_since(t0);
    report(3, "false-alarm constraint", ok && secs < 300.0, detail + fmt("%.1f s", secs));
}

void dominance(const Setup& s) {
    ReplicationTask task{Scenario{s.target, 50}, wcc(10), make_detector(wcc(10), std::log(1e4)), kSeed};
    task.check_dominance = true;
    const auto records = run_replications(s.ctx(), task, 1000, max_workers());
    std::uint64_t violations = 0;
    std::uint64_t steps = 0;
    for (const auto& r : records) {
        violations += r.dominance_violations;
        steps += r.stop_time;
    }
    report(4, "SR dominates CuSum", violations == 0,
           fmt("%llu violations of R_n >= exp(W_n) over 1000 episodes (%llu steps)",
               static_cast<unsigned long long>(violations), static_cast<unsigned long long>(steps)));
}

SweepConfig fig1_config(const Setup& s, int workers) {
    SweepConfig cfg;
    cfg.true_theta = s.target;
    for (int e = 1; e <= 6; ++e) cfg.gammas.push_back(std::pow(10.0, e));
    cfg.policies = {{"wcc-w10", wcc(10)},
                    {"wcc-w20", wcc(20)},
                    {"greedy-random", GreedyPolicy{}},
                    {"greedy-start-3", GreedyPolicy{ActionId{2}}},
                    {"oracle", OraclePolicy{s.target}}};
    cfg.reps = 2000;
    cfg.nu = 1;
    cfg.seed_base = kSeed;
    cfg.workers = workers;
    return cfg;
}

const SweepRow& find_row(const std::vector<SweepRow>& rows, double gamma, const std::string& policy) {
    for (const auto& r : rows)
        if (r.policy == policy && std::abs(r.gamma - gamma) <= 1e-9 * gamma) return r;
    throw std::runtime_error("missing sweep row " + policy);
}

// a <= b within 2 pooled standard errors.
bool not_worse(const SweepRow& a, const SweepRow& b, std::string& detail) {
    const double pooled = std::sqrt(*a.stderr_ * *a.stderr_ + *b.stderr_ * *b.stderr_);
    const double z = (*a.mean - *b.mean) / pooled;
    detail += fmt("%s %.2f vs %s %.2f (z %+.2f); ", a.policy.c_str(), *a.mean, b.policy.c_str(), *b.mean, z);
    return *a.mean <= *b.mean + 2.0 * pooled;
}

double slope(const std::vector<SweepRow>& rows, const std::string& policy) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (double g : {1e4, 1e5, 1e6}) {
        xs.push_back(std::log(g));
        ys.push_back(*find_row(rows, g, policy).mean);
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= 3.0;
    my /= 3.0;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

std::vector<SweepRow> delay_sweep(const Setup& s) {
    const auto t0 = Clock::now();
    const auto rows = sweep(s.ctx(), fig1_config(s, max_workers()));
    const double secs = seconds_since(t0);
    std::string sub[3];
    bool ok[3] = {true, true, true};
    for (double g : {1e5, 1e6}) {
        sub[0] += fmt("gamma %g: ", g);
        ok[0] = not_worse(find_row(rows, g, "wcc-w20"), find_row(rows, g, "wcc-w10"), sub[0]) && ok[0];
        sub[1] += fmt("gamma %g: ", g);
        ok[1] = not_worse(find_row(rows, g, "wcc-w20"), find_row(rows, g, "greedy-random"), sub[1]) && ok[1];
        sub[2] += fmt("gamma %g: ", g);
        ok[2] = not_worse(find_row(rows, g, "greedy-start-3"), find_row(rows, g, "greedy-random"), sub[2]) && ok[2];
    }
    const bool timely = secs < 1800.0;
    report(5, "delay ordering (a) w20<=w10", ok[0] && timely, sub[0] + fmt("sweep %.1f s", secs));
    report(5, "delay ordering (b) w20<=grd", ok[1] && timely, sub[1]);
    report(5, "delay ordering (c) grd3<=grd", ok[2] && timely, sub[2]);
    return rows;
}

void slopes(const std::vector<SweepRow>& rows) {
    const double so = slope(rows, "oracle");
    const double sw = slope(rows, "wcc-w20");
    const bool ok = so >= 1.4 && so <= 2.6 && sw >= 1.4 && sw <= 3.6;
    report(6, "delay growth in log gamma", ok,
           fmt("oracle slope %.3f in [1.4, 2.6]; wcc-w20 slope %.3f in [1.4, 3.6]", so, sw));
}

void schedules() {
    const auto t0 = Clock::now();
    bool ok = true;
    int checked = 0;
    for (std::uint64_t w : {10, 20, 50})
        for (std::uint64_t q : {1, 2, 5}) {
            ok = validate_schedule(ExplorationSchedule::block_tail(w, q), 100000) && ok;
            ++checked;
        }
    const double secs = seconds_since(t0);
    report(7, "exploration schedules", ok && secs < 1.0,
           fmt("%d (w, q) pairs valid to horizon 1e5, %.3f s (limit 1 s)", checked, secs));
}

void mle_consistency(const Setup& s) {
    const std::uint64_t windows = 10000;
    std::vector<std::pair<double, double>> err;  // (p, se)
    std::string detail;
    for (std::uint64_t w : {10, 20, 40}) {
        std::uint64_t wrong = 0;
        for (std::uint64_t i = 0; i < windows; ++i) {
            Rng rng(derive_trial_seed(kSeed + w, i));
            SlidingWindow window(w, s.model.num_actions());
            for (std::uint64_t k = 0; k < w; ++k) {
                const ActionId a{rng.uniform_index(static_cast<std::uint32_t>(s.model.num_actions()))};
                window.push(a, s.model.sample(a, Regime::post(s.target), rng));
            }
            if (windowed_mle(window, s.model, s.tables, TieBreakRule::LargestWindowAverage).theta_hat != s.target)
                ++wrong;
        }
        const double p = static_cast<double>(wrong) / static_cast<double>(windows);
        err.emplace_back(p, std::sqrt(p * (1.0 - p) / static_cast<double>(windows)));
        detail += fmt("w %llu: %.4f +- %.4f; ", static_cast<unsigned long long>(w), p, err.back().second);
    }
    bool ok = true;
    for (std::size_t i = 1; i < err.size(); ++i) {
        const double pooled = std::hypot(err[i - 1].second, err[i].second);
        ok = ok && err[i - 1].first - err[i].first > 2.0 * pooled;
    }
    report(8, "MLE error decreases in w", ok, detail + "each drop > 2 pooled s.e.");
}

void hitting_time(const Setup& s) {
    const double mu = s.tables.kl_max(s.target);
    const double v = s.tables.second_moment();
    bool ok = true;
    std::string detail;
    for (double b : {5.0, 10.0, 20.0}) {
        const PolicySpec oracle = OraclePolicy{s.target, 1};
        const ReplicationTask task{Scenario{s.target, 1}, oracle, make_detector(oracle, b), kSeed};
        const auto records = run_replications(s.ctx(), task, 5000, max_workers());
        const Summary sm = summarize_mtfa(records);
        const double bound = hitting_time_bound(b, 1, 0, mu, mu, mu, v);
        ok = ok && sm.censored == 0 && *sm.mean <= bound;
        detail += fmt("b %g: E[T] %.2f <= %.2f; ", b, *sm.mean, bound);
    }
    report(9, "hitting-time bound", ok, detail + fmt("mu* = mu = %.3f, v = %.3f", mu, v));
}

std::string sweep_csv(const Setup& s, int workers) {
    const auto rows = sweep(s.ctx(), fig1_config(s, workers));
    std::ostringstream out;
    write_sweep_csv(out, rows);
    return out.str();
}

void determinism(const Setup& s) {
    const int many = std::max(4, max_workers());
    const std::string serial = sweep_csv(s, 1);
    const std::string parallel = sweep_csv(s, many);
    report(10, "determinism across workers", serial == parallel && !serial.empty(),
           fmt("sweep CSV with 1 and %d workers: %zu vs %zu bytes, %s", many, serial.size(), parallel.size(),
               serial == parallel ? "identical" : "different"));
}

}  // namespace

int main() {
    const Setup s;
    std::printf("acceptance: 10 channels, %zu parameters, true set {1,2,3}, seed %llu, %d worker(s)\n",
                s.model.num_params(), static_cast<unsigned long long>(kSeed), max_workers());
    try {
        divergences(s);
        martingale(s);
        mtfa(s);
        dominance(s);
        const auto rows = delay_sweep(s);
        slopes(rows);
        schedules();
        mle_consistency(s);
        hitting_time(s);
        determinism(s);
    } catch (const std::exception& e) {
        std::printf("[FAIL] aborted: %s\n", e.what());
        return 2;
    }
    std::printf("%d criterion line(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
