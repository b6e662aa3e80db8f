#include "qcd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace qcd {

double asymptotic_lower_bound(double gamma, double I_theta) {
    if (!(gamma > 1.0)) throw std::domain_error("asymptotic_lower_bound: gamma must exceed 1");
    if (!(I_theta > 0.0)) throw std::domain_error("asymptotic_lower_bound: I_theta must be positive");
    return std::log(gamma) / I_theta;
}

MleErrorBound mle_error_bound(std::size_t n_params, double rho, std::uint64_t q) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::domain_error("mle_error_bound: need 0 < rho < 1");
    if (q < 1) throw std::domain_error("mle_error_bound: need q >= 1");
    MleErrorBound out;
    out.value = static_cast<double>(n_params - 1) * std::pow(rho, static_cast<double>(q));
    out.vacuous = out.value >= 1.0;
    return out;
}

namespace {

double exploit_bound(double I, double J, double rho, std::uint64_t q) {
    return I - J * std::pow(rho, static_cast<double>(q));
}

double explore_bound(const DivergenceTables& tables, ParamId theta, const std::vector<double>& K, double rho,
                     std::uint64_t q) {
    const double rq = std::pow(rho, static_cast<double>(q));
    double sum = 0.0;
    for (std::uint32_t a = 0; a < tables.num_actions(); ++a) sum += tables.kl(ActionId{a}, theta) - K[a] * rq;
    return sum / static_cast<double>(tables.num_actions());
}

}  // namespace

DriftBounds drift_bounds(const DivergenceTables& tables, ParamId theta, std::uint64_t q) {
    const std::size_t params = tables.num_params();
    const std::size_t actions = tables.num_actions();
    const double I = tables.kl_max(theta);
    const double rho = tables.rho();
    const double others = static_cast<double>(params - 1);

    DriftBounds out;
    out.K.assign(actions, 0.0);
    if (params > 1) {
        double min_exploit = std::numeric_limits<double>::infinity();
        for (std::uint32_t u = 0; u < params; ++u) {
            if (u == theta.index) continue;
            const ParamId other{u};
            min_exploit = std::min(min_exploit, tables.cross_drift(tables.best_action(other), theta, other));
        }
        out.J = others * (I - min_exploit);
        for (std::uint32_t a = 0; a < actions; ++a) {
            double min_b = std::numeric_limits<double>::infinity();
            for (std::uint32_t u = 0; u < params; ++u)
                if (u != theta.index) min_b = std::min(min_b, tables.cross_drift(ActionId{a}, theta, ParamId{u}));
            out.K[a] = others * (tables.kl(ActionId{a}, theta) - min_b);
        }
    }
    out.exploit = exploit_bound(I, out.J, rho, q);
    out.explore = explore_bound(tables, theta, out.K, rho, q);

    auto positive = [&](std::uint64_t qq) {
        return exploit_bound(I, out.J, rho, qq) > 0.0 && explore_bound(tables, theta, out.K, rho, qq) > 0.0;
    };
    // Solve rho^q < I/J (and the explore analogue) in closed form, then
    // settle rounding by direct evaluation.
    std::uint64_t guess = 1;
    if (rho > 0.0 && rho < 1.0) {
        double mean_I = 0.0;
        double mean_K = 0.0;
        for (std::uint32_t a = 0; a < actions; ++a) {
            mean_I += tables.kl(ActionId{a}, theta);
            mean_K += out.K[a];
        }
        double needed = 1.0;
        if (out.J > 0.0 && I > 0.0) needed = std::max(needed, std::log(I / out.J) / std::log(rho));
        if (mean_K > 0.0 && mean_I > 0.0) needed = std::max(needed, std::log(mean_I / mean_K) / std::log(rho));
        guess = static_cast<std::uint64_t>(std::max(1.0, std::floor(needed)));
    }
    const std::uint64_t limit = guess + 100000;
    while (!positive(guess) && guess < limit) ++guess;
    if (!positive(guess)) {
        out.min_positive_q = 0;
        return out;
    }
    while (guess > 1 && positive(guess - 1)) --guess;
    out.min_positive_q = guess;
    return out;
}

double hitting_time_bound(double b, std::uint64_t w, std::uint64_t q, double mu_star, double mu_low, double mu,
                          double v) {
    if (!(b > 0.0)) throw std::domain_error("hitting_time_bound: b must be positive");
    if (!(mu_star > 0.0)) throw std::domain_error("hitting_time_bound: mu_star must be positive");
    if (!(mu_low > 0.0)) throw std::domain_error("hitting_time_bound: mu_low must be positive");
    if (q > 0 && q >= w) throw std::domain_error("hitting_time_bound: need q < w");
    const double frac = w == 0 ? 0.0 : static_cast<double>(q) / static_cast<double>(w);
    const double denom = mu_star * (1.0 - frac);
    if (!(denom > 0.0)) throw std::domain_error("hitting_time_bound: non-positive denominator");
    const double K = v / denom;
    const double C = std::max({K, std::sqrt(K), std::sqrt(K * mu)});
    const double wd = static_cast<double>(w);
    return (b + wd * mu + C * (1.0 + std::sqrt(b) + std::sqrt(wd))) / denom;
}

TheoryReport build_theory_report(const Model& model, const DivergenceTables& tables, ParamId theta,
                                 std::uint64_t w, std::uint64_t q, const std::vector<double>& gammas) {
    TheoryReport report;
    report.theta_name = model.param_name(theta);
    report.I_theta = tables.kl_max(theta);
    report.best_action = model.action_name(tables.best_action(theta));
    report.rho = tables.rho();
    report.second_moment = tables.second_moment();
    report.w = w;
    report.q = q;
    for (double g : gammas) report.lower_bounds.emplace_back(g, asymptotic_lower_bound(g, report.I_theta));
    if (report.rho > 0.0 && report.rho < 1.0) report.mle_error = mle_error_bound(tables.num_params(), report.rho, q);
    report.drift = drift_bounds(tables, theta, q);
    for (double g : gammas) {
        std::optional<double> bound;
        if (report.drift.exploit > 0.0 && report.drift.explore > 0.0 && q < w)
            bound = hitting_time_bound(std::log(g), w, q, report.drift.exploit, report.drift.explore, report.I_theta,
                                       report.second_moment);
        report.hitting_time.emplace_back(g, bound);
    }
    return report;
}

void print_theory_report(std::ostream& out, const TheoryReport& r) {
    char line[256];
    auto row = [&](const char* key, const std::string& value) {
        std::snprintf(line, sizeof line, "  %-34s %s\n", key, value.c_str());
        out << line;
    };
    auto num = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.8g", v);
        return std::string(buf);
    };
    out << "theory report for theta = " << r.theta_name << " (w = " << r.w << ", q = " << r.q << ")\n";
    row("I^theta", num(r.I_theta));
    row("a*(theta)", r.best_action);
    row("rho (max avg Bhattacharyya)", num(r.rho));
    row("second moment bound v", num(r.second_moment));
    row("MLE error bound (|Theta|-1) rho^q", num(r.mle_error.value) + (r.mle_error.vacuous ? "  [vacuous]" : ""));
    row("J^theta", num(r.drift.J));
    std::string ks;
    for (std::size_t a = 0; a < r.drift.K.size(); ++a) ks += (a ? " " : "") + num(r.drift.K[a]);
    row("K_a^theta", ks);
    row("drift bound, exploit", num(r.drift.exploit));
    row("drift bound, explore", num(r.drift.explore));
    row("smallest q with both bounds > 0", std::to_string(r.drift.min_positive_q));
    out << "  gamma          asymptote log(gamma)/I   hitting-time bound\n";
    for (std::size_t i = 0; i < r.lower_bounds.size(); ++i) {
        const auto& ht = r.hitting_time[i].second;
        std::snprintf(line, sizeof line, "  %-14.6g %-24.8g %s\n", r.lower_bounds[i].first, r.lower_bounds[i].second,
                      ht ? num(*ht).c_str() : "n/a");
        out << line;
    }
}

std::string theory_report_json(const TheoryReport& r) {
    nlohmann::ordered_json j;
    j["theta"] = r.theta_name;
    j["I_theta"] = r.I_theta;
    j["best_action"] = r.best_action;
    j["rho"] = r.rho;
    j["second_moment"] = r.second_moment;
    j["w"] = r.w;
    j["q"] = r.q;
    j["mle_error_bound"] = {{"value", r.mle_error.value}, {"vacuous", r.mle_error.vacuous}};
    j["drift"] = {{"J", r.drift.J},
                  {"K", r.drift.K},
                  {"exploit", r.drift.exploit},
                  {"explore", r.drift.explore},
                  {"min_positive_q", r.drift.min_positive_q}};
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.lower_bounds.size(); ++i) {
        nlohmann::ordered_json entry;
        entry["gamma"] = r.lower_bounds[i].first;
        entry["asymptote"] = r.lower_bounds[i].second;
        if (r.hitting_time[i].second)
            entry["hitting_time_bound"] = *r.hitting_time[i].second;
        else
            entry["hitting_time_bound"] = nullptr;
        rows.push_back(entry);
    }
    j["per_gamma"] = rows;
    return j.dump(2);
}

}  // namespace qcd
