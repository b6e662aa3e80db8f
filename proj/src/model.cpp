#include "qcd/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

namespace qcd {

Observation::Observation(std::initializer_list<double> values) : size_(values.size()) {
    if (values.size() > kMaxDim) throw ModelError("observation dimension exceeds Observation::kMaxDim");
    std::copy(values.begin(), values.end(), data_.begin());
}

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                    double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Adaptive Simpson over [lo, hi]. The interval is pre-split into panels so
// narrow peaks are not missed by the first coarse estimate.
double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12) {
    constexpr int kPanels = 64;
    const double width = (hi - lo) / kPanels;
    double total = 0.0;
    for (int i = 0; i < kPanels; ++i) {
        const double a = lo + i * width;
        const double b = a + width;
        const double fa = f(a);
        const double fb = f(b);
        const double fm = f(0.5 * (a + b));
        const double whole = width / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson_step(f, a, b, fa, fm, fb, whole, tol / kPanels, 40);
    }
    return total;
}

double require_finite(double value, const char* what) {
    if (!std::isfinite(value)) throw ModelError(std::string("non-finite ") + what);
    return value;
}

}  // namespace

void Model::check_action(ActionId a) const {
    if (a.index >= num_actions()) throw std::out_of_range("action id out of range");
}

void Model::check_param(ParamId theta) const {
    if (theta.index >= num_params()) throw std::out_of_range("parameter id out of range");
}

void Model::log_density_all(ActionId a, const Observation& x, std::span<double> out) const {
    for (std::uint32_t t = 0; t < out.size(); ++t) out[t] = log_density(a, Regime::post(ParamId{t}), x);
}

double Model::log_likelihood_ratio(ActionId a, ParamId theta, const Observation& x) const {
    return log_density(a, Regime::post(theta), x) - log_density(a, Regime::pre_change(), x);
}

std::string Model::action_name(ActionId a) const { return "a" + std::to_string(a.index); }
std::string Model::param_name(ParamId theta) const { return "theta" + std::to_string(theta.index); }

// Quadrature fallbacks. Each integrand guards the f == 0 tails, where
// 0 * log 0 would otherwise turn into NaN.

double Model::kl(ActionId a, ParamId theta) const {
    check_action(a);
    check_param(theta);
    if (obs_dim(a) != 1) throw ModelError("quadrature fallback requires scalar observations");
    const auto [lo, hi] = support();
    const double value = adaptive_simpson(
        [&](double x) {
            const Observation obs(x);
            const double lp = log_density(a, Regime::post(theta), obs);
            const double p = std::exp(lp);
            if (p == 0.0) return 0.0;
            return p * (lp - log_density(a, Regime::pre_change(), obs));
        },
        lo, hi);
    return require_finite(value, "KL divergence");
}

double Model::kl_between(ActionId a, ParamId theta, ParamId u) const {
    check_action(a);
    check_param(theta);
    check_param(u);
    if (theta == u) return 0.0;
    if (obs_dim(a) != 1) throw ModelError("quadrature fallback requires scalar observations");
    const auto [lo, hi] = support();
    const double value = adaptive_simpson(
        [&](double x) {
            const Observation obs(x);
            const double lp = log_density(a, Regime::post(theta), obs);
            const double p = std::exp(lp);
            if (p == 0.0) return 0.0;
            return p * (lp - log_density(a, Regime::post(u), obs));
        },
        lo, hi);
    return require_finite(value, "KL divergence");
}

double Model::cross_drift(ActionId a, ParamId theta, ParamId u) const {
    if (theta == u) return kl(a, theta);
    return require_finite(kl(a, theta) - kl_between(a, theta, u), "cross drift");
}

double Model::bhattacharyya(ActionId a, ParamId theta, ParamId u) const {
    check_action(a);
    check_param(theta);
    check_param(u);
    if (theta == u) throw std::domain_error("bhattacharyya: parameters must differ");
    if (obs_dim(a) != 1) throw ModelError("quadrature fallback requires scalar observations");
    const auto [lo, hi] = support();
    const double value = adaptive_simpson(
        [&](double x) {
            const Observation obs(x);
            return std::exp(0.5 * (log_density(a, Regime::post(theta), obs) + log_density(a, Regime::post(u), obs)));
        },
        lo, hi);
    return require_finite(value, "Bhattacharyya coefficient");
}

double Model::llr_second_moment(ActionId a, ParamId theta) const {
    check_action(a);
    check_param(theta);
    if (obs_dim(a) != 1) throw ModelError("quadrature fallback requires scalar observations");
    const auto [lo, hi] = support();
    const double value = adaptive_simpson(
        [&](double x) {
            const Observation obs(x);
            const double lp = log_density(a, Regime::post(theta), obs);
            const double p = std::exp(lp);
            if (p == 0.0) return 0.0;
            const double llr = lp - log_density(a, Regime::pre_change(), obs);
            return p * llr * llr;
        },
        lo, hi);
    return require_finite(value, "LLR second moment");
}

double bhattacharyya_avg(const Model& model, ParamId theta, ParamId other) {
    if (theta == other) throw std::domain_error("bhattacharyya_avg: parameters must differ");
    double sum = 0.0;
    for (std::uint32_t a = 0; a < model.num_actions(); ++a) sum += model.bhattacharyya(ActionId{a}, theta, other);
    return sum / static_cast<double>(model.num_actions());
}

double rho_max(const Model& model) {
    double best = 0.0;
    for (std::uint32_t t = 0; t < model.num_params(); ++t)
        for (std::uint32_t u = 0; u < model.num_params(); ++u)
            if (t != u) best = std::max(best, bhattacharyya_avg(model, ParamId{t}, ParamId{u}));
    return best;
}

double second_moment_bound(const Model& model) {
    double best = 0.0;
    for (std::uint32_t a = 0; a < model.num_actions(); ++a)
        for (std::uint32_t t = 0; t < model.num_params(); ++t)
            best = std::max(best, model.llr_second_moment(ActionId{a}, ParamId{t}));
    return require_finite(best, "second moment bound");
}

// ---------------------------------------------------------------------------

MultichannelGaussianModel::MultichannelGaussianModel(std::vector<double> mu,
                                                     std::vector<std::vector<std::uint32_t>> theta_sets)
    : mu_(std::move(mu)), theta_sets_(std::move(theta_sets)) {
    if (mu_.size() < 2) throw ModelError("multichannel model needs at least two channels");
    for (std::size_t k = 0; k < mu_.size(); ++k) {
        if (!std::isfinite(mu_[k])) throw ModelError("mu[" + std::to_string(k) + "] is not finite");
    }
    if (theta_sets_.empty()) throw ModelError("theta_sets must contain at least one set");
    member_.assign(theta_sets_.size() * mu_.size(), 0);
    for (std::size_t t = 0; t < theta_sets_.size(); ++t) {
        auto& set = theta_sets_[t];
        if (set.empty()) throw ModelError("theta_sets[" + std::to_string(t) + "] is empty");
        std::sort(set.begin(), set.end());
        if (std::adjacent_find(set.begin(), set.end()) != set.end())
            throw ModelError("theta_sets[" + std::to_string(t) + "] repeats a channel");
        for (auto k : set) {
            if (k >= mu_.size())
                throw ModelError("theta_sets[" + std::to_string(t) + "] names channel " + std::to_string(k + 1) +
                                 " but K = " + std::to_string(mu_.size()));
            member_[t * mu_.size() + k] = 1;
        }
        for (std::size_t s = 0; s < t; ++s) {
            if (theta_sets_[s] == set)
                throw ModelError("theta_sets[" + std::to_string(t) + "] duplicates theta_sets[" + std::to_string(s) +
                                 "]");
        }
    }
}

MultichannelGaussianModel MultichannelGaussianModel::with_all_subsets(std::vector<double> mu) {
    const std::size_t k = mu.size();
    if (k < 2 || k > 20) throw ModelError("all-subsets parameter space supports 2 <= K <= 20");
    std::vector<std::vector<std::uint32_t>> sets;
    sets.reserve((std::size_t{1} << k) - 1);
    for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
        std::vector<std::uint32_t> set;
        for (std::uint32_t c = 0; c < k; ++c)
            if (mask & (1u << c)) set.push_back(c);
        sets.push_back(std::move(set));
    }
    return MultichannelGaussianModel(std::move(mu), std::move(sets));
}

double MultichannelGaussianModel::log_density(ActionId a, Regime regime, const Observation& x) const {
    const double m = regime.is_pre_change() ? 0.0 : mean(a, regime.param());
    const double d = x.front() - m;
    return -kLogSqrt2Pi - 0.5 * d * d;
}

Observation MultichannelGaussianModel::sample(ActionId a, Regime regime, Rng& rng) const {
    const double m = regime.is_pre_change() ? 0.0 : mean(a, regime.param());
    return Observation(m + rng.normal());
}

void MultichannelGaussianModel::log_density_all(ActionId a, const Observation& x, std::span<double> out) const {
    const double d_in = x.front() - mu_[a.index];
    const double in_set = -kLogSqrt2Pi - 0.5 * d_in * d_in;
    const double out_of_set = -kLogSqrt2Pi - 0.5 * x.front() * x.front();
    const std::size_t k = mu_.size();
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = member_[t * k + a.index] ? in_set : out_of_set;
}

double MultichannelGaussianModel::log_likelihood_ratio(ActionId a, ParamId theta, const Observation& x) const {
    const double m = mean(a, theta);
    return m * x.front() - 0.5 * m * m;
}

double MultichannelGaussianModel::kl(ActionId a, ParamId theta) const {
    check_action(a);
    check_param(theta);
    const double m = mean(a, theta);
    return 0.5 * m * m;
}

double MultichannelGaussianModel::kl_between(ActionId a, ParamId theta, ParamId u) const {
    check_action(a);
    check_param(theta);
    check_param(u);
    const double d = mean(a, theta) - mean(a, u);
    return 0.5 * d * d;
}

double MultichannelGaussianModel::cross_drift(ActionId a, ParamId theta, ParamId u) const {
    check_action(a);
    check_param(theta);
    check_param(u);
    const double m = mean(a, theta);
    const double mu = mean(a, u);
    return mu * m - 0.5 * mu * mu;
}

double MultichannelGaussianModel::bhattacharyya(ActionId a, ParamId theta, ParamId u) const {
    check_action(a);
    check_param(theta);
    check_param(u);
    if (theta == u) throw std::domain_error("bhattacharyya: parameters must differ");
    const double d = mean(a, theta) - mean(a, u);
    return std::exp(-d * d / 8.0);
}

double MultichannelGaussianModel::llr_second_moment(ActionId a, ParamId theta) const {
    check_action(a);
    check_param(theta);
    // LLR = m X - m^2/2 with X ~ N(m, 1): mean m^2/2, variance m^2.
    const double m2 = mean(a, theta) * mean(a, theta);
    return m2 + 0.25 * m2 * m2;
}

std::string MultichannelGaussianModel::action_name(ActionId a) const { return std::to_string(a.index + 1); }

std::string MultichannelGaussianModel::param_name(ParamId theta) const {
    std::ostringstream out;
    out << '{';
    const auto& set = theta_sets_.at(theta.index);
    for (std::size_t i = 0; i < set.size(); ++i) out << (i ? "," : "") << set[i] + 1;
    out << '}';
    return out.str();
}

ParamId MultichannelGaussianModel::find_param(std::vector<std::uint32_t> channels) const {
    std::sort(channels.begin(), channels.end());
    for (std::size_t t = 0; t < theta_sets_.size(); ++t)
        if (theta_sets_[t] == channels) return ParamId{static_cast<std::uint32_t>(t)};
    throw ModelError("no parameter in theta_sets matches the requested channel set");
}

}  // namespace qcd
