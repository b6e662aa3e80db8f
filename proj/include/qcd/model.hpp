#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qcd/rng.hpp"

namespace qcd {

/// Index into a model's action list.
struct ActionId {
    std::uint32_t index = 0;
    friend constexpr bool operator==(ActionId, ActionId) = default;
    friend constexpr auto operator<=>(ActionId, ActionId) = default;
};

/// Index into a model's post-change parameter list. The pre-change law is
/// not a ParamId; it is addressed through Regime::pre_change().
struct ParamId {
    std::uint32_t index = 0;
    friend constexpr bool operator==(ParamId, ParamId) = default;
    friend constexpr auto operator<=>(ParamId, ParamId) = default;
};

/// Which law generates an observation.
class Regime {
public:
    static constexpr Regime pre_change() noexcept { return Regime{}; }
    static constexpr Regime post(ParamId theta) noexcept { return Regime{theta}; }

    constexpr bool is_pre_change() const noexcept { return pre_; }
    constexpr ParamId param() const noexcept { return param_; }

private:
    constexpr Regime() noexcept = default;
    constexpr explicit Regime(ParamId theta) noexcept : pre_(false), param_(theta) {}

    bool pre_ = true;
    ParamId param_{};
};

/// Small real vector with inline storage. The multichannel model uses
/// dimension 1; kMaxDim bounds what a user model may declare.
class Observation {
public:
    static constexpr std::size_t kMaxDim = 8;

    Observation() = default;
    explicit Observation(double scalar) : size_(1) { data_[0] = scalar; }
    Observation(std::initializer_list<double> values);

    std::size_t size() const noexcept { return size_; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double front() const noexcept { return data_[0]; }
    std::span<const double> values() const noexcept { return {data_.data(), size_}; }

private:
    std::array<double, kMaxDim> data_{};
    std::size_t size_ = 0;
};

/// Thrown when a model produces non-finite divergences or densities, or is
/// otherwise configured inconsistently.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Statistical environment: a finite action set, a finite set of
/// post-change parameters, and per-action observation laws.
///
/// Subclasses provide densities and samplers. The divergence hooks default
/// to adaptive Simpson quadrature over `support()`, which is only valid for
/// scalar observations; models with closed forms should override them.
class Model {
public:
    virtual ~Model() = default;

    virtual std::size_t num_actions() const = 0;
    virtual std::size_t num_params() const = 0;
    virtual std::size_t obs_dim(ActionId a) const = 0;

    virtual double log_density(ActionId a, Regime regime, const Observation& x) const = 0;
    virtual Observation sample(ActionId a, Regime regime, Rng& rng) const = 0;

    /// out[theta] = log f_a^theta(x) for every post-change parameter.
    virtual void log_density_all(ActionId a, const Observation& x, std::span<double> out) const;

    /// log(f_a^theta(x) / f_a^pre(x)).
    virtual double log_likelihood_ratio(ActionId a, ParamId theta, const Observation& x) const;

    /// Integration range for the quadrature fallbacks (scalar models only).
    virtual std::pair<double, double> support() const { return {-12.0, 12.0}; }

    /// D(f_a^theta || f_a^pre).
    virtual double kl(ActionId a, ParamId theta) const;
    /// D(f_a^theta || f_a^u) between two post-change laws.
    virtual double kl_between(ActionId a, ParamId theta, ParamId u) const;
    /// B_a(theta, u) = I_a^theta - D(f_a^theta || f_a^u).
    virtual double cross_drift(ActionId a, ParamId theta, ParamId u) const;
    /// Bhattacharyya affinity of f_a^theta and f_a^u; theta == u is a domain error.
    virtual double bhattacharyya(ActionId a, ParamId theta, ParamId u) const;
    /// E[(log f_a^theta/f_a^pre)^2] under f_a^theta.
    virtual double llr_second_moment(ActionId a, ParamId theta) const;

    virtual std::string action_name(ActionId a) const;
    virtual std::string param_name(ParamId theta) const;

    void check_action(ActionId a) const;
    void check_param(ParamId theta) const;
};

/// Arithmetic mean of bhattacharyya() over all actions.
double bhattacharyya_avg(const Model& model, ParamId theta, ParamId other);

/// Max over ordered pairs theta != other of bhattacharyya_avg().
double rho_max(const Model& model);

/// Max over (a, theta) of llr_second_moment(); stand-in for the uniform
/// second-moment bound consumed by the hitting-time bound.
double second_moment_bound(const Model& model);

/// K independent unit-variance Gaussian channels, one of which is sampled
/// per step. Channel k has mean 0 before the change and mean mu[k] after it
/// if k belongs to the post-change set theta. Channel ids are 0-based here;
/// the config layer uses 1-based ids.
class MultichannelGaussianModel final : public Model {
public:
    MultichannelGaussianModel(std::vector<double> mu, std::vector<std::vector<std::uint32_t>> theta_sets);

    /// Theta = every non-empty subset of the K channels, ordered by bitmask.
    static MultichannelGaussianModel with_all_subsets(std::vector<double> mu);

    std::size_t channels() const noexcept { return mu_.size(); }
    std::span<const double> means() const noexcept { return mu_; }
    std::span<const std::vector<std::uint32_t>> theta_sets() const noexcept { return theta_sets_; }

    bool contains(ParamId theta, ActionId a) const noexcept {
        return member_[theta.index * mu_.size() + a.index] != 0;
    }
    /// Post-change mean of channel a under theta (0 when a is not in theta).
    double mean(ActionId a, ParamId theta) const noexcept { return contains(theta, a) ? mu_[a.index] : 0.0; }

    std::size_t num_actions() const override { return mu_.size(); }
    std::size_t num_params() const override { return theta_sets_.size(); }
    std::size_t obs_dim(ActionId) const override { return 1; }

    double log_density(ActionId a, Regime regime, const Observation& x) const override;
    Observation sample(ActionId a, Regime regime, Rng& rng) const override;
    void log_density_all(ActionId a, const Observation& x, std::span<double> out) const override;
    double log_likelihood_ratio(ActionId a, ParamId theta, const Observation& x) const override;

    double kl(ActionId a, ParamId theta) const override;
    double kl_between(ActionId a, ParamId theta, ParamId u) const override;
    double cross_drift(ActionId a, ParamId theta, ParamId u) const override;
    double bhattacharyya(ActionId a, ParamId theta, ParamId u) const override;
    double llr_second_moment(ActionId a, ParamId theta) const override;

    std::string action_name(ActionId a) const override;
    std::string param_name(ParamId theta) const override;

    /// Finds the ParamId whose channel set equals `channels` (0-based).
    ParamId find_param(std::vector<std::uint32_t> channels) const;

private:
    std::vector<double> mu_;
    std::vector<std::vector<std::uint32_t>> theta_sets_;
    std::vector<std::uint8_t> member_;
};

}  // namespace qcd
