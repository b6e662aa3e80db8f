#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qcd/model.hpp"
#include "qcd/policy.hpp"
#include "qcd/sim.hpp"

namespace qcd {

/// Unreadable or malformed configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Well-formed configuration that names invalid ids or values (exit code 2).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModelConfig {
    std::string kind = "multichannel_gaussian";
    std::vector<double> mu;
    /// 0-based channel sets; empty when all_subsets is set.
    std::vector<std::vector<std::uint32_t>> theta_sets;
    bool all_subsets = false;
    /// 0-based channels of the true post-change set.
    std::vector<std::uint32_t> true_theta;
};

struct PolicyConfig {
    std::string label;
    std::string kind = "wcc";
    std::uint64_t w = 10;
    std::uint64_t q = 1;
    std::vector<std::uint64_t> exploration_times;
    /// nullopt = random starting channel (0-based otherwise).
    std::optional<std::uint32_t> greedy_initial;
    /// 0-based channel set; empty means the model's true theta.
    std::vector<std::uint32_t> oracle_theta;
    std::string action_rule = "largest_average";
    std::string tie_break = "largest_average";
};

struct DetectorConfig {
    std::vector<double> gammas;
    std::uint64_t horizon_cap = 10'000'000;
};

struct SimSection {
    std::uint64_t reps = 1000;
    /// nullopt = no change (MTFA runs).
    std::optional<std::uint64_t> nu = 1;
    std::uint64_t seed_base = 20240101;
    int workers = 1;
    std::uint64_t worst_case_budget = 4096;
    std::uint64_t martingale_steps = 50;
    std::uint64_t martingale_reps = 100000;
};

struct OutputConfig {
    std::string dir = "out";
    bool trials_jsonl = false;
};

struct RunConfig {
    ModelConfig model;
    PolicyConfig policy;
    std::vector<PolicyConfig> sweep_policies;
    DetectorConfig detector;
    SimSection sim;
    OutputConfig output;
};

/// Throws ConfigError (I/O, syntax, wrong types) or ValidationError.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const nlohmann::json& doc);

std::unique_ptr<MultichannelGaussianModel> build_model(const ModelConfig& cfg);
ParamId resolve_true_theta(const ModelConfig& cfg, const MultichannelGaussianModel& model);
PolicySetting build_policy(const PolicyConfig& cfg, const MultichannelGaussianModel& model, ParamId true_theta);

/// Resolved settings, one "key = value" per line, for self-describing
/// output headers. Worker count is deliberately left out so outputs do not
/// depend on it.
std::vector<std::string> describe_config(const RunConfig& cfg);

/// Worker count after applying the QCD_SENSE_WORKERS environment override.
int resolve_workers(int configured);

}  // namespace qcd
