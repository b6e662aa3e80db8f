#include "qcd/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace qcd {

using nlohmann::json;

namespace {

std::uint32_t channel_id(const json& v, const std::string& where) {
    if (!v.is_number_integer()) throw ConfigError(where + " must be an integer channel id");
    const auto id = v.get<std::int64_t>();
    if (id < 1) throw ValidationError(where + " = " + std::to_string(id) + " is not a valid channel (ids start at 1)");
    return static_cast<std::uint32_t>(id - 1);
}

std::vector<std::uint32_t> channel_set(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + " must be an array of channel ids");
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(channel_id(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key) || obj[key].is_null()) return fallback;
    return obj[key].get<T>();
}

PolicyConfig parse_policy(const json& p, const std::string& where) {
    if (!p.is_object()) throw ConfigError(where + " must be an object");
    PolicyConfig cfg;
    cfg.kind = get_or<std::string>(p, "kind", cfg.kind);
    if (cfg.kind != "wcc" && cfg.kind != "greedy" && cfg.kind != "oracle" && cfg.kind != "uniform")
        throw ValidationError(where + ".kind '" + cfg.kind + "' is not one of wcc, greedy, oracle, uniform");
    cfg.w = get_or<std::uint64_t>(p, "w", cfg.kind == "oracle" ? 0 : cfg.w);
    cfg.q = get_or<std::uint64_t>(p, "q", cfg.q);
    if (p.contains("exploration_times"))
        cfg.exploration_times = p["exploration_times"].get<std::vector<std::uint64_t>>();
    if (p.contains("greedy_initial")) {
        const auto& g = p["greedy_initial"];
        if (g.is_string()) {
            if (g.get<std::string>() != "random")
                throw ValidationError(where + ".greedy_initial must be \"random\" or a channel id");
        } else {
            cfg.greedy_initial = channel_id(g, where + ".greedy_initial");
        }
    }
    if (p.contains("oracle_theta")) cfg.oracle_theta = channel_set(p["oracle_theta"], where + ".oracle_theta");
    cfg.action_rule = get_or<std::string>(p, "action_rule", cfg.action_rule);
    if (cfg.action_rule != "largest_average" && cfg.action_rule != "argmax")
        throw ValidationError(where + ".action_rule must be largest_average or argmax");
    cfg.tie_break = get_or<std::string>(p, "tie_break", cfg.tie_break);
    if (cfg.tie_break != "largest_average" && cfg.tie_break != "smallest_id")
        throw ValidationError(where + ".tie_break must be largest_average or smallest_id");

    std::string label = cfg.kind;
    if (cfg.kind == "greedy")
        label = cfg.greedy_initial ? "greedy-start-" + std::to_string(*cfg.greedy_initial + 1) : "greedy-random";
    else if (cfg.kind == "wcc")
        label = "wcc-w" + std::to_string(cfg.w);
    cfg.label = get_or<std::string>(p, "label", label);
    if (cfg.label.find_first_of(",\"\n") != std::string::npos)
        throw ValidationError(where + ".label must not contain commas, quotes or newlines");
    return cfg;
}

}  // namespace

RunConfig parse_config(const json& doc) {
    try {
        if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
        RunConfig cfg;

        if (!doc.contains("model")) throw ConfigError("config is missing the 'model' section");
        const auto& m = doc["model"];
        cfg.model.kind = get_or<std::string>(m, "kind", cfg.model.kind);
        if (cfg.model.kind != "multichannel_gaussian")
            throw ValidationError("model.kind '" + cfg.model.kind + "' is not supported (multichannel_gaussian)");
        cfg.model.mu = m.at("mu").get<std::vector<double>>();
        if (m.contains("K")) {
            const auto k = m["K"].get<std::int64_t>();
            if (k < 2) throw ValidationError("model.K must be at least 2");
            if (static_cast<std::size_t>(k) != cfg.model.mu.size())
                throw ValidationError("model.K = " + std::to_string(k) + " but model.mu has " +
                                      std::to_string(cfg.model.mu.size()) + " entries");
        }
        const auto& ts = m.at("theta_sets");
        if (ts.is_string()) {
            const auto name = ts.get<std::string>();
            if (name == "all_subsets") {
                cfg.model.all_subsets = true;
            } else if (name == "singletons") {
                for (std::uint32_t k = 0; k < cfg.model.mu.size(); ++k) cfg.model.theta_sets.push_back({k});
            } else {
                throw ValidationError("model.theta_sets must be an array, \"singletons\" or \"all_subsets\"");
            }
        } else {
            if (!ts.is_array()) throw ConfigError("model.theta_sets must be an array of channel-id arrays");
            for (std::size_t i = 0; i < ts.size(); ++i)
                cfg.model.theta_sets.push_back(channel_set(ts[i], "model.theta_sets[" + std::to_string(i) + "]"));
        }
        if (m.contains("extra_theta_sets")) {
            const auto& extra = m["extra_theta_sets"];
            for (std::size_t i = 0; i < extra.size(); ++i)
                cfg.model.theta_sets.push_back(
                    channel_set(extra[i], "model.extra_theta_sets[" + std::to_string(i) + "]"));
        }
        cfg.model.true_theta = channel_set(m.at("true_theta"), "model.true_theta");

        cfg.policy = parse_policy(doc.value("policy", json::object()), "policy");
        if (doc.contains("sweep") && doc["sweep"].contains("policies")) {
            const auto& ps = doc["sweep"]["policies"];
            for (std::size_t i = 0; i < ps.size(); ++i)
                cfg.sweep_policies.push_back(parse_policy(ps[i], "sweep.policies[" + std::to_string(i) + "]"));
        }

        const auto d = doc.value("detector", json::object());
        if (d.contains("b")) {
            const auto bs = d["b"].is_array() ? d["b"].get<std::vector<double>>()
                                              : std::vector<double>{d["b"].get<double>()};
            for (double b : bs) {
                if (!(b > 0.0)) throw ValidationError("detector.b entries must be positive");
                cfg.detector.gammas.push_back(std::exp(b));
            }
        } else if (d.contains("gamma")) {
            cfg.detector.gammas = d["gamma"].is_array() ? d["gamma"].get<std::vector<double>>()
                                                        : std::vector<double>{d["gamma"].get<double>()};
        }
        for (double g : cfg.detector.gammas)
            if (!(g > 1.0) || !std::isfinite(g)) throw ValidationError("detector.gamma entries must be finite and > 1");
        cfg.detector.horizon_cap = get_or<std::uint64_t>(d, "horizon_cap", cfg.detector.horizon_cap);
        if (cfg.detector.horizon_cap == 0) throw ValidationError("detector.horizon_cap must be positive");

        const auto s = doc.value("sim", json::object());
        cfg.sim.reps = get_or<std::uint64_t>(s, "reps", cfg.sim.reps);
        if (cfg.sim.reps < 1) throw ValidationError("sim.reps must be at least 1");
        if (s.contains("nu")) {
            const auto& nu = s["nu"];
            if (nu.is_null() || (nu.is_string() && nu.get<std::string>() == "inf")) {
                cfg.sim.nu.reset();
            } else {
                const auto v = nu.get<std::int64_t>();
                if (v < 1) throw ValidationError("sim.nu must be >= 1 or \"inf\"");
                cfg.sim.nu = static_cast<std::uint64_t>(v);
            }
        }
        cfg.sim.seed_base = get_or<std::uint64_t>(s, "seed_base", cfg.sim.seed_base);
        cfg.sim.workers = get_or<int>(s, "workers", cfg.sim.workers);
        cfg.sim.worst_case_budget = get_or<std::uint64_t>(s, "worst_case_budget", cfg.sim.worst_case_budget);
        cfg.sim.martingale_steps = get_or<std::uint64_t>(s, "martingale_steps", cfg.sim.martingale_steps);
        cfg.sim.martingale_reps = get_or<std::uint64_t>(s, "martingale_reps", cfg.sim.martingale_reps);

        const auto o = doc.value("output", json::object());
        cfg.output.dir = get_or<std::string>(o, "dir", cfg.output.dir);
        cfg.output.trials_jsonl = get_or<bool>(o, "trials_jsonl", cfg.output.trials_jsonl);

        // Resolve ids against the model now so errors surface at load time.
        const auto model = build_model(cfg.model);
        const auto theta = resolve_true_theta(cfg.model, *model);
        build_policy(cfg.policy, *model, theta);
        for (const auto& p : cfg.sweep_policies) build_policy(p, *model, theta);
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
    }
    return parse_config(doc);
}

std::unique_ptr<MultichannelGaussianModel> build_model(const ModelConfig& cfg) {
    try {
        if (cfg.all_subsets) {
            return std::make_unique<MultichannelGaussianModel>(MultichannelGaussianModel::with_all_subsets(cfg.mu));
        }
        return std::make_unique<MultichannelGaussianModel>(cfg.mu, cfg.theta_sets);
    } catch (const ModelError& e) {
        throw ValidationError(std::string("model: ") + e.what());
    }
}

ParamId resolve_true_theta(const ModelConfig& cfg, const MultichannelGaussianModel& model) {
    try {
        return model.find_param(cfg.true_theta);
    } catch (const ModelError&) {
        throw ValidationError("model.true_theta is not one of the configured theta_sets");
    }
}

PolicySetting build_policy(const PolicyConfig& cfg, const MultichannelGaussianModel& model, ParamId true_theta) {
    PolicySetting setting{cfg.label, GreedyPolicy{}};
    const auto tie = cfg.tie_break == "smallest_id" ? TieBreakRule::SmallestId : TieBreakRule::LargestWindowAverage;
    try {
        if (cfg.kind == "wcc") {
            WccPolicy p{cfg.exploration_times.empty()
                            ? ExplorationSchedule::block_tail(cfg.w, cfg.q)
                            : ExplorationSchedule::explicit_list(cfg.w, cfg.q, cfg.exploration_times)};
            p.action_rule = cfg.action_rule == "argmax" ? ActionRule::Argmax : ActionRule::LargestAverageAmongArgmax;
            p.tie_break = tie;
            setting.spec = p;
        } else if (cfg.kind == "greedy") {
            GreedyPolicy p;
            if (cfg.greedy_initial) p.initial = ActionId{*cfg.greedy_initial};
            setting.spec = p;
        } else if (cfg.kind == "oracle") {
            OraclePolicy p{true_theta, cfg.w};
            if (!cfg.oracle_theta.empty()) p.theta = model.find_param(cfg.oracle_theta);
            setting.spec = p;
        } else {
            setting.spec = UniformPolicy{cfg.w, tie};
        }
        validate_policy(setting.spec, model);
    } catch (const std::invalid_argument& e) {
        throw ValidationError("policy '" + cfg.label + "': " + e.what());
    } catch (const ModelError& e) {
        throw ValidationError("policy '" + cfg.label + "': " + e.what());
    }
    return setting;
}

namespace {

std::string join_set(const std::vector<std::uint32_t>& set) {
    std::string out = "{";
    for (std::size_t i = 0; i < set.size(); ++i) out += (i ? "," : "") + std::to_string(set[i] + 1);
    return out + "}";
}

std::string describe_policy(const PolicyConfig& p) {
    std::ostringstream out;
    out << p.label << ": kind=" << p.kind << " w=" << p.w;
    if (p.kind == "wcc") {
        out << " q=" << p.q << " schedule=" << (p.exploration_times.empty() ? "block_tail" : "explicit")
            << " action_rule=" << p.action_rule << " tie_break=" << p.tie_break;
    } else if (p.kind == "greedy") {
        out << " initial=" << (p.greedy_initial ? std::to_string(*p.greedy_initial + 1) : std::string("random"));
    } else if (p.kind == "oracle") {
        out << " theta=" << (p.oracle_theta.empty() ? std::string("true_theta") : join_set(p.oracle_theta));
    } else {
        out << " tie_break=" << p.tie_break;
    }
    return out.str();
}

}  // namespace

std::vector<std::string> describe_config(const RunConfig& cfg) {
    std::vector<std::string> lines;
    std::ostringstream mu;
    for (std::size_t i = 0; i < cfg.model.mu.size(); ++i) mu << (i ? "," : "") << cfg.model.mu[i];
    lines.push_back("model.kind = " + cfg.model.kind);
    lines.push_back("model.K = " + std::to_string(cfg.model.mu.size()));
    lines.push_back("model.mu = " + mu.str());
    if (cfg.model.all_subsets) {
        lines.push_back("model.theta_sets = all_subsets");
    } else {
        std::string sets;
        for (std::size_t i = 0; i < cfg.model.theta_sets.size(); ++i)
            sets += (i ? " " : "") + join_set(cfg.model.theta_sets[i]);
        lines.push_back("model.theta_sets = " + sets);
    }
    lines.push_back("model.true_theta = " + join_set(cfg.model.true_theta));
    lines.push_back("policy = " + describe_policy(cfg.policy));
    for (const auto& p : cfg.sweep_policies) lines.push_back("sweep.policy = " + describe_policy(p));
    lines.push_back("detector.horizon_cap = " + std::to_string(cfg.detector.horizon_cap));
    lines.push_back("detector.threshold = log(gamma)");
    lines.push_back("sim.reps = " + std::to_string(cfg.sim.reps));
    lines.push_back("sim.nu = " + (cfg.sim.nu ? std::to_string(*cfg.sim.nu) : std::string("inf")));
    lines.push_back("sim.seed_base = " + std::to_string(cfg.sim.seed_base));
    return lines;
}

int resolve_workers(int configured) {
    if (const char* env = std::getenv("QCD_SENSE_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
    }
    return configured < 1 ? 1 : configured;
}

}  // namespace qcd
