#include "gsched/config_io.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace gsched {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("unknown key '" + where + key + "'");
        }
    }
}

template <typename T>
void read_key(const json& obj, const char* key, T& out, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        return;
    }
    try {
        if constexpr (std::is_integral_v<T>) {
            if (!it->is_number_integer()) {
                throw ConfigError("");
            }
            if constexpr (std::is_unsigned_v<T>) {
                if (!it->is_number_unsigned()) {
                    throw ConfigError("");
                }
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!it->is_number()) {
                throw ConfigError("");
            }
        }
        out = it->get<T>();
    } catch (const std::exception&) {
        throw ConfigError("key '" + where + key + "': wrong type (" + std::string(it->type_name()) + ")");
    }
}

} // namespace

ClusterConfig parse_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    reject_unknown(doc, {"num_ranks", "num_gpus", "batch_size", "subbatches_per_batch", "scheduler", "seed", "cost"},
                   "");

    ClusterConfig cfg;
    read_key(doc, "num_ranks", cfg.num_ranks, "");
    read_key(doc, "num_gpus", cfg.num_gpus, "");
    read_key(doc, "batch_size", cfg.batch_size, "");
    read_key(doc, "subbatches_per_batch", cfg.subbatches_per_batch, "");
    read_key(doc, "seed", cfg.seed, "");
    if (auto it = doc.find("scheduler"); it != doc.end()) {
        if (!it->is_string()) {
            throw ConfigError("key 'scheduler': expected a string");
        }
        const auto s = parse_scheduler(it->get<std::string>());
        if (!s) {
            throw ConfigError("key 'scheduler': unknown scheduler '" + it->get<std::string>() +
                              "' (baseline | one2all | one2one | opt_one2one)");
        }
        cfg.scheduler = *s;
    }
    if (auto it = doc.find("cost"); it != doc.end()) {
        if (!it->is_object()) {
            throw ConfigError("key 'cost': expected an object");
        }
        reject_unknown(*it, {"gpu_alpha", "gpu_beta", "cpu_gap", "msg_latency", "preamble"}, "cost.");
        read_key(*it, "gpu_alpha", cfg.cost.gpu_alpha, "cost.");
        read_key(*it, "gpu_beta", cfg.cost.gpu_beta, "cost.");
        read_key(*it, "cpu_gap", cfg.cost.cpu_gap, "cost.");
        read_key(*it, "msg_latency", cfg.cost.msg_latency, "cost.");
        read_key(*it, "preamble", cfg.cost.preamble, "cost.");
    }
    try {
        validate(cfg);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

ClusterConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

json cost_json(const CostModel& c) {
    return json{{"gpu_alpha", c.gpu_alpha},
                {"gpu_beta", c.gpu_beta},
                {"cpu_gap", c.cpu_gap},
                {"msg_latency", c.msg_latency},
                {"preamble", c.preamble}};
}

} // namespace

std::string cost_to_json(const CostModel& cost) {
    return json{{"cost", cost_json(cost)}}.dump(2) + "\n";
}

std::string config_to_json(const ClusterConfig& config) {
    json doc{{"num_ranks", config.num_ranks},
             {"num_gpus", config.num_gpus},
             {"batch_size", config.batch_size},
             {"subbatches_per_batch", config.subbatches_per_batch},
             {"scheduler", std::string(scheduler_name(config.scheduler))},
             {"seed", config.seed},
             {"cost", cost_json(config.cost)}};
    return doc.dump(2) + "\n";
}

} // namespace gsched
