#include "milbo/config.hpp"

#include <set>
#include <stdexcept>

namespace milbo {

using nlohmann::json;

namespace {

const std::set<std::string> kTrainKeys = {
    "p_h",  "p_a",   "p_h2",     "p_a2",  "lambda",           "k",
    "l",    "d_hidden", "d_out", "lr",    "epochs",           "checkpoint_every",
    "seed", "strategy", "normalize_embeddings", "use_bias", "negative_slope"};

const std::set<std::string> kProbeKeys = {"lr",      "epochs", "weight_decay",
                                          "repeats", "seed",   "standardize"};

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::invalid_argument(std::string(what) + ": unknown field '" + it.key() + "'");
}

}  // namespace

TrainConfig train_config_from_json(const json& j) {
    reject_unknown(j, kTrainKeys, "train config");
    TrainConfig cfg;
    if (j.contains("p_h")) cfg.p_h = j.at("p_h").get<double>();
    if (j.contains("p_a")) cfg.p_a = j.at("p_a").get<double>();
    if (j.contains("p_h2") && !j.at("p_h2").is_null()) cfg.p_h2 = j.at("p_h2").get<double>();
    if (j.contains("p_a2") && !j.at("p_a2").is_null()) cfg.p_a2 = j.at("p_a2").get<double>();
    if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
    if (j.contains("k")) cfg.k = j.at("k").get<int>();
    if (j.contains("l")) cfg.l = j.at("l").get<int>();
    if (j.contains("d_hidden")) cfg.d_hidden = j.at("d_hidden").get<int>();
    if (j.contains("d_out")) cfg.d_out = j.at("d_out").get<int>();
    if (j.contains("lr")) cfg.lr = j.at("lr").get<double>();
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
    if (j.contains("checkpoint_every")) cfg.checkpoint_every = j.at("checkpoint_every").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("strategy")) cfg.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    if (j.contains("normalize_embeddings"))
        cfg.normalize_embeddings = j.at("normalize_embeddings").get<bool>();
    if (j.contains("use_bias")) cfg.use_bias = j.at("use_bias").get<bool>();
    if (j.contains("negative_slope")) cfg.negative_slope = j.at("negative_slope").get<double>();
    cfg.validate();
    return cfg;
}

json train_config_to_json(const TrainConfig& cfg) {
    json j{{"p_h", cfg.p_h},
           {"p_a", cfg.p_a},
           {"lambda", cfg.lambda},
           {"k", cfg.k},
           {"l", cfg.l},
           {"d_hidden", cfg.d_hidden},
           {"d_out", cfg.d_out},
           {"lr", cfg.lr},
           {"epochs", cfg.epochs},
           {"checkpoint_every", cfg.checkpoint_every},
           {"seed", cfg.seed},
           {"strategy", to_string(cfg.strategy)},
           {"normalize_embeddings", cfg.normalize_embeddings},
           {"use_bias", cfg.use_bias},
           {"negative_slope", cfg.negative_slope}};
    if (cfg.p_h2) j["p_h2"] = *cfg.p_h2;
    if (cfg.p_a2) j["p_a2"] = *cfg.p_a2;
    return j;
}

ProbeConfig probe_config_from_json(const json& j) {
    reject_unknown(j, kProbeKeys, "probe config");
    ProbeConfig cfg;
    if (j.contains("lr")) cfg.lr = j.at("lr").get<double>();
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
    if (j.contains("weight_decay")) cfg.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("repeats")) cfg.repeats = j.at("repeats").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("standardize")) cfg.standardize = j.at("standardize").get<bool>();
    cfg.validate();
    return cfg;
}

json probe_config_to_json(const ProbeConfig& cfg) {
    return json{{"lr", cfg.lr},
                {"epochs", cfg.epochs},
                {"weight_decay", cfg.weight_decay},
                {"repeats", cfg.repeats},
                {"seed", cfg.seed},
                {"standardize", cfg.standardize}};
}

SbmSpec sbm_spec_from_json(const json& j) {
    static const std::set<std::string> keys = {"blocks", "p_in", "p_out", "feature_noise", "seed"};
    reject_unknown(j, keys, "sbm spec");
    SbmSpec spec;
    spec.blocks = j.at("blocks").get<std::vector<int>>();
    if (j.contains("p_in")) spec.p_in = j.at("p_in").get<double>();
    if (j.contains("p_out")) spec.p_out = j.at("p_out").get<double>();
    if (j.contains("feature_noise")) spec.feature_noise = j.at("feature_noise").get<double>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    spec.validate();
    return spec;
}

void apply_override(json& j, const std::string& key_value) {
    const auto eq = key_value.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must be key=value, got '" + key_value + "'");
    const std::string key = key_value.substr(0, eq);
    const std::string value = key_value.substr(eq + 1);
    // Parse the value as JSON when possible (numbers, booleans, null),
    // falling back to a plain string (e.g. strategy names).
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;
    }
    j[key] = parsed;
}

}  // namespace milbo
