#pragma once

#include "milbo/graph.hpp"
#include "milbo/probe.hpp"
#include "milbo/train.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace milbo {

// JSON field names mirror the struct fields. Unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);

ProbeConfig probe_config_from_json(const nlohmann::json& j);
nlohmann::json probe_config_to_json(const ProbeConfig& cfg);

SbmSpec sbm_spec_from_json(const nlohmann::json& j);

// Applies one "key=value" override onto a config JSON object; the key must
// name a known field.
void apply_override(nlohmann::json& j, const std::string& key_value);

}  // namespace milbo
