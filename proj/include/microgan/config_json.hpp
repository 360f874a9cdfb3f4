#pragma once

#include <initializer_list>
#include <string>

#include "json.hpp"
#include "microgan/augment.hpp"
#include "microgan/layers.hpp"
#include "microgan/trainer.hpp"

namespace microgan {

using Json = nlohmann::json;

// Rejects keys outside `allowed` with a config error naming every offender;
// typo'd configs fail loudly instead of silently using defaults.
void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                const std::string& where);

Json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const Json& j, const std::string& where);

Json init_spec_to_json(const InitSpec& spec);
InitSpec init_spec_from_json(const Json& j, const std::string& where);

Json augment_spec_to_json(const AugmentSpec& spec);
AugmentSpec augment_spec_from_json(const Json& j, const std::string& where);

Json model_scale_to_json(const ModelScale& scale);
ModelScale model_scale_from_json(const Json& j, const std::string& where);

}  // namespace microgan
