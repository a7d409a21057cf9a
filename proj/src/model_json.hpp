#pragma once

// JSON codecs shared by the MLP and recovery-model files.

#include <json.hpp>

#include "dpr/neuralnet.hpp"

namespace dpr::detail {

using ojson = nlohmann::ordered_json;

inline constexpr int kModelFormatVersion = 1;

ojson hyperparams_to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const ojson& j);

ojson model_to_json(const MlpModel& model);
MlpModel model_from_json(const ojson& j);

} // namespace dpr::detail
