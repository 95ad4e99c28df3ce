#pragma once

// JSON ingest and export of model and numerics specs. Unknown keys are
// rejected with the offending path in the message.

#include <initializer_list>
#include <string_view>

#include <json.hpp>

#include "parasim/model.hpp"

namespace parasim {

/// Throws SpecError naming the first key of `obj` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view where);

FunctionSpec function_from_json(const nlohmann::json& j, FunctionRole role, std::string_view where);
JumpSizeLaw jump_law_from_json(const nlohmann::json& j, JumpRole role, std::string_view where);
FragmentationLaw fragmentation_from_json(const nlohmann::json& j, std::string_view where);

/// Missing fields keep their defaults, or the values of "preset" when given.
ModelSpec model_from_json(const nlohmann::json& j);
NumericsSpec numerics_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FunctionSpec& f);
nlohmann::json to_json(const JumpSizeLaw& law);
nlohmann::json to_json(const FragmentationLaw& kappa);
nlohmann::json to_json(const ModelSpec& m);
nlohmann::json to_json(const NumericsSpec& n);

}  // namespace parasim
