#pragma once

#include <string>

#include "nlkpp/kernel.hpp"

#include <json.hpp>

namespace nlkpp {

/// Parsed kernel document: parameters plus the projected kernel pair.
struct ModelSpec {
  ModelParams params;
  KernelPair kernels;
};

/// Kernel from a JSON object {"family": ..., parameters..., "shift"?, "truncate_at"?}.
Kernel kernel_from_json(const nlohmann::json& j);
ModelParams params_from_json(const nlohmann::json& j);

/// Accepts {"params": {...}, "a_plus": {...}, "a_minus": {...}} or a single kernel object
/// carrying its own "params" block; a missing "a_minus" defaults to "a_plus".
ModelSpec model_from_json(const nlohmann::json& j);
ModelSpec model_from_file(const std::string& path);

nlohmann::json to_json(const Kernel& kernel);
nlohmann::json to_json(const ModelParams& params);
nlohmann::json to_json(const AssumptionReport& report);

}  // namespace nlkpp
