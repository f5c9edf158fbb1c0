#pragma once

// JSON conversions shared by model persistence and run configuration.

#include "aec/forest.hpp"

#include <json.hpp>

namespace aec::forest {

nlohmann::json params_to_json(const ForestParams& p);
/// Missing keys keep their defaults; throws ConfigError on wrongly typed values.
ForestParams params_from_json(const nlohmann::json& j, const ForestParams& defaults = {});

nlohmann::json forest_to_json(const ForestModel& model);
ForestModel forest_from_json(const nlohmann::json& doc);

nlohmann::json cv_report_to_json(const CVReport& r);
CVReport cv_report_from_json(const nlohmann::json& j);

}  // namespace aec::forest
