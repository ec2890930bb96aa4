#pragma once

#include <json.hpp>

#include "easygt/session.hpp"

namespace easygt::detail {

nlohmann::ordered_json record_to_json(const AnnotationRecord& r);
AnnotationRecord record_from_json(const nlohmann::ordered_json& j);

}  // namespace easygt::detail
