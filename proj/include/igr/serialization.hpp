#pragma once

// JSON round-trips for the library's value types.

#include "igr/distributions.hpp"
#include "igr/experiments.hpp"
#include "igr/infinite.hpp"
#include "igr/recovery.hpp"
#include "igr/transforms.hpp"

#include <json.hpp>

namespace igr {

using Json = nlohmann::json;

void to_json(Json& j, const PlanarLayer& layer);
void from_json(const Json& j, PlanarLayer& layer);
void to_json(Json& j, const TransformSpec& spec);
void from_json(const Json& j, TransformSpec& spec);
void to_json(Json& j, const DiscretePmf& pmf);
void from_json(const Json& j, DiscretePmf& pmf);
void to_json(Json& j, const IgrParams& params);
void from_json(const Json& j, IgrParams& params);
void to_json(Json& j, const GsParams& params);
void from_json(const Json& j, GsParams& params);
void to_json(Json& j, const TargetSpec& spec);
void from_json(const Json& j, TargetSpec& spec);
void to_json(Json& j, const RunConfig& config);
void from_json(const Json& j, RunConfig& config);
void to_json(Json& j, const FitReport& report);
void from_json(const Json& j, FitReport& report);

Json growable_to_json(const GrowableIgrParams& params);
GrowableIgrParams growable_from_json(const Json& j);

/// Applies the keys present in `j` on top of `config`; unknown keys raise
/// ConfigError.
void merge_config(const Json& j, RunConfig& config);

} // namespace igr
