#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "symfocus/asymmetry.hpp"
#include "symfocus/phantom.hpp"
#include "symfocus/symclust.hpp"

namespace symfocus {

using Json = nlohmann::ordered_json;

/// {k, centers, assignments, epsilon_k, d_k, sym_index}
Json to_json(const cluster::ClusterModel& model);
cluster::ClusterModel cluster_model_from_json(const Json& j);

/// {side, cluster_id, centroid, mean_asym, axis_col, per_cluster:[{id,score}]}
Json to_json(const asym::FocusReport& report);
asym::FocusReport focus_report_from_json(const Json& j);

Json to_json(const phantom::PhantomSpec& spec);
phantom::PhantomSpec phantom_spec_from_json(const Json& j);
Json to_json(const std::vector<phantom::PhantomSpec>& specs);
std::vector<phantom::PhantomSpec> phantom_specs_from_json(const Json& j);

Json to_json(const phantom::AccuracyReport& report);

std::string_view to_string(asym::Side side);
asym::Side side_from_string(std::string_view s);

}  // namespace symfocus
