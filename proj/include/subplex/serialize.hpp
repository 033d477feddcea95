#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "subplex/analysis.hpp"
#include "subplex/attribution.hpp"
#include "subplex/clustering.hpp"
#include "subplex/pipeline.hpp"
#include "subplex/projection.hpp"

namespace subplex {

using Json = nlohmann::json;

/// {"points":[{"id","x","y","group","outlier"}],"medoids":[{"group","id","x","y"}]}
Json layout_to_json(const AttributionMatrix& matrix, const Partition& partition, const ProjectionLayout& layout);

/// {"basis":"mean"|"deviation","group":g?,"order":[...],"scores":[...],"features":[...]}
/// `features` lists feature names in ranked order.
Json ranking_to_json(const AttributionMatrix& matrix, const FeatureRanking& ranking);

/// {"provenance","group_count","labels":[...],"groups":[{"group","size","medoid_index","medoid_id"}]}
Json partition_to_json(const AttributionMatrix& matrix, const Partition& partition);
Partition partition_from_json(const Json& doc, const Matrix& data);

Json aggregates_to_json(const AttributionMatrix& matrix, const std::vector<GroupAggregate>& aggregates);

/// {"feature_names":[...],"rows":[{"index","id","group"?,"values":[...]}]}
Json instances_to_json(const InstanceTable& table, const Partition* partition);

Json split_to_json(const AttributionMatrix& matrix, const SelectionSplitStats& stats);

/// One entry per feature with shared edges and one mass vector per group.
Json distributions_to_json(const AttributionMatrix& matrix, const std::vector<FeatureDistribution>& distributions);

Json timings_to_json(const StageTimings& timings);

/// Pipeline settings as accepted by the service; missing keys keep defaults.
PipelineConfig pipeline_config_from_json(const Json& doc);
Json pipeline_config_to_json(const PipelineConfig& config);

/// Full attribution matrix, used by session snapshots.
Json matrix_to_json(const AttributionMatrix& matrix);

}  // namespace subplex
