#include "subplex/serialize.hpp"

#include <set>

#include "subplex/errors.hpp"

namespace subplex {

namespace {

const char* provenance_name(Provenance p) { return p == Provenance::algorithmic ? "algorithmic" : "user_edited"; }

void reject_unknown_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) throw ValidationError("unknown key '" + item.key() + "' in " + where);
  }
}

std::size_t read_count(const Json& obj, const char* key, std::size_t fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  const auto& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer()) {
    if (v.get<long long>() < 0) throw ValidationError(std::string(key) + " must be non-negative");
    return static_cast<std::size_t>(v.get<long long>());
  }
  throw ValidationError(std::string(key) + " must be an integer");
}

double read_real(const Json& obj, const char* key, double fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(std::string(key) + " must be a number");
  return v.get<double>();
}

}  // namespace

Json layout_to_json(const AttributionMatrix& matrix, const Partition& partition, const ProjectionLayout& layout) {
  const auto& ids = matrix.instance_ids();
  Json points = Json::array();
  for (std::size_t i = 0; i < partition.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    points.push_back({{"id", ids[i]},
                      {"x", layout.coords(r, 0)},
                      {"y", layout.coords(r, 1)},
                      {"group", partition.labels()[i]},
                      {"outlier", static_cast<bool>(layout.outlier_flags[i])}});
  }
  Json medoids = Json::array();
  for (const auto& g : partition.groups()) {
    const auto& xy = layout.medoid_coords[static_cast<std::size_t>(g.group_id)];
    medoids.push_back({{"group", g.group_id}, {"id", ids[g.medoid_index]}, {"x", xy[0]}, {"y", xy[1]}});
  }
  return {{"points", std::move(points)}, {"medoids", std::move(medoids)}};
}

Json ranking_to_json(const AttributionMatrix& matrix, const FeatureRanking& ranking) {
  Json doc;
  doc["basis"] = ranking.basis == RankingBasis::group_mean ? "mean" : "deviation";
  if (ranking.group_id) doc["group"] = *ranking.group_id;
  doc["order"] = ranking.order;
  doc["scores"] = ranking.scores;
  Json names = Json::array();
  for (auto j : ranking.order) names.push_back(matrix.feature_names()[j]);
  doc["features"] = std::move(names);
  return doc;
}

Json partition_to_json(const AttributionMatrix& matrix, const Partition& partition) {
  Json groups = Json::array();
  for (const auto& g : partition.groups()) {
    groups.push_back({{"group", g.group_id},
                      {"size", g.member_count},
                      {"medoid_index", g.medoid_index},
                      {"medoid_id", matrix.instance_ids()[g.medoid_index]}});
  }
  return {{"provenance", provenance_name(partition.provenance())},
          {"group_count", partition.group_count()},
          {"labels", partition.labels()},
          {"groups", std::move(groups)}};
}

Partition partition_from_json(const Json& doc, const Matrix& data) {
  if (!doc.is_object() || !doc.contains("labels") || !doc.at("labels").is_array()) {
    throw ValidationError("partition needs a labels array");
  }
  std::vector<int> labels;
  for (const auto& v : doc.at("labels")) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ValidationError("labels must be non-negative integers");
    labels.push_back(v.get<int>());
  }
  const auto provenance = doc.value("provenance", std::string("algorithmic")) == "user_edited"
                              ? Provenance::user_edited
                              : Provenance::algorithmic;
  return Partition::from_labels(labels, data, provenance);
}

Json aggregates_to_json(const AttributionMatrix& matrix, const std::vector<GroupAggregate>& aggregates) {
  Json groups = Json::array();
  for (const auto& a : aggregates) {
    groups.push_back({{"group", a.group_id}, {"size", a.size}, {"mean_attribution", a.mean_attribution}});
  }
  return {{"feature_names", matrix.feature_names()}, {"groups", std::move(groups)}};
}

Json instances_to_json(const InstanceTable& table, const Partition* partition) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < table.indices.size(); ++r) {
    const auto row = table.values.row(static_cast<Eigen::Index>(r));
    Json entry = {{"index", table.indices[r]},
                  {"id", table.ids[r]},
                  {"values", std::vector<double>(row.data(), row.data() + row.size())}};
    if (partition) entry["group"] = partition->labels()[table.indices[r]];
    rows.push_back(std::move(entry));
  }
  return {{"feature_names", table.feature_names}, {"rows", std::move(rows)}};
}

Json split_to_json(const AttributionMatrix& matrix, const SelectionSplitStats& stats) {
  Json groups = Json::array();
  for (const auto& s : stats) {
    groups.push_back({{"group", s.group_id},
                      {"selected_count", s.selected_count},
                      {"unselected_count", s.unselected_count},
                      {"selected_mean", s.selected_mean},
                      {"unselected_mean", s.unselected_mean}});
  }
  return {{"feature_names", matrix.feature_names()}, {"groups", std::move(groups)}};
}

Json distributions_to_json(const AttributionMatrix& matrix, const std::vector<FeatureDistribution>& distributions) {
  Json features = Json::array();
  for (std::size_t j = 0; j < distributions.size(); ++j) {
    Json masses = Json::array();
    for (const auto& h : distributions[j].per_group) masses.push_back(h.mass);
    features.push_back({{"feature", matrix.feature_names()[j]},
                        {"bin_edges", distributions[j].bin_edges},
                        {"mass", std::move(masses)}});
  }
  return {{"features", std::move(features)}};
}

Json timings_to_json(const StageTimings& timings) {
  return {{"pca_ms", timings.pca_ms},
          {"cluster_ms", timings.cluster_ms},
          {"projection_ms", timings.projection_ms},
          {"ranking_ms", timings.ranking_ms}};
}

PipelineConfig pipeline_config_from_json(const Json& doc) {
  PipelineConfig cfg;
  if (doc.is_null()) return cfg;
  reject_unknown_keys(doc, {"n_components", "cluster", "projection", "outliers", "bins"}, "pipeline config");
  if (doc.contains("n_components") && !doc.at("n_components").is_null()) {
    cfg.n_components = read_count(doc, "n_components", 0);
  }
  cfg.bins = read_count(doc, "bins", cfg.bins);
  if (doc.contains("cluster")) {
    const auto& c = doc.at("cluster");
    reject_unknown_keys(c, {"k", "max_iter", "tol", "seed", "n_init"}, "cluster config");
    cfg.cluster.k = read_count(c, "k", cfg.cluster.k);
    cfg.cluster.max_iter = read_count(c, "max_iter", cfg.cluster.max_iter);
    cfg.cluster.tol = read_real(c, "tol", cfg.cluster.tol);
    cfg.cluster.seed = read_count(c, "seed", cfg.cluster.seed);
    cfg.cluster.n_init = read_count(c, "n_init", cfg.cluster.n_init);
  }
  if (doc.contains("projection")) {
    const auto& p = doc.at("projection");
    reject_unknown_keys(p, {"controls_per_cluster", "inner_shrink", "same_class_boost", "epsilon", "seed"},
                        "projection config");
    if (p.contains("controls_per_cluster") && !p.at("controls_per_cluster").is_null()) {
      cfg.projection.controls_per_cluster = read_count(p, "controls_per_cluster", 0);
    }
    cfg.projection.inner_shrink = read_real(p, "inner_shrink", cfg.projection.inner_shrink);
    cfg.projection.same_class_boost = read_real(p, "same_class_boost", cfg.projection.same_class_boost);
    cfg.projection.epsilon = read_real(p, "epsilon", cfg.projection.epsilon);
    cfg.projection.seed = read_count(p, "seed", cfg.projection.seed);
  }
  if (doc.contains("outliers")) {
    const auto& o = doc.at("outliers");
    reject_unknown_keys(o, {"k_neighbors", "percentile"}, "outlier config");
    cfg.outliers.k_neighbors = read_count(o, "k_neighbors", cfg.outliers.k_neighbors);
    cfg.outliers.percentile = read_real(o, "percentile", cfg.outliers.percentile);
  }
  cfg.validate();
  return cfg;
}

Json pipeline_config_to_json(const PipelineConfig& config) {
  Json doc;
  doc["n_components"] = config.n_components ? Json(*config.n_components) : Json(nullptr);
  doc["bins"] = config.bins;
  doc["cluster"] = {{"k", config.cluster.k},
                    {"max_iter", config.cluster.max_iter},
                    {"tol", config.cluster.tol},
                    {"seed", config.cluster.seed},
                    {"n_init", config.cluster.n_init}};
  doc["projection"] = {{"controls_per_cluster", config.projection.controls_per_cluster
                                                    ? Json(*config.projection.controls_per_cluster)
                                                    : Json(nullptr)},
                       {"inner_shrink", config.projection.inner_shrink},
                       {"same_class_boost", config.projection.same_class_boost},
                       {"epsilon", config.projection.epsilon},
                       {"seed", config.projection.seed}};
  doc["outliers"] = {{"k_neighbors", config.outliers.k_neighbors}, {"percentile", config.outliers.percentile}};
  return doc;
}

Json matrix_to_json(const AttributionMatrix& matrix) {
  Json values = Json::array();
  for (Eigen::Index i = 0; i < matrix.values().rows(); ++i) {
    const auto row = matrix.values().row(i);
    values.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  Json doc = {{"instance_ids", matrix.instance_ids()},
              {"feature_names", matrix.feature_names()},
              {"values", std::move(values)}};
  if (matrix.prior_labels()) doc["prior_labels"] = *matrix.prior_labels();
  return doc;
}

}  // namespace subplex
