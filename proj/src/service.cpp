#include "subplex/service.hpp"

#include <fstream>
#include <future>
#include <map>
#include <random>
#include <sstream>

#include "subplex/analysis.hpp"
#include "subplex/errors.hpp"

namespace subplex {

Json ApiError::body() const {
  Json err = detail_.is_object() ? detail_ : Json::object();
  err["code"] = code_;
  err["message"] = what();
  return {{"error", std::move(err)}};
}

struct SessionService::Session {
  std::string id;
  // Serialises mutations; never held while a reader copies the state.
  std::mutex edit_mutex;
  mutable std::mutex state_mutex;
  std::shared_ptr<const SessionState> state = std::make_shared<SessionState>();

  std::mutex jobs_mutex;
  std::map<std::string, std::shared_future<Json>> jobs;
  std::uint64_t next_job = 1;

  std::shared_ptr<const SessionState> load() const {
    std::lock_guard lock(state_mutex);
    return state;
  }
  // Caller holds edit_mutex.
  void publish(SessionState next) {
    next.version = load()->version + 1;
    auto fresh = std::make_shared<const SessionState>(std::move(next));
    std::lock_guard lock(state_mutex);
    state = std::move(fresh);
  }
};

namespace {

// Maps engine exceptions onto API errors.
template <typename F>
auto guarded(F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const ApiError&) {
    throw;
  } catch (const IndexRangeError& e) {
    throw ApiError(422, "index_out_of_range", e.what(), {{"index", e.index()}});
  } catch (const ParseError& e) {
    throw ApiError(422, "parse_error", e.what(), {{"row", e.row()}, {"column", e.column()}});
  } catch (const StageError& e) {
    throw ApiError(500, "stage_failed", e.what(), {{"stage", e.stage()}});
  } catch (const ValidationError& e) {
    throw ApiError(422, "validation_error", e.what());
  } catch (const RangeError& e) {
    throw ApiError(422, "range_error", e.what());
  }
}

const AttributionMatrix& require_matrix(const SessionState& state) {
  if (!state.matrix) throw ApiError(409, "no_attributions", "no attributions uploaded yet");
  return *state.matrix;
}

const PipelineResult& require_result(const SessionState& state) {
  require_matrix(state);
  if (!state.result) throw ApiError(409, "no_partition", "run the pipeline first");
  return *state.result;
}

std::string random_id() {
  static std::mutex mutex;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mutex);
  std::ostringstream out;
  out << std::hex;
  for (int i = 0; i < 2; ++i) {
    const auto word = rng();
    for (int nibble = 15; nibble >= 0; --nibble) out << ((word >> (4 * nibble)) & 0xF);
  }
  return out.str();
}

bool valid_snapshot_name(const std::string& name) {
  if (name.empty() || name.size() > 64) return false;
  for (char c : name) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

Json selection_json(const SessionState& state) {
  return {{"indices", state.selection.indices()}, {"version", state.version}};
}

Json run_summary(const std::string& id, const SessionState& state) {
  const auto& result = *state.result;
  const std::string base = "/sessions/" + id;
  return {{"status", "done"},
          {"version", state.version},
          {"group_count", result.partition.group_count()},
          {"n_components", result.reduced.values.cols()},
          {"explained_variance_ratio", result.reduced.explained_variance_ratio},
          {"timings", timings_to_json(result.timings)},
          {"links",
           {{"layout", base + "/layout"},
            {"partition", base + "/partition"},
            {"ranking", base + "/ranking?basis=deviation"}}}};
}

}  // namespace

SessionService::SessionService(ServiceOptions options) : options_(std::move(options)) {}

SessionService::~SessionService() {
  std::lock_guard lock(workers_mutex_);
  for (auto& [thread, done] : workers_) {
    if (thread.joinable()) thread.join();
  }
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ApiError(404, "unknown_session", "no session '" + id + "'");
  return it->second;
}

std::string SessionService::insert(std::shared_ptr<Session> session) {
  std::unique_lock lock(sessions_mutex_);
  std::string id;
  do {
    id = random_id();
  } while (sessions_.count(id));
  session->id = id;
  sessions_.emplace(id, std::move(session));
  return id;
}

std::string SessionService::create_session() { return insert(std::make_shared<Session>()); }

void SessionService::delete_session(const std::string& id) {
  std::unique_lock lock(sessions_mutex_);
  if (sessions_.erase(id) == 0) throw ApiError(404, "unknown_session", "no session '" + id + "'");
}

std::shared_ptr<const SessionState> SessionService::state(const std::string& id) const { return find(id)->load(); }

Json SessionService::upload_attributions(const std::string& id, const std::string& body, const IngestConfig& ingest) {
  auto session = find(id);
  auto matrix = guarded([&] { return std::make_shared<const AttributionMatrix>(load_attributions(body, ingest)); });
  std::lock_guard edit(session->edit_mutex);
  SessionState next = *session->load();
  next.matrix = matrix;
  next.result.reset();
  next.selection = Selection();
  session->publish(std::move(next));
  return {{"rows", matrix->rows()},
          {"cols", matrix->cols()},
          {"feature_names", matrix->feature_names()},
          {"has_prior_labels", matrix->prior_labels().has_value()},
          {"version", session->load()->version}};
}

ApiResponse SessionService::run_pipeline(const std::string& id, const Json& body) {
  auto session = find(id);
  const auto snapshot = session->load();
  const auto matrix = snapshot->matrix;
  if (!matrix) throw ApiError(409, "no_attributions", "no attributions uploaded yet");
  const auto config = guarded([&] {
    auto cfg = pipeline_config_from_json(body);
    cfg.validate_for(*matrix);
    return cfg;
  });

  // The session keeps the job's future, so the task must not own the session.
  std::packaged_task<Json()> task([weak = std::weak_ptr<Session>(session), matrix, config] {
    auto result = guarded([&] { return std::make_shared<const PipelineResult>(subplex::run_pipeline(*matrix, config)); });
    const auto session = weak.lock();
    if (!session) throw ApiError(404, "unknown_session", "session was deleted while the pipeline ran");
    std::lock_guard edit(session->edit_mutex);
    SessionState next = *session->load();
    if (next.matrix != matrix) {
      throw ApiError(409, "superseded", "attributions were replaced while the pipeline ran");
    }
    next.config = config;
    next.result = std::move(result);
    session->publish(std::move(next));
    return run_summary(session->id, *session->load());
  });
  std::shared_future<Json> future = task.get_future().share();

  std::string job_id;
  {
    std::lock_guard lock(session->jobs_mutex);
    job_id = "job-" + std::to_string(session->next_job++);
    session->jobs.emplace(job_id, future);
  }
  {
    std::lock_guard lock(workers_mutex_);
    std::erase_if(workers_, [](auto& worker) {
      if (worker.second.wait_for(std::chrono::seconds(0)) != std::future_status::ready) return false;
      worker.first.join();
      return true;
    });
    workers_.emplace_back(std::thread(std::move(task)), future);
  }

  if (future.wait_for(options_.sync_wait) == std::future_status::ready) {
    Json done = future.get();
    done["job_id"] = job_id;
    return {200, std::move(done)};
  }
  return {202,
          {{"status", "running"},
           {"job_id", job_id},
           {"poll", "/sessions/" + id + "/jobs/" + job_id}}};
}

Json SessionService::job_status(const std::string& id, const std::string& job_id) {
  auto session = find(id);
  std::shared_future<Json> future;
  {
    std::lock_guard lock(session->jobs_mutex);
    const auto it = session->jobs.find(job_id);
    if (it == session->jobs.end()) throw ApiError(404, "unknown_job", "no job '" + job_id + "'");
    future = it->second;
  }
  if (future.wait_for(std::chrono::seconds(0)) != std::future_status::ready) {
    return {{"status", "running"}, {"job_id", job_id}};
  }
  try {
    Json done = future.get();
    done["job_id"] = job_id;
    return done;
  } catch (const ApiError& e) {
    Json failed = e.body();
    failed["status"] = "failed";
    failed["job_id"] = job_id;
    failed["http_status"] = e.status();
    return failed;
  }
}

Json SessionService::layout(const std::string& id) {
  const auto state = find(id)->load();
  const auto& result = require_result(*state);
  Json doc = layout_to_json(*state->matrix, result.partition, result.layout);
  doc["version"] = state->version;
  return doc;
}

Json SessionService::partition(const std::string& id) {
  const auto state = find(id)->load();
  const auto& result = require_result(*state);
  Json doc = partition_to_json(*state->matrix, result.partition);
  doc["version"] = state->version;
  return doc;
}

Json SessionService::ranking(const std::string& id, const std::string& basis, std::optional<int> group) {
  const auto state = find(id)->load();
  const auto& result = require_result(*state);
  Json doc;
  if (basis == "mean") {
    if (!group) throw ApiError(422, "missing_group", "basis=mean needs a group");
    if (!result.partition.has_group(*group)) {
      throw ApiError(422, "unknown_group", "unknown group " + std::to_string(*group), {{"group", *group}});
    }
    doc = ranking_to_json(*state->matrix, result.rankings.by_group[static_cast<std::size_t>(*group)]);
  } else if (basis == "deviation") {
    if (!result.rankings.deviation) {
      throw ApiError(409, "needs_two_groups", "deviation ranking needs at least two groups");
    }
    doc = ranking_to_json(*state->matrix, *result.rankings.deviation);
  } else {
    throw ApiError(422, "unknown_basis", "basis must be 'mean' or 'deviation'");
  }
  doc["version"] = state->version;
  return doc;
}

Json SessionService::histograms(const std::string& id) {
  const auto state = find(id)->load();
  const auto& result = require_result(*state);
  Json doc = guarded([&] {
    return distributions_to_json(*state->matrix,
                                 feature_distributions(*state->matrix, result.partition, state->config.bins));
  });
  doc["version"] = state->version;
  return doc;
}

Json SessionService::set_selection(const std::string& id, const Json& body) {
  auto session = find(id);
  if (!body.is_object() || !body.contains("indices") || !body.at("indices").is_array()) {
    throw ApiError(422, "validation_error", "body must be {\"indices\": [...]}");
  }
  std::lock_guard edit(session->edit_mutex);
  SessionState next = *session->load();
  const auto& matrix = require_matrix(next);
  std::vector<std::size_t> indices;
  for (const auto& v : body.at("indices")) {
    if (!v.is_number_integer()) throw ApiError(422, "validation_error", "indices must be integers");
    if (v.get<long long>() < 0) {
      throw ApiError(422, "index_out_of_range", "negative index", {{"index", v.get<long long>()}});
    }
    indices.push_back(v.get<std::size_t>());
  }
  next.selection = guarded([&] { return Selection::normalized(std::move(indices), matrix.rows()); });
  session->publish(std::move(next));
  return selection_json(*session->load());
}

Json SessionService::selection(const std::string& id) {
  const auto state = find(id)->load();
  return selection_json(*state);
}

Json SessionService::selected_instances(const std::string& id) {
  const auto state = find(id)->load();
  const auto& matrix = require_matrix(*state);
  const auto table = guarded([&] { return export_selected_instances(matrix, state->selection); });
  Json doc = instances_to_json(table, state->result ? &state->result->partition : nullptr);
  doc["version"] = state->version;
  return doc;
}

Json SessionService::selected_groups(const std::string& id) {
  const auto state = find(id)->load();
  const auto& result = require_result(*state);
  Json doc = guarded([&] {
    return aggregates_to_json(*state->matrix,
                              export_group_aggregates(*state->matrix, result.partition, state->selection));
  });
  doc["version"] = state->version;
  return doc;
}

Json SessionService::selection_split(const std::string& id) {
  const auto state = find(id)->load();
  const auto& result = require_result(*state);
  Json doc = guarded([&] {
    return split_to_json(*state->matrix, selection_split_stats(*state->matrix, result.partition, state->selection));
  });
  doc["version"] = state->version;
  return doc;
}

Json SessionService::add_subpopulation(const std::string& id) {
  auto session = find(id);
  std::lock_guard edit(session->edit_mutex);
  SessionState next = *session->load();
  const auto& result = require_result(next);
  next.result = guarded([&] {
    auto edited = subplex::add_subpopulation(result.partition, next.selection, result.reduced.values);
    return std::make_shared<const PipelineResult>(
        refresh_after_edit(*next.matrix, result.reduced, std::move(edited), next.config));
  });
  session->publish(std::move(next));
  const auto state = session->load();
  Json doc = partition_to_json(*state->matrix, state->result->partition);
  doc["version"] = state->version;
  return doc;
}

Json SessionService::remove_subpopulation(const std::string& id, int group_id) {
  auto session = find(id);
  std::lock_guard edit(session->edit_mutex);
  SessionState next = *session->load();
  const auto& result = require_result(next);
  if (!result.partition.has_group(group_id)) {
    throw ApiError(422, "unknown_group", "unknown group " + std::to_string(group_id), {{"group", group_id}});
  }
  next.result = guarded([&] {
    auto edited = subplex::remove_subpopulation(result.partition, group_id, result.reduced.values);
    return std::make_shared<const PipelineResult>(
        refresh_after_edit(*next.matrix, result.reduced, std::move(edited), next.config));
  });
  session->publish(std::move(next));
  const auto state = session->load();
  Json doc = partition_to_json(*state->matrix, state->result->partition);
  doc["version"] = state->version;
  return doc;
}

Json SessionService::save_snapshot(const std::string& id) {
  if (!options_.snapshot_dir) throw ApiError(409, "snapshots_disabled", "no snapshot directory configured");
  auto session = find(id);
  const auto state = session->load();
  const auto& matrix = require_matrix(*state);

  Json doc = {{"format", "subplex-session"},
              {"format_version", 1},
              {"matrix", matrix_to_json(matrix)},
              {"config", pipeline_config_to_json(state->config)},
              {"selection", state->selection.indices()}};
  doc["partition"] = state->result ? partition_to_json(matrix, state->result->partition) : Json(nullptr);

  std::filesystem::create_directories(*options_.snapshot_dir);
  const auto path = *options_.snapshot_dir / (id + ".json");
  const auto tmp = *options_.snapshot_dir / (id + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ApiError(500, "snapshot_failed", "cannot write snapshot");
    out << doc.dump();
    if (!out) throw ApiError(500, "snapshot_failed", "cannot write snapshot");
  }
  std::filesystem::rename(tmp, path);
  return {{"snapshot", id}, {"version", state->version}};
}

std::string SessionService::restore_snapshot(const std::string& name) {
  if (!options_.snapshot_dir) throw ApiError(409, "snapshots_disabled", "no snapshot directory configured");
  if (!valid_snapshot_name(name)) throw ApiError(422, "validation_error", "invalid snapshot name");
  const auto path = *options_.snapshot_dir / (name + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ApiError(404, "unknown_snapshot", "no snapshot '" + name + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();

  SessionState restored = guarded([&] {
    Json doc;
    try {
      doc = Json::parse(buffer.str());
    } catch (const Json::exception& e) {
      throw ValidationError(std::string("corrupt snapshot: ") + e.what());
    }
    if (doc.value("format", "") != "subplex-session") throw ValidationError("not a session snapshot");
    IngestConfig ingest;
    ingest.format = IngestConfig::Format::json;
    SessionState s;
    s.matrix = std::make_shared<const AttributionMatrix>(load_attributions(doc.at("matrix").dump(), ingest));
    s.config = pipeline_config_from_json(doc.at("config"));
    std::vector<std::size_t> selection;
    for (const auto& v : doc.at("selection")) selection.push_back(v.get<std::size_t>());
    s.selection = Selection::from_sorted(std::move(selection), s.matrix->rows());
    if (!doc.at("partition").is_null()) {
      // Reduction is deterministic, so only the labels need storing.
      auto reduced = pca_fit_transform(s.matrix->values(), s.config.components_for(*s.matrix), s.config.pca);
      auto partition = partition_from_json(doc.at("partition"), reduced.values);
      s.result = std::make_shared<const PipelineResult>(
          refresh_after_edit(*s.matrix, std::move(reduced), std::move(partition), s.config));
    }
    return s;
  });

  auto session = std::make_shared<Session>();
  restored.version = 1;
  session->state = std::make_shared<const SessionState>(std::move(restored));
  return insert(std::move(session));
}

}  // namespace subplex
