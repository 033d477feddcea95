#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "subplex/attribution.hpp"
#include "subplex/pipeline.hpp"
#include "subplex/serialize.hpp"

namespace subplex {

/// Failure carrying the HTTP status it maps to. `code` is a stable
/// machine-readable tag; `detail` adds fields such as the offending index.
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, std::string code, const std::string& message, Json detail = Json::object())
      : std::runtime_error(message), status_(status), code_(std::move(code)), detail_(std::move(detail)) {}

  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }
  const Json& detail() const noexcept { return detail_; }

  /// {"error":{"code":..., "message":..., <detail fields>}}
  Json body() const;

 private:
  int status_;
  std::string code_;
  Json detail_;
};

/// Everything a reader needs, published as one immutable value.
struct SessionState {
  std::shared_ptr<const AttributionMatrix> matrix;
  PipelineConfig config;
  std::shared_ptr<const PipelineResult> result;
  Selection selection;
  /// Bumped by every mutation.
  std::uint64_t version = 0;
};

struct ServiceOptions {
  /// Directory for snapshots; unset disables them.
  std::optional<std::filesystem::path> snapshot_dir;
  /// Pipeline runs that finish within this window answer synchronously.
  std::chrono::milliseconds sync_wait{1000};
};

struct ApiResponse {
  int status = 200;
  Json body;
};

/// Session store behind the HTTP facade. Every method is thread-safe.
///
/// Readers grab the current SessionState pointer and never block writers.
/// Mutations on one session are serialised and publish a fresh state, so a
/// concurrent reader sees either the old or the new state in full.
class SessionService {
 public:
  explicit SessionService(ServiceOptions options = {});
  ~SessionService();

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  std::string create_session();
  void delete_session(const std::string& id);

  /// Replaces the matrix; clears pipeline results and the selection.
  Json upload_attributions(const std::string& id, const std::string& body, const IngestConfig& ingest = {});

  /// 200 with the run summary, or 202 with a job handle when the run takes
  /// longer than the configured wait.
  ApiResponse run_pipeline(const std::string& id, const Json& config);
  Json job_status(const std::string& id, const std::string& job_id);

  Json layout(const std::string& id);
  Json partition(const std::string& id);
  /// basis is "mean" (needs group) or "deviation".
  Json ranking(const std::string& id, const std::string& basis, std::optional<int> group);
  Json histograms(const std::string& id);

  /// Body {"indices":[...]}; returns the normalised selection.
  Json set_selection(const std::string& id, const Json& body);
  Json selection(const std::string& id);
  Json selected_instances(const std::string& id);
  Json selected_groups(const std::string& id);
  Json selection_split(const std::string& id);

  Json add_subpopulation(const std::string& id);
  Json remove_subpopulation(const std::string& id, int group_id);

  /// Writes the session to <snapshot_dir>/<id>.json.
  Json save_snapshot(const std::string& id);
  /// Loads a snapshot into a new session and returns its id.
  std::string restore_snapshot(const std::string& name);

  /// Current immutable state, for in-process callers.
  std::shared_ptr<const SessionState> state(const std::string& id) const;

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  std::string insert(std::shared_ptr<Session> session);

  ServiceOptions options_;
  mutable std::shared_mutex sessions_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;

  // Pipeline workers; joined on destruction.
  std::mutex workers_mutex_;
  std::vector<std::pair<std::thread, std::shared_future<Json>>> workers_;
};

}  // namespace subplex
