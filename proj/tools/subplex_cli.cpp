// Command-line entry points: headless pipeline, benchmark sweeps and the HTTP service.
//
// Exit codes: 0 success, 2 usage or input errors, 1 runtime failures.

#include <charconv>
#include <csignal>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "subplex/bench.hpp"
#include "subplex/errors.hpp"
#include "subplex/http_server.hpp"
#include "subplex/pipeline.hpp"
#include "subplex/serialize.hpp"
#include "subplex/service.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct RunArgs {
  std::string input;
  std::string out_dir;
  std::size_t k = 5;
  std::optional<std::size_t> components;
  std::uint64_t seed = 42;
  std::size_t bins = 20;
  std::optional<std::string> id_column;
  std::optional<std::string> label_column;
};

struct BenchArgs {
  std::string out_dir = ".";
  std::uint64_t seed = 42;
  bool full = false;
  std::size_t repeats = 5;
  std::vector<std::size_t> components{10};
};

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::string> ui_dir;
  std::optional<std::string> snapshot_dir;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

int run_pipeline_command(const RunArgs& args) {
  subplex::IngestConfig ingest;
  ingest.id_column = args.id_column;
  ingest.label_column = args.label_column;
  const auto matrix = subplex::load_attributions_file(args.input, ingest);

  subplex::PipelineConfig cfg;
  cfg.n_components = args.components;
  cfg.cluster.k = args.k;
  cfg.cluster.seed = args.seed;
  cfg.projection.seed = args.seed;
  cfg.pca.seed = args.seed;
  cfg.bins = args.bins;
  const auto result = subplex::run_pipeline(matrix, cfg);

  subplex::Json ranking;
  ranking["deviation"] =
      result.rankings.deviation ? subplex::ranking_to_json(matrix, *result.rankings.deviation) : subplex::Json(nullptr);
  ranking["by_group"] = subplex::Json::array();
  for (const auto& r : result.rankings.by_group) ranking["by_group"].push_back(subplex::ranking_to_json(matrix, r));

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  write_file(out / "layout.json", subplex::layout_to_json(matrix, result.partition, result.layout).dump(2) + "\n");
  write_file(out / "partition.json", subplex::partition_to_json(matrix, result.partition).dump(2) + "\n");
  write_file(out / "ranking.json", ranking.dump(2) + "\n");

  std::cout << "instances " << matrix.rows() << ", features " << matrix.cols() << ", groups "
            << result.partition.group_count() << "\n";
  std::cout << "wrote " << (out / "layout.json").string() << ", partition.json, ranking.json\n";
  return 0;
}

int bench_noise_command(const BenchArgs& args) {
  subplex::bench::SyntheticSpec spec;
  spec.n = args.full ? 10000 : 2000;
  spec.seed = args.seed;
  subplex::bench::NoiseExperimentConfig cfg;
  cfg.noise_counts = args.full ? std::vector<std::size_t>{1000, 2000, 4000, 6000, 8000, 10000}
                               : std::vector<std::size_t>{500, 1000, 2000, 4000};
  cfg.pca_components = args.components;
  cfg.repeats = args.repeats;
  cfg.seed = args.seed;

  const auto data = subplex::bench::gen_synthetic_dataset(spec);
  subplex::bench::SurrogateConfig surrogate;
  surrogate.seed = args.seed;
  const auto attributions = subplex::bench::synthetic_attributions(data, surrogate);
  const auto rows = subplex::bench::run_noise_experiment(attributions, data.halves, cfg);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  {
    std::ofstream csv(out / "noise_report.csv");
    subplex::bench::write_csv(csv, rows);
  }
  write_file(out / "noise_report.json", subplex::bench::to_json_text(rows) + "\n");

  std::cout << std::left << std::setw(8) << "noise" << std::setw(10) << "pipeline" << std::setw(12) << "components"
            << std::setw(12) << "rand" << "runtime_ms\n";
  for (const auto& r : rows) {
    std::cout << std::left << std::setw(8) << r.noise_columns << std::setw(10) << r.pipeline << std::setw(12)
              << r.components << std::setw(12) << std::fixed << std::setprecision(4) << r.rand_index
              << std::setprecision(1) << r.runtime_ms << "\n";
  }
  return 0;
}

int bench_projection_command(const BenchArgs& args) {
  subplex::bench::ProjectionTimingConfig cfg;
  cfg.seed = args.seed;
  if (args.full) cfg.sizes = {500, 1000, 2000, 5000, 10000};
  const auto rows = subplex::bench::run_projection_timing(cfg);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  {
    std::ofstream csv(out / "projection_report.csv");
    subplex::bench::write_csv(csv, rows);
  }
  write_file(out / "projection_report.json", subplex::bench::to_json_text(rows) + "\n");

  std::cout << std::left << std::setw(8) << "n" << std::setw(8) << "method" << std::setw(14) << "runtime_ms"
            << "silhouette\n";
  for (const auto& r : rows) {
    std::cout << std::left << std::setw(8) << r.n << std::setw(8) << r.method << std::setw(14) << std::fixed
              << std::setprecision(1) << r.runtime_ms << std::setprecision(4) << r.silhouette << "\n";
  }
  return 0;
}

subplex::HttpServer* g_server = nullptr;

extern "C" void handle_stop(int) {
  if (g_server) g_server->stop();
}

int serve_command(const ServeArgs& args) {
  subplex::ServiceOptions options;
  if (args.snapshot_dir) options.snapshot_dir = fs::path(*args.snapshot_dir);
  subplex::SessionService service(options);
  subplex::HttpOptions http;
  http.ui_dir = args.ui_dir;
  subplex::HttpServer server(service, http);
  if (!server.bind(args.host, args.port)) {
    std::cerr << "error: cannot bind " << args.host << ":" << args.port << "\n";
    return kRuntimeError;
  }
  g_server = &server;
  std::signal(SIGINT, handle_stop);
  std::signal(SIGTERM, handle_stop);
  std::cout << "listening on http://" << args.host << ":" << args.port << std::endl;
  const bool ok = server.listen_after_bind();
  g_server = nullptr;
  return ok ? 0 : kRuntimeError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subpopulation analysis of per-instance feature attributions"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Cluster, project and rank an attribution file");
  run_cmd->add_option("--input", run.input, "CSV, TSV or JSON attribution file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out-dir", run.out_dir, "Directory for layout.json, partition.json, ranking.json")
      ->required();
  run_cmd->add_option("--k", run.k, "Number of subpopulations")->capture_default_str();
  run_cmd->add_option("--pca-components", run.components, "Principal components (default min(10, n, m))");
  run_cmd->add_option("--seed", run.seed, "Seed for every random choice")->capture_default_str();
  run_cmd->add_option("--bins", run.bins, "Histogram bins for deviation ranking")->capture_default_str();
  run_cmd->add_option("--id-column", run.id_column, "Column holding instance ids");
  run_cmd->add_option("--label-column", run.label_column, "Column holding prior integer labels");

  BenchArgs noise;
  auto* noise_cmd = app.add_subcommand("bench-noise", "Clustering accuracy and runtime under noise columns");
  noise_cmd->add_option("--out-dir", noise.out_dir, "Report directory")->capture_default_str();
  noise_cmd->add_option("--seed", noise.seed, "Seed")->capture_default_str();
  noise_cmd->add_option("--repeats", noise.repeats, "Repeats per noise level")->capture_default_str()->check(
      CLI::PositiveNumber);
  noise_cmd->add_option("--pca-components", noise.components, "One PCA pipeline per value")->capture_default_str();
  noise_cmd->add_flag("--full", noise.full, "n = 10000 and 1000..10000 noise columns");

  BenchArgs projection;
  auto* projection_cmd = app.add_subcommand("bench-projection", "LAMP against classical MDS runtime and quality");
  projection_cmd->add_option("--out-dir", projection.out_dir, "Report directory")->capture_default_str();
  projection_cmd->add_option("--seed", projection.seed, "Seed")->capture_default_str();
  projection_cmd->add_flag("--full", projection.full, "Add n = 10000");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--host", serve.host, "Interface to bind")->capture_default_str();
  auto* port_opt = serve_cmd->add_option("--port", serve.port, "TCP port (falls back to SUBPLEX_PORT)")
                       ->check(CLI::Range(1, 65535))
                       ->capture_default_str();
  serve_cmd->add_option("--ui-dir", serve.ui_dir, "Serve this directory at /")->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--snapshot-dir", serve.snapshot_dir, "Directory for session snapshots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  // Read by hand: CLI11 silently ignores environment values that fail validation.
  if (*serve_cmd && port_opt->count() == 0) {
    if (const char* env = std::getenv("SUBPLEX_PORT"); env && *env) {
      const std::string text(env);
      const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), serve.port);
      if (ec != std::errc() || end != text.data() + text.size() || serve.port < 1 || serve.port > 65535) {
        std::cerr << "error: SUBPLEX_PORT must be an integer in [1, 65535], got '" << text << "'\n";
        return kUsageError;
      }
    }
  }

  try {
    if (*run_cmd) return run_pipeline_command(run);
    if (*noise_cmd) return bench_noise_command(noise);
    if (*projection_cmd) return bench_projection_command(projection);
    if (*serve_cmd) return serve_command(serve);
  } catch (const subplex::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const subplex::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const subplex::RangeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
