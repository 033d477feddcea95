// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "../support.hpp"
#include "subplex/analysis.hpp"
#include "subplex/bench.hpp"
#include "subplex/projection.hpp"
#include "subplex/serialize.hpp"
#include "subplex/service.hpp"

namespace fs = std::filesystem;
using namespace subplex;
using namespace subplex::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Collects failed checks of one criterion.
struct Check {
  std::vector<std::string> failures;
  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(precision);
  s << v;
  return s.str();
}

// 1. Clustering accuracy and runtime with and without PCA under noise columns.
Check noise_robustness(std::string& detail) {
  Check c;
  const auto data = bench::gen_synthetic_dataset({2000, 42});
  const auto attributions = bench::synthetic_attributions(data, bench::SurrogateConfig{});
  bench::NoiseExperimentConfig cfg;
  cfg.noise_counts = {500, 1000, 2000, 4000};
  cfg.k = 2;
  cfg.repeats = 5;
  const auto rows = bench::run_noise_experiment(attributions, data.halves, cfg);

  const bench::NoiseRow* raw_top = nullptr;
  const bench::NoiseRow* pca_top = nullptr;
  for (const auto& r : rows) {
    if (r.pipeline == "pca") {
      c.require(r.rand_index >= 0.95,
                "pca Rand " + fmt(r.rand_index) + " < 0.95 at " + std::to_string(r.noise_columns) + " noise columns");
    }
    if (r.noise_columns == 4000) (r.pipeline == "raw" ? raw_top : pca_top) = &r;
  }
  if (!raw_top || !pca_top) {
    c.require(false, "missing rows for the top noise level");
    return c;
  }
  c.require(raw_top->rand_index <= pca_top->rand_index - 0.15,
            "raw Rand " + fmt(raw_top->rand_index) + " not 0.15 below pca Rand " + fmt(pca_top->rand_index));
  c.require(pca_top->runtime_ms <= 0.5 * raw_top->runtime_ms,
            "pca " + fmt(pca_top->runtime_ms, 1) + " ms > 0.5 x raw " + fmt(raw_top->runtime_ms, 1) + " ms");
  detail = "top level: raw Rand " + fmt(raw_top->rand_index) + ", pca Rand " + fmt(pca_top->rand_index) +
           ", runtime ratio " + fmt(pca_top->runtime_ms / raw_top->runtime_ms, 3);
  return c;
}

// 2. LAMP against classical MDS on growing blob sets.
Check projection_scaling(std::string& detail) {
  Check c;
  bench::ProjectionTimingConfig cfg;
  cfg.sizes = {500, 1000, 2000, 5000};
  const auto rows = bench::run_projection_timing(cfg);
  std::vector<double> ratios;
  for (std::size_t n : cfg.sizes) {
    double lamp = 0.0, mds = 0.0;
    for (const auto& r : rows) {
      if (r.n != n) continue;
      (r.method == "lamp" ? lamp : mds) = r.runtime_ms;
      c.require(r.silhouette > 0.25, r.method + " silhouette " + fmt(r.silhouette) + " at n=" + std::to_string(n));
    }
    ratios.push_back(mds / lamp);
    if (n == 5000) c.require(lamp < mds, "LAMP not faster than MDS at n=5000");
  }
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    c.require(ratios[i] > ratios[i - 1], "MDS/LAMP ratio not increasing at n=" + std::to_string(cfg.sizes[i]));
  }
  detail = "MDS/LAMP ratios";
  for (double r : ratios) detail += " " + fmt(r, 1);
  return c;
}

// 3. Numeric kernels against independent oracles.
Check kernel_oracles(std::string& detail) {
  Check c;
  std::mt19937_64 rng(2024);
  double emd_err = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t bins = 2 + static_cast<std::size_t>(t % 19);
    const double width = 0.05 + 0.01 * (t % 13);
    const auto a = random_mass(rng, bins), b = random_mass(rng, bins);
    const double got = emd_1d(make_histogram(a, 0.0, width), make_histogram(b, 0.0, width));
    emd_err = std::max(emd_err, std::abs(got - transport_oracle(a, b, width)));
  }
  c.require(emd_err <= 1e-9, "emd_1d deviates from transport oracle by " + std::to_string(emd_err));

  int medoid_bad = 0;
  for (int t = 0; t < 100; ++t) {
    const auto x = random_matrix(rng, 25, 1 + static_cast<std::size_t>(t % 5));
    std::vector<std::size_t> members(25);
    std::iota(members.begin(), members.end(), 0);
    std::shuffle(members.begin(), members.end(), rng);
    members.resize(1 + static_cast<std::size_t>(t % 25));
    if (medoid(x, members) != medoid_oracle(x, members)) ++medoid_bad;
  }
  c.require(medoid_bad == 0, std::to_string(medoid_bad) + " medoids differ from exhaustive argmin");

  // Every pair of labelings with labels in {0,1,2} for n = 2..6, and random n = 7, 8.
  double rand_err = 0.0;
  for (std::size_t n = 2; n <= 6; ++n) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 3;
    std::vector<int> a(n), b(n);
    for (std::size_t ca = 0; ca < total; ++ca) {
      for (std::size_t cb = 0; cb < total; cb += (n > 4 ? 7 : 1)) {
        std::size_t xa = ca, xb = cb;
        for (std::size_t i = 0; i < n; ++i) {
          a[i] = static_cast<int>(xa % 3);
          b[i] = static_cast<int>(xb % 3);
          xa /= 3;
          xb /= 3;
        }
        rand_err = std::max(rand_err, std::abs(rand_index(a, b) - rand_oracle(a, b)));
      }
    }
  }
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 7 + static_cast<std::size_t>(t % 2);
    std::uniform_int_distribution<int> lab(0, 3);
    std::vector<int> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = lab(rng);
      b[i] = lab(rng);
    }
    rand_err = std::max(rand_err, std::abs(rand_index(a, b) - rand_oracle(a, b)));
  }
  c.require(rand_err <= 1e-15, "rand_index deviates from pair counting by " + std::to_string(rand_err));

  double mds_err = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto pts = random_matrix(rng, 5 + static_cast<std::size_t>(t) * 15, 2, -10, 10);
    const auto d = distance_oracle(pts);
    mds_err = std::max(mds_err, (distance_oracle(classical_mds(d)) - d).cwiseAbs().maxCoeff());
  }
  c.require(mds_err <= 1e-6, "classical_mds distance error " + std::to_string(mds_err));
  detail = "max errors: emd " + std::to_string(emd_err) + ", mds " + std::to_string(mds_err);
  return c;
}

// 4. LAMP mapping properties.
Check lamp_properties(std::string& detail) {
  Check c;
  std::mt19937_64 rng(77);
  const auto data = random_matrix(rng, 200, 8);
  const auto labels = random_labels(rng, 200, 3);
  ProjectionConfig cfg;
  const auto idx = select_control_points(labels, cfg);
  ControlSet set;
  set.inputs.resize(static_cast<Eigen::Index>(idx.size()), data.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    set.inputs.row(static_cast<Eigen::Index>(i)) = data.row(static_cast<Eigen::Index>(idx[i]));
    set.groups.push_back(labels[idx[i]]);
  }
  set.outputs = seed_control_layout(set.inputs, set.groups, cfg);
  const auto mapped = lamp_map_points(data, labels, set, cfg);

  bool snapped = true;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    snapped = snapped && mapped.row(static_cast<Eigen::Index>(idx[i])) == set.outputs.row(static_cast<Eigen::Index>(i));
  }
  c.require(snapped, "control points are not mapped exactly onto their coordinates");

  auto shifted = set;
  const Eigen::RowVector2d t(12.5, -7.25);
  shifted.outputs.rowwise() += t;
  const double translation_err = ((lamp_map_points(data, labels, shifted, cfg).rowwise() - t) - mapped).cwiseAbs().maxCoeff();
  c.require(translation_err <= 1e-9, "translation error " + std::to_string(translation_err));

  const auto sel = random_selection(rng, 200, 0.3);
  Matrix subset(static_cast<Eigen::Index>(sel.size()), data.cols());
  std::vector<int> sub_labels;
  for (std::size_t i = 0; i < sel.size(); ++i) {
    subset.row(static_cast<Eigen::Index>(i)) = data.row(static_cast<Eigen::Index>(sel.indices()[i]));
    sub_labels.push_back(labels[sel.indices()[i]]);
  }
  const auto sub = lamp_map_points(subset, sub_labels, set, cfg);
  bool independent = true;
  for (std::size_t i = 0; i < sel.size(); ++i) {
    independent = independent && sub.row(static_cast<Eigen::Index>(i)) == mapped.row(static_cast<Eigen::Index>(sel.indices()[i]));
  }
  c.require(independent, "mapping a subset changes its coordinates");

  double boosted = 0.0, plain = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto blobs = bench::gen_cluster_blobs({3, 30, 1000, 5.0, seed});
    const auto partition = Partition::from_labels(blobs.labels, blobs.data, Provenance::algorithmic);
    ProjectionConfig with, without;
    with.seed = without.seed = seed;
    with.same_class_boost = 1.3;
    without.same_class_boost = 1.0;
    boosted += silhouette(project(blobs.data, partition, with).coords, blobs.labels) / 10.0;
    plain += silhouette(project(blobs.data, partition, without).coords, blobs.labels) / 10.0;
  }
  c.require(boosted >= plain, "boost 1.3 silhouette " + fmt(boosted) + " < boost 1.0 silhouette " + fmt(plain));
  detail = "translation error " + std::to_string(translation_err) + "; mean silhouette boost 1.3 " + fmt(boosted) +
           " vs 1.0 " + fmt(plain);
  return c;
}

// 5. The synthetic lab: exact black box and the attribution box-plot pattern.
Check synthetic_lab(std::string& detail) {
  Check c;
  const auto data = bench::gen_synthetic_dataset({10000, 42});
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    const std::vector<double> row{data.features(i, 0), data.features(i, 1)};
    if (bench::blackbox_predict(row, data.halves[static_cast<std::size_t>(i)]) == data.classes[static_cast<std::size_t>(i)]) {
      ++correct;
    }
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(data.features.rows());
  c.require(accuracy == 1.0, "black-box accuracy " + fmt(accuracy));

  const auto small = bench::gen_synthetic_dataset({2000, 42});
  const auto m = bench::synthetic_attributions(small, bench::SurrogateConfig{});
  auto quantile = [](std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  detail = "accuracy " + fmt(accuracy);
  for (int half = 0; half < 2; ++half) {
    std::vector<double> predictive, other;
    for (Eigen::Index i = 0; i < m.values().rows(); ++i) {
      if (small.halves[static_cast<std::size_t>(i)] != half) continue;
      predictive.push_back(m.values()(i, half));
      other.push_back(m.values()(i, 1 - half));
    }
    const double med = quantile(predictive, 0.5), q75 = quantile(other, 0.75);
    c.require(med > q75, "half " + std::to_string(half) + ": median " + fmt(med) + " <= other q75 " + fmt(q75));
    detail += "; half " + std::to_string(half) + " median " + fmt(med) + " vs other q75 " + fmt(q75);
  }
  return c;
}

std::string csv_text(const AttributionMatrix& m) {
  std::ostringstream out;
  write_csv(out, export_selected_instances(m, Selection::all(m.rows())));
  return out.str();
}

// 6. Partition edits, API round trips and the headless run at application scale.
Check edits_and_headless(std::string& detail) {
  Check c;
  SessionService service;
  const auto id = service.create_session();
  const auto blobs = bench::gen_cluster_blobs({4, 10, 400, 6.0, 5});
  const auto matrix = make_matrix(blobs.data);
  IngestConfig ingest;
  ingest.id_column = "id";
  service.upload_attributions(id, csv_text(matrix), ingest);
  c.require(service.run_pipeline(id, {{"cluster", {{"k", 4}}}}).status == 200, "pipeline did not finish");

  std::mt19937_64 rng(6);
  bool identity = true, cover = true, aggregates = true;
  for (int round = 0; round < 10; ++round) {
    auto sel = random_selection(rng, 400, 0.05 + 0.02 * round);
    if (sel.empty()) sel = Selection::from_sorted({0}, 400);
    std::vector<std::size_t> shuffled = sel.indices();
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    service.set_selection(id, {{"indices", shuffled}});
    const auto rows = service.selected_instances(id)["rows"];
    identity = identity && rows.size() == sel.size();
    for (std::size_t i = 0; identity && i < rows.size(); ++i) {
      const auto index = rows[i]["index"].get<std::size_t>();
      identity = index == sel.indices()[i] && rows[i]["id"] == matrix.instance_ids()[index];
      for (std::size_t f = 0; identity && f < matrix.cols(); ++f) {
        identity = rows[i]["values"][f].get<double>() ==
                   matrix.values()(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(f));
      }
    }

    const auto state = service.state(id);
    const auto& labels = state->result->partition.labels();
    for (const auto& g : service.selected_groups(id)["groups"]) {
      std::vector<std::size_t> members;
      for (auto i : sel.indices())
        if (labels[i] == g["group"].get<int>()) members.push_back(i);
      const auto expected = naive_mean(matrix.values(), members);
      aggregates = aggregates && g["size"].get<std::size_t>() == members.size();
      for (std::size_t f = 0; f < expected.size(); ++f) {
        aggregates = aggregates && std::abs(g["mean_attribution"][f].get<double>() - expected[f]) <= 1e-12;
      }
    }

    service.add_subpopulation(id);
    cover = cover && disjoint_cover(service.state(id)->result->partition, 400);
    const auto groups = service.state(id)->result->partition.group_count();
    if (groups > 2) {
      service.remove_subpopulation(id, static_cast<int>(rng() % groups));
      cover = cover && disjoint_cover(service.state(id)->result->partition, 400);
    }
    const auto after = service.state(id);
    cover = cover && after->result->layout.medoid_coords.size() == after->result->partition.group_count();
  }
  c.require(identity, "set_selection -> selected_instances is not the identity");
  c.require(cover, "partition edits broke the disjoint cover");
  c.require(aggregates, "selected group aggregates differ from brute force");

  // Headless run on a 6600 x 37 matrix with five groups.
  const auto dir = fs::temp_directory_path() / ("subplex_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto big = bench::gen_cluster_blobs({5, 37, 6600, 4.0, 37});
  {
    std::ofstream out(dir / "applicants.csv");
    out << csv_text(make_matrix(big.data));
  }
  const auto start = Clock::now();
  const std::string cmd = std::string(SUBPLEX_CLI) + " run --input " + (dir / "applicants.csv").string() +
                          " --id-column id --k 5 --out-dir " + (dir / "out").string() + " >/dev/null";
  const int status = std::system(cmd.c_str());
  const double elapsed = seconds_since(start);
  c.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "headless run failed");
  if (fs::exists(dir / "out" / "partition.json")) {
    std::ifstream in(dir / "out" / "partition.json");
    const auto doc = Json::parse(in);
    c.require(doc["group_count"] == 5 && doc["labels"].size() == 6600, "headless partition does not have 5 groups");
  } else {
    c.require(false, "partition.json missing");
  }
  c.require(elapsed < 30.0, "headless run took " + fmt(elapsed, 1) + " s");
  fs::remove_all(dir);
  detail = "headless 6600x37 run " + fmt(elapsed, 2) + " s";
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    double budget_s;
    std::function<Check(std::string&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "noise robustness", 300.0, noise_robustness},
      {2, "projection scaling", 180.0, projection_scaling},
      {3, "kernel oracles", 60.0, kernel_oracles},
      {4, "LAMP properties", 600.0, lamp_properties},
      {5, "synthetic lab fidelity", 600.0, synthetic_lab},
      {6, "partition edits and API round trips", 600.0, edits_and_headless},
  };

  int failed = 0;
  for (const auto& criterion : criteria) {
    std::string detail;
    Check check;
    const auto start = Clock::now();
    try {
      check = criterion.run(detail);
    } catch (const std::exception& e) {
      check.require(false, std::string("exception: ") + e.what());
    }
    const double elapsed = seconds_since(start);
    check.require(elapsed <= criterion.budget_s, "over budget: " + fmt(elapsed, 1) + " s");
    const bool ok = check.failures.empty();
    if (!ok) ++failed;
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion.number << " (" << criterion.name << ") "
              << fmt(elapsed, 1) << " s";
    if (!detail.empty()) std::cout << " | " << detail;
    for (const auto& f : check.failures) std::cout << " | " << f;
    std::cout << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
