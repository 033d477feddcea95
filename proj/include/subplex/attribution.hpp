#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "subplex/matrix.hpp"

namespace subplex {

class Partition;

/// Per-instance, per-feature attribution weights with row ids and column names.
///
/// Values are stored exactly as ingested: signed weights are allowed and no
/// scaling is applied. The object is immutable once constructed, so it can be
/// shared freely between readers.
class AttributionMatrix {
 public:
  /// Validates shape, uniqueness of ids and feature names, and finiteness.
  AttributionMatrix(std::vector<std::string> instance_ids,
                    std::vector<std::string> feature_names,
                    Matrix values,
                    std::optional<std::vector<int>> prior_labels = std::nullopt);

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values_.cols()); }

  const std::vector<std::string>& instance_ids() const noexcept { return instance_ids_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const Matrix& values() const noexcept { return values_; }
  const std::optional<std::vector<int>>& prior_labels() const noexcept { return prior_labels_; }

 private:
  std::vector<std::string> instance_ids_;
  std::vector<std::string> feature_names_;
  Matrix values_;
  std::optional<std::vector<int>> prior_labels_;
};

struct IngestConfig {
  enum class Format { automatic, delimited, json };

  Format format = Format::automatic;
  /// Column holding instance ids; ids default to "0", "1", ... when absent.
  std::optional<std::string> id_column;
  /// Optional integer column with prior group labels (all-or-nothing).
  std::optional<std::string> label_column;
  /// Field delimiter. When unset only comma and tab are auto-detected.
  std::optional<char> delimiter;
};

/// Reads CSV/TSV (header row mandatory) or the JSON object form
/// {"instance_ids":[...], "feature_names":[...], "values":[[...]]}.
AttributionMatrix load_attributions(std::istream& source, const IngestConfig& config = {});
AttributionMatrix load_attributions(const std::string& text, const IngestConfig& config = {});
AttributionMatrix load_attributions_file(const std::string& path, const IngestConfig& config = {});

/// Strictly increasing set of row indices.
class Selection {
 public:
  Selection() = default;

  /// Requires strictly increasing indices below n.
  static Selection from_sorted(std::vector<std::size_t> indices, std::size_t n);
  /// Sorts and deduplicates; every index must be below n.
  static Selection normalized(std::vector<std::size_t> indices, std::size_t n);
  static Selection all(std::size_t n);

  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  bool contains(std::size_t index) const;

  /// Throws IndexRangeError if any index is not below n.
  void check_against(std::size_t n) const;

  friend bool operator==(const Selection&, const Selection&) = default;

 private:
  explicit Selection(std::vector<std::size_t> indices) : indices_(std::move(indices)) {}

  std::vector<std::size_t> indices_;
};

/// Selected rows in index order.
struct InstanceTable {
  std::vector<std::string> feature_names;
  std::vector<std::size_t> indices;
  std::vector<std::string> ids;
  Matrix values;
};

InstanceTable export_selected_instances(const AttributionMatrix& matrix, const Selection& selection);

/// Writes `id,<features...>` with shortest round-trip decimal formatting.
void write_csv(std::ostream& out, const InstanceTable& table, char delimiter = ',');

struct GroupAggregate {
  int group_id = 0;
  std::size_t size = 0;
  std::vector<double> mean_attribution;
};

/// One aggregate per group over the rows of `selection` that belong to it.
/// Without a selection every row counts. Empty intersections report size 0
/// and all-zero means.
std::vector<GroupAggregate> export_group_aggregates(const AttributionMatrix& matrix,
                                                    const Partition& partition,
                                                    const std::optional<Selection>& selection = std::nullopt);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace subplex
