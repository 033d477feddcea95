#include "subplex/attribution.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "subplex/clustering.hpp"
#include "subplex/errors.hpp"

namespace subplex {

namespace {

template <typename T>
void require_unique(const std::vector<T>& items, const char* what) {
  std::unordered_set<T> seen;
  for (const auto& item : items) {
    if (!seen.insert(item).second) {
      throw ValidationError(std::string("duplicate ") + what + " '" + item + "'");
    }
  }
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// RFC 4180 style records: quoted fields may contain delimiters, doubled
// quotes and newlines. Empty records are dropped.
std::vector<std::vector<std::string>> split_records(std::string_view text, char delimiter) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_record = [&] {
    if (field_started || !record.empty()) {
      record.push_back(std::move(field));
      records.push_back(std::move(record));
    }
    record.clear();
    field.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      record.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      // CRLF line endings
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  end_record();
  return records;
}

double parse_cell(std::string_view raw, std::size_t row, const std::string& column) {
  const auto cell = trim(raw);
  if (cell.empty()) throw ParseError(row, column, "empty attribution cell");
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(row, column, "non-numeric attribution cell '" + std::string(cell) + "'");
  }
  if (!std::isfinite(value)) {
    throw ValidationError("row " + std::to_string(row) + ", column '" + column + "': non-finite value");
  }
  return value;
}

int parse_label(std::string_view raw, std::size_t row, const std::string& column) {
  const auto cell = trim(raw);
  if (cell.empty()) {
    throw ValidationError("row " + std::to_string(row) + ", column '" + column +
                          "': empty prior label (label column must be complete)");
  }
  int value = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError(row, column, "non-integer label '" + std::string(cell) + "'");
  }
  return value;
}

AttributionMatrix parse_delimited(std::string_view text, const IngestConfig& config) {
  char delimiter = ',';
  if (config.delimiter) {
    delimiter = *config.delimiter;
  } else {
    const auto header_end = text.find('\n');
    const auto header = text.substr(0, header_end);
    if (header.find('\t') != std::string_view::npos) delimiter = '\t';
  }

  auto records = split_records(text, delimiter);
  if (records.empty()) throw ValidationError("missing header row");

  std::vector<std::string> header;
  header.reserve(records.front().size());
  for (const auto& name : records.front()) header.emplace_back(trim(name));

  auto find_column = [&](const std::optional<std::string>& name) -> std::optional<std::size_t> {
    if (!name) return std::nullopt;
    const auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) throw ValidationError("column '" + *name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto id_col = find_column(config.id_column);
  const auto label_col = find_column(config.label_column);
  if (id_col && label_col && *id_col == *label_col) {
    throw ValidationError("id column and label column must differ");
  }

  std::vector<std::size_t> value_cols;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == id_col || c == label_col) continue;
    value_cols.push_back(c);
    feature_names.push_back(header[c]);
  }
  if (feature_names.empty()) throw ValidationError("no attribution columns");
  require_unique(feature_names, "feature name");

  const std::size_t n = records.size() - 1;
  if (n == 0) throw ValidationError("no data rows");

  Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(value_cols.size()));
  std::vector<std::string> ids;
  ids.reserve(n);
  std::optional<std::vector<int>> labels;
  if (label_col) labels.emplace().reserve(n);

  for (std::size_t r = 0; r < n; ++r) {
    const auto& rec = records[r + 1];
    const std::size_t row = r + 1;
    if (rec.size() != header.size()) {
      throw ParseError(row, "", "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(rec.size()));
    }
    ids.push_back(id_col ? std::string(trim(rec[*id_col])) : std::to_string(r));
    if (label_col) labels->push_back(parse_label(rec[*label_col], row, header[*label_col]));
    for (std::size_t j = 0; j < value_cols.size(); ++j) {
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          parse_cell(rec[value_cols[j]], row, feature_names[j]);
    }
  }
  return AttributionMatrix(std::move(ids), std::move(feature_names), std::move(values), std::move(labels));
}

AttributionMatrix parse_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, "", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError(0, "", "expected a JSON object");
  if (!doc.contains("feature_names") || !doc.contains("values")) {
    throw ValidationError("JSON attributions need 'feature_names' and 'values'");
  }

  std::vector<std::string> features;
  for (const auto& f : doc.at("feature_names")) {
    if (!f.is_string()) throw ParseError(0, "feature_names", "feature names must be strings");
    features.push_back(f.get<std::string>());
  }
  const auto& rows = doc.at("values");
  if (!rows.is_array() || rows.empty()) throw ValidationError("'values' must be a non-empty array");
  if (features.empty()) throw ValidationError("no attribution columns");

  const std::size_t n = rows.size();
  Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(features.size()));
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = rows[r];
    if (!row.is_array() || row.size() != features.size()) {
      throw ParseError(r + 1, "", "expected " + std::to_string(features.size()) + " values");
    }
    for (std::size_t j = 0; j < features.size(); ++j) {
      if (!row[j].is_number()) throw ParseError(r + 1, features[j], "non-numeric attribution cell");
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = row[j].get<double>();
    }
  }

  std::vector<std::string> ids;
  if (doc.contains("instance_ids")) {
    for (const auto& id : doc.at("instance_ids")) {
      ids.push_back(id.is_string() ? id.get<std::string>() : id.dump());
    }
  } else {
    for (std::size_t r = 0; r < n; ++r) ids.push_back(std::to_string(r));
  }

  std::optional<std::vector<int>> labels;
  if (doc.contains("prior_labels") && !doc.at("prior_labels").is_null()) {
    labels.emplace();
    for (const auto& l : doc.at("prior_labels")) {
      if (!l.is_number_integer()) throw ValidationError("prior_labels must be integers");
      labels->push_back(l.get<int>());
    }
  }
  return AttributionMatrix(std::move(ids), std::move(features), std::move(values), std::move(labels));
}

}  // namespace

AttributionMatrix::AttributionMatrix(std::vector<std::string> instance_ids,
                                     std::vector<std::string> feature_names,
                                     Matrix values,
                                     std::optional<std::vector<int>> prior_labels)
    : instance_ids_(std::move(instance_ids)),
      feature_names_(std::move(feature_names)),
      values_(std::move(values)),
      prior_labels_(std::move(prior_labels)) {
  if (values_.rows() < 1 || values_.cols() < 1) throw ValidationError("attribution matrix must be at least 1x1");
  if (instance_ids_.size() != rows()) throw ValidationError("instance id count does not match row count");
  if (feature_names_.size() != cols()) throw ValidationError("feature name count does not match column count");
  if (prior_labels_ && prior_labels_->size() != rows()) {
    throw ValidationError("prior label count does not match row count");
  }
  if (!values_.allFinite()) throw ValidationError("attribution values must be finite");
  require_unique(instance_ids_, "instance id");
  require_unique(feature_names_, "feature name");
}

AttributionMatrix load_attributions(const std::string& text, const IngestConfig& config) {
  std::string_view body(text);
  if (body.starts_with("\xEF\xBB\xBF")) body.remove_prefix(3);

  auto format = config.format;
  if (format == IngestConfig::Format::automatic) {
    const auto first = body.find_first_not_of(" \t\r\n");
    format = (first != std::string_view::npos && body[first] == '{') ? IngestConfig::Format::json
                                                                     : IngestConfig::Format::delimited;
  }
  return format == IngestConfig::Format::json ? parse_json(body) : parse_delimited(body, config);
}

AttributionMatrix load_attributions(std::istream& source, const IngestConfig& config) {
  std::string text((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
  return load_attributions(text, config);
}

AttributionMatrix load_attributions_file(const std::string& path, const IngestConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return load_attributions(in, config);
}

Selection Selection::from_sorted(std::vector<std::size_t> indices, std::size_t n) {
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= n) throw IndexRangeError(indices[i], n);
    if (i > 0 && indices[i] <= indices[i - 1]) throw ValidationError("selection indices must be strictly increasing");
  }
  return Selection(std::move(indices));
}

Selection Selection::normalized(std::vector<std::size_t> indices, std::size_t n) {
  for (auto i : indices) {
    if (i >= n) throw IndexRangeError(i, n);
  }
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  return Selection(std::move(indices));
}

Selection Selection::all(std::size_t n) {
  std::vector<std::size_t> indices(n);
  for (std::size_t i = 0; i < n; ++i) indices[i] = i;
  return Selection(std::move(indices));
}

bool Selection::contains(std::size_t index) const {
  return std::binary_search(indices_.begin(), indices_.end(), index);
}

void Selection::check_against(std::size_t n) const {
  if (!indices_.empty() && indices_.back() >= n) throw IndexRangeError(indices_.back(), n);
}

InstanceTable export_selected_instances(const AttributionMatrix& matrix, const Selection& selection) {
  selection.check_against(matrix.rows());
  InstanceTable table;
  table.feature_names = matrix.feature_names();
  table.indices = selection.indices();
  table.values.resize(static_cast<Eigen::Index>(selection.size()), static_cast<Eigen::Index>(matrix.cols()));
  table.ids.reserve(selection.size());
  Eigen::Index r = 0;
  for (auto i : selection.indices()) {
    table.ids.push_back(matrix.instance_ids()[i]);
    table.values.row(r++) = matrix.values().row(static_cast<Eigen::Index>(i));
  }
  return table;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

namespace {

std::string csv_field(const std::string& s, char delimiter) {
  if (s.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void write_csv(std::ostream& out, const InstanceTable& table, char delimiter) {
  out << "id";
  for (const auto& f : table.feature_names) out << delimiter << csv_field(f, delimiter);
  out << '\n';
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    out << csv_field(table.ids[static_cast<std::size_t>(r)], delimiter);
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) out << delimiter << format_double(table.values(r, c));
    out << '\n';
  }
}

std::vector<GroupAggregate> export_group_aggregates(const AttributionMatrix& matrix,
                                                    const Partition& partition,
                                                    const std::optional<Selection>& selection) {
  if (partition.size() != matrix.rows()) throw ValidationError("partition does not cover the attribution rows");
  if (selection) selection->check_against(matrix.rows());

  const auto m = static_cast<Eigen::Index>(matrix.cols());
  std::vector<RowVector> sums(partition.group_count(), RowVector::Zero(m));
  std::vector<std::size_t> counts(partition.group_count(), 0);

  auto accumulate = [&](std::size_t i) {
    const auto g = static_cast<std::size_t>(partition.labels()[i]);
    sums[g] += matrix.values().row(static_cast<Eigen::Index>(i));
    ++counts[g];
  };
  if (selection) {
    for (auto i : selection->indices()) accumulate(i);
  } else {
    for (std::size_t i = 0; i < matrix.rows(); ++i) accumulate(i);
  }

  std::vector<GroupAggregate> out;
  out.reserve(partition.group_count());
  for (std::size_t g = 0; g < partition.group_count(); ++g) {
    GroupAggregate agg;
    agg.group_id = static_cast<int>(g);
    agg.size = counts[g];
    agg.mean_attribution.assign(static_cast<std::size_t>(m), 0.0);
    if (counts[g] > 0) {
      for (Eigen::Index j = 0; j < m; ++j) {
        agg.mean_attribution[static_cast<std::size_t>(j)] = sums[g](j) / static_cast<double>(counts[g]);
      }
    }
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace subplex
