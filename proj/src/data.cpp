#include "assay/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace assay {

using nlohmann::json;

Direction parse_direction(std::string_view text) {
  if (text == "min") return Direction::min;
  if (text == "max") return Direction::max;
  throw std::invalid_argument("unknown direction '" + std::string(text) + "'");
}

std::string_view to_string(Direction d) { return d == Direction::min ? "min" : "max"; }

namespace {

constexpr double kNormalizationTolerance = 1e-6;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw InputError("cannot parse number '" + cell + "'", line);
  }
}

// Validates one record against K and renormalizes its scores.
void check_record(PredictionRecord& r, int num_classes, std::size_t line) {
  if (r.scores.size() != num_classes) {
    throw InputError("record '" + r.id + "' has " + std::to_string(r.scores.size()) +
                         " scores, expected " + std::to_string(num_classes),
                     line);
  }
  for (Eigen::Index k = 0; k < r.scores.size(); ++k) {
    const double v = r.scores[k];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw InputError("record '" + r.id + "' has score outside [0,1]", line);
    }
  }
  const double total = r.scores.sum();
  if (std::abs(total - 1.0) > kNormalizationTolerance) {
    std::ostringstream msg;
    msg << "record '" << r.id << "' scores sum to " << total << ", not 1";
    throw InputError(msg.str(), line);
  }
  r.scores /= total;
  if (r.label && (*r.label < 0 || *r.label >= num_classes)) {
    throw InputError("record '" + r.id + "' label " + std::to_string(*r.label) +
                         " out of range for K=" + std::to_string(num_classes),
                     line);
  }
}

}  // namespace

int PredictionRecord::predicted_class() const {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return static_cast<int>(best);
}

double PredictionRecord::confidence() const { return scores.maxCoeff(); }

Pool::Pool(std::vector<PredictionRecord> records, int num_classes)
    : records_(std::move(records)), num_classes_(num_classes) {
  if (num_classes_ < 1) throw InputError("number of classes must be positive");
  predicted_.reserve(records_.size());
  confidence_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    auto& r = records_[i];
    check_record(r, num_classes_, i + 1);
    if (!by_id_.emplace(r.id, i).second) {
      throw InputError("duplicate id '" + r.id + "'", i + 1);
    }
    predicted_.push_back(r.predicted_class());
    confidence_.push_back(r.confidence());
  }
}

std::optional<std::size_t> Pool::find(const std::string& id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

bool Pool::fully_labeled() const {
  return std::all_of(records_.begin(), records_.end(),
                     [](const PredictionRecord& r) { return r.label.has_value(); });
}

Pool parse_predictions_jsonl(std::istream& in) {
  std::vector<PredictionRecord> records;
  std::set<std::string> seen;
  int num_classes = -1;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    PredictionRecord r;
    try {
      const json row = json::parse(line);
      if (!row.is_object()) throw InputError("row is not a JSON object", lineno);
      const auto& id = row.at("id");
      r.id = id.is_string() ? id.get<std::string>() : id.dump();
      const auto scores = row.at("scores").get<std::vector<double>>();
      r.scores = Eigen::Map<const VectorXd>(scores.data(), static_cast<Eigen::Index>(scores.size()));
      if (row.contains("label") && !row.at("label").is_null()) r.label = row.at("label").get<int>();
      if (row.contains("attributes") && !row.at("attributes").is_null()) {
        for (const auto& [key, value] : row.at("attributes").items()) {
          r.attributes[key] = value.is_string() ? value.get<std::string>() : value.dump();
        }
      }
    } catch (const InputError&) {
      throw;
    } catch (const std::exception& e) {
      throw InputError(std::string("malformed row: ") + e.what(), lineno);
    }
    if (num_classes < 0) num_classes = static_cast<int>(r.scores.size());
    if (num_classes == 0) throw InputError("empty score vector", lineno);
    check_record(r, num_classes, lineno);
    if (!seen.insert(r.id).second) throw InputError("duplicate id '" + r.id + "'", lineno);
    records.push_back(std::move(r));
  }
  if (records.empty()) throw InputError("no prediction records");
  return Pool(std::move(records), num_classes);
}

Pool parse_predictions_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split_csv(trim(line));
      break;
    }
  }
  if (header.empty() || header.front() != "id") {
    throw InputError("CSV header must start with 'id'", lineno);
  }
  int num_classes = 0;
  while (num_classes + 1 < static_cast<int>(header.size()) &&
         header[num_classes + 1] == "score_" + std::to_string(num_classes)) {
    ++num_classes;
  }
  const bool has_label = static_cast<int>(header.size()) == num_classes + 2 &&
                         header.back() == "label";
  if (num_classes == 0 || static_cast<int>(header.size()) != num_classes + 1 + (has_label ? 1 : 0)) {
    throw InputError("CSV header must be id,score_0,...,score_{K-1}[,label]", lineno);
  }

  std::vector<PredictionRecord> records;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string row = trim(line);
    if (row.empty()) continue;
    const auto cells = split_csv(row);
    if (cells.size() != header.size()) {
      throw InputError("expected " + std::to_string(header.size()) + " columns, got " +
                           std::to_string(cells.size()),
                       lineno);
    }
    PredictionRecord r;
    r.id = cells[0];
    r.scores.resize(num_classes);
    for (int k = 0; k < num_classes; ++k) r.scores[k] = parse_number(cells[k + 1], lineno);
    if (has_label && !cells.back().empty()) {
      const double v = parse_number(cells.back(), lineno);
      if (v != std::floor(v)) throw InputError("label must be an integer", lineno);
      r.label = static_cast<int>(v);
    }
    check_record(r, num_classes, lineno);
    if (!seen.insert(r.id).second) throw InputError("duplicate id '" + r.id + "'", lineno);
    records.push_back(std::move(r));
  }
  if (records.empty()) throw InputError("no prediction records");
  return Pool(std::move(records), num_classes);
}

Pool ingest_predictions(const std::string& path, PredictionFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions file '" + path + "'");
  return format == PredictionFormat::csv ? parse_predictions_csv(in) : parse_predictions_jsonl(in);
}

Pool ingest_predictions(const std::string& path) {
  const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  return ingest_predictions(path, csv ? PredictionFormat::csv : PredictionFormat::jsonl);
}

void write_predictions_jsonl(const Pool& pool, std::ostream& out, bool include_labels) {
  for (const auto& r : pool.records()) {
    json row;
    row["id"] = r.id;
    row["scores"] = std::vector<double>(r.scores.data(), r.scores.data() + r.scores.size());
    if (include_labels && r.label) row["label"] = *r.label;
    if (!r.attributes.empty()) row["attributes"] = r.attributes;
    out << row.dump() << '\n';
  }
}

void write_predictions_jsonl(const Pool& pool, const std::string& path, bool include_labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_predictions_jsonl(pool, out, include_labels);
}

PartitionKind parse_partition_kind(std::string_view text) {
  if (text == "predicted-class") return PartitionKind::predicted_class;
  if (text == "score-bin") return PartitionKind::score_bin;
  if (text == "class-and-bin") return PartitionKind::class_and_bin;
  if (text == "attribute") return PartitionKind::attribute;
  throw std::invalid_argument("unknown partition kind '" + std::string(text) + "'");
}

std::string_view to_string(PartitionKind kind) {
  switch (kind) {
    case PartitionKind::predicted_class: return "predicted-class";
    case PartitionKind::score_bin: return "score-bin";
    case PartitionKind::class_and_bin: return "class-and-bin";
    case PartitionKind::attribute: return "attribute";
  }
  return "?";
}

void PartitionSpec::validate() const {
  if (num_bins < 1) throw std::invalid_argument("partition num_bins must be >= 1");
  const bool wants_attribute = kind == PartitionKind::attribute;
  if (wants_attribute == attribute_name.empty()) {
    throw std::invalid_argument("partition attribute_name must be set iff kind is attribute");
  }
}

int score_bin(double confidence, int num_bins) {
  const int b = static_cast<int>(std::floor(confidence * num_bins));
  return std::clamp(b, 0, num_bins - 1);
}

int GroupIndex::group_of_id(const Pool& pool, const std::string& id) const {
  const auto pos = pool.find(id);
  if (!pos) throw std::out_of_range("unknown record id '" + id + "'");
  return group_of[*pos];
}

GroupIndex assign_groups(const Pool& pool, const PartitionSpec& spec) {
  spec.validate();
  GroupIndex index;
  index.spec = spec;
  const int K = pool.num_classes();
  const int B = spec.num_bins;
  std::vector<std::string> attribute_values;

  switch (spec.kind) {
    case PartitionKind::predicted_class:
      for (int k = 0; k < K; ++k) index.names.push_back("class " + std::to_string(k));
      break;
    case PartitionKind::score_bin:
      for (int b = 0; b < B; ++b) index.names.push_back("bin " + std::to_string(b));
      break;
    case PartitionKind::class_and_bin:
      for (int k = 0; k < K; ++k) {
        for (int b = 0; b < B; ++b) {
          index.names.push_back("class " + std::to_string(k) + " bin " + std::to_string(b));
        }
      }
      break;
    case PartitionKind::attribute: {
      std::set<std::string> values;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& attrs = pool[i].attributes;
        const auto it = attrs.find(spec.attribute_name);
        if (it == attrs.end()) {
          throw InputError("record '" + pool[i].id + "' lacks attribute '" +
                               spec.attribute_name + "'",
                           i + 1);
        }
        values.insert(it->second);
      }
      attribute_values.assign(values.begin(), values.end());
      index.names = attribute_values;
      break;
    }
  }

  const int G = static_cast<int>(index.names.size());
  index.members.assign(G, {});
  index.group_of.resize(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    int g = 0;
    switch (spec.kind) {
      case PartitionKind::predicted_class: g = pool.predicted(i); break;
      case PartitionKind::score_bin: g = score_bin(pool.confidence(i), B); break;
      case PartitionKind::class_and_bin:
        g = pool.predicted(i) * B + score_bin(pool.confidence(i), B);
        break;
      case PartitionKind::attribute: {
        const auto& v = pool[i].attributes.at(spec.attribute_name);
        g = static_cast<int>(std::lower_bound(attribute_values.begin(), attribute_values.end(), v) -
                             attribute_values.begin());
        break;
      }
    }
    index.group_of[i] = g;
    index.members[g].push_back(i);
  }

  index.mean_confidence = VectorXd::Zero(G);
  for (int g = 0; g < G; ++g) {
    if (index.members[g].empty()) continue;
    double sum = 0.0;
    for (const auto i : index.members[g]) sum += pool.confidence(i);
    index.mean_confidence[g] = sum / static_cast<double>(index.members[g].size());
  }
  if (!pool.empty()) index.weights = estimate_group_weights(index);
  else index.weights = VectorXd::Zero(G);
  return index;
}

VectorXd estimate_group_weights(const GroupIndex& index) {
  std::size_t total = 0;
  for (const auto& m : index.members) total += m.size();
  if (total == 0) throw std::invalid_argument("cannot estimate group weights of an empty pool");
  VectorXd w(index.num_groups());
  for (int g = 0; g < index.num_groups(); ++g) {
    w[g] = static_cast<double>(index.members[g].size()) / static_cast<double>(total);
  }
  return w;
}

void CostMatrix::validate() const {
  if (c.rows() == 0 || c.rows() != c.cols()) throw InputError("cost matrix must be square and non-empty");
  if ((c.array() < 0.0).any()) throw InputError("cost matrix entries must be non-negative");
  if (!c.allFinite()) throw InputError("cost matrix entries must be finite");
}

CostMatrix CostMatrix::zero_one(int num_classes) {
  CostMatrix m;
  m.c = MatrixXd::Ones(num_classes, num_classes) - MatrixXd::Identity(num_classes, num_classes);
  return m;
}

CostMatrix parse_cost_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string row = trim(line);
    if (row.empty()) continue;
    std::vector<double> values;
    for (const auto& cell : split_csv(row)) {
      const double v = parse_number(cell, lineno);
      if (v < 0.0) throw InputError("negative cost " + cell, lineno);
      values.push_back(v);
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw InputError("ragged cost matrix row", lineno);
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty() || rows.size() != rows.front().size()) {
    throw InputError("cost matrix must be square (got " + std::to_string(rows.size()) + " rows, " +
                     std::to_string(rows.empty() ? 0 : rows.front().size()) + " columns)");
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  CostMatrix m;
  m.c.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) m.c(j, k) = rows[j][k];
  }
  m.validate();
  return m;
}

CostMatrix load_cost_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cost matrix '" + path + "'");
  return parse_cost_matrix(in);
}

}  // namespace assay
