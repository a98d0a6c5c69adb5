#pragma once

#include "assay/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace assay {

// Model output for one instance. Feature vectors are never stored.
struct PredictionRecord {
  std::string id;
  VectorXd scores;
  std::optional<int> label;
  std::map<std::string, std::string> attributes;

  // argmax of scores, ties to the lowest class index
  int predicted_class() const;
  // max score, s(x)
  double confidence() const;
};

class Pool {
 public:
  Pool() = default;
  // Validates every record: scores of length num_classes summing to 1 within
  // 1e-6 (then renormalized), labels in range, ids unique.
  Pool(std::vector<PredictionRecord> records, int num_classes);

  const std::vector<PredictionRecord>& records() const noexcept { return records_; }
  const PredictionRecord& operator[](std::size_t i) const { return records_[i]; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  int num_classes() const noexcept { return num_classes_; }

  int predicted(std::size_t i) const { return predicted_[i]; }
  double confidence(std::size_t i) const { return confidence_[i]; }
  std::optional<std::size_t> find(const std::string& id) const;
  bool fully_labeled() const;

 private:
  std::vector<PredictionRecord> records_;
  std::vector<int> predicted_;
  std::vector<double> confidence_;
  std::unordered_map<std::string, std::size_t> by_id_;
  int num_classes_ = 0;
};

enum class PredictionFormat { jsonl, csv };

Pool ingest_predictions(const std::string& path, PredictionFormat format);
// Format from the extension: .csv is CSV, anything else JSONL.
Pool ingest_predictions(const std::string& path);
Pool parse_predictions_jsonl(std::istream& in);
Pool parse_predictions_csv(std::istream& in);

void write_predictions_jsonl(const Pool& pool, std::ostream& out, bool include_labels = true);
void write_predictions_jsonl(const Pool& pool, const std::string& path, bool include_labels = true);

enum class PartitionKind { predicted_class, score_bin, class_and_bin, attribute };

PartitionKind parse_partition_kind(std::string_view text);
std::string_view to_string(PartitionKind kind);

struct PartitionSpec {
  PartitionKind kind = PartitionKind::predicted_class;
  int num_bins = 10;
  std::string attribute_name;

  void validate() const;
};

// Equal-width bin of a confidence in [0, 1]; the last bin is closed at 1.0.
int score_bin(double confidence, int num_bins);

struct GroupIndex {
  PartitionSpec spec;
  std::vector<int> group_of;                     // by record position
  std::vector<std::vector<std::size_t>> members;  // record positions, pool order
  VectorXd weights;                               // p_g
  VectorXd mean_confidence;                       // s_g, 0 for empty groups
  std::vector<std::string> names;

  int num_groups() const noexcept { return static_cast<int>(members.size()); }
  int group_of_id(const Pool& pool, const std::string& id) const;
};

GroupIndex assign_groups(const Pool& pool, const PartitionSpec& spec);

// Empirical group frequencies |members(g)| / |pool|.
VectorXd estimate_group_weights(const GroupIndex& index);

struct CostMatrix {
  MatrixXd c;  // c(j, k): cost of predicting k when the truth is j

  int size() const noexcept { return static_cast<int>(c.rows()); }
  void validate() const;
  static CostMatrix zero_one(int num_classes);
};

CostMatrix load_cost_matrix(const std::string& path);
CostMatrix parse_cost_matrix(std::istream& in);

}  // namespace assay
