#pragma once

#include "assay/data.hpp"

#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace assay::testing {

// One record per row: (confidence for class `predicted`, remaining mass spread
// evenly, label).
inline PredictionRecord make_record(const std::string& id, int num_classes, int predicted, double confidence,
                                    std::optional<int> label) {
  PredictionRecord r;
  r.id = id;
  r.scores = VectorXd::Constant(num_classes, num_classes > 1 ? (1.0 - confidence) / (num_classes - 1) : 0.0);
  r.scores[predicted] = confidence;
  r.label = label;
  return r;
}

struct Row {
  int predicted;
  double confidence;
  int label;
};

inline std::shared_ptr<const Pool> make_pool(int num_classes, const std::vector<Row>& rows) {
  std::vector<PredictionRecord> records;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    records.push_back(make_record("x" + std::to_string(i), num_classes, rows[i].predicted, rows[i].confidence,
                                  rows[i].label));
  }
  return std::make_shared<const Pool>(std::move(records), num_classes);
}

inline Pool parse_jsonl(const std::string& text) {
  std::istringstream in(text);
  return parse_predictions_jsonl(in);
}

}  // namespace assay::testing
