#pragma once

#include "assay/engine.hpp"
#include "assay/harness.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace assay {

// Frozen truth computed from the fully labeled pool.
struct GroundTruth {
  Task task = Task::identify_accuracy;
  Direction direction = Direction::min;
  std::vector<bool> populated;  // arms with at least one record
  VectorXd weights;             // p_g of the arms
  VectorXd accuracy;            // empirical accuracy per arm
  VectorXd metric;              // per-arm task metric: accuracy, classwise ECE, or expected cost
  MatrixXd confusion;           // (j, k) = P(true j | predicted k), confusion tasks only
  VectorXd class_weights;       // p_k, confusion tasks only
  double marginal_ece = 0.0;    // over kReportBins score bins
  std::vector<int> true_top;
  int eta = 1;
  double lambda = 1.0;

  StoppingTruth stopping() const;
};

// Size of the true top set an identification run is scored against: m for
// multiple-play, otherwise 1.
int identification_m(const SessionConfig& cfg);

GroundTruth compute_ground_truth(const SessionContext& ctx);
nlohmann::json to_json(const GroundTruth& truth);

// Posterior-mean confusion matrix (j, k), one column per predicted class.
MatrixXd confusion_estimate(const Beliefs& beliefs);

// Posterior-mean ECE over the labeled records' score bins.
double labeled_ece_estimate(const SessionContext& ctx, const std::vector<Step>& steps);

struct CurvePoint {
  std::int64_t labels = 0;
  double value = 0.0;
};

struct RunEvaluation {
  int run = 0;
  std::int64_t labels = 0;
  TerminalReason terminal = TerminalReason::budget;
  std::optional<double> rmse;         // groupwise accuracy RMSE, percent
  std::optional<double> scaled_rmse;  // confusion tasks
  std::optional<double> mrr;          // identification, after the last label
  std::optional<std::int64_t> labels_first;
  std::optional<std::int64_t> labels_sustained;
  std::optional<bool> comparison_success;
  double ece_estimate = 0.0;
  std::vector<CurvePoint> curve;      // primary metric against labels used
};

inline constexpr int kCurvePoints = 50;

RunEvaluation evaluate_run(const SessionContext& ctx, const GroundTruth& truth, const Trajectory& trajectory);

struct MethodEvaluation {
  std::string name;
  std::vector<RunEvaluation> runs;
};

// Per-method {metric: {mean, se, n_runs, censored, significant_vs}} with the
// raw per-run arrays. Methods after the first are tested against the first
// with a paired Wilcoxon signed-rank test over runs of equal index.
nlohmann::json evaluation_report(const SessionContext& ctx, const GroundTruth& truth,
                                 const std::vector<MethodEvaluation>& methods, double alpha = 0.05);

}  // namespace assay
