#pragma once

#include "assay/metrics.hpp"
#include "assay/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace assay {

// (sum_g p_g (theta_g - est_g)^2)^(1/2). Multiply by 100 for percentage units.
double rmse_groupwise(const VectorXd& estimate, const VectorXd& truth, const VectorXd& weights);

// Confusion matrices indexed (j, k) = P(true j | predicted k); each column k
// is weighted by p_k.
double rmse_confusion(const MatrixXd& estimate, const MatrixXd& truth, const VectorXd& class_weights);
double rmse_confusion_scaled(const MatrixXd& estimate, const MatrixXd& truth, const VectorXd& class_weights,
                             double reference);

// Mean reciprocal rank of the true top-m groups in a predicted order (best
// first). When reading the rank of one true member, the other true members
// are removed from the predicted list. Groups absent from the order count as
// ranked after every listed group.
double mrr(const std::vector<int>& predicted_order, const std::vector<int>& true_top);

// Number of steps (1-based) until MRR first exceeds the threshold, or, with
// `sustained`, until it exceeds it and stays above for the rest of the series.
// mrr_by_step[i] is the MRR after i + 1 labels.
std::optional<std::int64_t> labels_to_identify(const std::vector<double>& mrr_by_step,
                                               double threshold = 0.99, bool sustained = false);

// Mean relative absolute error of ECE estimates, in percent.
double ece_percentage_error(const std::vector<double>& estimates, double truth);

bool comparison_success(const RopeResult& result, int eta_star, double lambda_star,
                        double tolerance = 0.05);

struct WilcoxonResult {
  double statistic = 0.0;  // W+, sum of ranks of positive differences
  int n = 0;               // pairs with non-zero difference
  double p_value = 1.0;    // two-sided
  bool exact = true;
};

inline constexpr int kWilcoxonExactMax = 20;

// Signed-rank test on x - y. Zero differences are dropped and tied absolute
// differences take average ranks. Exact null distribution for n <= 20,
// otherwise a normal approximation with tie and continuity corrections.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y);

struct RunAggregate {
  double mean = 0.0;
  double se = 0.0;
  int n = 0;
};

RunAggregate aggregate_runs(const std::vector<double>& values);

}  // namespace assay
