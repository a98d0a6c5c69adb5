#include "assay/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace assay {

double rmse_groupwise(const VectorXd& estimate, const VectorXd& truth, const VectorXd& weights) {
  if (estimate.size() != truth.size() || estimate.size() != weights.size()) {
    throw std::invalid_argument("rmse_groupwise: length mismatch");
  }
  return std::sqrt((weights.array() * (truth - estimate).array().square()).sum());
}

double rmse_confusion(const MatrixXd& estimate, const MatrixXd& truth, const VectorXd& class_weights) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols() ||
      estimate.cols() != class_weights.size()) {
    throw std::invalid_argument("rmse_confusion: shape mismatch");
  }
  const VectorXd per_class = (truth - estimate).array().square().colwise().sum().transpose();
  return std::sqrt(class_weights.dot(per_class));
}

double rmse_confusion_scaled(const MatrixXd& estimate, const MatrixXd& truth, const VectorXd& class_weights,
                             double reference) {
  if (!(reference > 0.0)) throw std::invalid_argument("scaled RMSE needs a positive reference");
  return rmse_confusion(estimate, truth, class_weights) / reference;
}

double mrr(const std::vector<int>& predicted_order, const std::vector<int>& true_top) {
  const auto m = true_top.size();
  if (m == 0) throw std::invalid_argument("mrr: empty true top-m set");
  if (m > predicted_order.size()) throw std::invalid_argument("mrr: m exceeds the number of groups");
  std::vector<int> sorted_top = true_top;
  std::sort(sorted_top.begin(), sorted_top.end());
  if (std::adjacent_find(sorted_top.begin(), sorted_top.end()) != sorted_top.end()) {
    throw std::invalid_argument("mrr: duplicate group in true top-m set");
  }
  auto is_true = [&](int g) { return std::binary_search(sorted_top.begin(), sorted_top.end(), g); };

  double total = 0.0;
  for (int member : true_top) {
    int rank = 1;
    bool found = false;
    for (int g : predicted_order) {
      if (g == member) {
        found = true;
        break;
      }
      if (!is_true(g)) ++rank;
    }
    if (!found) rank = static_cast<int>(predicted_order.size() - m) + 2;
    total += 1.0 / rank;
  }
  return total / static_cast<double>(m);
}

std::optional<std::int64_t> labels_to_identify(const std::vector<double>& mrr_by_step, double threshold,
                                               bool sustained) {
  if (!sustained) {
    for (std::size_t i = 0; i < mrr_by_step.size(); ++i) {
      if (mrr_by_step[i] > threshold) return static_cast<std::int64_t>(i + 1);
    }
    return std::nullopt;
  }
  std::optional<std::int64_t> since;
  for (std::size_t i = 0; i < mrr_by_step.size(); ++i) {
    if (mrr_by_step[i] > threshold) {
      if (!since) since = static_cast<std::int64_t>(i + 1);
    } else {
      since.reset();
    }
  }
  return since;
}

double ece_percentage_error(const std::vector<double>& estimates, double truth) {
  if (!(truth > 0.0)) throw std::invalid_argument("ECE percentage error needs a positive ground-truth ECE");
  if (estimates.empty()) throw std::invalid_argument("ECE percentage error of no runs");
  double total = 0.0;
  for (double e : estimates) total += std::abs(truth - e) / truth;
  return 100.0 * total / static_cast<double>(estimates.size());
}

bool comparison_success(const RopeResult& result, int eta_star, double lambda_star, double tolerance) {
  if (result.eta != eta_star) return false;
  return std::abs(result.lambda - lambda_star) / lambda_star < tolerance;
}

namespace {

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("wilcoxon: paired samples differ in length");
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    if (diff != 0.0) d.push_back(diff);
  }
  WilcoxonResult out;
  out.n = static_cast<int>(d.size());
  if (d.empty()) return out;

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });

  // Doubled average ranks stay integral under ties.
  std::vector<int> rank2(d.size());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const int doubled = static_cast<int>(i + 1 + j + 1);
    for (std::size_t t = i; t <= j; ++t) rank2[order[t]] = doubled;
    const double size = static_cast<double>(j - i + 1);
    tie_term += size * size * size - size;
    i = j + 1;
  }
  int w2 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > 0.0) w2 += rank2[i];
  }
  out.statistic = w2 / 2.0;

  const double n = out.n;
  if (out.n <= kWilcoxonExactMax) {
    out.exact = true;
    const int total = std::accumulate(rank2.begin(), rank2.end(), 0);
    std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
    ways[0] = 1.0;
    int reach = 0;
    for (int r : rank2) {
      for (int s = reach; s >= 0; --s) {
        if (ways[s] != 0.0) ways[s + r] += ways[s];
      }
      reach += r;
    }
    const double all = std::ldexp(1.0, out.n);
    double lower = 0.0;
    double upper = 0.0;
    for (int s = 0; s <= total; ++s) {
      if (s <= w2) lower += ways[s];
      if (s >= w2) upper += ways[s];
    }
    out.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / all);
    return out;
  }

  out.exact = false;
  const double mean = n * (n + 1.0) / 4.0;
  const double variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  const double z = (std::abs(out.statistic - mean) - 0.5) / std::sqrt(variance);
  out.p_value = z <= 0.0 ? 1.0 : std::min(1.0, 2.0 * normal_upper_tail(z));
  return out;
}

RunAggregate aggregate_runs(const std::vector<double>& values) {
  RunAggregate a;
  a.n = static_cast<int>(values.size());
  if (values.empty()) return a;
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / a.n;
  if (a.n >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.se = std::sqrt(ss / (a.n - 1)) / std::sqrt(static_cast<double>(a.n));
  }
  return a;
}

}  // namespace assay
