#pragma once

#include "assay/data.hpp"
#include "assay/posterior.hpp"

#include <array>
#include <span>
#include <stdexcept>
#include <vector>

namespace assay {

inline constexpr int kDefaultMonteCarloSamples = 10000;

// ECE = sum_b p_b |theta_b - s_b|. Works on any Eigen vector expressions.
template <typename Weights, typename Accuracy, typename Confidence>
typename Weights::Scalar ece_exact(const Eigen::MatrixBase<Weights>& weights,
                                   const Eigen::MatrixBase<Accuracy>& accuracy,
                                   const Eigen::MatrixBase<Confidence>& confidence) {
  if (weights.size() != accuracy.size() || weights.size() != confidence.size()) {
    throw std::invalid_argument("ece_exact: length mismatch");
  }
  return (weights.array() * (accuracy.array() - confidence.array()).abs()).sum();
}

// Classwise expected cost sum_j c_jk theta_jk for one predicted class k.
template <typename Column, typename Theta>
typename Theta::Scalar expected_cost(const Eigen::MatrixBase<Column>& cost_column,
                                     const Eigen::MatrixBase<Theta>& theta) {
  if (cost_column.size() != theta.size()) throw std::invalid_argument("expected_cost: length mismatch");
  return cost_column.dot(theta);
}

// Mean plus an equal-tailed interval from empirical quantiles (linear
// interpolation between order statistics).
PosteriorSummary summarize_samples(std::vector<double> samples, double level = 0.95);
double sample_quantile(std::vector<double> samples, double q);

struct EcePosterior {
  std::vector<double> samples;
  PosteriorSummary summary;
};

EcePosterior ece_posterior(std::span<const BetaPosterior> bins, const VectorXd& weights,
                           const VectorXd& confidence, int n_samples, Rng& rng, double level = 0.95);

// Classwise ECE for predicted class k over a class-and-bin partition. Bin
// weights are renormalized within the class and s_b is the mean confidence of
// the (class, bin) cell.
EcePosterior groupwise_ece_posterior(const GroupIndex& class_and_bin,
                                     std::span<const BetaPosterior> cells, int k, int n_samples,
                                     Rng& rng, double level = 0.95);

// Within-class bin weights and cell confidences used by groupwise_ece_posterior.
struct ClassBins {
  VectorXd weights;
  VectorXd confidence;
};
ClassBins class_bins(const GroupIndex& class_and_bin, int k);

std::vector<double> expected_cost_posterior(const DirichletPosterior& post, const CostMatrix& costs,
                                            int k, int n_samples, Rng& rng);

struct RopeResult {
  // P(delta < -eps), P(|delta| <= eps), P(delta > eps) with delta = theta_A - theta_B
  std::array<double, 3> mu{};
  int eta = 1;
  double lambda = 0.0;
  double epsilon = 0.05;
  int n_samples = 0;
};

RopeResult rope_compare(const BetaPosterior& a, const BetaPosterior& b, double epsilon,
                        int n_samples, Rng& rng);
// Region index with the largest probability, ties to the lower index.
int rope_region(const std::array<double, 3>& mu);

struct RankSummary {
  Direction direction = Direction::min;
  VectorXd mean_rank;             // 1 = most extreme
  std::vector<int> rank_low;      // 2.5% rank quantile
  std::vector<int> rank_high;     // 97.5% rank quantile
  VectorXd extreme_probability;   // P(group is rank 1)
  int n_samples = 0;
};

RankSummary rank_distribution(std::span<const BetaPosterior> posts, int n_samples, Rng& rng,
                              Direction direction);

// Rank summary from precomputed draws, one row per Monte Carlo sample and one
// column per group.
RankSummary rank_samples(const MatrixXd& draws, Direction direction);

// Ranks (1-based) of a vector of values; ties broken by index.
std::vector<int> rank_values(const VectorXd& values, Direction direction);

struct ReliabilityBin {
  double weight = 0.0;
  double confidence = 0.0;
  BetaPosterior posterior;
  PosteriorSummary accuracy;
};

struct ReliabilityDiagram {
  std::vector<ReliabilityBin> bins;
  EcePosterior ece;
};

ReliabilityDiagram reliability_diagram(std::span<const BetaPosterior> bins, const VectorXd& weights,
                                       const VectorXd& confidence, double level, int n_samples,
                                       Rng& rng);

nlohmann::json to_json(const EcePosterior& e, bool include_samples = false);
nlohmann::json to_json(const RopeResult& r);
nlohmann::json to_json(const RankSummary& r);
nlohmann::json to_json(const ReliabilityDiagram& d);

}  // namespace assay
