#pragma once

#include "assay/data.hpp"
#include "assay/metrics.hpp"
#include "assay/posterior.hpp"

#include <array>
#include <string_view>
#include <vector>

namespace assay {

enum class StrategyKind {
  random,
  thompson,
  top_two_thompson,
  multiple_play_thompson,
  epsilon_greedy,
  bayes_ucb,
  variance_greedy,
  comparison_greedy,
};

enum class Task {
  estimate_accuracy,
  estimate_confusion,
  identify_accuracy,
  identify_ece,
  identify_cost,
  compare,
};

StrategyKind parse_strategy_kind(std::string_view text);
std::string_view to_string(StrategyKind kind);
Task parse_task(std::string_view text);
std::string_view to_string(Task task);

bool is_identification(Task task);
// Identification tasks default to the extreme the task names.
Direction default_direction(Task task);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::thompson;
  int m = 1;
  double beta_resample = 0.5;
  double epsilon = 0.1;
  double ucb_quantile = 0.975;
  Direction direction = Direction::min;
  Task task = Task::identify_accuracy;
  // compare task: the two groups and the ROPE half-width
  std::array<int, 2> pair{0, 1};
  double rope_epsilon = 0.05;
  int n_samples = kDefaultMonteCarloSamples;

  void validate() const;
};

// Which conjugate family the arms of a task carry.
enum class BeliefKind { accuracy, confusion, binned_accuracy };
BeliefKind belief_kind(Task task);

// An arm whose metric is an ECE over score bins (identify-ece).
struct BinnedArm {
  std::vector<BetaPosterior> bins;
  VectorXd weights;     // p_{gb}, within-arm
  VectorXd confidence;  // s_{gb}
};

// Per-arm posterior state. Only the vector matching `kind` is populated.
struct Beliefs {
  BeliefKind kind = BeliefKind::accuracy;
  std::vector<BetaPosterior> beta;
  std::vector<DirichletPosterior> dirichlet;
  std::vector<BinnedArm> binned;

  int num_arms() const noexcept;
  friend bool operator==(const Beliefs& x, const Beliefs& y);
};

// Everything a reward function needs beyond the posteriors.
struct RewardContext {
  Task task = Task::identify_accuracy;
  Direction direction = Direction::min;
  VectorXd arm_weights;  // p_g
  MatrixXd costs;        // identify-cost only
  std::array<int, 2> pair{0, 1};
  double rope_epsilon = 0.05;
  int n_samples = kDefaultMonteCarloSamples;
};

using Eligibility = std::vector<bool>;

// Expected reward of each arm under one posterior draw per arm (Thompson).
// Ineligible arms get -infinity. Draw order: arms ascending.
std::vector<double> sampled_rewards(const Beliefs& beliefs, const RewardContext& ctx,
                                    const Eligibility& eligible, Rng& rng);

// Expected reward of each arm with the outcome distribution taken from the
// posterior predictive rather than a draw. Only the compare task touches rng.
std::vector<double> predictive_rewards(const Beliefs& beliefs, const RewardContext& ctx,
                                       const Eligibility& eligible, Rng& rng);

// Arg-max over eligible arms, ties to the lowest index.
int best_arm(const std::vector<double>& rewards, const Eligibility& eligible);

int ts_select(const Beliefs& beliefs, const RewardContext& ctx, const Eligibility& eligible, Rng& rng);

inline constexpr int kTopTwoResampleCap = 10000;
int ttts_select(const Beliefs& beliefs, const RewardContext& ctx, const Eligibility& eligible,
                double beta_resample, Rng& rng);

std::vector<int> mpts_select(const Beliefs& beliefs, const RewardContext& ctx,
                             const Eligibility& eligible, int m, Rng& rng);

int variance_greedy_select(const Beliefs& beliefs, const VectorXd& weights, const Eligibility& eligible);

// Returns 0 for A and 1 for B. Expected lambda differences below
// 1/sqrt(n_samples) count as ties and go to A.
int comparison_select(const BetaPosterior& a, const BetaPosterior& b, double epsilon, int n_samples,
                      Rng& rng);

// Lambda after adding one outcome to `updated`, compared against `other`;
// the seed fixes the Monte Carlo stream.
double branch_lambda(const BetaPosterior& updated, const BetaPosterior& other, double epsilon,
                     int n_samples, std::uint64_t seed);

int baseline_select(StrategyKind kind, const Beliefs& beliefs, const RewardContext& ctx,
                    const Eligibility& eligible, const StrategyConfig& params, Rng& rng);

// Dispatch on cfg.kind; returns one arm, or up to m arms for multiple-play.
std::vector<int> select_arms(const StrategyConfig& cfg, const Beliefs& beliefs, const RewardContext& ctx,
                             const Eligibility& eligible, Rng& rng);

}  // namespace assay
