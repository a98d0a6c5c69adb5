#include "assay/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace assay {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double direction_sign(const RewardContext& ctx) {
  if (!is_identification(ctx.task)) return 1.0;
  return ctx.direction == Direction::max ? 1.0 : -1.0;
}

void check_eligibility(const Beliefs& beliefs, const Eligibility& eligible) {
  if (static_cast<int>(eligible.size()) != beliefs.num_arms()) {
    throw std::invalid_argument("eligibility mask does not match the number of arms");
  }
  if (std::none_of(eligible.begin(), eligible.end(), [](bool e) { return e; })) {
    throw std::runtime_error("no eligible arms");
  }
}

int other_of_pair(const RewardContext& ctx, int g) {
  if (g == ctx.pair[0]) return ctx.pair[1];
  if (g == ctx.pair[1]) return ctx.pair[0];
  return -1;
}

double binned_reward(const BinnedArm& arm, const VectorXd& theta) {
  return ece_exact(arm.weights, theta, arm.confidence);
}

// Reward of every eligible arm given per-arm outcome probabilities. `draw`
// supplies either a posterior sample or the posterior mean.
template <typename BetaParam, typename DirichletParam, typename BinnedParam>
std::vector<double> rewards_with(const Beliefs& beliefs, const RewardContext& ctx,
                                 const Eligibility& eligible, Rng& rng, BetaParam&& beta_param,
                                 DirichletParam&& dirichlet_param, BinnedParam&& binned_param) {
  check_eligibility(beliefs, eligible);
  const int G = beliefs.num_arms();
  const double sign = direction_sign(ctx);
  std::vector<double> rewards(G, kNegInf);

  switch (ctx.task) {
    case Task::identify_accuracy:
      for (int g = 0; g < G; ++g) {
        if (eligible[g]) rewards[g] = sign * beta_param(beliefs.beta[g]);
      }
      break;
    case Task::estimate_accuracy:
      for (int g = 0; g < G; ++g) {
        if (!eligible[g]) continue;
        const auto& post = beliefs.beta[g];
        const double theta = beta_param(post);
        const double after = theta * post.variance_after(1) + (1.0 - theta) * post.variance_after(0);
        rewards[g] = ctx.arm_weights[g] * (post.variance() - after);
      }
      break;
    case Task::estimate_confusion:
      for (int g = 0; g < G; ++g) {
        if (!eligible[g]) continue;
        const auto& post = beliefs.dirichlet[g];
        const VectorXd theta = dirichlet_param(post);
        double after = 0.0;
        for (int j = 0; j < post.size(); ++j) after += theta[j] * post.total_variance_after(j);
        rewards[g] = ctx.arm_weights[g] * (post.total_variance() - after);
      }
      break;
    case Task::identify_ece:
      for (int g = 0; g < G; ++g) {
        if (eligible[g]) rewards[g] = sign * binned_reward(beliefs.binned[g], binned_param(beliefs.binned[g]));
      }
      break;
    case Task::identify_cost:
      for (int g = 0; g < G; ++g) {
        if (!eligible[g]) continue;
        rewards[g] = sign * expected_cost(ctx.costs.col(g), dirichlet_param(beliefs.dirichlet[g]));
      }
      break;
    case Task::compare: {
      std::vector<double> theta(G, 0.0);
      for (int g = 0; g < G; ++g) {
        if (eligible[g] && other_of_pair(ctx, g) >= 0) theta[g] = beta_param(beliefs.beta[g]);
      }
      // One shared stream for all hypothetical branches (common random numbers).
      const std::uint64_t seed = rng();
      for (int g = 0; g < G; ++g) {
        const int other = other_of_pair(ctx, g);
        if (!eligible[g] || other < 0) continue;
        const auto& post = beliefs.beta[g];
        const auto& rival = beliefs.beta[other];
        const double up = branch_lambda(beta_update(post, 1), rival, ctx.rope_epsilon, ctx.n_samples, seed);
        const double down = branch_lambda(beta_update(post, 0), rival, ctx.rope_epsilon, ctx.n_samples, seed);
        rewards[g] = theta[g] * up + (1.0 - theta[g]) * down;
      }
      break;
    }
  }
  return rewards;
}

}  // namespace

StrategyKind parse_strategy_kind(std::string_view text) {
  if (text == "random") return StrategyKind::random;
  if (text == "thompson") return StrategyKind::thompson;
  if (text == "top-two-thompson") return StrategyKind::top_two_thompson;
  if (text == "multiple-play-thompson") return StrategyKind::multiple_play_thompson;
  if (text == "epsilon-greedy") return StrategyKind::epsilon_greedy;
  if (text == "bayes-ucb") return StrategyKind::bayes_ucb;
  if (text == "variance-greedy") return StrategyKind::variance_greedy;
  if (text == "comparison-greedy") return StrategyKind::comparison_greedy;
  throw std::invalid_argument("unknown strategy kind '" + std::string(text) + "'");
}

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::random: return "random";
    case StrategyKind::thompson: return "thompson";
    case StrategyKind::top_two_thompson: return "top-two-thompson";
    case StrategyKind::multiple_play_thompson: return "multiple-play-thompson";
    case StrategyKind::epsilon_greedy: return "epsilon-greedy";
    case StrategyKind::bayes_ucb: return "bayes-ucb";
    case StrategyKind::variance_greedy: return "variance-greedy";
    case StrategyKind::comparison_greedy: return "comparison-greedy";
  }
  return "?";
}

Task parse_task(std::string_view text) {
  if (text == "estimate-accuracy") return Task::estimate_accuracy;
  if (text == "estimate-confusion") return Task::estimate_confusion;
  if (text == "identify-accuracy") return Task::identify_accuracy;
  if (text == "identify-ece") return Task::identify_ece;
  if (text == "identify-cost") return Task::identify_cost;
  if (text == "compare") return Task::compare;
  throw std::invalid_argument("unknown task '" + std::string(text) + "'");
}

std::string_view to_string(Task task) {
  switch (task) {
    case Task::estimate_accuracy: return "estimate-accuracy";
    case Task::estimate_confusion: return "estimate-confusion";
    case Task::identify_accuracy: return "identify-accuracy";
    case Task::identify_ece: return "identify-ece";
    case Task::identify_cost: return "identify-cost";
    case Task::compare: return "compare";
  }
  return "?";
}

bool is_identification(Task task) {
  return task == Task::identify_accuracy || task == Task::identify_ece || task == Task::identify_cost;
}

Direction default_direction(Task task) {
  return task == Task::identify_accuracy ? Direction::min : Direction::max;
}

void StrategyConfig::validate() const {
  if (m < 1) throw std::invalid_argument("strategy m must be >= 1");
  if (!(beta_resample >= 0.0 && beta_resample <= 1.0)) throw std::invalid_argument("beta_resample must be in [0,1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must be in [0,1]");
  if (!(ucb_quantile > 0.0 && ucb_quantile < 1.0)) throw std::invalid_argument("ucb_quantile must be in (0,1)");
  if (!(rope_epsilon > 0.0)) throw std::invalid_argument("rope epsilon must be positive");
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  const bool estimation = task == Task::estimate_accuracy || task == Task::estimate_confusion;
  if (kind == StrategyKind::variance_greedy && !estimation) {
    throw std::invalid_argument("variance-greedy applies to estimation tasks only");
  }
  if (kind == StrategyKind::comparison_greedy && task != Task::compare) {
    throw std::invalid_argument("comparison-greedy applies to the compare task only");
  }
  if (kind == StrategyKind::bayes_ucb && task == Task::compare) {
    throw std::invalid_argument("bayes-ucb is not defined for the compare task");
  }
  if (task == Task::compare && pair[0] == pair[1]) {
    throw std::invalid_argument("compare task needs two distinct groups");
  }
}

BeliefKind belief_kind(Task task) {
  switch (task) {
    case Task::estimate_confusion:
    case Task::identify_cost: return BeliefKind::confusion;
    case Task::identify_ece: return BeliefKind::binned_accuracy;
    default: return BeliefKind::accuracy;
  }
}

int Beliefs::num_arms() const noexcept {
  switch (kind) {
    case BeliefKind::accuracy: return static_cast<int>(beta.size());
    case BeliefKind::confusion: return static_cast<int>(dirichlet.size());
    case BeliefKind::binned_accuracy: return static_cast<int>(binned.size());
  }
  return 0;
}

bool operator==(const Beliefs& x, const Beliefs& y) {
  if (x.kind != y.kind || x.beta != y.beta || x.dirichlet != y.dirichlet) return false;
  if (x.binned.size() != y.binned.size()) return false;
  for (std::size_t g = 0; g < x.binned.size(); ++g) {
    if (x.binned[g].bins != y.binned[g].bins) return false;
  }
  return true;
}

std::vector<double> sampled_rewards(const Beliefs& beliefs, const RewardContext& ctx,
                                    const Eligibility& eligible, Rng& rng) {
  return rewards_with(
      beliefs, ctx, eligible, rng, [&](const BetaPosterior& p) { return beta_sample(p, rng); },
      [&](const DirichletPosterior& p) { return dirichlet_sample(p, rng); },
      [&](const BinnedArm& arm) {
        VectorXd theta(static_cast<Eigen::Index>(arm.bins.size()));
        for (std::size_t b = 0; b < arm.bins.size(); ++b) theta[static_cast<Eigen::Index>(b)] = beta_sample(arm.bins[b], rng);
        return theta;
      });
}

std::vector<double> predictive_rewards(const Beliefs& beliefs, const RewardContext& ctx,
                                       const Eligibility& eligible, Rng& rng) {
  return rewards_with(
      beliefs, ctx, eligible, rng, [](const BetaPosterior& p) { return p.mean(); },
      [](const DirichletPosterior& p) { return p.mean(); },
      [](const BinnedArm& arm) {
        VectorXd theta(static_cast<Eigen::Index>(arm.bins.size()));
        for (std::size_t b = 0; b < arm.bins.size(); ++b) theta[static_cast<Eigen::Index>(b)] = arm.bins[b].mean();
        return theta;
      });
}

int best_arm(const std::vector<double>& rewards, const Eligibility& eligible) {
  int best = -1;
  for (int g = 0; g < static_cast<int>(rewards.size()); ++g) {
    if (!eligible[g]) continue;
    if (best < 0 || rewards[g] > rewards[best]) best = g;
  }
  if (best < 0) throw std::runtime_error("no eligible arms");
  return best;
}

int ts_select(const Beliefs& beliefs, const RewardContext& ctx, const Eligibility& eligible, Rng& rng) {
  return best_arm(sampled_rewards(beliefs, ctx, eligible, rng), eligible);
}

int ttts_select(const Beliefs& beliefs, const RewardContext& ctx, const Eligibility& eligible,
                double beta_resample, Rng& rng) {
  const int first = ts_select(beliefs, ctx, eligible, rng);
  const auto eligible_count = std::count(eligible.begin(), eligible.end(), true);
  if (eligible_count < 2 || !bernoulli(rng, beta_resample)) return first;

  std::vector<double> rewards;
  for (int attempt = 0; attempt < kTopTwoResampleCap; ++attempt) {
    rewards = sampled_rewards(beliefs, ctx, eligible, rng);
    const int challenger = best_arm(rewards, eligible);
    if (challenger != first) return challenger;
  }
  // Degenerate posteriors: fall back to the runner-up of the last draw.
  Eligibility without_first = eligible;
  without_first[first] = false;
  return best_arm(rewards, without_first);
}

std::vector<int> mpts_select(const Beliefs& beliefs, const RewardContext& ctx,
                             const Eligibility& eligible, int m, Rng& rng) {
  const auto eligible_count = std::count(eligible.begin(), eligible.end(), true);
  if (m < 1 || m > eligible_count) {
    throw std::invalid_argument("multiple-play m=" + std::to_string(m) + " exceeds " +
                                std::to_string(eligible_count) + " eligible arms");
  }
  const auto rewards = sampled_rewards(beliefs, ctx, eligible, rng);
  std::vector<int> arms;
  for (int g = 0; g < static_cast<int>(rewards.size()); ++g) {
    if (eligible[g]) arms.push_back(g);
  }
  std::stable_sort(arms.begin(), arms.end(), [&](int x, int y) { return rewards[x] > rewards[y]; });
  arms.resize(m);
  return arms;
}

int variance_greedy_select(const Beliefs& beliefs, const VectorXd& weights, const Eligibility& eligible) {
  RewardContext ctx;
  ctx.arm_weights = weights;
  switch (beliefs.kind) {
    case BeliefKind::accuracy: ctx.task = Task::estimate_accuracy; break;
    case BeliefKind::confusion: ctx.task = Task::estimate_confusion; break;
    case BeliefKind::binned_accuracy:
      throw std::invalid_argument("variance-greedy needs Beta or Dirichlet arms");
  }
  Rng unused(0);
  return best_arm(predictive_rewards(beliefs, ctx, eligible, unused), eligible);
}

double branch_lambda(const BetaPosterior& updated, const BetaPosterior& other, double epsilon,
                     int n_samples, std::uint64_t seed) {
  // The updated arm is always drawn first; lambda is invariant to swapping
  // the arms, so symmetric states give identical values for both candidates.
  Rng rng(splitmix64(seed));
  return rope_compare(updated, other, epsilon, n_samples, rng).lambda;
}

int comparison_select(const BetaPosterior& a, const BetaPosterior& b, double epsilon, int n_samples,
                      Rng& rng) {
  const std::uint64_t seed = rng();
  auto expected_lambda = [&](const BetaPosterior& self, const BetaPosterior& rival) {
    const double p = self.mean();
    return p * branch_lambda(beta_update(self, 1), rival, epsilon, n_samples, seed) +
           (1.0 - p) * branch_lambda(beta_update(self, 0), rival, epsilon, n_samples, seed);
  };
  const double gain_a = expected_lambda(a, b);
  const double gain_b = expected_lambda(b, a);
  const double tie_tolerance = 1.0 / std::sqrt(static_cast<double>(n_samples));
  return gain_b > gain_a + tie_tolerance ? 1 : 0;
}

namespace {

int uniform_eligible(const Eligibility& eligible, Rng& rng) {
  std::vector<int> arms;
  for (int g = 0; g < static_cast<int>(eligible.size()); ++g) {
    if (eligible[g]) arms.push_back(g);
  }
  if (arms.empty()) throw std::runtime_error("no eligible arms");
  return arms[uniform_index(rng, arms.size())];
}

int comparison_pair_select(const Beliefs& beliefs, const RewardContext& ctx, const Eligibility& eligible,
                           Rng& rng) {
  const int a = ctx.pair[0];
  const int b = ctx.pair[1];
  if (!eligible[a] || !eligible[b]) return eligible[a] ? a : b;
  const int pick = comparison_select(beliefs.beta[a], beliefs.beta[b], ctx.rope_epsilon, ctx.n_samples, rng);
  return pick == 0 ? a : b;
}

}  // namespace

int baseline_select(StrategyKind kind, const Beliefs& beliefs, const RewardContext& ctx,
                    const Eligibility& eligible, const StrategyConfig& params, Rng& rng) {
  check_eligibility(beliefs, eligible);
  switch (kind) {
    case StrategyKind::random:
      return uniform_eligible(eligible, rng);
    case StrategyKind::epsilon_greedy:
      if (bernoulli(rng, params.epsilon)) return uniform_eligible(eligible, rng);
      if (ctx.task == Task::compare) return comparison_pair_select(beliefs, ctx, eligible, rng);
      return best_arm(predictive_rewards(beliefs, ctx, eligible, rng), eligible);
    case StrategyKind::bayes_ucb: {
      const int G = beliefs.num_arms();
      std::vector<std::vector<double>> draws(G);
      for (int s = 0; s < params.n_samples; ++s) {
        const auto r = sampled_rewards(beliefs, ctx, eligible, rng);
        for (int g = 0; g < G; ++g) {
          if (eligible[g]) draws[g].push_back(r[g]);
        }
      }
      std::vector<double> bound(G, kNegInf);
      for (int g = 0; g < G; ++g) {
        if (eligible[g]) bound[g] = sample_quantile(std::move(draws[g]), params.ucb_quantile);
      }
      return best_arm(bound, eligible);
    }
    default:
      throw std::invalid_argument("not a baseline strategy: " + std::string(to_string(kind)));
  }
}

std::vector<int> select_arms(const StrategyConfig& cfg, const Beliefs& beliefs, const RewardContext& ctx,
                             const Eligibility& eligible, Rng& rng) {
  switch (cfg.kind) {
    case StrategyKind::thompson:
      return {ts_select(beliefs, ctx, eligible, rng)};
    case StrategyKind::top_two_thompson:
      return {ttts_select(beliefs, ctx, eligible, cfg.beta_resample, rng)};
    case StrategyKind::multiple_play_thompson: {
      const auto eligible_count = static_cast<int>(std::count(eligible.begin(), eligible.end(), true));
      return mpts_select(beliefs, ctx, eligible, std::min(cfg.m, eligible_count), rng);
    }
    case StrategyKind::variance_greedy:
      return {variance_greedy_select(beliefs, ctx.arm_weights, eligible)};
    case StrategyKind::comparison_greedy:
      check_eligibility(beliefs, eligible);
      return {comparison_pair_select(beliefs, ctx, eligible, rng)};
    case StrategyKind::random:
    case StrategyKind::epsilon_greedy:
    case StrategyKind::bayes_ucb:
      return {baseline_select(cfg.kind, beliefs, ctx, eligible, cfg, rng)};
  }
  throw std::logic_error("unhandled strategy kind");
}

}  // namespace assay
