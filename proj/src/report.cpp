#include "assay/report.hpp"

#include <cmath>

namespace assay {

using nlohmann::json;

bool step_correct(const SessionContext& ctx, const Step& step) {
  if (ctx.cfg.outcome_kind == OutcomeKind::correctness) return step.z == 1;
  return step.z == ctx.pool->predicted(step.record);
}

ReliabilityDiagram labeled_reliability(const SessionContext& ctx, const std::vector<Step>& steps, int num_bins,
                                       double level, int n_samples, Rng& rng) {
  const auto bins = assign_groups(*ctx.pool, PartitionSpec{PartitionKind::score_bin, num_bins, {}});
  auto posts = beta_priors(bins, ctx.cfg.prior);
  for (const auto& s : steps) {
    auto& p = posts[bins.group_of[s.record]];
    p = beta_update(p, step_correct(ctx, s) ? 1 : 0);
  }
  VectorXd confidence = bins.mean_confidence;
  for (int b = 0; b < num_bins; ++b) {
    if (bins.members[b].empty()) confidence[b] = (b + 0.5) / num_bins;
  }
  return reliability_diagram(posts, bins.weights, confidence, level, n_samples, rng);
}

namespace {

json group_header(const SessionContext& ctx, int g) {
  return {{"group", g},
          {"name", ctx.arms.names[g]},
          {"weight", ctx.arms.weights[g]},
          {"size", ctx.arms.members[g].size()},
          {"mean_confidence", ctx.arms.mean_confidence[g]}};
}

std::vector<double> to_vector(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

json build_report(const SessionContext& ctx, const std::vector<Step>& steps, const ReportOptions& options) {
  const Beliefs beliefs = replay_beliefs(ctx, steps);
  Rng rng = make_rng(options.seed);
  const int G = beliefs.num_arms();
  const int n = options.n_samples;
  const auto& cfg = ctx.cfg;

  json report;
  report["task"] = to_string(cfg.task);
  report["direction"] = to_string(cfg.strategy.direction);
  report["partition"] = to_string(cfg.partition.kind);
  report["labels"] = steps.size();
  report["warnings"] = ctx.warnings;

  json groups = json::array();
  MatrixXd draws(n, G);
  switch (beliefs.kind) {
    case BeliefKind::accuracy:
      for (int g = 0; g < G; ++g) {
        const auto& post = beliefs.beta[g];
        json entry = group_header(ctx, g);
        entry["labels"] = post.trials;
        entry["posterior"] = to_json(post);
        entry["accuracy"] = to_json(beta_summarize(post, options.level));
        groups.push_back(std::move(entry));
      }
      if (G >= 2) report["ranking"] = to_json(rank_distribution(beliefs.beta, n, rng, cfg.strategy.direction));
      break;
    case BeliefKind::confusion:
      for (int g = 0; g < G; ++g) {
        const auto& post = beliefs.dirichlet[g];
        const VectorXd alpha = post.effective();
        std::vector<double> metric;
        metric.reserve(n);
        for (int s = 0; s < n; ++s) {
          const VectorXd theta = dirichlet_sample(alpha, rng);
          draws(s, g) = cfg.task == Task::identify_cost ? expected_cost(ctx.costs.c.col(g), theta) : theta[g];
          metric.push_back(draws(s, g));
        }
        json entry = group_header(ctx, g);
        entry["labels"] = post.counts.sum();
        entry["posterior"] = to_json(post);
        entry["true_class_mean"] = to_vector(post.mean());
        entry[cfg.task == Task::identify_cost ? "expected_cost" : "accuracy"] =
            to_json(summarize_samples(std::move(metric), options.level));
        groups.push_back(std::move(entry));
      }
      if (G >= 2) report["ranking"] = to_json(rank_samples(draws, cfg.strategy.direction));
      break;
    case BeliefKind::binned_accuracy:
      for (int g = 0; g < G; ++g) {
        const auto& arm = beliefs.binned[g];
        json entry = group_header(ctx, g);
        std::int64_t labels = 0;
        json bins = json::array();
        for (std::size_t b = 0; b < arm.bins.size(); ++b) {
          labels += arm.bins[b].trials;
          bins.push_back({{"bin", b},
                          {"weight", arm.weights[static_cast<Eigen::Index>(b)]},
                          {"confidence", arm.confidence[static_cast<Eigen::Index>(b)]},
                          {"posterior", to_json(arm.bins[b])},
                          {"accuracy", to_json(beta_summarize(arm.bins[b], options.level))}});
        }
        entry["labels"] = labels;
        entry["bins"] = std::move(bins);
        if (ctx.arms.members[g].empty()) {
          for (int s = 0; s < n; ++s) draws(s, g) = 0.0;
          entry["ece"] = nullptr;
        } else {
          const auto ece = ece_posterior(arm.bins, arm.weights, arm.confidence, n, rng, options.level);
          for (int s = 0; s < n; ++s) draws(s, g) = ece.samples[s];
          entry["ece"] = to_json(ece);
        }
        groups.push_back(std::move(entry));
      }
      if (G >= 2) report["ranking"] = to_json(rank_samples(draws, cfg.strategy.direction));
      break;
  }
  report["groups"] = std::move(groups);

  report["calibration"] = to_json(labeled_reliability(ctx, steps, kReportBins, options.level, n, rng));

  if (cfg.task == Task::compare) {
    const auto& pair = cfg.strategy.pair;
    json rope = to_json(rope_compare(beliefs.beta[pair[0]], beliefs.beta[pair[1]], cfg.strategy.rope_epsilon, n, rng));
    rope["pair"] = pair;
    report["rope"] = std::move(rope);
  }

  report["provenance"] = {{"n_samples", n},
                          {"seed", options.seed},
                          {"level", options.level},
                          {"config_digest", config_digest(cfg)}};
  return report;
}

}  // namespace assay
