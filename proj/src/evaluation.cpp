#include "assay/evaluation.hpp"

#include "assay/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace assay {

using nlohmann::json;

StoppingTruth GroundTruth::stopping() const {
  StoppingTruth s;
  s.true_top = true_top;
  s.eta = eta;
  s.lambda = lambda;
  return s;
}

int identification_m(const SessionConfig& cfg) {
  return cfg.strategy.kind == StrategyKind::multiple_play_thompson ? cfg.strategy.m : 1;
}

GroundTruth compute_ground_truth(const SessionContext& ctx) {
  const Pool& pool = *ctx.pool;
  if (!pool.fully_labeled()) throw InputError("ground truth needs a fully labeled pool");
  const auto& cfg = ctx.cfg;
  const int G = ctx.num_arms();
  const int K = pool.num_classes();

  GroundTruth t;
  t.task = cfg.task;
  t.direction = cfg.strategy.direction;
  t.weights = ctx.arms.weights;
  t.populated.assign(G, false);
  t.accuracy = VectorXd::Zero(G);
  for (int g = 0; g < G; ++g) {
    const auto& members = ctx.arms.members[g];
    t.populated[g] = !members.empty();
    if (members.empty()) continue;
    std::size_t correct = 0;
    for (auto i : members) correct += (*pool[i].label == pool.predicted(i)) ? 1 : 0;
    t.accuracy[g] = static_cast<double>(correct) / static_cast<double>(members.size());
  }
  t.metric = t.accuracy;

  if (ctx.prior.kind == BeliefKind::confusion) {
    t.confusion = MatrixXd::Zero(K, K);
    for (int k = 0; k < K; ++k) {
      const auto& members = ctx.arms.members[k];
      for (auto i : members) t.confusion(*pool[i].label, k) += 1.0;
      if (!members.empty()) t.confusion.col(k) /= static_cast<double>(members.size());
    }
    t.class_weights = ctx.arms.weights;
    if (cfg.task == Task::identify_cost) {
      for (int k = 0; k < K; ++k) t.metric[k] = expected_cost(ctx.costs.c.col(k), t.confusion.col(k));
    }
  }
  if (ctx.prior.kind == BeliefKind::binned_accuracy) {
    const int B = cfg.partition.num_bins;
    for (int k = 0; k < G; ++k) {
      if (!t.populated[k]) continue;
      const auto cb = class_bins(ctx.cells, k);
      VectorXd acc = VectorXd::Zero(B);
      for (int b = 0; b < B; ++b) {
        const auto& members = ctx.cells.members[k * B + b];
        if (members.empty()) continue;
        std::size_t correct = 0;
        for (auto i : members) correct += (*pool[i].label == k) ? 1 : 0;
        acc[b] = static_cast<double>(correct) / static_cast<double>(members.size());
      }
      t.metric[k] = ece_exact(cb.weights, acc, cb.confidence);
    }
  }

  {
    const auto bins = assign_groups(pool, PartitionSpec{PartitionKind::score_bin, kReportBins, {}});
    VectorXd acc = VectorXd::Zero(kReportBins);
    for (int b = 0; b < kReportBins; ++b) {
      const auto& members = bins.members[b];
      if (members.empty()) continue;
      std::size_t correct = 0;
      for (auto i : members) correct += (*pool[i].label == pool.predicted(i)) ? 1 : 0;
      acc[b] = static_cast<double>(correct) / static_cast<double>(members.size());
    }
    t.marginal_ece = ece_exact(bins.weights, acc, bins.mean_confidence);
  }

  if (is_identification(cfg.task)) {
    std::vector<int> order;
    for (int g = 0; g < G; ++g) {
      if (t.populated[g]) order.push_back(g);
    }
    const bool lowest_first = t.direction == Direction::min;
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
      return lowest_first ? t.metric[x] < t.metric[y] : t.metric[x] > t.metric[y];
    });
    const auto m = static_cast<std::size_t>(identification_m(cfg));
    if (m > order.size()) throw std::invalid_argument("top-m set larger than the number of populated groups");
    t.true_top.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  }

  if (cfg.task == Task::compare) {
    // Full-data posteriors: the session prior plus every label of each arm.
    const auto& pair = cfg.strategy.pair;
    std::array<BetaPosterior, 2> full{ctx.prior.beta[pair[0]], ctx.prior.beta[pair[1]]};
    for (int side = 0; side < 2; ++side) {
      for (auto i : ctx.arms.members[pair[side]]) {
        full[side] = beta_update(full[side], *pool[i].label == pool.predicted(i) ? 1 : 0);
      }
    }
    Rng rng = make_rng(cfg.seed);
    const auto r = rope_compare(full[0], full[1], cfg.strategy.rope_epsilon, cfg.strategy.n_samples, rng);
    t.eta = r.eta;
    t.lambda = r.lambda;
  }
  return t;
}

json to_json(const GroundTruth& t) {
  json j = {{"task", to_string(t.task)},
            {"direction", to_string(t.direction)},
            {"accuracy", std::vector<double>(t.accuracy.data(), t.accuracy.data() + t.accuracy.size())},
            {"metric", std::vector<double>(t.metric.data(), t.metric.data() + t.metric.size())},
            {"weights", std::vector<double>(t.weights.data(), t.weights.data() + t.weights.size())},
            {"populated", t.populated},
            {"marginal_ece", t.marginal_ece},
            {"true_top", t.true_top}};
  if (t.task == Task::compare) {
    j["eta"] = t.eta;
    j["lambda"] = t.lambda;
  }
  return j;
}

MatrixXd confusion_estimate(const Beliefs& beliefs) {
  const auto K = static_cast<Eigen::Index>(beliefs.dirichlet.size());
  MatrixXd est(K, K);
  for (Eigen::Index k = 0; k < K; ++k) est.col(k) = beliefs.dirichlet[k].mean();
  return est;
}

double labeled_ece_estimate(const SessionContext& ctx, const std::vector<Step>& steps) {
  const auto bins = assign_groups(*ctx.pool, PartitionSpec{PartitionKind::score_bin, kReportBins, {}});
  auto posts = beta_priors(bins, ctx.cfg.prior);
  for (const auto& s : steps) {
    auto& p = posts[bins.group_of[s.record]];
    p = beta_update(p, step_correct(ctx, s) ? 1 : 0);
  }
  VectorXd means(kReportBins);
  for (int b = 0; b < kReportBins; ++b) means[b] = posts[b].mean();
  return ece_exact(bins.weights, means, bins.mean_confidence);
}

namespace {

// Groupwise accuracy RMSE in percent over populated arms.
double accuracy_rmse(const GroundTruth& truth, const VectorXd& estimate) {
  return 100.0 * rmse_groupwise(estimate, truth.accuracy, truth.weights);
}

}  // namespace

RunEvaluation evaluate_run(const SessionContext& ctx, const GroundTruth& truth, const Trajectory& trajectory) {
  RunEvaluation ev;
  ev.run = trajectory.run;
  ev.labels = static_cast<std::int64_t>(trajectory.steps.size());
  ev.terminal = trajectory.terminal;
  const auto& cfg = ctx.cfg;
  const auto n = trajectory.steps.size();
  const std::size_t stride = std::max<std::size_t>(1, n / kCurvePoints);

  std::optional<double> confusion_reference;
  if (ctx.prior.kind == BeliefKind::confusion) {
    confusion_reference = rmse_confusion(confusion_estimate(ctx.prior), truth.confusion, truth.class_weights);
  }

  auto primary = [&](const Beliefs& b) -> std::optional<double> {
    switch (cfg.task) {
      case Task::estimate_accuracy: return accuracy_rmse(truth, arm_estimates(ctx, b));
      case Task::estimate_confusion:
      case Task::identify_cost:
        if (*confusion_reference > 0.0) {
          return rmse_confusion_scaled(confusion_estimate(b), truth.confusion, truth.class_weights,
                                       *confusion_reference);
        }
        return std::nullopt;
      case Task::identify_accuracy:
      case Task::identify_ece:
        return mrr(predicted_order(ctx, b), truth.true_top);
      case Task::compare: return std::nullopt;
    }
    return std::nullopt;
  };

  Beliefs b = ctx.prior;
  std::vector<double> mrr_by_step;
  auto record_curve = [&](std::size_t labels) {
    if (const auto v = primary(b)) ev.curve.push_back(CurvePoint{static_cast<std::int64_t>(labels), *v});
  };
  record_curve(0);
  for (std::size_t i = 0; i < n; ++i) {
    apply_outcome(ctx, b, trajectory.steps[i].record, trajectory.steps[i].z);
    if (is_identification(cfg.task)) mrr_by_step.push_back(mrr(predicted_order(ctx, b), truth.true_top));
    if ((i + 1) % stride == 0 || i + 1 == n) record_curve(i + 1);
  }
  if (cfg.task == Task::identify_cost) {
    // The cost task's curve tracks identification; swap in MRR.
    ev.curve.clear();
    Beliefs c = ctx.prior;
    ev.curve.push_back(CurvePoint{0, mrr(predicted_order(ctx, c), truth.true_top)});
    for (std::size_t i = 0; i < n; ++i) {
      if ((i + 1) % stride == 0 || i + 1 == n) ev.curve.push_back(CurvePoint{static_cast<std::int64_t>(i + 1), mrr_by_step[i]});
    }
  }

  if (b.kind == BeliefKind::accuracy) ev.rmse = accuracy_rmse(truth, arm_estimates(ctx, b));
  if (b.kind == BeliefKind::confusion && *confusion_reference > 0.0) {
    ev.scaled_rmse = rmse_confusion_scaled(confusion_estimate(b), truth.confusion, truth.class_weights,
                                           *confusion_reference);
  }
  if (is_identification(cfg.task)) {
    ev.mrr = mrr(predicted_order(ctx, b), truth.true_top);
    ev.labels_first = labels_to_identify(mrr_by_step, kStopMrr, false);
    ev.labels_sustained = labels_to_identify(mrr_by_step, kStopMrr, true);
  }
  if (cfg.task == Task::compare) {
    Rng rng = make_rng(trajectory.seed ^ 0x5bd1e995ULL);
    const auto& pair = cfg.strategy.pair;
    const auto r = rope_compare(b.beta[pair[0]], b.beta[pair[1]], cfg.strategy.rope_epsilon, cfg.strategy.n_samples, rng);
    ev.comparison_success = comparison_success(r, truth.eta, truth.lambda, kStopLambdaTolerance);
    if (trajectory.terminal == TerminalReason::stopped) ev.labels_first = ev.labels;
  }
  ev.ece_estimate = labeled_ece_estimate(ctx, trajectory.steps);
  return ev;
}

namespace {

struct MetricColumn {
  std::vector<std::optional<double>> values;  // by run position
};

std::map<std::string, MetricColumn> metric_columns(const SessionContext& ctx, const GroundTruth& truth,
                                                   const MethodEvaluation& m) {
  std::map<std::string, MetricColumn> cols;
  const double pool_size = static_cast<double>(ctx.pool->size());
  auto pct = [&](const std::optional<std::int64_t>& v) -> std::optional<double> {
    if (!v) return std::nullopt;
    return 100.0 * static_cast<double>(*v) / pool_size;
  };
  for (const auto& r : m.runs) {
    cols["labels"].values.push_back(static_cast<double>(r.labels));
    cols["rmse"].values.push_back(r.rmse);
    cols["scaled_rmse"].values.push_back(r.scaled_rmse);
    cols["mrr"].values.push_back(r.mrr);
    cols["labels_to_identify_pct"].values.push_back(pct(r.labels_first));
    cols["labels_to_identify_sustained_pct"].values.push_back(pct(r.labels_sustained));
    cols["comparison_success"].values.push_back(
        r.comparison_success ? std::optional<double>(*r.comparison_success ? 1.0 : 0.0) : std::nullopt);
    cols["ece_estimate"].values.push_back(r.ece_estimate);
    cols["ece_error_pct"].values.push_back(
        truth.marginal_ece > 0.0 ? std::optional<double>(100.0 * std::abs(truth.marginal_ece - r.ece_estimate) /
                                                         truth.marginal_ece)
                                 : std::nullopt);
  }
  // Drop metrics that do not apply to this task.
  for (auto it = cols.begin(); it != cols.end();) {
    const bool any = std::any_of(it->second.values.begin(), it->second.values.end(),
                                 [](const auto& v) { return v.has_value(); });
    const bool censorable = it->first.rfind("labels_to_identify", 0) == 0;
    if (!any && !(censorable && is_identification(truth.task))) it = cols.erase(it);
    else ++it;
  }
  return cols;
}

json raw_array(const MetricColumn& c) {
  json a = json::array();
  for (const auto& v : c.values) a.push_back(v ? json(*v) : json("not reached"));
  return a;
}

}  // namespace

json evaluation_report(const SessionContext& ctx, const GroundTruth& truth,
                       const std::vector<MethodEvaluation>& methods, double alpha) {
  json out;
  out["truth"] = to_json(truth);
  out["config_digest"] = config_digest(ctx.cfg);
  out["pool_size"] = ctx.pool->size();
  out["alpha"] = alpha;

  std::vector<std::map<std::string, MetricColumn>> columns;
  for (const auto& m : methods) columns.push_back(metric_columns(ctx, truth, m));

  json list = json::array();
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    json method;
    method["name"] = methods[mi].name;
    method["n_runs"] = methods[mi].runs.size();
    json metrics;
    json raw;
    for (const auto& [name, col] : columns[mi]) {
      std::vector<double> present;
      for (const auto& v : col.values) {
        if (v) present.push_back(*v);
      }
      const auto agg = aggregate_runs(present);
      json entry = {{"mean", present.empty() ? json(nullptr) : json(agg.mean)},
                    {"se", agg.se},
                    {"n_runs", agg.n},
                    {"censored", col.values.size() - present.size()}};
      if (mi > 0) {
        const auto base = columns[0].find(name);
        if (base != columns[0].end()) {
          std::vector<double> x;
          std::vector<double> y;
          const auto pairs = std::min(col.values.size(), base->second.values.size());
          for (std::size_t r = 0; r < pairs; ++r) {
            if (col.values[r] && base->second.values[r]) {
              x.push_back(*col.values[r]);
              y.push_back(*base->second.values[r]);
            }
          }
          const auto w = wilcoxon_signed_rank(x, y);
          entry["significant_vs"] = {{"method", methods[0].name},
                                     {"pairs", x.size()},
                                     {"statistic", w.statistic},
                                     {"p_value", w.p_value},
                                     {"exact", w.exact},
                                     {"significant", w.n > 0 && w.p_value < alpha}};
        }
      }
      metrics[name] = std::move(entry);
      raw[name] = raw_array(col);
    }
    method["metrics"] = std::move(metrics);
    method["runs"] = std::move(raw);
    json curves = json::array();
    for (const auto& r : methods[mi].runs) {
      json c = json::array();
      for (const auto& p : r.curve) c.push_back({p.labels, p.value});
      curves.push_back({{"run", r.run}, {"terminal", to_string(r.terminal)}, {"points", c}});
    }
    method["curves"] = std::move(curves);
    list.push_back(std::move(method));
  }
  out["methods"] = std::move(list);
  return out;
}

}  // namespace assay
