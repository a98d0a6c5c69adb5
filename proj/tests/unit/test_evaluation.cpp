#include "assay/evaluation.hpp"
#include "assay/synth.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace assay;

namespace {

std::shared_ptr<const Pool> synth(int K, std::size_t n, double lo, double hi, double offset = 0.0) {
  SynthSpec spec;
  spec.num_classes = K;
  spec.n = n;
  spec.accuracy_profile = linear_profile(K, lo, hi);
  spec.calibration_offset = offset;
  spec.seed = 5;
  return std::make_shared<const Pool>(synth_pool(spec));
}

}  // namespace

TEST_CASE("ground truth from a hand-built pool") {
  const auto pool = testing::make_pool(
      3, {{0, 0.9, 0}, {0, 0.9, 1}, {1, 0.6, 1}, {1, 0.6, 1}, {1, 0.6, 2}, {2, 0.5, 2}});
  SessionConfig cfg;
  const auto ctx = make_session_context(pool, cfg);
  const auto t = compute_ground_truth(*ctx);
  CHECK(t.accuracy[0] == 0.5);
  CHECK(t.accuracy[1] == doctest::Approx(2.0 / 3));
  CHECK(t.accuracy[2] == 1.0);
  CHECK(t.true_top == std::vector<int>{0});
  CHECK(t.weights[1] == 0.5);
  // bins 9 (0.9), 6 (0.6), 5 (0.5): |0.5-0.9|/3 + |2/3-0.6|/2 + |1-0.5|/6
  CHECK(t.marginal_ece == doctest::Approx(0.4 / 3 + (2.0 / 3 - 0.6) / 2 + 0.5 / 6));
  CHECK(to_json(t).at("true_top") == nlohmann::json::array({0}));

  cfg.task = Task::estimate_confusion;
  cfg.strategy.task = cfg.task;
  cfg.strategy.kind = StrategyKind::variance_greedy;
  cfg.outcome_kind = OutcomeKind::true_class;
  const auto c = compute_ground_truth(*make_session_context(pool, cfg));
  CHECK(c.confusion(1, 0) == 0.5);
  CHECK(c.confusion(2, 1) == doctest::Approx(1.0 / 3));
  CHECK(c.confusion.colwise().sum().isApproxToConstant(1.0));

  std::vector<PredictionRecord> rs{testing::make_record("u", 2, 0, 0.9, std::nullopt)};
  const auto unlabeled = make_session_context(std::make_shared<const Pool>(rs, 2), SessionConfig{});
  CHECK_THROWS_AS(compute_ground_truth(*unlabeled), InputError);
}

TEST_CASE("identify-cost truth uses the cost matrix") {
  const auto pool = testing::make_pool(3, {{0, 0.9, 0}, {0, 0.9, 1}, {1, 0.6, 1}, {2, 0.5, 0}, {2, 0.5, 2}});
  SessionConfig cfg;
  cfg.task = Task::identify_cost;
  cfg.strategy.task = cfg.task;
  cfg.strategy.direction = Direction::max;
  cfg.outcome_kind = OutcomeKind::true_class;
  const auto t = compute_ground_truth(*make_session_context(pool, cfg));
  CHECK(t.metric[0] == 0.5);
  CHECK(t.metric[1] == 0.0);
  CHECK(t.metric[2] == 0.5);
  // ties keep index order
  CHECK(t.true_top == std::vector<int>{0});
}

TEST_CASE("multiple-play truth holds m groups") {
  const auto pool = synth(6, 3000, 0.4, 0.95);
  SessionConfig cfg;
  cfg.strategy.kind = StrategyKind::multiple_play_thompson;
  cfg.strategy.m = 3;
  CHECK(identification_m(cfg) == 3);
  const auto t = compute_ground_truth(*make_session_context(pool, cfg));
  CHECK(t.true_top == std::vector<int>{0, 1, 2});
}

TEST_CASE("informative confusion prior scores exactly one at zero labels") {
  // overconfident scores make the prior worth improving on
  const auto pool = synth(5, 5000, 0.3, 0.6, 0.3);
  SessionConfig cfg;
  cfg.task = Task::estimate_confusion;
  cfg.strategy.task = cfg.task;
  cfg.strategy.kind = StrategyKind::variance_greedy;
  cfg.outcome_kind = OutcomeKind::true_class;
  cfg.budget = 300;
  const auto ctx = make_session_context(pool, cfg);
  const auto truth = compute_ground_truth(*ctx);
  const auto runs = run_experiment(ctx, 2);
  const auto ev = evaluate_run(*ctx, truth, runs[0]);
  REQUIRE_FALSE(ev.curve.empty());
  CHECK(ev.curve.front().labels == 0);
  CHECK(ev.curve.front().value == 1.0);
  REQUIRE(ev.scaled_rmse.has_value());
  CHECK(*ev.scaled_rmse < 1.0);
  CHECK(ev.curve.back().labels == 300);
  CHECK(ev.curve.size() <= kCurvePoints + 2);
}

TEST_CASE("identification evaluation") {
  const auto pool = synth(4, 2000, 0.3, 0.95);
  SessionConfig cfg;
  cfg.prior.kind = PriorKind::uniform;
  cfg.budget = 400;
  const auto ctx = make_session_context(pool, cfg);
  const auto truth = compute_ground_truth(*ctx);
  const auto runs = run_experiment(ctx, 3);
  for (const auto& r : runs) {
    const auto ev = evaluate_run(*ctx, truth, r);
    REQUIRE(ev.mrr.has_value());
    CHECK(ev.labels == 400);
    REQUIRE(ev.labels_first.has_value());
    if (ev.labels_sustained) CHECK(*ev.labels_sustained >= *ev.labels_first);
    CHECK(ev.rmse.has_value());
    CHECK(ev.ece_estimate >= 0.0);
  }
}

TEST_CASE("labeled ECE estimate approaches the truth on a miscalibrated pool") {
  const auto pool = synth(4, 4000, 0.4, 0.8, 0.1);
  SessionConfig cfg;
  cfg.task = Task::estimate_accuracy;
  cfg.strategy.task = cfg.task;
  cfg.strategy.kind = StrategyKind::random;
  cfg.budget = 4000;
  const auto ctx = make_session_context(pool, cfg);
  const auto truth = compute_ground_truth(*ctx);
  CHECK(truth.marginal_ece == doctest::Approx(0.1).epsilon(0.2));
  const auto runs = run_experiment(ctx, 1);
  const auto ev = evaluate_run(*ctx, truth, runs[0]);
  CHECK(std::abs(ev.ece_estimate - truth.marginal_ece) < 0.005);
  CHECK(*ev.rmse < 1.0);
}

TEST_CASE("evaluation report compares methods") {
  const auto pool = synth(4, 2000, 0.3, 0.95);
  SessionConfig cfg;
  cfg.prior.kind = PriorKind::uniform;
  cfg.budget = 300;
  const auto ts_ctx = make_session_context(pool, cfg);
  auto rcfg = cfg;
  rcfg.strategy.kind = StrategyKind::random;
  const auto rnd_ctx = make_session_context(pool, rcfg);
  const auto truth = compute_ground_truth(*ts_ctx);

  auto evaluate = [&](const auto& ctx, const char* name) {
    MethodEvaluation m{name, {}};
    for (const auto& t : run_experiment(ctx, 8)) m.runs.push_back(evaluate_run(*ctx, truth, t));
    return m;
  };
  const auto report = evaluation_report(*ts_ctx, truth, {evaluate(ts_ctx, "ts"), evaluate(rnd_ctx, "random")});
  REQUIRE(report.at("methods").size() == 2);
  const auto& first = report["methods"][0];
  const auto& second = report["methods"][1];
  CHECK(first["name"] == "ts");
  CHECK(first["n_runs"] == 8);
  CHECK(first["metrics"]["mrr"]["n_runs"] == 8);
  CHECK_FALSE(first["metrics"]["mrr"].contains("significant_vs"));
  CHECK(second["metrics"]["mrr"]["significant_vs"]["method"] == "ts");
  CHECK(second["metrics"]["mrr"]["significant_vs"]["pairs"] == 8);
  CHECK(first["runs"]["mrr"].size() == 8);
  CHECK(first["curves"].size() == 8);
  CHECK(first["metrics"].contains("labels_to_identify_sustained_pct"));
  CHECK_FALSE(first["metrics"].contains("scaled_rmse"));
  CHECK(report["pool_size"] == 2000);
  CHECK(report["config_digest"] == config_digest(ts_ctx->cfg));

  // censored runs show up as "not reached"
  MethodEvaluation censored{"short", {}};
  auto scfg = cfg;
  scfg.budget = 1;
  const auto sctx = make_session_context(pool, scfg);
  for (const auto& t : run_experiment(sctx, 3)) censored.runs.push_back(evaluate_run(*sctx, truth, t));
  const auto cr = evaluation_report(*sctx, truth, {censored});
  const auto& col = cr["methods"][0]["runs"]["labels_to_identify_sustained_pct"];
  const auto& meta = cr["methods"][0]["metrics"]["labels_to_identify_sustained_pct"];
  CHECK(meta["censored"].get<int>() + meta["n_runs"].get<int>() == 3);
  int not_reached = 0;
  for (const auto& v : col) not_reached += v == "not reached";
  CHECK(not_reached == meta["censored"].get<int>());
}

TEST_CASE("compare truth") {
  const auto pool = synth(3, 3000, 0.5, 0.9);
  SessionConfig cfg;
  cfg.task = Task::compare;
  cfg.strategy.task = cfg.task;
  cfg.strategy.kind = StrategyKind::comparison_greedy;
  cfg.strategy.pair = {0, 2};
  cfg.strategy.n_samples = 2000;
  const auto t = compute_ground_truth(*make_session_context(pool, cfg));
  CHECK(t.eta == 0);
  CHECK(t.lambda > 0.99);
  CHECK(t.true_top.empty());
  CHECK(to_json(t).contains("lambda"));
}
