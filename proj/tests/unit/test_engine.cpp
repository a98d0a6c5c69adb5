#include "assay/engine.hpp"
#include "assay/evaluation.hpp"
#include "assay/synth.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace assay;
using nlohmann::json;

namespace {

std::shared_ptr<const Pool> synth(int K, std::size_t n, double lo, double hi, std::uint64_t seed = 1) {
  SynthSpec spec;
  spec.num_classes = K;
  spec.n = n;
  spec.accuracy_profile = linear_profile(K, lo, hi);
  spec.seed = seed;
  return std::make_shared<const Pool>(synth_pool(spec));
}

SessionConfig config(StrategyKind kind, std::int64_t budget, std::uint64_t seed = 7) {
  SessionConfig cfg;
  cfg.strategy.kind = kind;
  cfg.budget = budget;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("one group and a budget of one") {
  const auto pool = testing::make_pool(2, {{0, 0.9, 0}, {0, 0.8, 1}, {0, 0.7, 0}});
  auto cfg = config(StrategyKind::thompson, 1);
  const auto ctx = make_session_context(pool, cfg);
  ReplayOracle oracle(pool);
  const auto t = run_session(ctx, oracle, 3);
  REQUIRE(t.steps.size() == 1);
  CHECK(t.steps[0].group == 0);
  CHECK(t.terminal == TerminalReason::budget);
  CHECK(oracle.queries() == 1);
}

TEST_CASE("an all-correct pool only raises the estimate") {
  std::vector<testing::Row> rows;
  for (int i = 0; i < 40; ++i) rows.push_back({i % 2, 0.6, i % 2});
  const auto pool = testing::make_pool(2, rows);
  auto cfg = config(StrategyKind::random, 40);
  const auto ctx = make_session_context(pool, cfg);
  ReplayOracle oracle(pool);
  const auto t = run_session(ctx, oracle, 1);
  CHECK(t.terminal == TerminalReason::budget);
  VectorXd last = arm_estimates(*ctx, ctx->prior);
  for (std::size_t n = 1; n <= t.steps.size(); ++n) {
    const VectorXd est = arm_estimates(*ctx, replay_beliefs(*ctx, t.steps, n));
    CHECK((est.array() >= last.array()).all());
    last = est;
  }
  // one more proposal exhausts nothing: the budget ends the run first
  auto cfg2 = cfg;
  cfg2.budget = 100;
  ReplayOracle fresh(pool);
  const auto t2 = run_session(make_session_context(pool, cfg2), fresh, 1);
  CHECK(t2.steps.size() == 40);
  CHECK(t2.terminal == TerminalReason::exhausted);
}

TEST_CASE("replay oracle") {
  const auto pool = testing::make_pool(2, {{0, 0.9, 1}, {1, 0.8, 1}});
  ReplayOracle oracle(pool);
  CHECK(oracle.query("x0") == 1);
  CHECK_THROWS_AS(oracle.query("x0"), std::runtime_error);
  CHECK_THROWS_AS(oracle.query("nope"), std::invalid_argument);
  CHECK(oracle.query("x1") == 1);
  CHECK_THROWS_WITH_AS(oracle.query("x1"), doctest::Contains("exhausted"), std::runtime_error);

  std::vector<PredictionRecord> rs{testing::make_record("u", 2, 0, 0.9, std::nullopt)};
  CHECK_THROWS_AS(ReplayOracle(std::make_shared<const Pool>(rs, 2)), InputError);
}

TEST_CASE("stopping rules") {
  const auto pool = synth(3, 300, 0.5, 0.9);
  auto cfg = config(StrategyKind::thompson, 50);
  cfg.benchmark = true;
  const auto ctx = make_session_context(pool, cfg);
  Rng rng = make_rng(1);
  // a posterior that ranks class 0 lowest
  Beliefs b = ctx->prior;
  b.beta[0] = BetaPosterior{1, 1, 1, 10};
  b.beta[1] = BetaPosterior{1, 1, 9, 10};
  b.beta[2] = BetaPosterior{1, 1, 9, 10};
  StoppingTruth truth;
  truth.true_top = {0};
  const auto hit = check_stopping(*ctx, b, &truth, rng);
  CHECK(hit.stop);
  CHECK(hit.mrr == 1.0);
  truth.true_top = {1};
  const auto miss = check_stopping(*ctx, b, &truth, rng);
  CHECK_FALSE(miss.stop);
  CHECK(miss.mrr == 0.5);
  CHECK_THROWS_AS(check_stopping(*ctx, b, nullptr, rng), std::invalid_argument);

  auto est = cfg;
  est.task = Task::estimate_accuracy;
  est.strategy.task = Task::estimate_accuracy;
  est.strategy.kind = StrategyKind::variance_greedy;
  const auto ectx = make_session_context(pool, est);
  CHECK_FALSE(check_stopping(*ectx, b, &truth, rng).stop);

  // live sessions never stop on their own
  auto live = cfg;
  live.benchmark = false;
  CHECK_FALSE(check_stopping(*make_session_context(pool, live), b, nullptr, rng).stop);

  auto cmp = cfg;
  cmp.task = Task::compare;
  cmp.strategy.task = Task::compare;
  cmp.strategy.kind = StrategyKind::comparison_greedy;
  cmp.strategy.pair = {0, 2};
  cmp.strategy.n_samples = 2000;
  const auto cctx = make_session_context(pool, cmp);
  StoppingTruth ct;
  ct.eta = 0;
  ct.lambda = 1.0;
  // P(theta_0 - theta_2 < -0.05) is essentially 1 here
  Beliefs far = cctx->prior;
  far.beta[0] = BetaPosterior{1, 1, 100, 1000};
  far.beta[2] = BetaPosterior{1, 1, 900, 1000};
  const auto d = check_stopping(*cctx, far, &ct, rng);
  CHECK(d.stop);
  REQUIRE(d.rope.has_value());
  CHECK(d.rope->eta == 0);
  ct.eta = 2;
  CHECK_FALSE(check_stopping(*cctx, far, &ct, rng).stop);
}

TEST_CASE("benchmark runs stop once the worst class is found") {
  const auto pool = synth(4, 2000, 0.3, 0.95);
  auto cfg = config(StrategyKind::thompson, 2000);
  cfg.benchmark = true;
  cfg.prior.kind = PriorKind::uniform;
  const auto ctx = make_session_context(pool, cfg);
  const auto truth = compute_ground_truth(*ctx);
  CHECK(truth.true_top == std::vector<int>{0});
  const auto st = truth.stopping();
  const auto runs = run_experiment(ctx, 5, 1, &st);
  for (const auto& t : runs) {
    CHECK(t.terminal == TerminalReason::stopped);
    CHECK(mrr(predicted_order(*ctx, replay_beliefs(*ctx, t.steps)), truth.true_top) > kStopMrr);
  }
  CHECK_THROWS_AS(run_experiment(ctx, 1), std::invalid_argument);
}

TEST_CASE("experiments are reproducible and runs differ") {
  const auto pool = synth(5, 1000, 0.4, 0.9);
  const auto ctx = make_session_context(pool, config(StrategyKind::top_two_thompson, 120, 42));
  const auto a = run_experiment(ctx, 6, 1);
  const auto b = run_experiment(ctx, 6, 1);
  const auto c = run_experiment(ctx, 6, 4);
  CHECK(a == b);
  CHECK(a == c);
  for (int r = 0; r < 6; ++r) {
    CHECK(a[r].run == r);
    CHECK(a[r].seed == 42 + static_cast<std::uint64_t>(r));
  }
  CHECK(a[0].steps != a[1].steps);

  // run r equals a lone session seeded with seed + r
  ReplayOracle oracle(pool);
  const auto lone = run_session(ctx, oracle, 45);
  CHECK(lone.steps == a[3].steps);
}

TEST_CASE("session accounting invariants") {
  const auto pool = synth(6, 600, 0.4, 0.95);
  for (auto kind : {StrategyKind::random, StrategyKind::thompson, StrategyKind::top_two_thompson,
                    StrategyKind::multiple_play_thompson, StrategyKind::epsilon_greedy}) {
    auto cfg = config(kind, 250);
    cfg.strategy.m = 3;
    cfg.strategy.n_samples = 50;
    const auto ctx = make_session_context(pool, cfg);
    AssessmentSession session(ctx, 9);
    ReplayOracle oracle(pool);
    std::set<std::size_t> seen;
    for (;;) {
      const auto qs = session.propose();
      if (qs.empty()) break;
      CHECK_THROWS_AS(session.propose(), std::logic_error);
      for (const auto& q : qs) {
        CHECK(ctx->arms.group_of[q.record] == q.group);
        CHECK(seen.insert(q.record).second);
        const int y = oracle.query((*pool)[q.record].id);
        session.observe(q, y == pool->predicted(q.record) ? 1 : 0);
      }
    }
    CHECK(session.steps().size() == 250);
    CHECK(session.updates() == 250);
    CHECK(oracle.queries() == 250);
    // posterior counts are exactly the per-arm label tallies
    std::vector<std::int64_t> trials(ctx->num_arms(), 0), wins(ctx->num_arms(), 0);
    for (const auto& s : session.steps()) {
      ++trials[s.group];
      wins[s.group] += s.z;
    }
    for (int g = 0; g < ctx->num_arms(); ++g) {
      CHECK(session.beliefs().beta[g].trials == trials[g]);
      CHECK(session.beliefs().beta[g].successes == wins[g]);
    }
    CHECK(session.beliefs() == replay_beliefs(*ctx, session.steps()));
  }
}

TEST_CASE("observe rejects bad input without side effects") {
  const auto pool = synth(3, 60, 0.5, 0.9);
  const auto ctx = make_session_context(pool, config(StrategyKind::thompson, 10));
  AssessmentSession session(ctx, 1);
  const auto q = session.propose().front();
  CHECK_THROWS_AS(session.observe(q, 2), std::out_of_range);
  CHECK_THROWS_AS(session.observe(Query{q.group, q.record + 1}, 1), std::invalid_argument);
  CHECK(session.steps().empty());
  session.observe(q, 1);
  CHECK(session.steps().size() == 1);
  CHECK_THROWS_AS(session.observe(q, 1), std::invalid_argument);
  session.stop();
  CHECK(session.terminal() == TerminalReason::stopped);
  CHECK(session.propose().empty());
}

TEST_CASE("true-class outcomes") {
  const auto pool = synth(3, 300, 0.5, 0.9);
  auto cfg = config(StrategyKind::variance_greedy, 60);
  cfg.task = Task::estimate_confusion;
  cfg.strategy.task = Task::estimate_confusion;
  cfg.outcome_kind = OutcomeKind::true_class;
  const auto ctx = make_session_context(pool, cfg);
  const auto runs = run_experiment(ctx, 1);
  const auto b = replay_beliefs(*ctx, runs[0].steps);
  std::int64_t total = 0;
  for (const auto& d : b.dirichlet) total += d.counts.sum();
  CHECK(total == 60);
  CHECK_THROWS_AS(arm_outcome(*ctx, 0, 3), std::out_of_range);

  auto beta_cfg = config(StrategyKind::thompson, 10);
  beta_cfg.outcome_kind = OutcomeKind::true_class;
  const auto bctx = make_session_context(pool, beta_cfg);
  CHECK(arm_outcome(*bctx, 0, pool->predicted(0)) == 1);
  CHECK(arm_outcome(*bctx, 0, (pool->predicted(0) + 1) % 3) == 0);
}

TEST_CASE("compare sessions only label the pair") {
  const auto pool = synth(4, 400, 0.4, 0.9);
  auto cfg = config(StrategyKind::comparison_greedy, 40);
  cfg.task = Task::compare;
  cfg.strategy.task = Task::compare;
  cfg.strategy.pair = {1, 3};
  cfg.strategy.n_samples = 500;
  const auto ctx = make_session_context(pool, cfg);
  const auto runs = run_experiment(ctx, 2);
  for (const auto& s : runs[1].steps) CHECK((s.group == 1 || s.group == 3));
  cfg.strategy.pair = {1, 4};
  CHECK_THROWS_AS(make_session_context(pool, cfg), std::invalid_argument);
}

TEST_CASE("multiple-play needs m within the group count") {
  const auto pool = synth(3, 90, 0.5, 0.9);
  auto cfg = config(StrategyKind::multiple_play_thompson, 10);
  cfg.strategy.m = 4;
  CHECK_THROWS_AS(make_session_context(pool, cfg), std::invalid_argument);
  cfg.strategy.m = 3;
  cfg.budget = 7;
  const auto t = run_experiment(make_session_context(pool, cfg), 1);
  // the last round is trimmed to the remaining budget
  CHECK(t[0].steps.size() == 7);
}

TEST_CASE("trajectories round-trip") {
  const auto pool = synth(4, 500, 0.4, 0.9);
  const auto ctx = make_session_context(pool, config(StrategyKind::thompson, 230));
  auto runs = run_experiment(ctx, 3);
  std::stringstream io;
  write_trajectories(*ctx, runs, io);
  const std::string text = io.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 690);
  std::istringstream in(text);
  auto back = read_trajectories(*pool, in);
  const auto meta = trajectory_meta(*ctx, runs);
  apply_trajectory_meta(meta, back);
  CHECK(back == runs);
  CHECK(meta.at("config_digest") == config_digest(ctx->cfg));

  // a full snapshot every 100 steps
  std::istringstream lines(text);
  std::string line;
  int full = 0;
  while (std::getline(lines, line)) full += json::parse(line).contains("full");
  CHECK(full == 6);

  std::istringstream gap(R"({"run":0,"i":2,"group":0,"id":"r0","z":1})" "\n");
  CHECK_THROWS(read_trajectories(*pool, gap));
  std::istringstream unknown(R"({"run":0,"i":1,"group":0,"id":"zz","z":1})" "\n");
  CHECK_THROWS_AS(read_trajectories(*pool, unknown), InputError);
}

TEST_CASE("session config parsing") {
  const auto cfg = session_config_from_json(json::parse(R"({
    "task": "identify-ece",
    "prior": {"kind": "uniform"},
    "strategy": {"kind": "top-two-thompson", "beta_resample": 0.3},
    "budget": "until-stopped",
    "seed": 5
  })"));
  CHECK(cfg.task == Task::identify_ece);
  CHECK(cfg.strategy.task == Task::identify_ece);
  CHECK(cfg.strategy.direction == Direction::max);
  CHECK(cfg.partition.kind == PartitionKind::class_and_bin);
  CHECK_FALSE(cfg.budget.has_value());
  CHECK(cfg.strategy.beta_resample == 0.3);

  const auto conf = session_config_from_json(json::parse(R"({"task": "estimate-confusion",
    "strategy": {"kind": "variance-greedy"}})"));
  CHECK(conf.outcome_kind == OutcomeKind::true_class);

  // canonical form parses back to the same config
  CHECK(to_json(session_config_from_json(to_json(cfg))) == to_json(cfg));
  CHECK(config_digest(cfg) == config_digest(session_config_from_json(to_json(cfg))));
  CHECK(config_digest(cfg) != config_digest(conf));
  CHECK(config_digest(cfg).size() == 16);

  auto bad = [](const char* text) { return session_config_from_json(json::parse(text)); };
  CHECK_THROWS(bad(R"({"stratgy": {}})"));
  CHECK_THROWS(bad(R"({"strategy": {"kind": "greedy"}})"));
  CHECK_THROWS(bad(R"({"strategy": {"m": 0}})"));
  CHECK_THROWS(bad(R"({"budget": -3})"));
  CHECK_THROWS(bad(R"({"budget": "forever"})"));
  CHECK_THROWS(bad(R"({"sampling": "with-replacement"})"));
  CHECK_THROWS(bad(R"({"task": "estimate-confusion", "outcome_kind": "correctness"})"));
  CHECK_THROWS(bad(R"({"task": "identify-ece", "partition": {"kind": "score-bin"}})"));
  CHECK_THROWS(bad(R"({"task": "compare", "strategy": {"task": "identify-accuracy"}})"));
  CHECK_THROWS(bad(R"({"prior": {"strength": 0}})"));
  CHECK_THROWS(bad(R"({"runs": 0})"));
}

TEST_CASE("config files") {
  const auto dir = std::filesystem::temp_directory_path() / "assay_engine_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "cfg.json").string();
  std::ofstream(path) << R"({"strategy": {"kind": "random"}, "budget": 12})";
  CHECK(load_session_config(path).budget == 12);
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_session_config(path), InputError);
  CHECK_THROWS(load_session_config((dir / "missing.json").string()));

  // cost matrix size must match the pool
  const auto pool = synth(3, 90, 0.5, 0.9);
  const auto costs = (dir / "costs.csv").string();
  std::ofstream(costs) << "0,1\n1,0\n";
  auto cfg = config(StrategyKind::thompson, 5);
  cfg.task = Task::identify_cost;
  cfg.strategy.task = Task::identify_cost;
  cfg.strategy.direction = Direction::max;
  cfg.outcome_kind = OutcomeKind::true_class;
  cfg.cost_matrix_path = costs;
  CHECK_THROWS_AS(make_session_context(pool, cfg), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("identify-ece sessions update one bin") {
  const auto pool = synth(3, 600, 0.5, 0.9);
  auto cfg = config(StrategyKind::thompson, 30);
  cfg.task = Task::identify_ece;
  cfg.strategy.task = Task::identify_ece;
  cfg.strategy.direction = Direction::max;
  cfg.partition.kind = PartitionKind::class_and_bin;
  const auto ctx = make_session_context(pool, cfg);
  CHECK(ctx->num_arms() == 3);
  const auto runs = run_experiment(ctx, 1);
  const auto b = replay_beliefs(*ctx, runs[0].steps);
  std::int64_t total = 0;
  for (const auto& arm : b.binned) {
    CHECK(arm.weights.sum() == doctest::Approx(1.0));
    for (const auto& bin : arm.bins) total += bin.trials;
  }
  CHECK(total == 30);
}
