#include "assay/engine.hpp"

#include "assay/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <thread>

namespace assay {

using nlohmann::json;

OutcomeKind parse_outcome_kind(std::string_view text) {
  if (text == "correctness") return OutcomeKind::correctness;
  if (text == "true-class") return OutcomeKind::true_class;
  throw std::invalid_argument("unknown outcome kind '" + std::string(text) + "'");
}

std::string_view to_string(OutcomeKind kind) {
  return kind == OutcomeKind::correctness ? "correctness" : "true-class";
}

TerminalReason parse_terminal_reason(std::string_view text) {
  if (text == "budget") return TerminalReason::budget;
  if (text == "stopped") return TerminalReason::stopped;
  if (text == "exhausted") return TerminalReason::exhausted;
  throw std::invalid_argument("unknown terminal reason '" + std::string(text) + "'");
}

std::string_view to_string(TerminalReason reason) {
  switch (reason) {
    case TerminalReason::budget: return "budget";
    case TerminalReason::stopped: return "stopped";
    case TerminalReason::exhausted: return "exhausted";
  }
  return "?";
}

void SessionConfig::validate() const {
  partition.validate();
  prior.validate();
  strategy.validate();
  if (strategy.task != task) throw std::invalid_argument("strategy task does not match the session task");
  if (budget && *budget < 1) throw std::invalid_argument("budget must be >= 1");
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (with_replacement) {
    throw std::invalid_argument("with-replacement sampling is reserved and not supported");
  }
  const auto kind = belief_kind(task);
  if (kind == BeliefKind::confusion) {
    if (outcome_kind != OutcomeKind::true_class) {
      throw std::invalid_argument(std::string(to_string(task)) + " needs outcome_kind true-class");
    }
    if (partition.kind != PartitionKind::predicted_class) {
      throw std::invalid_argument(std::string(to_string(task)) + " needs a predicted-class partition");
    }
  }
  if (kind == BeliefKind::binned_accuracy && partition.kind != PartitionKind::class_and_bin) {
    throw std::invalid_argument("identify-ece needs a class-and-bin partition");
  }
}

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

}  // namespace

SessionConfig session_config_from_json(const json& j) {
  check_keys(j,
             {"partition", "prior", "strategy", "budget", "seed", "runs", "task", "outcome_kind", "cost_matrix",
              "benchmark", "sampling"},
             "config");
  SessionConfig cfg;
  if (j.contains("task")) cfg.task = parse_task(j.at("task").get<std::string>());
  cfg.strategy.task = cfg.task;
  cfg.strategy.direction = default_direction(cfg.task);

  if (j.contains("partition")) {
    const auto& p = j.at("partition");
    check_keys(p, {"kind", "num_bins", "attribute"}, "partition");
    if (p.contains("kind")) cfg.partition.kind = parse_partition_kind(p.at("kind").get<std::string>());
    cfg.partition.num_bins = p.value("num_bins", cfg.partition.num_bins);
    cfg.partition.attribute_name = p.value("attribute", std::string{});
  } else if (belief_kind(cfg.task) == BeliefKind::binned_accuracy) {
    cfg.partition.kind = PartitionKind::class_and_bin;
  }
  if (j.contains("prior")) {
    const auto& p = j.at("prior");
    check_keys(p, {"kind", "strength"}, "prior");
    if (p.contains("kind")) cfg.prior.kind = parse_prior_kind(p.at("kind").get<std::string>());
    if (p.contains("strength") && !p.at("strength").is_null()) cfg.prior.strength = p.at("strength").get<double>();
  }
  if (j.contains("strategy")) {
    const auto& s = j.at("strategy");
    check_keys(s,
               {"kind", "m", "beta_resample", "epsilon", "ucb_quantile", "direction", "pair", "rope_epsilon",
                "n_samples", "task"},
               "strategy");
    if (s.contains("task") && parse_task(s.at("task").get<std::string>()) != cfg.task) {
      throw std::invalid_argument("strategy.task does not match task");
    }
    auto& st = cfg.strategy;
    if (s.contains("kind")) st.kind = parse_strategy_kind(s.at("kind").get<std::string>());
    st.m = s.value("m", st.m);
    st.beta_resample = s.value("beta_resample", st.beta_resample);
    st.epsilon = s.value("epsilon", st.epsilon);
    st.ucb_quantile = s.value("ucb_quantile", st.ucb_quantile);
    if (s.contains("direction")) st.direction = parse_direction(s.at("direction").get<std::string>());
    if (s.contains("pair")) st.pair = s.at("pair").get<std::array<int, 2>>();
    st.rope_epsilon = s.value("rope_epsilon", st.rope_epsilon);
    st.n_samples = s.value("n_samples", st.n_samples);
  }
  if (j.contains("budget")) {
    const auto& b = j.at("budget");
    if (b.is_string()) {
      if (b.get<std::string>() != "until-stopped") throw std::invalid_argument("budget must be a number or \"until-stopped\"");
      cfg.budget.reset();
    } else {
      cfg.budget = b.get<std::int64_t>();
    }
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.runs = j.value("runs", cfg.runs);
  if (j.contains("outcome_kind")) {
    cfg.outcome_kind = parse_outcome_kind(j.at("outcome_kind").get<std::string>());
  } else if (belief_kind(cfg.task) == BeliefKind::confusion) {
    cfg.outcome_kind = OutcomeKind::true_class;
  }
  cfg.cost_matrix_path = j.value("cost_matrix", std::string{});
  cfg.benchmark = j.value("benchmark", false);
  if (j.contains("sampling")) {
    const auto mode = j.at("sampling").get<std::string>();
    if (mode == "with-replacement") cfg.with_replacement = true;
    else if (mode != "without-replacement") throw std::invalid_argument("unknown sampling mode '" + mode + "'");
  }
  cfg.validate();
  return cfg;
}

SessionConfig load_session_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
  return session_config_from_json(j);
}

json to_json(const SessionConfig& cfg) {
  const auto& st = cfg.strategy;
  json j;
  j["partition"] = {{"kind", to_string(cfg.partition.kind)},
                    {"num_bins", cfg.partition.num_bins},
                    {"attribute", cfg.partition.attribute_name}};
  j["prior"] = {{"kind", to_string(cfg.prior.kind)}};
  j["prior"]["strength"] = cfg.prior.strength ? json(*cfg.prior.strength) : json(nullptr);
  j["strategy"] = {{"kind", to_string(st.kind)},         {"m", st.m},
                   {"beta_resample", st.beta_resample},  {"epsilon", st.epsilon},
                   {"ucb_quantile", st.ucb_quantile},    {"direction", to_string(st.direction)},
                   {"pair", st.pair},                    {"rope_epsilon", st.rope_epsilon},
                   {"n_samples", st.n_samples}};
  j["budget"] = cfg.budget ? json(*cfg.budget) : json("until-stopped");
  j["seed"] = cfg.seed;
  j["runs"] = cfg.runs;
  j["task"] = to_string(cfg.task);
  j["outcome_kind"] = to_string(cfg.outcome_kind);
  j["cost_matrix"] = cfg.cost_matrix_path;
  j["benchmark"] = cfg.benchmark;
  j["sampling"] = cfg.with_replacement ? "with-replacement" : "without-replacement";
  return j;
}

std::string config_digest(const SessionConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json(cfg).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::shared_ptr<const SessionContext> make_session_context(std::shared_ptr<const Pool> pool, SessionConfig cfg) {
  if (!pool || pool->empty()) throw std::invalid_argument("session needs a non-empty pool");
  cfg.validate();
  auto ctx = std::make_shared<SessionContext>();
  ctx->pool = pool;
  ctx->cfg = cfg;
  const int K = pool->num_classes();
  const auto kind = belief_kind(cfg.task);
  ctx->prior.kind = kind;

  if (kind == BeliefKind::binned_accuracy) {
    ctx->arms = assign_groups(*pool, PartitionSpec{PartitionKind::predicted_class, cfg.partition.num_bins, {}});
    ctx->cells = assign_groups(*pool, cfg.partition);
    const int B = cfg.partition.num_bins;
    ctx->record_bin.resize(pool->size());
    for (std::size_t i = 0; i < pool->size(); ++i) ctx->record_bin[i] = ctx->cells.group_of[i] % B;
    const auto cell_priors = beta_priors(ctx->cells, cfg.prior, &ctx->warnings);
    for (int k = 0; k < K; ++k) {
      BinnedArm arm;
      arm.bins.assign(cell_priors.begin() + static_cast<std::ptrdiff_t>(k) * B,
                      cell_priors.begin() + static_cast<std::ptrdiff_t>(k + 1) * B);
      arm.confidence = ctx->cells.mean_confidence.segment(static_cast<Eigen::Index>(k) * B, B);
      arm.weights = ctx->arms.members[k].empty() ? VectorXd::Zero(B) : class_bins(ctx->cells, k).weights;
      ctx->prior.binned.push_back(std::move(arm));
    }
  } else {
    ctx->arms = assign_groups(*pool, cfg.partition);
    if (kind == BeliefKind::accuracy) {
      ctx->prior.beta = beta_priors(ctx->arms, cfg.prior, &ctx->warnings);
    } else {
      ctx->prior.dirichlet = dirichlet_priors(*pool, ctx->arms, cfg.prior, &ctx->warnings);
    }
  }

  if (cfg.cost_matrix_path.empty()) {
    ctx->costs = CostMatrix::zero_one(K);
  } else {
    ctx->costs = load_cost_matrix(cfg.cost_matrix_path);
    if (ctx->costs.size() != K) {
      throw std::invalid_argument("cost matrix is " + std::to_string(ctx->costs.size()) + "x" +
                                  std::to_string(ctx->costs.size()) + " but the pool has " + std::to_string(K) +
                                  " classes");
    }
  }

  const int G = ctx->arms.num_groups();
  if (cfg.task == Task::compare) {
    for (int g : cfg.strategy.pair) {
      if (g < 0 || g >= G) throw std::invalid_argument("compare pair group " + std::to_string(g) + " out of range");
    }
  }
  if (cfg.strategy.kind == StrategyKind::multiple_play_thompson && cfg.strategy.m > G) {
    throw std::invalid_argument("multiple-play m=" + std::to_string(cfg.strategy.m) + " exceeds G=" +
                                std::to_string(G));
  }

  auto& r = ctx->reward;
  r.task = cfg.task;
  r.direction = cfg.strategy.direction;
  r.arm_weights = ctx->arms.weights;
  r.costs = ctx->costs.c;
  r.pair = cfg.strategy.pair;
  r.rope_epsilon = cfg.strategy.rope_epsilon;
  r.n_samples = cfg.strategy.n_samples;
  return ctx;
}

int arm_outcome(const SessionContext& ctx, std::size_t record, int outcome) {
  const int K = ctx.pool->num_classes();
  if (ctx.cfg.outcome_kind == OutcomeKind::correctness) {
    if (outcome != 0 && outcome != 1) {
      throw std::out_of_range("correctness outcome must be 0 or 1, got " + std::to_string(outcome));
    }
    return outcome;
  }
  if (outcome < 0 || outcome >= K) {
    throw std::out_of_range("true class " + std::to_string(outcome) + " out of range for K=" + std::to_string(K));
  }
  if (ctx.prior.kind == BeliefKind::confusion) return outcome;
  return outcome == ctx.pool->predicted(record) ? 1 : 0;
}

void apply_outcome(const SessionContext& ctx, Beliefs& beliefs, std::size_t record, int outcome) {
  const int v = arm_outcome(ctx, record, outcome);
  const int g = ctx.arms.group_of[record];
  switch (beliefs.kind) {
    case BeliefKind::accuracy: beliefs.beta[g] = beta_update(beliefs.beta[g], v); break;
    case BeliefKind::confusion: beliefs.dirichlet[g] = dirichlet_update(beliefs.dirichlet[g], v); break;
    case BeliefKind::binned_accuracy: {
      auto& bin = beliefs.binned[g].bins[ctx.record_bin[record]];
      bin = beta_update(bin, v);
      break;
    }
  }
}

VectorXd arm_estimates(const SessionContext& ctx, const Beliefs& beliefs) {
  const int G = beliefs.num_arms();
  VectorXd est(G);
  for (int g = 0; g < G; ++g) {
    switch (beliefs.kind) {
      case BeliefKind::accuracy: est[g] = beliefs.beta[g].mean(); break;
      case BeliefKind::confusion: {
        const VectorXd theta = beliefs.dirichlet[g].mean();
        est[g] = ctx.cfg.task == Task::identify_cost ? expected_cost(ctx.costs.c.col(g), theta) : theta[g];
        break;
      }
      case BeliefKind::binned_accuracy: {
        const auto& arm = beliefs.binned[g];
        VectorXd theta(static_cast<Eigen::Index>(arm.bins.size()));
        for (std::size_t b = 0; b < arm.bins.size(); ++b) theta[static_cast<Eigen::Index>(b)] = arm.bins[b].mean();
        est[g] = ece_exact(arm.weights, theta, arm.confidence);
        break;
      }
    }
  }
  return est;
}

std::vector<int> predicted_order(const SessionContext& ctx, const Beliefs& beliefs) {
  const VectorXd est = arm_estimates(ctx, beliefs);
  std::vector<int> order;
  for (int g = 0; g < est.size(); ++g) {
    if (!ctx.arms.members[g].empty()) order.push_back(g);
  }
  const bool lowest_first = ctx.cfg.strategy.direction == Direction::min;
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return lowest_first ? est[x] < est[y] : est[x] > est[y]; });
  return order;
}

json arm_snapshot(const SessionContext&, const Beliefs& beliefs, int arm) {
  switch (beliefs.kind) {
    case BeliefKind::accuracy: return to_json(beliefs.beta[arm]);
    case BeliefKind::confusion: return to_json(beliefs.dirichlet[arm]);
    case BeliefKind::binned_accuracy: {
      json bins = json::array();
      for (const auto& b : beliefs.binned[arm].bins) bins.push_back(to_json(b));
      return {{"bins", bins}};
    }
  }
  return nullptr;
}

ReplayOracle::ReplayOracle(std::shared_ptr<const Pool> pool) : pool_(std::move(pool)) {
  for (const auto& r : pool_->records()) {
    if (!r.label) throw InputError("replay oracle: record '" + r.id + "' has no label");
  }
  asked_.assign(pool_->size(), false);
}

int ReplayOracle::query(const std::string& id) {
  if (queries_ == static_cast<std::int64_t>(pool_->size())) throw std::runtime_error("replay oracle exhausted");
  const auto pos = pool_->find(id);
  if (!pos) throw std::invalid_argument("replay oracle: unknown id '" + id + "'");
  if (asked_[*pos]) throw std::runtime_error("replay oracle: '" + id + "' was already queried");
  asked_[*pos] = true;
  ++queries_;
  return *(*pool_)[*pos].label;
}

StopDecision check_stopping(const SessionContext& ctx, const Beliefs& beliefs, const StoppingTruth* truth,
                            Rng& rng) {
  StopDecision d;
  if (!ctx.cfg.benchmark) return d;
  if (truth == nullptr) throw std::invalid_argument("benchmark stopping needs ground truth");
  const auto& st = ctx.cfg.strategy;
  switch (ctx.cfg.task) {
    case Task::estimate_accuracy:
    case Task::estimate_confusion:
      return d;
    case Task::identify_accuracy:
    case Task::identify_ece:
    case Task::identify_cost:
      d.mrr = mrr(predicted_order(ctx, beliefs), truth->true_top);
      d.stop = d.mrr > kStopMrr;
      return d;
    case Task::compare: {
      d.rope = rope_compare(beliefs.beta[st.pair[0]], beliefs.beta[st.pair[1]], st.rope_epsilon, st.n_samples, rng);
      d.stop = comparison_success(*d.rope, truth->eta, truth->lambda, kStopLambdaTolerance);
      return d;
    }
  }
  return d;
}

AssessmentSession::AssessmentSession(std::shared_ptr<const SessionContext> ctx, std::uint64_t seed)
    : ctx_(std::move(ctx)), seed_(seed), rng_(make_rng(seed)), beliefs_(ctx_->prior), unlabeled_(ctx_->arms.members) {}

Eligibility AssessmentSession::eligibility() const {
  const int G = ctx_->num_arms();
  Eligibility e(G, false);
  for (int g = 0; g < G; ++g) {
    e[g] = !unlabeled_[g].empty();
  }
  if (ctx_->cfg.task == Task::compare) {
    const auto& pair = ctx_->cfg.strategy.pair;
    for (int g = 0; g < G; ++g) {
      if (g != pair[0] && g != pair[1]) e[g] = false;
    }
  }
  return e;
}

std::vector<Query> AssessmentSession::propose() {
  if (terminal_) return {};
  if (!pending_.empty()) throw std::logic_error("earlier queries are still pending");
  const auto used = static_cast<std::int64_t>(steps_.size());
  const auto& budget = ctx_->cfg.budget;
  if (budget && used >= *budget) {
    terminal_ = TerminalReason::budget;
    return {};
  }
  const Eligibility eligible = eligibility();
  if (std::none_of(eligible.begin(), eligible.end(), [](bool e) { return e; })) {
    terminal_ = TerminalReason::exhausted;
    return {};
  }
  StrategyConfig strategy = ctx_->cfg.strategy;
  if (budget) strategy.m = static_cast<int>(std::min<std::int64_t>(strategy.m, *budget - used));
  for (int g : select_arms(strategy, beliefs_, ctx_->reward, eligible, rng_)) {
    auto& members = unlabeled_[g];
    const auto at = uniform_index(rng_, members.size());
    pending_.push_back(Query{g, members[at]});
    members[at] = members.back();
    members.pop_back();
  }
  return pending_;
}

void AssessmentSession::observe(const Query& query, int outcome) {
  const auto it = std::find(pending_.begin(), pending_.end(), query);
  if (it == pending_.end()) throw std::invalid_argument("query is not pending");
  apply_outcome(*ctx_, beliefs_, query.record, outcome);
  steps_.push_back(Step{static_cast<std::int64_t>(steps_.size()) + 1, query.group, query.record, outcome});
  pending_.erase(it);
  ++updates_;
}

void AssessmentSession::stop() {
  if (!terminal_) terminal_ = TerminalReason::stopped;
  pending_.clear();
}

Trajectory run_session(std::shared_ptr<const SessionContext> ctx, Oracle& oracle, std::uint64_t seed,
                       const StoppingTruth* truth) {
  if (ctx->cfg.benchmark && truth == nullptr) throw std::invalid_argument("benchmark run needs ground truth");
  AssessmentSession session(ctx, seed);
  Rng stop_rng = make_rng(~seed);
  const auto& pool = *ctx->pool;
  for (;;) {
    const auto queries = session.propose();
    if (queries.empty()) break;
    for (const auto& q : queries) {
      const int y = oracle.query(pool[q.record].id);
      const int outcome =
          ctx->cfg.outcome_kind == OutcomeKind::correctness ? (y == pool.predicted(q.record) ? 1 : 0) : y;
      session.observe(q, outcome);
    }
    if (check_stopping(*ctx, session.beliefs(), truth, stop_rng).stop) {
      session.stop();
      break;
    }
  }
  Trajectory t;
  t.seed = seed;
  t.steps = session.steps();
  t.terminal = *session.terminal();
  return t;
}

std::vector<Trajectory> run_experiment(std::shared_ptr<const SessionContext> ctx, int n_runs, int jobs,
                                       const StoppingTruth* truth) {
  if (n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
  std::vector<Trajectory> out(n_runs);
  auto one = [&](int r) {
    ReplayOracle oracle(ctx->pool);
    out[r] = run_session(ctx, oracle, ctx->cfg.seed + static_cast<std::uint64_t>(r), truth);
    out[r].run = r;
  };
  const int threads = std::clamp(jobs, 1, n_runs);
  if (threads == 1) {
    for (int r = 0; r < n_runs; ++r) one(r);
    return out;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int r = next++; r < n_runs; r = next++) one(r);
      } catch (...) {
        errors[t] = std::current_exception();
        next = n_runs;
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

Beliefs replay_beliefs(const SessionContext& ctx, const std::vector<Step>& steps, std::size_t n_steps) {
  Beliefs b = ctx.prior;
  const auto n = std::min(n_steps, steps.size());
  for (std::size_t i = 0; i < n; ++i) apply_outcome(ctx, b, steps[i].record, steps[i].z);
  return b;
}

void write_trajectories(const SessionContext& ctx, const std::vector<Trajectory>& runs, std::ostream& out) {
  const auto& pool = *ctx.pool;
  for (const auto& t : runs) {
    Beliefs b = ctx.prior;
    for (const auto& s : t.steps) {
      apply_outcome(ctx, b, s.record, s.z);
      json line = {{"run", t.run}, {"i", s.i}, {"group", s.group}, {"id", pool[s.record].id}, {"z", s.z}};
      if (b.kind == BeliefKind::binned_accuracy) {
        const int bin = ctx.record_bin[s.record];
        line["bin"] = bin;
        line["post"] = to_json(b.binned[s.group].bins[bin]);
      } else {
        line["post"] = arm_snapshot(ctx, b, s.group);
      }
      if (s.i % kFullSnapshotInterval == 0) {
        json full = json::array();
        for (int g = 0; g < b.num_arms(); ++g) full.push_back(arm_snapshot(ctx, b, g));
        line["full"] = std::move(full);
      }
      out << line.dump() << '\n';
    }
  }
}

std::vector<Trajectory> read_trajectories(const Pool& pool, std::istream& in) {
  std::map<int, Trajectory> by_run;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
      const int run = j.value("run", 0);
      auto& t = by_run[run];
      t.run = run;
      Step s;
      s.i = j.at("i").get<std::int64_t>();
      s.group = j.at("group").get<int>();
      s.z = j.at("z").get<int>();
      const auto id = j.at("id").get<std::string>();
      const auto pos = pool.find(id);
      if (!pos) throw InputError("unknown instance id '" + id + "'", line_no);
      s.record = *pos;
      if (s.i != static_cast<std::int64_t>(t.steps.size()) + 1) {
        throw InputError("step index " + std::to_string(s.i) + " is not contiguous", line_no);
      }
      t.steps.push_back(s);
    } catch (const json::exception& e) {
      throw InputError(e.what(), line_no);
    }
  }
  std::vector<Trajectory> out;
  for (auto& [run, t] : by_run) out.push_back(std::move(t));
  return out;
}

json trajectory_meta(const SessionContext& ctx, const std::vector<Trajectory>& runs) {
  json rs = json::array();
  for (const auto& t : runs) {
    rs.push_back({{"run", t.run}, {"seed", t.seed}, {"steps", t.steps.size()}, {"terminal", to_string(t.terminal)}});
  }
  return {{"config", to_json(ctx.cfg)}, {"config_digest", config_digest(ctx.cfg)}, {"runs", rs}};
}

void apply_trajectory_meta(const json& meta, std::vector<Trajectory>& runs) {
  std::map<int, const json*> by_run;
  for (const auto& r : meta.at("runs")) by_run[r.at("run").get<int>()] = &r;
  for (auto& t : runs) {
    const auto it = by_run.find(t.run);
    if (it == by_run.end()) continue;
    t.seed = it->second->at("seed").get<std::uint64_t>();
    t.terminal = parse_terminal_reason(it->second->at("terminal").get<std::string>());
  }
}

std::string meta_path_for(const std::string& trajectory_path) { return trajectory_path + ".meta.json"; }

}  // namespace assay
