#pragma once

#include "assay/data.hpp"
#include "assay/priors.hpp"
#include "assay/strategies.hpp"

#include <json.hpp>

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace assay {

enum class OutcomeKind { correctness, true_class };
enum class TerminalReason { budget, stopped, exhausted };

OutcomeKind parse_outcome_kind(std::string_view text);
std::string_view to_string(OutcomeKind kind);
TerminalReason parse_terminal_reason(std::string_view text);
std::string_view to_string(TerminalReason reason);

struct SessionConfig {
  PartitionSpec partition;
  PriorConfig prior;
  StrategyConfig strategy;
  // Unset means "until-stopped": run until the stopping rule fires or the
  // pool is exhausted.
  std::optional<std::int64_t> budget = 100;
  std::uint64_t seed = 0;
  int runs = 1;
  Task task = Task::identify_accuracy;
  OutcomeKind outcome_kind = OutcomeKind::correctness;
  std::string cost_matrix_path;  // empty: 0/1 costs
  bool benchmark = false;
  bool with_replacement = false;  // reserved; rejected by validate()

  void validate() const;
};

// Missing sections take their defaults. `strategy.task` always mirrors `task`
// and the direction defaults to the task's natural extreme.
SessionConfig session_config_from_json(const nlohmann::json& j);
SessionConfig load_session_config(const std::string& path);
nlohmann::json to_json(const SessionConfig& cfg);
// FNV-1a 64 over the canonical JSON form, as 16 hex digits.
std::string config_digest(const SessionConfig& cfg);

// Immutable per-configuration state shared by every run of an experiment.
struct SessionContext {
  std::shared_ptr<const Pool> pool;
  SessionConfig cfg;
  GroupIndex arms;
  GroupIndex cells;            // identify-ece: the class-and-bin cells
  std::vector<int> record_bin;  // identify-ece: bin of each record within its arm
  CostMatrix costs;
  Beliefs prior;
  RewardContext reward;
  std::vector<std::string> warnings;

  int num_arms() const noexcept { return arms.num_groups(); }
};

std::shared_ptr<const SessionContext> make_session_context(std::shared_ptr<const Pool> pool,
                                                           SessionConfig cfg);

// Maps a raw outcome (per outcome_kind) for a record to the value the arm
// posterior consumes: correctness for Beta arms, the true class for Dirichlet.
// Throws std::out_of_range for outcomes outside the allowed range.
int arm_outcome(const SessionContext& ctx, std::size_t record, int outcome);

// Applies one labeled record to the beliefs.
void apply_outcome(const SessionContext& ctx, Beliefs& beliefs, std::size_t record, int outcome);

// Point estimate of each arm's task metric under the posterior means
// (accuracy, ECE, or expected cost; accuracy for the estimation tasks).
VectorXd arm_estimates(const SessionContext& ctx, const Beliefs& beliefs);

// Arms ordered from the most to the least extreme estimate under the task
// direction; arms without members are left out.
std::vector<int> predicted_order(const SessionContext& ctx, const Beliefs& beliefs);

nlohmann::json arm_snapshot(const SessionContext& ctx, const Beliefs& beliefs, int arm);

class Oracle {
 public:
  virtual ~Oracle() = default;
  // True class of the record with this id.
  virtual int query(const std::string& id) = 0;
};

// Answers from the pool's hidden labels; every record can be asked once.
class ReplayOracle final : public Oracle {
 public:
  explicit ReplayOracle(std::shared_ptr<const Pool> pool);
  int query(const std::string& id) override;
  std::int64_t queries() const noexcept { return queries_; }

 private:
  std::shared_ptr<const Pool> pool_;
  std::vector<bool> asked_;
  std::int64_t queries_ = 0;
};

struct Query {
  int group = 0;
  std::size_t record = 0;
  friend bool operator==(const Query&, const Query&) = default;
};

struct Step {
  std::int64_t i = 0;  // 1-based
  int group = 0;
  std::size_t record = 0;
  int z = 0;  // raw outcome per outcome_kind
  friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
  int run = 0;
  std::uint64_t seed = 0;
  std::vector<Step> steps;
  TerminalReason terminal = TerminalReason::budget;
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Truth the benchmark stopping rules may consult.
struct StoppingTruth {
  std::vector<int> true_top;  // identification tasks
  int eta = 1;                // compare task
  double lambda = 1.0;
};

struct StopDecision {
  bool stop = false;
  double mrr = 0.0;
  std::optional<RopeResult> rope;
};

// Benchmark identification stops once MRR > 0.99; comparison once eta matches
// and lambda is within 5% of the truth. Estimation and live sessions never stop.
StopDecision check_stopping(const SessionContext& ctx, const Beliefs& beliefs, const StoppingTruth* truth,
                            Rng& rng);

inline constexpr double kStopMrr = 0.99;
inline constexpr double kStopLambdaTolerance = 0.05;

// One sequential assessment session. propose() selects arm(s) and draws the
// instances to label; observe() consumes their outcomes.
class AssessmentSession {
 public:
  AssessmentSession(std::shared_ptr<const SessionContext> ctx, std::uint64_t seed);

  // Empty once terminal. Throws if queries from an earlier call are unanswered.
  std::vector<Query> propose();
  void observe(const Query& query, int outcome);
  void stop();

  const SessionContext& context() const noexcept { return *ctx_; }
  const Beliefs& beliefs() const noexcept { return beliefs_; }
  const std::vector<Step>& steps() const noexcept { return steps_; }
  const std::vector<Query>& pending() const noexcept { return pending_; }
  std::optional<TerminalReason> terminal() const noexcept { return terminal_; }
  std::int64_t updates() const noexcept { return updates_; }
  Eligibility eligibility() const;
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::shared_ptr<const SessionContext> ctx_;
  std::uint64_t seed_;
  Rng rng_;
  Beliefs beliefs_;
  std::vector<std::vector<std::size_t>> unlabeled_;
  std::vector<Query> pending_;
  std::vector<Step> steps_;
  std::optional<TerminalReason> terminal_;
  std::int64_t updates_ = 0;
};

// Runs one session to termination against the oracle.
Trajectory run_session(std::shared_ptr<const SessionContext> ctx, Oracle& oracle, std::uint64_t seed,
                       const StoppingTruth* truth = nullptr);

// Runs n_runs sessions with seeds cfg.seed + r, each against a fresh replay
// oracle, on up to `jobs` threads. Results are ordered by run index.
std::vector<Trajectory> run_experiment(std::shared_ptr<const SessionContext> ctx, int n_runs, int jobs = 1,
                                       const StoppingTruth* truth = nullptr);

// Beliefs after replaying a prefix of the trajectory from the prior.
Beliefs replay_beliefs(const SessionContext& ctx, const std::vector<Step>& steps,
                       std::size_t n_steps = static_cast<std::size_t>(-1));

inline constexpr int kFullSnapshotInterval = 100;

// JSONL, one step per line. Every line carries the updated arm's posterior;
// every kFullSnapshotInterval steps a line also carries all arms.
void write_trajectories(const SessionContext& ctx, const std::vector<Trajectory>& runs, std::ostream& out);
std::vector<Trajectory> read_trajectories(const Pool& pool, std::istream& in);

// Sidecar with the config and per-run terminal reasons.
nlohmann::json trajectory_meta(const SessionContext& ctx, const std::vector<Trajectory>& runs);
void apply_trajectory_meta(const nlohmann::json& meta, std::vector<Trajectory>& runs);
std::string meta_path_for(const std::string& trajectory_path);

}  // namespace assay
