#pragma once

#include "assay/random.hpp"
#include "assay/types.hpp"

#include <json.hpp>

#include <cstdint>

namespace assay {

// Beta belief over a Bernoulli rate (accuracy of a group). The prior
// pseudo-counts and the observed counts are kept apart so a snapshot shows
// both; the effective parameters are (alpha + r, beta + N - r).
struct BetaPosterior {
  double alpha = 1.0;
  double beta = 1.0;
  std::int64_t successes = 0;
  std::int64_t trials = 0;

  double a() const noexcept { return alpha + static_cast<double>(successes); }
  double b() const noexcept { return beta + static_cast<double>(trials - successes); }
  double mean() const noexcept { return a() / (a() + b()); }
  double variance() const noexcept;

  // Variance after one more observation with the given outcome.
  double variance_after(int outcome) const noexcept;

  friend bool operator==(const BetaPosterior&, const BetaPosterior&) = default;
};

// Dirichlet belief over the true-class distribution of one predicted class.
struct DirichletPosterior {
  VectorXd alpha;
  VectorXi64 counts;

  DirichletPosterior() = default;
  explicit DirichletPosterior(VectorXd prior)
      : alpha(std::move(prior)), counts(VectorXi64::Zero(alpha.size())) {}

  int size() const noexcept { return static_cast<int>(alpha.size()); }
  VectorXd effective() const { return alpha + counts.cast<double>(); }
  VectorXd mean() const;
  // Sum of the marginal variances of all components.
  double total_variance() const;
  double total_variance_after(int true_class) const;

  friend bool operator==(const DirichletPosterior& x, const DirichletPosterior& y) {
    return x.alpha == y.alpha && x.counts == y.counts;
  }
};

struct PosteriorSummary {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
};

BetaPosterior beta_update(BetaPosterior post, int outcome);
double beta_sample(const BetaPosterior& post, Rng& rng);
double beta_sample(double a, double b, Rng& rng);
PosteriorSummary beta_summarize(const BetaPosterior& post, double level = 0.95);

DirichletPosterior dirichlet_update(DirichletPosterior post, int true_class);
VectorXd dirichlet_sample(const DirichletPosterior& post, Rng& rng);
VectorXd dirichlet_sample(const VectorXd& effective_alpha, Rng& rng);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
// Inverse of I_x(a, b) in x; absolute tolerance 1e-12.
double beta_quantile(double a, double b, double p);
double beta_log_pdf(double a, double b, double x);

nlohmann::json to_json(const BetaPosterior& post);
nlohmann::json to_json(const DirichletPosterior& post);
nlohmann::json to_json(const PosteriorSummary& s);
BetaPosterior beta_from_json(const nlohmann::json& j);
DirichletPosterior dirichlet_from_json(const nlohmann::json& j);

}  // namespace assay
