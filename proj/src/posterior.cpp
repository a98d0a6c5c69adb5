#include "assay/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace assay {

namespace {

double beta_variance(double a, double b) {
  const double s = a + b;
  return a * b / (s * s * (s + 1.0));
}

// Continued fraction for I_x(a, b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 200000;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace

double BetaPosterior::variance() const noexcept { return beta_variance(a(), b()); }

double BetaPosterior::variance_after(int outcome) const noexcept {
  return outcome != 0 ? beta_variance(a() + 1.0, b()) : beta_variance(a(), b() + 1.0);
}

VectorXd DirichletPosterior::mean() const {
  const VectorXd e = effective();
  return e / e.sum();
}

namespace {

double dirichlet_total_variance(const VectorXd& e) {
  const double s = e.sum();
  return (e.array() * (s - e.array())).sum() / (s * s * (s + 1.0));
}

}  // namespace

double DirichletPosterior::total_variance() const { return dirichlet_total_variance(effective()); }

double DirichletPosterior::total_variance_after(int true_class) const {
  // sum_j e_j (S - e_j) = S^2 - sum_j e_j^2, updated in O(1) for one more count
  const VectorXd e = effective();
  const double s = e.sum() + 1.0;
  const double squares = e.squaredNorm() + 2.0 * e[true_class] + 1.0;
  return (s * s - squares) / (s * s * (s + 1.0));
}

BetaPosterior beta_update(BetaPosterior post, int outcome) {
  if (outcome != 0 && outcome != 1) {
    throw std::out_of_range("correctness outcome must be 0 or 1, got " + std::to_string(outcome));
  }
  post.trials += 1;
  post.successes += outcome;
  return post;
}

double beta_sample(double a, double b, Rng& rng) {
  const double lx = log_gamma_draw(rng, a);
  const double ly = log_gamma_draw(rng, b);
  return 1.0 / (1.0 + std::exp(ly - lx));
}

double beta_sample(const BetaPosterior& post, Rng& rng) { return beta_sample(post.a(), post.b(), rng); }

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta_fn(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double beta_log_pdf(double a, double b, double x) {
  if (x <= 0.0 || x >= 1.0) return -std::numeric_limits<double>::infinity();
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta_fn(a, b);
}

double beta_quantile(double a, double b, double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  constexpr double kTolerance = 1e-12;
  double lo = 0.0;
  double hi = 1.0;
  double x = std::clamp(a / (a + b), 1e-12, 1.0 - 1e-12);
  for (int iter = 0; iter < 400; ++iter) {
    const double f = incomplete_beta(a, b, x) - p;
    if (f == 0.0) return x;
    if (f < 0.0) lo = x;
    else hi = x;
    if (hi - lo < kTolerance) break;
    const double density = std::exp(beta_log_pdf(a, b, x));
    double next = density > 0.0 ? x - f / density : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < kTolerance) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

PosteriorSummary beta_summarize(const BetaPosterior& post, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("credible level must be in (0,1)");
  const double tail = 0.5 * (1.0 - level);
  PosteriorSummary s;
  s.level = level;
  s.mean = post.mean();
  s.ci_low = std::min(beta_quantile(post.a(), post.b(), tail), s.mean);
  s.ci_high = std::max(beta_quantile(post.a(), post.b(), 1.0 - tail), s.mean);
  return s;
}

DirichletPosterior dirichlet_update(DirichletPosterior post, int true_class) {
  if (true_class < 0 || true_class >= post.size()) {
    throw std::out_of_range("class index " + std::to_string(true_class) + " out of range");
  }
  post.counts[true_class] += 1;
  return post;
}

VectorXd dirichlet_sample(const VectorXd& effective_alpha, Rng& rng) {
  VectorXd logs(effective_alpha.size());
  for (Eigen::Index j = 0; j < logs.size(); ++j) logs[j] = log_gamma_draw(rng, effective_alpha[j]);
  const double top = logs.maxCoeff();
  VectorXd w = (logs.array() - top).exp().matrix();
  return w / w.sum();
}

VectorXd dirichlet_sample(const DirichletPosterior& post, Rng& rng) {
  return dirichlet_sample(post.effective(), rng);
}

nlohmann::json to_json(const BetaPosterior& post) {
  return {{"alpha", post.alpha}, {"beta", post.beta}, {"successes", post.successes}, {"trials", post.trials}};
}

nlohmann::json to_json(const DirichletPosterior& post) {
  return {{"alpha", std::vector<double>(post.alpha.data(), post.alpha.data() + post.alpha.size())},
          {"counts", std::vector<std::int64_t>(post.counts.data(), post.counts.data() + post.counts.size())}};
}

nlohmann::json to_json(const PosteriorSummary& s) {
  return {{"mean", s.mean}, {"ci_low", s.ci_low}, {"ci_high", s.ci_high}, {"level", s.level}};
}

BetaPosterior beta_from_json(const nlohmann::json& j) {
  BetaPosterior p;
  p.alpha = j.at("alpha").get<double>();
  p.beta = j.at("beta").get<double>();
  p.successes = j.value("successes", std::int64_t{0});
  p.trials = j.value("trials", std::int64_t{0});
  if (!(p.alpha > 0.0 && p.beta > 0.0) || p.successes < 0 || p.successes > p.trials) {
    throw std::invalid_argument("invalid Beta posterior snapshot");
  }
  return p;
}

DirichletPosterior dirichlet_from_json(const nlohmann::json& j) {
  const auto alpha = j.at("alpha").get<std::vector<double>>();
  const auto counts = j.at("counts").get<std::vector<std::int64_t>>();
  if (alpha.size() != counts.size()) throw std::invalid_argument("Dirichlet snapshot size mismatch");
  DirichletPosterior p(Eigen::Map<const VectorXd>(alpha.data(), static_cast<Eigen::Index>(alpha.size())));
  for (std::size_t j2 = 0; j2 < counts.size(); ++j2) p.counts[static_cast<Eigen::Index>(j2)] = counts[j2];
  return p;
}

}  // namespace assay
