#include "assay/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace assay {

using nlohmann::json;

double sample_quantile(std::vector<double> samples, double q) {
  if (samples.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(samples.begin(), samples.end());
  const double pos = q * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, samples.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return samples[lo] + frac * (samples[hi] - samples[lo]);
}

PosteriorSummary summarize_samples(std::vector<double> samples, double level) {
  if (samples.empty()) throw std::invalid_argument("summary of an empty sample");
  std::sort(samples.begin(), samples.end());
  const double tail = 0.5 * (1.0 - level);
  PosteriorSummary s;
  s.level = level;
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  s.ci_low = std::min(sample_quantile(samples, tail), s.mean);
  s.ci_high = std::max(sample_quantile(samples, 1.0 - tail), s.mean);
  return s;
}

EcePosterior ece_posterior(std::span<const BetaPosterior> bins, const VectorXd& weights,
                           const VectorXd& confidence, int n_samples, Rng& rng, double level) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  const auto B = static_cast<Eigen::Index>(bins.size());
  if (weights.size() != B || confidence.size() != B) {
    throw std::invalid_argument("ece_posterior: length mismatch");
  }
  EcePosterior out;
  out.samples.reserve(n_samples);
  VectorXd theta(B);
  for (int s = 0; s < n_samples; ++s) {
    for (Eigen::Index b = 0; b < B; ++b) theta[b] = beta_sample(bins[b], rng);
    out.samples.push_back(ece_exact(weights, theta, confidence));
  }
  out.summary = summarize_samples(out.samples, level);
  return out;
}

ClassBins class_bins(const GroupIndex& index, int k) {
  if (index.spec.kind != PartitionKind::class_and_bin) {
    throw std::invalid_argument("classwise ECE needs a class-and-bin partition");
  }
  const int B = index.spec.num_bins;
  if (k < 0 || (k + 1) * B > index.num_groups()) throw std::out_of_range("class index out of range");
  ClassBins cb;
  cb.weights.resize(B);
  cb.confidence = index.mean_confidence.segment(static_cast<Eigen::Index>(k) * B, B);
  double total = 0.0;
  for (int b = 0; b < B; ++b) {
    cb.weights[b] = static_cast<double>(index.members[k * B + b].size());
    total += cb.weights[b];
  }
  if (total == 0.0) throw std::invalid_argument("class " + std::to_string(k) + " has no members");
  cb.weights /= total;
  return cb;
}

EcePosterior groupwise_ece_posterior(const GroupIndex& index, std::span<const BetaPosterior> cells,
                                     int k, int n_samples, Rng& rng, double level) {
  const auto cb = class_bins(index, k);
  const int B = index.spec.num_bins;
  if (static_cast<int>(cells.size()) != index.num_groups()) {
    throw std::invalid_argument("one posterior per class-and-bin cell expected");
  }
  return ece_posterior(cells.subspan(static_cast<std::size_t>(k) * B, B), cb.weights, cb.confidence,
                       n_samples, rng, level);
}

std::vector<double> expected_cost_posterior(const DirichletPosterior& post, const CostMatrix& costs,
                                            int k, int n_samples, Rng& rng) {
  if (post.size() != costs.size()) throw std::invalid_argument("cost matrix / posterior size mismatch");
  if (k < 0 || k >= costs.size()) throw std::out_of_range("class index out of range");
  const VectorXd alpha = post.effective();
  std::vector<double> out;
  out.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    out.push_back(expected_cost(costs.c.col(k), dirichlet_sample(alpha, rng)));
  }
  return out;
}

int rope_region(const std::array<double, 3>& mu) {
  int best = 0;
  for (int r = 1; r < 3; ++r) {
    if (mu[r] > mu[best]) best = r;
  }
  return best;
}

RopeResult rope_compare(const BetaPosterior& a, const BetaPosterior& b, double epsilon,
                        int n_samples, Rng& rng) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("ROPE epsilon must be positive");
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  std::array<std::int64_t, 3> counts{};
  for (int s = 0; s < n_samples; ++s) {
    const double ta = beta_sample(a, rng);
    const double tb = beta_sample(b, rng);
    const double delta = ta - tb;
    if (delta < -epsilon) ++counts[0];
    else if (delta > epsilon) ++counts[2];
    else ++counts[1];
  }
  RopeResult r;
  r.epsilon = epsilon;
  r.n_samples = n_samples;
  for (int i = 0; i < 3; ++i) r.mu[i] = static_cast<double>(counts[i]) / n_samples;
  r.eta = rope_region(r.mu);
  r.lambda = r.mu[r.eta];
  return r;
}

std::vector<int> rank_values(const VectorXd& values, Direction direction) {
  const auto G = static_cast<std::size_t>(values.size());
  std::vector<int> order(G);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return direction == Direction::min ? values[x] < values[y] : values[x] > values[y];
  });
  std::vector<int> rank(G);
  for (std::size_t r = 0; r < G; ++r) rank[order[r]] = static_cast<int>(r) + 1;
  return rank;
}

RankSummary rank_samples(const MatrixXd& draws, Direction direction) {
  const Eigen::Index G = draws.cols();
  const auto n_samples = static_cast<int>(draws.rows());
  if (G < 2) throw std::invalid_argument("ranking needs at least two groups");
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  RankSummary out;
  out.direction = direction;
  out.n_samples = n_samples;
  out.mean_rank = VectorXd::Zero(G);
  out.extreme_probability = VectorXd::Zero(G);
  std::vector<std::vector<double>> ranks(G);
  for (auto& r : ranks) r.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    const auto rank = rank_values(draws.row(s).transpose(), direction);
    for (Eigen::Index g = 0; g < G; ++g) {
      out.mean_rank[g] += rank[g];
      ranks[g].push_back(rank[g]);
      if (rank[g] == 1) out.extreme_probability[g] += 1.0;
    }
  }
  out.mean_rank /= n_samples;
  out.extreme_probability /= n_samples;
  for (Eigen::Index g = 0; g < G; ++g) {
    out.rank_low.push_back(static_cast<int>(std::floor(sample_quantile(ranks[g], 0.025))));
    out.rank_high.push_back(static_cast<int>(std::ceil(sample_quantile(ranks[g], 0.975))));
  }
  return out;
}

RankSummary rank_distribution(std::span<const BetaPosterior> posts, int n_samples, Rng& rng,
                              Direction direction) {
  const auto G = static_cast<Eigen::Index>(posts.size());
  if (G < 2) throw std::invalid_argument("ranking needs at least two groups");
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  MatrixXd draws(n_samples, G);
  for (int s = 0; s < n_samples; ++s) {
    for (Eigen::Index g = 0; g < G; ++g) draws(s, g) = beta_sample(posts[g], rng);
  }
  return rank_samples(draws, direction);
}

ReliabilityDiagram reliability_diagram(std::span<const BetaPosterior> bins, const VectorXd& weights,
                                       const VectorXd& confidence, double level, int n_samples,
                                       Rng& rng) {
  ReliabilityDiagram d;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    ReliabilityBin bin;
    bin.weight = weights[static_cast<Eigen::Index>(b)];
    bin.confidence = confidence[static_cast<Eigen::Index>(b)];
    bin.posterior = bins[b];
    bin.accuracy = beta_summarize(bins[b], level);
    d.bins.push_back(bin);
  }
  d.ece = ece_posterior(bins, weights, confidence, n_samples, rng, level);
  return d;
}

json to_json(const EcePosterior& e, bool include_samples) {
  json j = {{"summary", to_json(e.summary)}, {"n_samples", e.samples.size()}};
  if (include_samples) j["samples"] = e.samples;
  return j;
}

json to_json(const RopeResult& r) {
  return {{"mu", r.mu}, {"eta", r.eta}, {"lambda", r.lambda}, {"epsilon", r.epsilon},
          {"n_samples", r.n_samples}};
}

json to_json(const RankSummary& r) {
  json groups = json::array();
  for (Eigen::Index g = 0; g < r.mean_rank.size(); ++g) {
    groups.push_back({{"group", g},
                      {"mean_rank", r.mean_rank[g]},
                      {"rank_low", r.rank_low[g]},
                      {"rank_high", r.rank_high[g]},
                      {"extreme_probability", r.extreme_probability[g]}});
  }
  return {{"direction", to_string(r.direction)}, {"n_samples", r.n_samples}, {"groups", groups}};
}

json to_json(const ReliabilityDiagram& d) {
  json bins = json::array();
  for (std::size_t b = 0; b < d.bins.size(); ++b) {
    const auto& bin = d.bins[b];
    bins.push_back({{"bin", b},
                    {"weight", bin.weight},
                    {"confidence", bin.confidence},
                    {"accuracy", to_json(bin.accuracy)},
                    {"posterior", to_json(bin.posterior)}});
  }
  return {{"bins", bins}, {"ece", to_json(d.ece)}};
}

}  // namespace assay
