#include "assay/synth.hpp"

#include "assay/random.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace assay {

void SynthSpec::validate() const {
  if (num_classes < 2) throw std::invalid_argument("synthetic pool needs K >= 2");
  if (accuracy_profile.size() != static_cast<std::size_t>(num_classes)) {
    throw std::invalid_argument("accuracy profile has " + std::to_string(accuracy_profile.size()) +
                                " entries, expected " + std::to_string(num_classes));
  }
  for (double a : accuracy_profile) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("accuracy profile entries must be in [0,1]");
  }
  if (n < static_cast<std::size_t>(num_classes)) throw std::invalid_argument("synthetic pool needs n >= K");
  if (!class_weights.empty()) {
    if (class_weights.size() != accuracy_profile.size()) {
      throw std::invalid_argument("class_weights must have K entries");
    }
    if (std::any_of(class_weights.begin(), class_weights.end(), [](double w) { return !(w >= 0.0); }) ||
        std::accumulate(class_weights.begin(), class_weights.end(), 0.0) <= 0.0) {
      throw std::invalid_argument("class_weights must be non-negative with a positive sum");
    }
  }
}

Pool synth_pool(const SynthSpec& spec) {
  spec.validate();
  const int K = spec.num_classes;
  Rng rng = make_rng(spec.seed);
  std::discrete_distribution<int> pick_class(spec.class_weights.begin(), spec.class_weights.end());
  // Above 1/K the predicted class stays the strict argmax.
  const double floor = 1.0 / K + 1e-6;

  std::vector<PredictionRecord> records;
  records.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const int k = spec.class_weights.empty() ? static_cast<int>(uniform_index(rng, K)) : pick_class(rng);
    const double accuracy = spec.accuracy_profile[k];
    const double confidence = std::clamp(accuracy + spec.calibration_offset, floor, 1.0);
    PredictionRecord r;
    r.id = "r" + std::to_string(i);
    r.scores = VectorXd::Constant(K, (1.0 - confidence) / (K - 1));
    r.scores[k] = confidence;
    if (bernoulli(rng, accuracy)) {
      r.label = k;
    } else {
      const int j = static_cast<int>(uniform_index(rng, K - 1));
      r.label = j >= k ? j + 1 : j;
    }
    records.push_back(std::move(r));
  }
  return Pool(std::move(records), K);
}

std::vector<double> linear_profile(int k, double lo, double hi) {
  if (k < 1) throw std::invalid_argument("profile length must be positive");
  std::vector<double> out(k, lo);
  for (int i = 1; i < k; ++i) out[i] = lo + (hi - lo) * i / (k - 1);
  return out;
}

}  // namespace assay
