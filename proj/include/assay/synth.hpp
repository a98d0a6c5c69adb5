#pragma once

#include "assay/data.hpp"

#include <cstdint>
#include <vector>

namespace assay {

// A synthetic fully labeled pool. Every record of predicted class k has
// confidence clamp(accuracy_profile[k] + calibration_offset) and is correct
// with probability accuracy_profile[k].
struct SynthSpec {
  int num_classes = 2;
  std::size_t n = 1000;
  std::vector<double> accuracy_profile;
  double calibration_offset = 0.0;
  std::uint64_t seed = 0;
  // Relative frequency of each predicted class; empty means uniform.
  std::vector<double> class_weights;

  void validate() const;
};

Pool synth_pool(const SynthSpec& spec);

// K evenly spaced values from lo to hi inclusive.
std::vector<double> linear_profile(int k, double lo, double hi);

}  // namespace assay
