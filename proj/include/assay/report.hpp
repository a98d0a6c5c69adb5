#pragma once

#include "assay/engine.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace assay {

// Score bins of the calibration section of every report.
inline constexpr int kReportBins = 10;

struct ReportOptions {
  double level = 0.95;
  int n_samples = kDefaultMonteCarloSamples;
  std::uint64_t seed = 0;
};

// Per-arm posterior summaries, a Monte Carlo ranking, a reliability diagram
// over the labeled records, and the ROPE result for the compare task.
// Identical inputs give an identical document.
nlohmann::json build_report(const SessionContext& ctx, const std::vector<Step>& steps,
                            const ReportOptions& options);

// Whether the labeled record was predicted correctly, from its raw outcome.
bool step_correct(const SessionContext& ctx, const Step& step);

// Score-bin posteriors of the labeled records under the session prior.
ReliabilityDiagram labeled_reliability(const SessionContext& ctx, const std::vector<Step>& steps, int num_bins,
                                       double level, int n_samples, Rng& rng);

}  // namespace assay
