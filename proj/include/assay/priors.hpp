#pragma once

#include "assay/data.hpp"
#include "assay/posterior.hpp"

#include <optional>
#include <string>
#include <vector>

namespace assay {

enum class PriorKind { uniform, informative };

PriorKind parse_prior_kind(std::string_view text);
std::string_view to_string(PriorKind kind);

struct PriorConfig {
  PriorKind kind = PriorKind::informative;
  // N_0; unset means the family default (2 for Beta, 1 for Dirichlet)
  std::optional<double> strength;

  double beta_strength() const { return strength.value_or(2.0); }
  double dirichlet_strength() const { return strength.value_or(1.0); }
  void validate() const;
};

// Informative Beta priors take s_g from the group's mean confidence, clamped
// to [1e-3, 1 - 1e-3]. Empty groups fall back to the uniform prior and append
// a note to `warnings` when given.
std::vector<BetaPosterior> beta_priors(const GroupIndex& index, const PriorConfig& cfg,
                                       std::vector<std::string>* warnings = nullptr);

// One Dirichlet per predicted class k over the true class j. Informative
// priors are proportional to the summed score vectors of class k's members,
// scaled to total N_0.
std::vector<DirichletPosterior> dirichlet_priors(const Pool& pool, const GroupIndex& index,
                                                 const PriorConfig& cfg,
                                                 std::vector<std::string>* warnings = nullptr);

}  // namespace assay
