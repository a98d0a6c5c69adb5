#include "assay/priors.hpp"

#include <algorithm>
#include <stdexcept>

namespace assay {

namespace {
constexpr double kConfidenceClamp = 1e-3;
}

PriorKind parse_prior_kind(std::string_view text) {
  if (text == "uniform") return PriorKind::uniform;
  if (text == "informative") return PriorKind::informative;
  throw std::invalid_argument("unknown prior kind '" + std::string(text) + "'");
}

std::string_view to_string(PriorKind kind) {
  return kind == PriorKind::uniform ? "uniform" : "informative";
}

void PriorConfig::validate() const {
  if (strength && !(*strength > 0.0)) throw std::invalid_argument("prior strength must be positive");
}

std::vector<BetaPosterior> beta_priors(const GroupIndex& index, const PriorConfig& cfg,
                                       std::vector<std::string>* warnings) {
  cfg.validate();
  const double n0 = cfg.beta_strength();
  std::vector<BetaPosterior> out(index.num_groups());
  for (int g = 0; g < index.num_groups(); ++g) {
    auto& p = out[g];
    if (cfg.kind == PriorKind::uniform || index.members[g].empty()) {
      if (cfg.kind == PriorKind::informative && warnings) {
        warnings->push_back("group " + std::to_string(g) + " is empty; using uniform prior");
      }
      p.alpha = p.beta = n0 / 2.0;
      continue;
    }
    const double s = std::clamp(index.mean_confidence[g], kConfidenceClamp, 1.0 - kConfidenceClamp);
    p.alpha = n0 * s;
    p.beta = n0 * (1.0 - s);
  }
  return out;
}

std::vector<DirichletPosterior> dirichlet_priors(const Pool& pool, const GroupIndex& index,
                                                 const PriorConfig& cfg,
                                                 std::vector<std::string>* warnings) {
  cfg.validate();
  if (index.spec.kind != PartitionKind::predicted_class) {
    throw std::invalid_argument("Dirichlet priors need a predicted-class partition");
  }
  const int K = pool.num_classes();
  const double n0 = cfg.dirichlet_strength();
  std::vector<DirichletPosterior> out;
  out.reserve(K);
  for (int k = 0; k < K; ++k) {
    VectorXd alpha = VectorXd::Constant(K, n0 / K);
    if (cfg.kind == PriorKind::informative) {
      if (index.members[k].empty()) {
        if (warnings) warnings->push_back("class " + std::to_string(k) + " is empty; using uniform prior");
      } else {
        VectorXd total = VectorXd::Zero(K);
        for (const auto i : index.members[k]) total += pool[i].scores;
        // Scores of exactly zero would give a degenerate Dirichlet.
        alpha = total.cwiseMax(1e-12 * total.sum());
        alpha *= n0 / alpha.sum();
      }
    }
    out.emplace_back(std::move(alpha));
  }
  return out;
}

}  // namespace assay
