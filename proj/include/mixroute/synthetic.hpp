#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixroute/core.hpp"
#include "mixroute/data_io.hpp"

namespace mixroute {

/// One simulated candidate: pricing/latency plus how well it answers each
/// domain.
struct SyntheticArm {
  LLMCandidate candidate;
  std::vector<double> domain_quality;  // mean quality per domain
  double mean_tokens = 200.0;          // mean response length
  double quality_noise = 0.05;         // std-dev of per-query quality noise
};

struct SyntheticSpec {
  int d_base = 16;
  int domains = 4;
  std::size_t queries = 500;
  double spread = 0.35;        // within-domain std-dev around each unit-norm domain center
  bool binary_quality = false; // draw 0/1 correctness with the arm's mean as probability
  std::uint64_t seed = 42;
  std::vector<SyntheticArm> arms;
};

struct SyntheticData {
  Dataset dataset;
  Catalog catalog;
};

/// Four arms spanning cheap/weak to expensive/strong with domain-dependent
/// strengths.
SyntheticSpec default_synthetic_spec();

/// Gaussian domain clusters in d_base dimensions; each query carries ground
/// truth for every arm with costs filled from the catalog pricing.
SyntheticData make_synthetic(const SyntheticSpec& spec);

/// Overwrites the quality of `llm_id` on every query of `domain` (all
/// domains when unset) with `quality`.
void set_quality(std::span<Query> queries, const std::string& llm_id, std::optional<int> domain, double quality);

}  // namespace mixroute
