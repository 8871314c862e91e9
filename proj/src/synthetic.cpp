#include "mixroute/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mixroute/embed_space.hpp"
#include "mixroute/predictors.hpp"

namespace mixroute {

SyntheticSpec default_synthetic_spec() {
  SyntheticSpec spec;
  spec.arms = {
      {{"small", 0.0001, 0.0002, 0.02, 3000.0}, {0.55, 0.35, 0.60, 0.30}, 180.0, 0.08},
      {{"medium", 0.0005, 0.0015, 0.03, 2500.0}, {0.75, 0.60, 0.55, 0.70}, 220.0, 0.08},
      {{"coder", 0.0010, 0.0020, 0.04, 2500.0}, {0.60, 0.90, 0.50, 0.65}, 260.0, 0.08},
      {{"large", 0.0100, 0.0300, 0.05, 1500.0}, {0.90, 0.85, 0.88, 0.92}, 300.0, 0.05},
  };
  return spec;
}

SyntheticData make_synthetic(const SyntheticSpec& spec) {
  if (spec.d_base <= 0 || spec.domains <= 0) throw ConfigError("synthetic dimensions must be positive");
  for (const auto& arm : spec.arms) {
    if (static_cast<int>(arm.domain_quality.size()) != spec.domains) {
      throw ConfigError("arm '" + arm.candidate.llm_id + "' needs one quality per domain");
    }
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Vector> centers;
  for (int d = 0; d < spec.domains; ++d) {
    centers.push_back(normalize(Vector::NullaryExpr(spec.d_base, [&] { return normal(rng); })));
  }

  SyntheticData out{{}, Catalog(spec.d_base)};
  for (const auto& arm : spec.arms) out.catalog.add_candidate(arm.candidate);

  // Each arm gets a fixed direction that tilts its quality inside a domain,
  // so predictors have something beyond the domain mean to learn.
  std::vector<Vector> tilt;
  for (std::size_t a = 0; a < spec.arms.size(); ++a) {
    tilt.push_back(normalize(Vector::NullaryExpr(spec.d_base, [&] { return normal(rng); })));
  }

  out.dataset.domains = spec.domains;
  out.dataset.source = "synthetic(seed=" + std::to_string(spec.seed) + ")";
  for (std::size_t i = 0; i < spec.queries; ++i) {
    const int domain = static_cast<int>(i % static_cast<std::size_t>(spec.domains));
    Query q;
    q.id = "q" + std::to_string(i);
    q.base_embedding = centers[static_cast<std::size_t>(domain)] +
                       spec.spread * Vector::NullaryExpr(spec.d_base, [&] { return normal(rng); });
    q.prompt_tokens = 50 + static_cast<std::int64_t>(unit(rng) * 350.0);
    q.domain_label = domain;
    const Vector dir = normalize(q.base_embedding);
    for (std::size_t a = 0; a < spec.arms.size(); ++a) {
      const auto& arm = spec.arms[a];
      const double mean = arm.domain_quality[static_cast<std::size_t>(domain)] + 0.1 * tilt[a].dot(dir);
      GroundTruth t;
      if (spec.binary_quality) {
        t.quality = unit(rng) < std::clamp(mean, 0.0, 1.0) ? 1.0 : 0.0;
      } else {
        t.quality = std::clamp(mean + arm.quality_noise * normal(rng), 0.0, 1.0);
      }
      const double tokens = arm.mean_tokens * std::exp(0.3 * normal(rng) + 0.15 * (domain - 1.5) / 1.5);
      t.response_tokens = std::max<std::int64_t>(1, std::llround(tokens));
      t.cost_usd = estimate_cost(arm.candidate, q.prompt_tokens, static_cast<double>(t.response_tokens)).total;
      q.truth.emplace(arm.candidate.llm_id, t);
    }
    out.dataset.queries.push_back(std::move(q));
  }
  return out;
}

void set_quality(std::span<Query> queries, const std::string& llm_id, std::optional<int> domain, double quality) {
  for (auto& q : queries) {
    if (domain && q.domain_label != domain) continue;
    auto it = q.truth.find(llm_id);
    if (it == q.truth.end()) throw MissingGroundTruth("query '" + q.id + "' has no '" + llm_id + "'");
    it->second.quality = quality;
  }
}

}  // namespace mixroute
