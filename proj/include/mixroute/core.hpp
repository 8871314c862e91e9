#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixroute/errors.hpp"

namespace mixroute {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Observed outcome of one query on one candidate. Only present in training
/// and simulation data.
struct GroundTruth {
  double quality = 0.0;             // in [0, 1]
  std::int64_t response_tokens = 0;
  std::optional<double> cost_usd;   // recomputed from pricing when absent

  bool operator==(const GroundTruth&) const = default;
};

struct Query {
  std::string id;
  Vector base_embedding;
  std::int64_t prompt_tokens = 0;
  std::optional<int> domain_label;
  std::map<std::string, GroundTruth> truth;

  /// Throws MissingGroundTruth when the query carries no record for llm_id.
  const GroundTruth& truth_for(const std::string& llm_id) const;

  bool operator==(const Query& other) const;
};

struct LLMCandidate {
  std::string llm_id;
  double prompt_price = 0.0;    // USD per 1000 prompt tokens
  double response_price = 0.0;  // USD per 1000 response tokens
  double init_latency = 0.0;    // seconds before the first token
  double tokens_per_second = 1.0;
  bool active = true;

  /// Throws ConfigError on negative prices/latency or non-positive speed.
  void validate() const;

  bool operator==(const LLMCandidate&) const = default;
};

/// Ordered set of routable candidates. Removal is a soft delete: the entry
/// stays in place with active == false so logged decisions keep resolving.
class Catalog {
 public:
  Catalog() = default;
  /// d_route == 0 means "same as d_base" (identity projection).
  explicit Catalog(int d_base, int d_route = 0);

  int d_base() const noexcept { return d_base_; }
  int d_route() const noexcept { return d_route_; }
  void set_d_route(int d_route);

  /// Appends c and returns its index. Re-adding an id that was removed
  /// reactivates its slot in place. Throws DuplicateId if the id is active.
  std::size_t add_candidate(LLMCandidate c);
  /// Marks the candidate inactive. Throws UnknownId.
  void remove_candidate(const std::string& llm_id);

  std::optional<std::size_t> find(const std::string& llm_id) const;
  /// Throws UnknownId.
  std::size_t index_of(const std::string& llm_id) const;
  const LLMCandidate& at(std::size_t index) const { return candidates_.at(index); }
  const LLMCandidate& at(const std::string& llm_id) const { return at(index_of(llm_id)); }

  const std::vector<LLMCandidate>& candidates() const noexcept { return candidates_; }
  std::size_t size() const noexcept { return candidates_.size(); }
  std::vector<std::size_t> active_indices() const;
  std::vector<std::string> active_ids() const;
  std::size_t active_count() const;

  /// Returns q unchanged if its embedding has d_base entries and its token
  /// count is non-negative; otherwise throws DimensionMismatch or
  /// NegativeTokens (checked in that order).
  const Query& validate_query(const Query& q) const;

  bool operator==(const Catalog&) const = default;

 private:
  int d_base_ = 0;
  int d_route_ = 0;
  std::vector<LLMCandidate> candidates_;
};

}  // namespace mixroute
