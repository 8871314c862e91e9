#include "mixroute/core.hpp"

#include <algorithm>

namespace mixroute {

const GroundTruth& Query::truth_for(const std::string& llm_id) const {
  auto it = truth.find(llm_id);
  if (it == truth.end()) {
    throw MissingGroundTruth("query '" + id + "' has no ground truth for '" + llm_id + "'");
  }
  return it->second;
}

bool Query::operator==(const Query& other) const {
  return id == other.id && base_embedding.size() == other.base_embedding.size() &&
         base_embedding == other.base_embedding && prompt_tokens == other.prompt_tokens &&
         domain_label == other.domain_label && truth == other.truth;
}

void LLMCandidate::validate() const {
  if (llm_id.empty()) throw ConfigError("candidate id must not be empty");
  if (prompt_price < 0 || response_price < 0) {
    throw ConfigError("candidate '" + llm_id + "': prices must be >= 0");
  }
  if (init_latency < 0) throw ConfigError("candidate '" + llm_id + "': init_latency must be >= 0");
  if (!(tokens_per_second > 0)) {
    throw ConfigError("candidate '" + llm_id + "': tokens_per_second must be > 0");
  }
}

Catalog::Catalog(int d_base, int d_route) : d_base_(d_base), d_route_(d_route ? d_route : d_base) {
  if (d_base <= 0 || d_route < 0) throw ConfigError("catalog dimensions must be positive");
}

void Catalog::set_d_route(int d_route) {
  if (d_route <= 0) throw ConfigError("d_route must be positive");
  d_route_ = d_route;
}

std::size_t Catalog::add_candidate(LLMCandidate c) {
  c.validate();
  if (auto idx = find(c.llm_id)) {
    if (candidates_[*idx].active) throw DuplicateId("candidate '" + c.llm_id + "' already present");
    c.active = true;
    candidates_[*idx] = std::move(c);
    return *idx;
  }
  c.active = true;
  candidates_.push_back(std::move(c));
  return candidates_.size() - 1;
}

void Catalog::remove_candidate(const std::string& llm_id) {
  auto idx = find(llm_id);
  if (!idx || !candidates_[*idx].active) throw UnknownId("no active candidate '" + llm_id + "'");
  candidates_[*idx].active = false;
}

std::optional<std::size_t> Catalog::find(const std::string& llm_id) const {
  auto it = std::find_if(candidates_.begin(), candidates_.end(),
                         [&](const LLMCandidate& c) { return c.llm_id == llm_id; });
  if (it == candidates_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - candidates_.begin());
}

std::size_t Catalog::index_of(const std::string& llm_id) const {
  auto idx = find(llm_id);
  if (!idx) throw UnknownId("unknown candidate '" + llm_id + "'");
  return *idx;
}

std::vector<std::size_t> Catalog::active_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < candidates_.size(); ++i) {
    if (candidates_[i].active) out.push_back(i);
  }
  return out;
}

std::vector<std::string> Catalog::active_ids() const {
  std::vector<std::string> out;
  for (const auto& c : candidates_) {
    if (c.active) out.push_back(c.llm_id);
  }
  return out;
}

std::size_t Catalog::active_count() const {
  return static_cast<std::size_t>(
      std::count_if(candidates_.begin(), candidates_.end(), [](const auto& c) { return c.active; }));
}

const Query& Catalog::validate_query(const Query& q) const {
  if (q.base_embedding.size() != d_base_) {
    throw DimensionMismatch("query '" + q.id + "': embedding has " +
                            std::to_string(q.base_embedding.size()) + " entries, catalog expects " +
                            std::to_string(d_base_));
  }
  if (q.prompt_tokens < 0) throw NegativeTokens("query '" + q.id + "': negative prompt_tokens");
  return q;
}

}  // namespace mixroute
