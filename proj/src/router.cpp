#include "mixroute/router.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

namespace mixroute {

void RouterConfig::validate() const {
  if (alpha < 0) throw ConfigError("alpha must be >= 0");
  if (beta < 0) throw ConfigError("beta must be >= 0");
  if (!(gamma > 0)) throw ConfigError("gamma must be > 0");
  if (!(xi > 0 && xi < 1)) throw ConfigError("xi must lie in (0, 1)");
  if (!(tau > 0)) throw ConfigError("tau must be > 0");
  if (!(lambda > 0)) throw ConfigError("lambda must be > 0");
  if (!(epsilon > 0)) throw ConfigError("epsilon must be > 0");
  if (eta3 < 0) throw ConfigError("eta3 must be >= 0");
  if (df_window == 0) throw ConfigError("df_window must be positive");
  if (hidden <= 0) throw ConfigError("hidden width must be positive");
}

double trade_score(double p_hat, double c_hat, double lambda) {
  return lambda / (lambda + 1.0) * p_hat - 1.0 / (lambda + 1.0) * c_hat;
}

double latency_penalty(double wait, const RouterConfig& cfg) {
  constexpr double kMaxExponent = 50.0;
  return std::exp(std::min(cfg.gamma * (wait - cfg.xi * cfg.tau), kMaxExponent));
}

double combine_scores(double s_trade, double s_unc, double s_pen, const RouterConfig& cfg) {
  return s_trade + cfg.alpha * s_unc - cfg.beta * s_pen;
}

std::size_t argmax_final(std::span<const ScoreBreakdown> breakdown) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < breakdown.size(); ++i) {
    if (breakdown[i].s_final > breakdown[best].s_final) best = i;
  }
  return best;
}

Router::Router(Catalog catalog, RouterConfig cfg, PredictorConfig predictor_cfg,
               std::optional<ProjectionModel> projection)
    : catalog_(std::move(catalog)), cfg_(cfg), pcfg_(predictor_cfg), projection_(std::move(projection)) {
  cfg_.validate();
  pcfg_.validate();
  if (projection_) {
    if (projection_->d_base() != catalog_.d_base()) {
      throw DimensionMismatch("projection input dimension differs from catalog d_base");
    }
    catalog_.set_d_route(projection_->d_route());
  } else {
    catalog_.set_d_route(catalog_.d_base());
  }
  if (cfg_.cost_scale > 0) cost_scale_ = cfg_.cost_scale;
  arms_.reserve(catalog_.size());
  for (std::size_t i = 0; i < catalog_.size(); ++i) arms_.push_back(fresh_arm());
  net_ = FeedbackNet(catalog_.d_route(), cfg_.hidden, catalog_.active_ids(), cfg_.net_seed, cfg_.df_window);
}

ArmState Router::fresh_arm() const {
  const int d = catalog_.d_route();
  return {Regressor::fresh(Target::Quality, d, pcfg_), Regressor::fresh(Target::Length, d, pcfg_),
          ArmUncertainty(d, cfg_.uncertainty_check_interval)};
}

void Router::set_cost_scale(double scale) {
  if (!(scale > 0)) throw ConfigError("cost scale must be > 0");
  cost_scale_ = scale;
}

Vector Router::embed(const Query& q) const {
  catalog_.validate_query(q);
  return projection_ ? project(*projection_, q.base_embedding) : normalize(q.base_embedding);
}

std::size_t Router::add_candidate(LLMCandidate c) {
  const std::size_t index = catalog_.add_candidate(std::move(c));
  if (index == arms_.size()) {
    arms_.push_back(fresh_arm());
  } else {
    // Re-added id: archive the old state, start over.
    retired_.emplace_back(catalog_.at(index), std::move(arms_[index]));
    arms_[index] = fresh_arm();
  }
  net_.sync_slots(catalog_.active_ids());
  return index;
}

void Router::remove_candidate(const std::string& llm_id) {
  catalog_.remove_candidate(llm_id);
  net_.sync_slots(catalog_.active_ids());
}

ScoreBreakdown Router::decision_score(const Query& q, const Vector& e, std::size_t index, double wait) const {
  const LLMCandidate& c = catalog_.at(index);
  const ArmState& state = arms_.at(index);
  ScoreBreakdown b;
  b.llm_id = c.llm_id;
  b.index = index;
  b.wait = wait;
  b.p_hat = predict_quality(state.quality, e);
  b.predicted_len = predict_length(state.length, e);
  b.cost_usd = estimate_cost(c, q.prompt_tokens, b.predicted_len).total;
  b.c_hat = b.cost_usd / cost_scale_;
  b.s_trade = trade_score(b.p_hat, b.c_hat, cfg_.lambda);
  b.s_unc = state.uncertainty.score(e);
  b.s_pen = latency_penalty(wait, cfg_);
  b.s = combine_scores(b.s_trade, b.s_unc, b.s_pen, cfg_);
  b.s_final = b.s;
  return b;
}

std::vector<ScoreBreakdown> Router::score_all(const Query& q, const Vector& e,
                                              std::span<const double> waits) const {
  if (!waits.empty() && waits.size() != catalog_.size()) {
    throw DimensionMismatch("waits must have one entry per catalog candidate");
  }
  std::vector<ScoreBreakdown> out;
  for (std::size_t i : catalog_.active_indices()) {
    out.push_back(decision_score(q, e, i, waits.empty() ? 0.0 : waits[i]));
  }
  return out;
}

RoutingDecision Router::select(const Query& q, std::span<const double> waits, double now) const {
  if (catalog_.active_count() == 0) throw NoActiveCandidates("no active candidates to route to");
  const Vector e = embed(q);
  RoutingDecision d;
  d.query_id = q.id;
  d.timestamp = now;
  d.breakdown = score_all(q, e, waits);
  const auto& best = d.breakdown[argmax_final(d.breakdown)];
  d.chosen = best.llm_id;
  d.chosen_index = best.index;
  return d;
}

RoutingDecision Router::select_online(const Query& q, std::span<const double> waits, double now) {
  if (catalog_.active_count() == 0) throw NoActiveCandidates("no active candidates to route to");
  const Vector e = embed(q);
  RoutingDecision d;
  d.query_id = q.id;
  d.timestamp = now;
  d.online = true;
  d.breakdown = score_all(q, e, waits);
  const Vector df = net_.df_scores(e, d.breakdown.size());
  for (std::size_t k = 0; k < d.breakdown.size(); ++k) {
    auto& b = d.breakdown[k];
    b.s_df = df(static_cast<Eigen::Index>(k));
    b.kappa = net_.confidence(k, cfg_.epsilon);
    const double extra = *b.kappa * *b.s_df;
    b.s_final = b.s + extra;
    if (std::abs(extra) > 10.0 * std::abs(b.s)) {
      if (kappa_warnings_ == 0) {
        spdlog::warn("feedback term {:.4g} for '{}' exceeds 10x the base score {:.4g}", extra, b.llm_id, b.s);
      }
      ++kappa_warnings_;
    }
  }
  const auto& best = d.breakdown[argmax_final(d.breakdown)];
  d.chosen = best.llm_id;
  d.chosen_index = best.index;
  return d;
}

std::vector<std::size_t> Router::ranking(const RoutingDecision& d) {
  std::vector<std::size_t> order(d.breakdown.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return d.breakdown[a].s_final > d.breakdown[b].s_final;
  });
  std::vector<std::size_t> out;
  out.reserve(order.size());
  for (std::size_t k : order) out.push_back(d.breakdown[k].index);
  return out;
}

void Router::offline_fit(std::span<const Query> queries) {
  std::vector<Vector> embeddings;
  embeddings.reserve(queries.size());
  for (const auto& q : queries) embeddings.push_back(embed(q));

  double max_cost = 0.0;
  for (std::size_t i : catalog_.active_indices()) {
    const LLMCandidate& c = catalog_.at(i);
    std::vector<double> quality;
    std::vector<double> length;
    quality.reserve(queries.size());
    length.reserve(queries.size());
    for (const auto& q : queries) {
      const GroundTruth& t = q.truth_for(c.llm_id);
      quality.push_back(t.quality);
      length.push_back(static_cast<double>(t.response_tokens));
      max_cost = std::max(max_cost, truth_cost(t, c, q.prompt_tokens));
    }
    ArmState& state = arms_[i];
    state.quality.fit(embeddings, quality, pcfg_.ridge);
    state.length.fit(embeddings, length, pcfg_.ridge);
    for (const auto& e : embeddings) state.uncertainty.update(e);
  }
  if (cfg_.cost_scale > 0) {
    cost_scale_ = cfg_.cost_scale;
  } else if (max_cost > 0) {
    cost_scale_ = max_cost;
  }
}

void Router::refined_update(const Vector& e, std::size_t index, const GroundTruth& truth) {
  ArmState& state = arms_.at(index);
  update_quality(state.quality, e, truth.quality, pcfg_.eta1);
  update_length(state.length, e, static_cast<double>(truth.response_tokens), pcfg_.eta2);
  state.uncertainty.update(e);
}

std::size_t Router::slot_of(std::size_t index) const {
  const auto& id = catalog_.at(index).llm_id;
  const auto& slots = net_.slots();
  auto it = std::find(slots.begin(), slots.end(), id);
  if (it == slots.end()) throw IndexOutOfRange("candidate '" + id + "' has no feedback slot");
  return static_cast<std::size_t>(it - slots.begin());
}

void Router::binary_update(const Vector& e, std::size_t index, bool satisfied) {
  double reward = satisfied ? 1.0 : 0.0;
  if (!satisfied && cfg_.reward == RewardConvention::PlusMinusOne) reward = -1.0;
  net_.policy_update(e, slot_of(index), reward, cfg_.eta3, cfg_.ascend);
}

void Router::restore(std::vector<ArmState> arms, FeedbackNet net, double cost_scale) {
  if (arms.size() != catalog_.size()) throw DimensionMismatch("arm state count differs from catalog size");
  if (net.slots() != catalog_.active_ids()) throw WidthMismatch("feedback net slots differ from active ids");
  arms_ = std::move(arms);
  net_ = std::move(net);
  set_cost_scale(cost_scale);
}

}  // namespace mixroute
