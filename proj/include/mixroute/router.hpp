#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixroute/core.hpp"
#include "mixroute/embed_space.hpp"
#include "mixroute/feedback_net.hpp"
#include "mixroute/predictors.hpp"
#include "mixroute/uncertainty.hpp"

namespace mixroute {

enum class RewardConvention { ZeroOne, PlusMinusOne };

struct RouterConfig {
  double alpha = 0.01;   // uncertainty weight
  double beta = 0.1;     // latency penalty weight
  double gamma = 0.1;    // penalty exponent scale
  double xi = 0.5;       // fraction of tau where the penalty reaches 1
  double tau = 30.0;     // maximum tolerable wait, seconds
  double lambda = 1.0;   // willingness to pay
  double epsilon = 1e-6;
  double eta3 = 1e-3;    // feedback net step size
  std::size_t df_window = 50;
  double cost_scale = 0.0;  // <= 0: derived from the offline training set
  RewardConvention reward = RewardConvention::ZeroOne;
  bool ascend = true;       // policy update direction, see FeedbackNet::policy_update
  int hidden = 64;
  std::uint64_t net_seed = 42;
  int uncertainty_check_interval = 1;

  void validate() const;
};

/// Quality/cost trade-off: lambda/(lambda+1) * p_hat - 1/(lambda+1) * c_hat.
double trade_score(double p_hat, double c_hat, double lambda);

/// exp(gamma * (wait - xi * tau)), with the exponent capped at 50.
double latency_penalty(double wait, const RouterConfig& cfg);

/// s_trade + alpha * s_unc - beta * s_pen.
double combine_scores(double s_trade, double s_unc, double s_pen, const RouterConfig& cfg);

struct ScoreBreakdown {
  std::string llm_id;
  std::size_t index = 0;      // catalog index
  double p_hat = 0.0;
  double predicted_len = 0.0;
  double cost_usd = 0.0;      // predicted dollar cost
  double c_hat = 0.0;         // cost_usd / cost_scale
  double wait = 0.0;
  double s_trade = 0.0;
  double s_unc = 0.0;
  double s_pen = 0.0;
  double s = 0.0;             // combined score before the feedback term
  std::optional<double> s_df;
  std::optional<double> kappa;
  double s_final = 0.0;
};

struct RoutingDecision {
  std::string query_id;
  std::string chosen;
  std::size_t chosen_index = 0;
  double timestamp = 0.0;
  bool online = false;
  std::vector<ScoreBreakdown> breakdown;  // active candidates in catalog order
};

/// Index into `breakdown` of the highest s_final; ties go to the earliest entry.
std::size_t argmax_final(std::span<const ScoreBreakdown> breakdown);

struct ArmState {
  Regressor quality;
  Regressor length;
  ArmUncertainty uncertainty;

  bool operator==(const ArmState&) const = default;
};

/// Meta decision maker over a catalog. Holds one ArmState per catalog entry
/// (parallel to the catalog order) and the shared feedback network.
///
/// Scoring functions are const and safe to call concurrently; all updates
/// must be serialized by the caller.
class Router {
 public:
  Router() = default;
  Router(Catalog catalog, RouterConfig cfg, PredictorConfig predictor_cfg,
         std::optional<ProjectionModel> projection = std::nullopt);

  const Catalog& catalog() const noexcept { return catalog_; }
  const RouterConfig& config() const noexcept { return cfg_; }
  RouterConfig& config() noexcept { return cfg_; }
  const PredictorConfig& predictor_config() const noexcept { return pcfg_; }
  const std::optional<ProjectionModel>& projection() const noexcept { return projection_; }
  int d_route() const noexcept { return catalog_.d_route(); }

  double cost_scale() const noexcept { return cost_scale_; }
  void set_cost_scale(double scale);

  const ArmState& arm(std::size_t index) const { return arms_.at(index); }
  ArmState& arm(std::size_t index) { return arms_.at(index); }
  const FeedbackNet& feedback_net() const noexcept { return net_; }
  FeedbackNet& feedback_net() noexcept { return net_; }
  std::size_t kappa_warnings() const noexcept { return kappa_warnings_; }

  /// Validates q and maps its base embedding into the routing space (the
  /// trained projection, or plain L2 normalization without one).
  Vector embed(const Query& q) const;

  /// Adds a candidate with fresh predictor/uncertainty state and a zero
  /// feedback row; other arms are untouched. Returns its catalog index.
  std::size_t add_candidate(LLMCandidate c);
  void remove_candidate(const std::string& llm_id);

  /// Score of one candidate. `waits` are per catalog index.
  ScoreBreakdown decision_score(const Query& q, const Vector& e, std::size_t index, double wait) const;

  /// Breakdown for every active candidate. `waits` is either empty (all
  /// idle) or sized to the catalog.
  std::vector<ScoreBreakdown> score_all(const Query& q, const Vector& e, std::span<const double> waits) const;

  /// Highest combined score among active candidates. Throws NoActiveCandidates.
  RoutingDecision select(const Query& q, std::span<const double> waits = {}, double now = 0.0) const;

  /// Same as select() but adds kappa * s_df from the feedback net. Records
  /// the net outputs into its variance windows.
  RoutingDecision select_online(const Query& q, std::span<const double> waits = {}, double now = 0.0);

  /// Active catalog indices ordered by s_final, best first (stable).
  static std::vector<std::size_t> ranking(const RoutingDecision& d);

  /// Closed-form refit of every active arm's predictors on the refined
  /// feedback of `queries`, plus one uncertainty update per (arm, query).
  /// Sets the cost scale from the data when the config leaves it at 0.
  void offline_fit(std::span<const Query> queries);

  /// Online refined feedback for one arm: one gradient step on each
  /// predictor and one uncertainty update.
  void refined_update(const Vector& e, std::size_t index, const GroundTruth& truth);

  /// Policy-gradient step on the feedback net for a satisfied/unsatisfied
  /// user signal on the candidate at catalog `index`.
  void binary_update(const Vector& e, std::size_t index, bool satisfied);

  /// Replaces the arm states wholesale (snapshot restore).
  void restore(std::vector<ArmState> arms, FeedbackNet net, double cost_scale);

 private:
  ArmState fresh_arm() const;
  std::size_t slot_of(std::size_t index) const;

  Catalog catalog_;
  RouterConfig cfg_;
  PredictorConfig pcfg_;
  std::optional<ProjectionModel> projection_;
  std::vector<ArmState> arms_;
  std::vector<std::pair<LLMCandidate, ArmState>> retired_;
  FeedbackNet net_;
  double cost_scale_ = 1.0;
  std::size_t kappa_warnings_ = 0;
};

}  // namespace mixroute
