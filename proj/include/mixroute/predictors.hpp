#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mixroute/core.hpp"

namespace mixroute {

enum class RegressorKind { LinearRidge, KNearest };
enum class Target { Quality, Length };

struct PredictorConfig {
  RegressorKind kind = RegressorKind::LinearRidge;
  double eta1 = 1.0;             // quality step size
  double eta2 = 1.0;             // length step size
  double ridge = 1e-3;           // L2 penalty of the closed-form fit (intercept unpenalized)
  int knn_k = 5;
  double quality_prior = 0.5;    // output of an untrained quality regressor
  double length_prior = 256.0;   // output of an untrained length regressor, tokens

  void validate() const;
};

/// One regressor for one (candidate, target) pair.
///
/// Linear kind: prediction = bias + theta . e, with bias starting at the
/// target's prior and theta at zero. Nearest-neighbour kind: mean target of
/// the k closest stored exemplars (prior while empty). Predictions are
/// clamped to [0, 1] for quality and to [0, inf) for length.
class Regressor {
 public:
  Regressor() = default;
  Regressor(RegressorKind kind, Target target, int dim, double prior, int knn_k = 5);

  static Regressor fresh(Target target, int dim, const PredictorConfig& cfg);

  RegressorKind kind() const noexcept { return kind_; }
  Target target() const noexcept { return target_; }
  int dim() const noexcept { return dim_; }
  double prior() const noexcept { return prior_; }
  int knn_k() const noexcept { return knn_k_; }

  const Vector& theta() const noexcept { return theta_; }
  double bias() const noexcept { return bias_; }
  const std::vector<Vector>& exemplars() const noexcept { return exemplars_; }
  const std::vector<double>& exemplar_targets() const noexcept { return targets_; }

  /// Unclamped model output. Throws DimensionMismatch.
  double predict_raw(const Vector& e) const;
  /// Clamped output.
  double predict(const Vector& e) const;

  /// One step of gradient descent on 0.5 * (observed - predict_raw(e))^2
  /// (linear kind), or an appended exemplar (nearest-neighbour kind).
  void update(const Vector& e, double observed, double eta);

  /// Batch fit. Linear kind solves ridge regression in closed form with an
  /// unpenalized intercept; nearest-neighbour kind stores every row.
  void fit(std::span<const Vector> inputs, std::span<const double> targets, double ridge);

  /// Restores a serialized state.
  void set_state(Vector theta, double bias, std::vector<Vector> exemplars, std::vector<double> targets);

  bool operator==(const Regressor& o) const;

 private:
  void check_dim(const Vector& e) const;
  double clamp(double raw) const;

  RegressorKind kind_ = RegressorKind::LinearRidge;
  Target target_ = Target::Quality;
  int dim_ = 0;
  double prior_ = 0.0;
  int knn_k_ = 5;
  Vector theta_;
  double bias_ = 0.0;
  std::vector<Vector> exemplars_;
  std::vector<double> targets_;
};

/// Throws ConfigError if state is not a quality regressor.
double predict_quality(const Regressor& state, const Vector& e);
/// Throws ConfigError if state is not a length regressor.
double predict_length(const Regressor& state, const Vector& e);

void update_quality(Regressor& state, const Vector& e, double observed_quality, double eta1);
void update_length(Regressor& state, const Vector& e, double observed_tokens, double eta2);

struct CostEstimate {
  double input_cost = 0.0;
  double output_cost = 0.0;
  double total = 0.0;
};

/// Prompt and response cost under per-1k-token pricing.
CostEstimate estimate_cost(const LLMCandidate& c, std::int64_t prompt_tokens, double predicted_len);

/// Supplied cost if present, otherwise the pricing formula applied to the
/// true response length.
double truth_cost(const GroundTruth& truth, const LLMCandidate& c, std::int64_t prompt_tokens);

}  // namespace mixroute
