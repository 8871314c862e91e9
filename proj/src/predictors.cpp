#include "mixroute/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mixroute {

void PredictorConfig::validate() const {
  if (eta1 < 0 || eta2 < 0) throw ConfigError("predictor step sizes must be >= 0");
  if (ridge < 0) throw ConfigError("ridge penalty must be >= 0");
  if (knn_k <= 0) throw ConfigError("knn_k must be positive");
  if (quality_prior < 0 || quality_prior > 1) throw ConfigError("quality_prior must lie in [0, 1]");
  if (length_prior < 0) throw ConfigError("length_prior must be >= 0");
}

Regressor::Regressor(RegressorKind kind, Target target, int dim, double prior, int knn_k)
    : kind_(kind), target_(target), dim_(dim), prior_(prior), knn_k_(knn_k),
      theta_(Vector::Zero(dim)), bias_(prior) {
  if (dim <= 0) throw ConfigError("regressor dimension must be positive");
  if (knn_k <= 0) throw ConfigError("knn_k must be positive");
}

Regressor Regressor::fresh(Target target, int dim, const PredictorConfig& cfg) {
  const double prior = target == Target::Quality ? cfg.quality_prior : cfg.length_prior;
  return Regressor(cfg.kind, target, dim, prior, cfg.knn_k);
}

void Regressor::check_dim(const Vector& e) const {
  if (e.size() != dim_) {
    throw DimensionMismatch("regressor expects dimension " + std::to_string(dim_) + ", got " +
                            std::to_string(e.size()));
  }
}

double Regressor::clamp(double raw) const {
  if (std::isnan(raw)) return target_ == Target::Quality ? prior_ : 0.0;
  if (target_ == Target::Quality) return std::clamp(raw, 0.0, 1.0);
  return std::max(raw, 0.0);
}

double Regressor::predict_raw(const Vector& e) const {
  check_dim(e);
  if (kind_ == RegressorKind::LinearRidge) return bias_ + theta_.dot(e);

  if (exemplars_.empty()) return prior_;
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(exemplars_.size());
  for (std::size_t i = 0; i < exemplars_.size(); ++i) {
    dist.emplace_back((exemplars_[i] - e).squaredNorm(), i);
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(knn_k_), dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += targets_[dist[i].second];
  return sum / static_cast<double>(k);
}

double Regressor::predict(const Vector& e) const { return clamp(predict_raw(e)); }

void Regressor::update(const Vector& e, double observed, double eta) {
  check_dim(e);
  if (kind_ == RegressorKind::KNearest) {
    exemplars_.push_back(e);
    targets_.push_back(observed);
    return;
  }
  const double residual = observed - predict_raw(e);
  if (residual == 0.0 || eta == 0.0) return;
  theta_ += (eta * residual) * e;
  bias_ += eta * residual;
}

void Regressor::fit(std::span<const Vector> inputs, std::span<const double> targets, double ridge) {
  if (inputs.size() != targets.size()) throw DimensionMismatch("inputs and targets differ in length");
  for (const auto& x : inputs) check_dim(x);
  if (kind_ == RegressorKind::KNearest) {
    exemplars_.assign(inputs.begin(), inputs.end());
    targets_.assign(targets.begin(), targets.end());
    return;
  }
  if (inputs.empty()) return;

  // Centering removes the intercept from the penalized system.
  const double n = static_cast<double>(inputs.size());
  Vector mean_x = Vector::Zero(dim_);
  double mean_y = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    mean_x += inputs[i];
    mean_y += targets[i];
  }
  mean_x /= n;
  mean_y /= n;

  Matrix gram = Matrix::Zero(dim_, dim_);
  Vector rhs = Vector::Zero(dim_);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Vector xc = inputs[i] - mean_x;
    gram.selfadjointView<Eigen::Lower>().rankUpdate(xc);
    rhs += (targets[i] - mean_y) * xc;
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  gram.diagonal().array() += ridge;
  theta_ = gram.ldlt().solve(rhs);
  bias_ = mean_y - theta_.dot(mean_x);
}

void Regressor::set_state(Vector theta, double bias, std::vector<Vector> exemplars,
                          std::vector<double> targets) {
  if (theta.size() != dim_) throw DimensionMismatch("theta dimension mismatch");
  if (exemplars.size() != targets.size()) throw DimensionMismatch("exemplar count mismatch");
  for (const auto& x : exemplars) check_dim(x);
  theta_ = std::move(theta);
  bias_ = bias;
  exemplars_ = std::move(exemplars);
  targets_ = std::move(targets);
}

bool Regressor::operator==(const Regressor& o) const {
  return kind_ == o.kind_ && target_ == o.target_ && dim_ == o.dim_ && prior_ == o.prior_ &&
         knn_k_ == o.knn_k_ && theta_ == o.theta_ && bias_ == o.bias_ &&
         exemplars_ == o.exemplars_ && targets_ == o.targets_;
}

double predict_quality(const Regressor& state, const Vector& e) {
  if (state.target() != Target::Quality) throw ConfigError("not a quality regressor");
  return state.predict(e);
}

double predict_length(const Regressor& state, const Vector& e) {
  if (state.target() != Target::Length) throw ConfigError("not a length regressor");
  return state.predict(e);
}

void update_quality(Regressor& state, const Vector& e, double observed_quality, double eta1) {
  if (state.target() != Target::Quality) throw ConfigError("not a quality regressor");
  state.update(e, observed_quality, eta1);
}

void update_length(Regressor& state, const Vector& e, double observed_tokens, double eta2) {
  if (state.target() != Target::Length) throw ConfigError("not a length regressor");
  state.update(e, observed_tokens, eta2);
}

CostEstimate estimate_cost(const LLMCandidate& c, std::int64_t prompt_tokens, double predicted_len) {
  CostEstimate out;
  out.input_cost = static_cast<double>(prompt_tokens) * c.prompt_price / 1000.0;
  out.output_cost = predicted_len * c.response_price / 1000.0;
  out.total = out.input_cost + out.output_cost;
  return out;
}

double truth_cost(const GroundTruth& truth, const LLMCandidate& c, std::int64_t prompt_tokens) {
  if (truth.cost_usd) return *truth.cost_usd;
  return estimate_cost(c, prompt_tokens, static_cast<double>(truth.response_tokens)).total;
}

}  // namespace mixroute
