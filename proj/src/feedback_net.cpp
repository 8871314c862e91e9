#include "mixroute/feedback_net.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace mixroute {

bool FeedbackNet::Params::operator==(const Params& o) const {
  auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  return same(w1, o.w1) && same(b1, o.b1) && same(w2, o.w2) && same(b2, o.b2) && same(w3, o.w3) &&
         same(b3, o.b3);
}

Vector softmax(const Vector& logits) {
  Vector p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

double confidence(std::span<const double> recent, double epsilon) {
  if (recent.size() < 2) return 0.0;
  const double n = static_cast<double>(recent.size());
  double mean = 0.0;
  for (double s : recent) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : recent) var += (s - mean) * (s - mean);
  var /= n;
  return 1.0 / (var + epsilon);
}

FeedbackNet::FeedbackNet(int input_dim, int hidden, std::vector<std::string> slots, std::uint64_t seed,
                         std::size_t window)
    : slots_(std::move(slots)), recent_(slots_.size()), window_(window) {
  if (input_dim <= 0 || hidden <= 0) throw ConfigError("feedback net dimensions must be positive");
  if (window == 0) throw ConfigError("df_window must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  params_.w1 = Matrix::NullaryExpr(hidden, input_dim, [&] { return s1 * normal(rng); });
  params_.b1 = Vector::Zero(hidden);
  params_.w2 = Matrix::NullaryExpr(hidden, hidden, [&] { return s2 * normal(rng); });
  params_.b2 = Vector::Zero(hidden);
  params_.w3 = Matrix::Zero(static_cast<Eigen::Index>(slots_.size()), hidden);
  params_.b3 = Vector::Zero(static_cast<Eigen::Index>(slots_.size()));
}

FeedbackNet::Activations FeedbackNet::forward(const Vector& e) const {
  if (e.size() != params_.w1.cols()) throw DimensionMismatch("feedback net input dimension mismatch");
  Activations a;
  a.h1 = (params_.w1 * e + params_.b1).array().tanh();
  a.h2 = (params_.w2 * a.h1 + params_.b2).array().tanh();
  a.out = params_.w3 * a.h2 + params_.b3;
  return a;
}

Vector FeedbackNet::df_scores(const Vector& e, std::size_t expected_width) {
  if (expected_width != width()) {
    throw WidthMismatch("feedback net has " + std::to_string(width()) + " outputs, " +
                        std::to_string(expected_width) + " active candidates");
  }
  Vector out = forward(e).out;
  for (std::size_t k = 0; k < width(); ++k) {
    recent_[k].push_back(out(static_cast<Eigen::Index>(k)));
    while (recent_[k].size() > window_) recent_[k].pop_front();
  }
  return out;
}

double FeedbackNet::confidence(std::size_t slot, double epsilon) const {
  const auto& window = recent_.at(slot);
  const std::vector<double> values(window.begin(), window.end());
  return mixroute::confidence(values, epsilon);
}

FeedbackNet::Params FeedbackNet::log_prob_gradient(const Vector& e, std::size_t chosen) const {
  if (chosen >= width()) {
    throw IndexOutOfRange("chosen slot " + std::to_string(chosen) + " outside net width " +
                          std::to_string(width()));
  }
  const Activations a = forward(e);
  Params g;
  Vector d_out = -softmax(a.out);
  d_out(static_cast<Eigen::Index>(chosen)) += 1.0;
  g.w3 = d_out * a.h2.transpose();
  g.b3 = d_out;
  const Vector d_z2 = (params_.w3.transpose() * d_out).array() * (1.0 - a.h2.array().square());
  g.w2 = d_z2 * a.h1.transpose();
  g.b2 = d_z2;
  const Vector d_z1 = (params_.w2.transpose() * d_z2).array() * (1.0 - a.h1.array().square());
  g.w1 = d_z1 * e.transpose();
  g.b1 = d_z1;
  return g;
}

void FeedbackNet::policy_update(const Vector& e, std::size_t chosen, double reward, double eta,
                                bool ascend) {
  const Params g = log_prob_gradient(e, chosen);
  if (reward == 0.0 || eta == 0.0) return;
  const double step = (ascend ? 1.0 : -1.0) * eta * reward;
  params_.w1 += step * g.w1;
  params_.b1 += step * g.b1;
  params_.w2 += step * g.w2;
  params_.b2 += step * g.b2;
  params_.w3 += step * g.w3;
  params_.b3 += step * g.b3;
}

void FeedbackNet::resize(std::size_t count) {
  if (count == width()) return;
  const auto old = static_cast<Eigen::Index>(width());
  const auto rows = static_cast<Eigen::Index>(count);
  Matrix w3 = Matrix::Zero(rows, params_.w3.cols());
  Vector b3 = Vector::Zero(rows);
  const Eigen::Index keep = std::min(old, rows);
  w3.topRows(keep) = params_.w3.topRows(keep);
  b3.head(keep) = params_.b3.head(keep);
  params_.w3 = std::move(w3);
  params_.b3 = std::move(b3);
  slots_.resize(count);
  recent_.resize(count);
}

void FeedbackNet::sync_slots(const std::vector<std::string>& active_ids) {
  if (active_ids == slots_) return;
  const auto rows = static_cast<Eigen::Index>(active_ids.size());
  Matrix w3 = Matrix::Zero(rows, params_.w3.cols());
  Vector b3 = Vector::Zero(rows);
  std::vector<std::deque<double>> recent(active_ids.size());
  for (std::size_t k = 0; k < active_ids.size(); ++k) {
    for (std::size_t old = 0; old < slots_.size(); ++old) {
      if (slots_[old] != active_ids[k]) continue;
      w3.row(static_cast<Eigen::Index>(k)) = params_.w3.row(static_cast<Eigen::Index>(old));
      b3(static_cast<Eigen::Index>(k)) = params_.b3(static_cast<Eigen::Index>(old));
      recent[k] = recent_[old];
      break;
    }
  }
  params_.w3 = std::move(w3);
  params_.b3 = std::move(b3);
  slots_ = active_ids;
  recent_ = std::move(recent);
}

void FeedbackNet::set_state(Params params, std::vector<std::string> slots,
                            std::vector<std::deque<double>> recent, std::size_t window) {
  const auto width = static_cast<Eigen::Index>(slots.size());
  if (params.w3.rows() != width || params.b3.size() != width || recent.size() != slots.size()) {
    throw WidthMismatch("feedback net state has inconsistent output width");
  }
  params_ = std::move(params);
  slots_ = std::move(slots);
  recent_ = std::move(recent);
  window_ = window;
}

}  // namespace mixroute
