#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "mixroute/core.hpp"

namespace mixroute {

/// Shared three-layer network producing one dynamic feedback score per
/// active candidate: tanh(W1 e + b1) -> tanh(W2 h1 + b2) -> W3 h2 + b3.
///
/// Output rows are bound to candidate ids ("slots") so that adding or
/// removing a candidate only touches its own row. Each slot keeps a window
/// of its most recent scores for the variance-based confidence factor.
class FeedbackNet {
 public:
  struct Params {
    Matrix w1;
    Vector b1;
    Matrix w2;
    Vector b2;
    Matrix w3;
    Vector b3;

    bool operator==(const Params& o) const;
  };

  struct Activations {
    Vector h1;
    Vector h2;
    Vector out;
  };

  FeedbackNet() = default;
  /// Hidden layers get seeded Gaussian weights scaled by 1/sqrt(fan_in);
  /// the output layer starts at zero so an untrained net scores 0 everywhere.
  FeedbackNet(int input_dim, int hidden, std::vector<std::string> slots, std::uint64_t seed,
              std::size_t window);

  int input_dim() const { return static_cast<int>(params_.w1.cols()); }
  int hidden() const { return static_cast<int>(params_.w1.rows()); }
  std::size_t width() const { return slots_.size(); }
  std::size_t window() const { return window_; }
  const std::vector<std::string>& slots() const { return slots_; }
  const Params& params() const { return params_; }
  Params& params() { return params_; }
  const std::deque<double>& recent_scores(std::size_t slot) const { return recent_.at(slot); }

  /// Pure forward pass.
  Activations forward(const Vector& e) const;

  /// Forward pass that also appends each output to its slot's window.
  /// Throws WidthMismatch if the net width differs from expected_width.
  Vector df_scores(const Vector& e, std::size_t expected_width);

  /// Confidence factor of one slot from its current window.
  double confidence(std::size_t slot, double epsilon) const;

  /// Gradient of log softmax(out)[chosen] with respect to every parameter.
  /// Throws IndexOutOfRange.
  Params log_prob_gradient(const Vector& e, std::size_t chosen) const;

  /// theta += sign * eta * reward * grad log pi(chosen | e), where sign is +1
  /// for gradient ascent on expected reward (the default) and -1 for the
  /// literal descent form. A zero reward leaves the net untouched.
  void policy_update(const Vector& e, std::size_t chosen, double reward, double eta, bool ascend = true);

  /// Grows (zero rows, empty windows) or truncates the output layer.
  void resize(std::size_t count);

  /// Rebinds the output layer to `active_ids`: rows of ids that remain keep
  /// their weights and windows, new ids get fresh zero rows.
  void sync_slots(const std::vector<std::string>& active_ids);

  void set_state(Params params, std::vector<std::string> slots, std::vector<std::deque<double>> recent,
                 std::size_t window);

  bool operator==(const FeedbackNet& o) const {
    return params_ == o.params_ && slots_ == o.slots_ && recent_ == o.recent_ && window_ == o.window_;
  }

 private:
  Params params_;
  std::vector<std::string> slots_;
  std::vector<std::deque<double>> recent_;
  std::size_t window_ = 50;
};

/// Softmax with max-shift.
Vector softmax(const Vector& logits);

/// 1 / (population variance + epsilon); 0 with fewer than two samples.
double confidence(std::span<const double> recent, double epsilon);

}  // namespace mixroute
