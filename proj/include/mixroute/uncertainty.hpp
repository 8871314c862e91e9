#pragma once

#include <cstddef>

#include "mixroute/core.hpp"

namespace mixroute {

/// Per-arm design matrix A (starts at identity) together with its inverse.
/// The inverse is maintained with Sherman-Morrison rank-one updates and
/// re-derived by Cholesky whenever ||A * A_inv - I||_F reaches 1e-6.
class ArmUncertainty {
 public:
  static constexpr double kConsistencyTolerance = 1e-6;

  ArmUncertainty() = default;
  /// check_interval: run the consistency check every that many updates.
  explicit ArmUncertainty(int dim, int check_interval = 1);

  int dim() const noexcept { return static_cast<int>(a_.rows()); }
  const Matrix& a() const noexcept { return a_; }
  const Matrix& a_inv() const noexcept { return a_inv_; }
  std::size_t updates() const noexcept { return updates_; }
  std::size_t refreshes() const noexcept { return refreshes_; }

  /// e^T A^-1 e. Throws DimensionMismatch.
  double score(const Vector& e) const;

  /// A += e e^T. A zero vector leaves the state untouched.
  void update(const Vector& e);

  /// Frobenius norm of A * A_inv - I.
  double consistency_error() const;

  /// Recomputes A_inv from A directly.
  void refresh_inverse();

  /// Restores a serialized state; A_inv is recomputed.
  void set_matrix(Matrix a);
  void set_state(Matrix a, Matrix a_inv, std::size_t updates);

  bool operator==(const ArmUncertainty& o) const {
    return a_ == o.a_ && a_inv_ == o.a_inv_ && updates_ == o.updates_;
  }

 private:
  void check_dim(const Vector& e) const;

  Matrix a_;
  Matrix a_inv_;
  int check_interval_ = 1;
  std::size_t updates_ = 0;
  std::size_t refreshes_ = 0;
};

inline double uncertainty_score(const ArmUncertainty& arm, const Vector& e) { return arm.score(e); }
inline void update_uncertainty(ArmUncertainty& arm, const Vector& e) { arm.update(e); }

}  // namespace mixroute
