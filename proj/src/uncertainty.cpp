#include "mixroute/uncertainty.hpp"

#include <string>

namespace mixroute {

ArmUncertainty::ArmUncertainty(int dim, int check_interval)
    : a_(Matrix::Identity(dim, dim)), a_inv_(Matrix::Identity(dim, dim)),
      check_interval_(check_interval > 0 ? check_interval : 1) {
  if (dim <= 0) throw ConfigError("uncertainty dimension must be positive");
}

void ArmUncertainty::check_dim(const Vector& e) const {
  if (e.size() != a_.rows()) {
    throw DimensionMismatch("uncertainty matrix is " + std::to_string(a_.rows()) +
                            "-dimensional, vector has " + std::to_string(e.size()));
  }
}

double ArmUncertainty::score(const Vector& e) const {
  check_dim(e);
  return e.dot(a_inv_ * e);
}

void ArmUncertainty::update(const Vector& e) {
  check_dim(e);
  if (e.isZero(0.0)) return;
  a_.noalias() += e * e.transpose();
  const Vector u = a_inv_ * e;
  a_inv_.noalias() -= (u * u.transpose()) / (1.0 + e.dot(u));
  ++updates_;
  if (updates_ % static_cast<std::size_t>(check_interval_) == 0 &&
      consistency_error() >= kConsistencyTolerance) {
    refresh_inverse();
  }
}

double ArmUncertainty::consistency_error() const {
  return (a_ * a_inv_ - Matrix::Identity(a_.rows(), a_.cols())).norm();
}

void ArmUncertainty::refresh_inverse() {
  a_inv_ = a_.llt().solve(Matrix::Identity(a_.rows(), a_.cols()));
  ++refreshes_;
}

void ArmUncertainty::set_matrix(Matrix a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw DimensionMismatch("A must be square");
  a_ = std::move(a);
  refresh_inverse();
}

void ArmUncertainty::set_state(Matrix a, Matrix a_inv, std::size_t updates) {
  if (a.rows() != a.cols() || a.rows() != a_inv.rows() || a_inv.rows() != a_inv.cols()) {
    throw DimensionMismatch("A and A_inv must be square and of equal size");
  }
  a_ = std::move(a);
  a_inv_ = std::move(a_inv);
  updates_ = updates;
}

}  // namespace mixroute
