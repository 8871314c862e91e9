#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mixroute/core.hpp"

namespace mixroute {

/// Linear projection from base embeddings into the routing space, plus one
/// learned center per domain (stored as the rows of `centers`).
struct ProjectionModel {
  Matrix weight;   // d_route x d_base
  Matrix centers;  // |D| x d_route

  int d_base() const { return static_cast<int>(weight.cols()); }
  int d_route() const { return static_cast<int>(weight.rows()); }
  int domains() const { return static_cast<int>(centers.rows()); }

  static ProjectionModel identity(int dim, int domains = 0);

  bool operator==(const ProjectionModel& o) const {
    return weight.rows() == o.weight.rows() && weight.cols() == o.weight.cols() &&
           weight == o.weight && centers.rows() == o.centers.rows() &&
           centers.cols() == o.centers.cols() && centers == o.centers;
  }
};

struct EmbedTrainConfig {
  int epochs = 200;
  double learning_rate = 0.05;
  int batch_size = 256;  // only used when the dataset exceeds full_batch_limit rows
  std::uint64_t seed = 42;
  int d_route = 0;       // 0: same as d_base
  std::size_t full_batch_limit = 10000;

  void validate() const;
};

struct LabeledVector {
  Vector base;
  int label = 0;
};

/// v / |v|. Throws ZeroVector for a zero (or non-finite norm) input.
Vector normalize(const Vector& v);

/// weight * base, L2-normalized.
Vector project(const ProjectionModel& model, const Vector& base);

/// Mean negative log-softmax of each embedding's own-domain center score.
double intra_loss(std::span<const Vector> embeddings, std::span<const int> labels,
                  const Matrix& centers);

/// Mean over centers of log-sum-exp of dot products with every other center.
/// Throws TooFewDomains when there are fewer than two centers.
double inter_loss(const Matrix& centers);

double total_loss(std::span<const Vector> embeddings, std::span<const int> labels,
                  const Matrix& centers);

struct LossGradient {
  double intra = 0.0;
  double inter = 0.0;
  double total = 0.0;
  Matrix d_weight;   // same shape as ProjectionModel::weight
  Matrix d_centers;  // same shape as ProjectionModel::centers
};

/// Loss of the model on (bases, labels) and its gradient with respect to the
/// projection weight and every center, backpropagated through the L2
/// normalization of the projected embeddings.
LossGradient loss_gradient(const ProjectionModel& model, std::span<const Vector> bases,
                           std::span<const int> labels);

struct EmbedTrainReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_loss;  // full-dataset loss after each epoch
};

/// Gradient descent on the projection weight and the centers. Centers start
/// at the per-domain mean of the initial projected embeddings and are kept at
/// unit norm after every step. Returns the lowest-loss model seen, so the
/// result never scores worse than the start.
ProjectionModel train_projection(std::span<const LabeledVector> dataset, const EmbedTrainConfig& cfg,
                                 EmbedTrainReport* report = nullptr);

}  // namespace mixroute
