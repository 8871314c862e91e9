#include "mixroute/embed_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace mixroute {

namespace {

double log_sum_exp(const Vector& z) {
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

Vector softmax(const Vector& z) {
  Vector p = (z.array() - z.maxCoeff()).exp();
  return p / p.sum();
}

void check_batch(std::size_t embeddings, std::size_t labels) {
  if (embeddings == 0) throw EmptyBatch("loss evaluated on an empty batch");
  if (embeddings != labels) {
    throw DimensionMismatch("got " + std::to_string(embeddings) + " embeddings but " +
                            std::to_string(labels) + " labels");
  }
}

void check_label(int label, Eigen::Index domains) {
  if (label < 0 || label >= domains) {
    throw IndexOutOfRange("domain label " + std::to_string(label) + " outside [0, " +
                          std::to_string(domains) + ")");
  }
}

}  // namespace

ProjectionModel ProjectionModel::identity(int dim, int domains) {
  return {Matrix::Identity(dim, dim), Matrix::Zero(domains, dim)};
}

void EmbedTrainConfig::validate() const {
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (d_route < 0) throw ConfigError("d_route must be >= 0");
}

Vector normalize(const Vector& v) {
  const double n = v.norm();
  if (!(n > 0) || !std::isfinite(n)) throw ZeroVector("cannot normalize a zero vector");
  return v / n;
}

Vector project(const ProjectionModel& model, const Vector& base) {
  if (base.size() != model.weight.cols()) {
    throw DimensionMismatch("projection expects " + std::to_string(model.weight.cols()) +
                            " inputs, got " + std::to_string(base.size()));
  }
  return normalize(model.weight * base);
}

double intra_loss(std::span<const Vector> embeddings, std::span<const int> labels,
                  const Matrix& centers) {
  check_batch(embeddings.size(), labels.size());
  if (centers.rows() < 1) throw TooFewDomains("intra loss needs at least one domain center");
  double sum = 0.0;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].size() != centers.cols()) {
      throw DimensionMismatch("embedding and center dimensions differ");
    }
    check_label(labels[i], centers.rows());
    const Vector z = centers * embeddings[i];
    sum += log_sum_exp(z) - z(labels[i]);
  }
  return sum / static_cast<double>(embeddings.size());
}

double inter_loss(const Matrix& centers) {
  const Eigen::Index d = centers.rows();
  if (d < 2) throw TooFewDomains("inter-domain loss needs at least two centers");
  const Matrix gram = centers * centers.transpose();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    Vector others(d - 1);
    for (Eigen::Index k = 0, o = 0; k < d; ++k) {
      if (k != j) others(o++) = gram(j, k);
    }
    sum += log_sum_exp(others);
  }
  return sum / static_cast<double>(d);
}

double total_loss(std::span<const Vector> embeddings, std::span<const int> labels,
                  const Matrix& centers) {
  return intra_loss(embeddings, labels, centers) + inter_loss(centers);
}

LossGradient loss_gradient(const ProjectionModel& model, std::span<const Vector> bases,
                           std::span<const int> labels) {
  check_batch(bases.size(), labels.size());
  const Matrix& w = model.weight;
  const Matrix& c = model.centers;
  const Eigen::Index domains = c.rows();
  if (domains < 2) throw TooFewDomains("loss gradient needs at least two domain centers");
  if (c.cols() != w.rows()) throw DimensionMismatch("center dimension must equal d_route");

  LossGradient g;
  g.d_weight = Matrix::Zero(w.rows(), w.cols());
  g.d_centers = Matrix::Zero(c.rows(), c.cols());
  const double inv_n = 1.0 / static_cast<double>(bases.size());

  for (std::size_t i = 0; i < bases.size(); ++i) {
    if (bases[i].size() != w.cols()) throw DimensionMismatch("base embedding dimension mismatch");
    check_label(labels[i], domains);
    const Vector u = w * bases[i];
    const double norm = u.norm();
    if (!(norm > 0)) throw ZeroVector("projected embedding is zero");
    const Vector e = u / norm;

    const Vector z = c * e;
    g.intra += (log_sum_exp(z) - z(labels[i])) * inv_n;

    Vector dz = softmax(z);
    dz(labels[i]) -= 1.0;
    dz *= inv_n;
    g.d_centers.noalias() += dz * e.transpose();

    // Back through e = u / |u|: de/du = (I - e e^T) / |u|.
    const Vector de = c.transpose() * dz;
    const Vector du = (de - e * e.dot(de)) / norm;
    g.d_weight.noalias() += du * bases[i].transpose();
  }

  const Matrix gram = c * c.transpose();
  const double inv_d = 1.0 / static_cast<double>(domains);
  for (Eigen::Index j = 0; j < domains; ++j) {
    Vector others(domains - 1);
    for (Eigen::Index k = 0, o = 0; k < domains; ++k) {
      if (k != j) others(o++) = gram(j, k);
    }
    g.inter += log_sum_exp(others) * inv_d;
    const Vector q = softmax(others);
    for (Eigen::Index k = 0, o = 0; k < domains; ++k) {
      if (k == j) continue;
      const double weight = q(o++) * inv_d;
      g.d_centers.row(j) += weight * c.row(k);
      g.d_centers.row(k) += weight * c.row(j);
    }
  }
  g.total = g.intra + g.inter;
  return g;
}

namespace {

double dataset_loss(const ProjectionModel& model, std::span<const Vector> bases,
                    std::span<const int> labels) {
  std::vector<Vector> projected;
  projected.reserve(bases.size());
  for (const auto& b : bases) projected.push_back(project(model, b));
  return total_loss(projected, labels, model.centers);
}

}  // namespace

namespace {

// Centers live on the unit sphere; unconstrained they grow without bound.
void unit_rows(Matrix& m) {
  for (Eigen::Index j = 0; j < m.rows(); ++j) {
    const double n = m.row(j).norm();
    if (n > 0) m.row(j) /= n;
  }
}

}  // namespace

ProjectionModel train_projection(std::span<const LabeledVector> dataset, const EmbedTrainConfig& cfg,
                                 EmbedTrainReport* report) {
  cfg.validate();
  if (dataset.empty()) throw EmptyBatch("train_projection needs a non-empty dataset");

  const int d_base = static_cast<int>(dataset.front().base.size());
  const int d_route = cfg.d_route ? cfg.d_route : d_base;
  std::vector<Vector> bases;
  std::vector<int> labels;
  bases.reserve(dataset.size());
  labels.reserve(dataset.size());
  int max_label = -1;
  std::vector<int> seen;
  for (const auto& row : dataset) {
    if (row.base.size() != d_base) throw DimensionMismatch("inconsistent base embedding dimension");
    if (row.label < 0) throw IndexOutOfRange("negative domain label");
    bases.push_back(row.base);
    labels.push_back(row.label);
    max_label = std::max(max_label, row.label);
    if (std::find(seen.begin(), seen.end(), row.label) == seen.end()) seen.push_back(row.label);
  }
  if (seen.size() < 2) throw TooFewDomains("training needs at least two distinct domain labels");
  const int domains = max_label + 1;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ProjectionModel model;
  if (d_route == d_base) {
    model.weight = Matrix::Identity(d_route, d_base);
    model.weight += Matrix::NullaryExpr(d_route, d_base, [&] { return 0.01 * normal(rng); });
  } else {
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_base));
    model.weight = Matrix::NullaryExpr(d_route, d_base, [&] { return scale * normal(rng); });
  }

  model.centers = Matrix::Zero(domains, d_route);
  Vector counts = Vector::Zero(domains);
  for (std::size_t i = 0; i < bases.size(); ++i) {
    model.centers.row(labels[i]) += project(model, bases[i]).transpose();
    counts(labels[i]) += 1.0;
  }
  for (int j = 0; j < domains; ++j) {
    if (counts(j) > 0) model.centers.row(j) /= counts(j);
  }
  unit_rows(model.centers);

  const double initial = dataset_loss(model, bases, labels);
  ProjectionModel best = model;
  double best_loss = initial;
  EmbedTrainReport local;
  local.initial_loss = initial;

  std::vector<std::size_t> order(bases.size());
  std::iota(order.begin(), order.end(), 0);
  const bool full_batch = bases.size() <= cfg.full_batch_limit;
  const std::size_t batch = full_batch ? bases.size() : static_cast<std::size_t>(cfg.batch_size);

  std::vector<Vector> batch_bases;
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (!full_batch) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      batch_bases.clear();
      batch_labels.clear();
      for (std::size_t k = start; k < end; ++k) {
        batch_bases.push_back(bases[order[k]]);
        batch_labels.push_back(labels[order[k]]);
      }
      const LossGradient g = loss_gradient(model, batch_bases, batch_labels);
      model.weight -= cfg.learning_rate * g.d_weight;
      model.centers -= cfg.learning_rate * g.d_centers;
      unit_rows(model.centers);
    }
    const double loss = dataset_loss(model, bases, labels);
    local.epoch_loss.push_back(loss);
    if (loss <= best_loss) {
      best_loss = loss;
      best = model;
    }
  }
  local.final_loss = best_loss;
  if (report) *report = std::move(local);
  return best;
}

}  // namespace mixroute
