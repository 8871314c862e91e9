#pragma once

#include <random>
#include <string>
#include <vector>

#include "mixroute/core.hpp"

namespace testing_helpers {

inline mixroute::Vector unit(int dim, int axis) {
  mixroute::Vector v = mixroute::Vector::Zero(dim);
  v(axis) = 1.0;
  return v;
}

inline mixroute::Vector gaussian(std::mt19937_64& rng, int dim, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return mixroute::Vector::NullaryExpr(dim, [&] { return n(rng); });
}

inline mixroute::Query query(std::string id, mixroute::Vector emb, std::int64_t prompt = 100) {
  mixroute::Query q;
  q.id = std::move(id);
  q.base_embedding = std::move(emb);
  q.prompt_tokens = prompt;
  return q;
}

inline mixroute::LLMCandidate candidate(std::string id, double pp = 0.001, double rp = 0.002, double init = 0.1,
                                        double tps = 100.0) {
  return {std::move(id), pp, rp, init, tps};
}

}  // namespace testing_helpers
