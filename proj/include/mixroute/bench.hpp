#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixroute/core.hpp"
#include "mixroute/data_io.hpp"
#include "mixroute/router.hpp"
#include "mixroute/stream_sim.hpp"

namespace mixroute {

/// One quality/cost point of a routing method on a test stream.
struct CurvePoint {
  std::string label;
  double lambda = 0.0;
  double total_quality = 0.0;
  double total_cost = 0.0;
  std::size_t timeout_count = 0;
  double quality_vs_reference = 0.0;
  double cost_vs_reference = 0.0;
};

CurvePoint to_point(const SimResult& r, std::string label, double lambda = 0.0);

/// n log-spaced values from lo to hi inclusive.
std::vector<double> lambda_grid(std::size_t n = 25, double lo = 1e-6, double hi = 1e6);

/// Builds a router over `catalog` and fits it offline on `train`.
Router train_router(const Catalog& catalog, std::span<const Query> train, const RouterConfig& cfg,
                    const PredictorConfig& predictor, const std::optional<ProjectionModel>& projection = std::nullopt);

/// One full stream per lambda, each starting from a copy of `trained`, no
/// online updates.
std::vector<CurvePoint> sweep_lambda(std::span<const Query> test, const Router& trained,
                                     std::span<const double> lambdas, const SimConfig& sim);

/// Per query, the cheapest candidate whose quality reaches `threshold`; when
/// none does, the highest-quality one (cheapest among equals). No latency.
CurvePoint oracle_curve(std::span<const Query> test, double threshold, const Catalog& catalog);

/// Uniform random routing through the simulator.
CurvePoint random_baseline(std::span<const Query> test, const Catalog& catalog, const SimConfig& sim,
                           std::uint64_t seed);

/// One point per active candidate, everything routed to it.
std::vector<CurvePoint> single_llm_points(std::span<const Query> test, const Catalog& catalog, const SimConfig& sim);

/// Routes each query to the k best-scoring candidates; quality is the best
/// answer received in time, cost the sum. Throws KTooLarge.
CurvePoint topk_policy(std::span<const Query> test, const Router& trained, std::size_t k, const SimConfig& sim);

struct ContinualCell {
  double lambda = 0.0;
  double quality_rate = 0.0;  // total quality / test size
  double total_cost = 0.0;
  double improvement = 0.0;   // relative to the no-online cell
};

struct ContinualRow {
  double offline = 0.0;
  double online = 0.0;
  ContinualCell none;
  ContinualCell refined;
  ContinualCell binary;
};

struct ContinualOptions {
  bool match_cost = true;        // retune lambda of the online cells to the no-online cost
  double cost_tolerance = 0.02;  // relative
  int tuning_steps = 20;
};

/// For each offline:online ratio: fit offline on the leading share of
/// `train`, optionally learn online over the rest (refined feedback through
/// select, or binary feedback through select_online), then evaluate on
/// `test` without further updates.
std::vector<ContinualRow> continual_experiment(std::span<const Query> train, std::span<const Query> test,
                                               const Catalog& catalog, const RunConfig& cfg,
                                               std::span<const std::pair<double, double>> ratios,
                                               const ContinualOptions& options = {});

struct Report {
  std::string reference;
  CurvePoint reference_point;
  std::vector<CurvePoint> points;  // with fractions filled in
  std::optional<std::size_t> best; // max quality fraction with cost fraction < 1
};

/// Label of the single-LLM point with the highest total cost.
std::string costliest(std::span<const CurvePoint> singles);

/// Fractions of every point against the single-LLM point labelled
/// `reference`. Throws EmptyInput or UnknownReference.
Report report(std::span<const CurvePoint> points, std::span<const CurvePoint> singles, const std::string& reference);

/// `lambda,total_quality,total_cost,timeouts,quality_frac,cost_frac`.
void write_curve_csv(std::ostream& out, std::span<const CurvePoint> points);
std::vector<CurvePoint> read_curve_csv(std::istream& in);

}  // namespace mixroute
