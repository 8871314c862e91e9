#include "mixroute/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace mixroute {

CurvePoint to_point(const SimResult& r, std::string label, double lambda) {
  CurvePoint p;
  p.label = std::move(label);
  p.lambda = lambda;
  p.total_quality = r.total_quality;
  p.total_cost = r.total_cost;
  p.timeout_count = r.timeout_count;
  return p;
}

std::vector<double> lambda_grid(std::size_t n, double lo, double hi) {
  if (n == 0 || !(lo > 0) || !(hi >= lo)) throw ConfigError("invalid lambda grid");
  if (n == 1) return {lo};
  std::vector<double> out;
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1)));
  }
  return out;
}

Router train_router(const Catalog& catalog, std::span<const Query> train, const RouterConfig& cfg,
                    const PredictorConfig& predictor, const std::optional<ProjectionModel>& projection) {
  Router router(catalog, cfg, predictor, projection);
  router.offline_fit(train);
  return router;
}

std::vector<CurvePoint> sweep_lambda(std::span<const Query> test, const Router& trained,
                                     std::span<const double> lambdas, const SimConfig& sim) {
  std::vector<CurvePoint> out;
  for (double lambda : lambdas) {
    Router router = trained;
    router.config().lambda = lambda;
    router.config().validate();
    RouterPolicy policy(router, {}, sim);
    out.push_back(to_point(run_stream(test, policy, sim, false), "mixroute", lambda));
  }
  return out;
}

CurvePoint oracle_curve(std::span<const Query> test, double threshold, const Catalog& catalog) {
  const auto active = catalog.active_indices();
  if (active.empty()) throw NoActiveCandidates("oracle needs an active candidate");
  CurvePoint p;
  p.label = "oracle";
  for (const auto& q : test) {
    std::optional<std::size_t> best_ok;
    std::size_t best_any = active.front();
    double best_ok_cost = 0.0;
    double best_any_quality = -1.0;
    double best_any_cost = 0.0;
    for (std::size_t i : active) {
      const LLMCandidate& c = catalog.at(i);
      const GroundTruth& t = q.truth_for(c.llm_id);
      const double cost = truth_cost(t, c, q.prompt_tokens);
      if (t.quality >= threshold && (!best_ok || cost < best_ok_cost)) {
        best_ok = i;
        best_ok_cost = cost;
      }
      if (t.quality > best_any_quality || (t.quality == best_any_quality && cost < best_any_cost)) {
        best_any = i;
        best_any_quality = t.quality;
        best_any_cost = cost;
      }
    }
    const std::size_t pick = best_ok.value_or(best_any);
    const LLMCandidate& c = catalog.at(pick);
    const GroundTruth& t = q.truth_for(c.llm_id);
    p.total_quality += t.quality;
    p.total_cost += truth_cost(t, c, q.prompt_tokens);
  }
  return p;
}

CurvePoint random_baseline(std::span<const Query> test, const Catalog& catalog, const SimConfig& sim,
                           std::uint64_t seed) {
  RandomPolicy policy(catalog, seed);
  return to_point(run_stream(test, policy, sim, false), "random");
}

std::vector<CurvePoint> single_llm_points(std::span<const Query> test, const Catalog& catalog, const SimConfig& sim) {
  std::vector<CurvePoint> out;
  for (std::size_t i : catalog.active_indices()) {
    FixedPolicy policy(catalog, i);
    out.push_back(to_point(run_stream(test, policy, sim, false), catalog.at(i).llm_id));
  }
  return out;
}

CurvePoint topk_policy(std::span<const Query> test, const Router& trained, std::size_t k, const SimConfig& sim) {
  if (k == 0) throw ConfigError("k must be >= 1");
  if (k > trained.catalog().active_count()) {
    throw KTooLarge("k = " + std::to_string(k) + " exceeds the active candidate count");
  }
  Router router = trained;
  RouterPolicy policy(router, {FeedbackMode::None, false, k}, sim);
  return to_point(run_stream(test, policy, sim, false), "top" + std::to_string(k), router.config().lambda);
}

namespace {

ContinualCell run_cell(const Router& offline, std::span<const Query> online, std::span<const Query> test,
                       FeedbackMode mode, double lambda, const SimConfig& sim) {
  Router router = offline;
  router.config().lambda = lambda;
  const bool online_scoring = mode == FeedbackMode::Binary;
  if (mode != FeedbackMode::None && !online.empty()) {
    RouterPolicy learner(router, {mode, online_scoring, 1}, sim);
    run_stream(online, learner, sim, false);
  }
  RouterPolicy evaluator(router, {FeedbackMode::None, online_scoring, 1}, sim);
  const SimResult r = run_stream(test, evaluator, sim, false);
  return {lambda, r.total_quality / static_cast<double>(test.size()), r.total_cost, 0.0};
}

ContinualCell matched_cell(const Router& offline, std::span<const Query> online, std::span<const Query> test,
                           FeedbackMode mode, double base_lambda, double target_cost, const SimConfig& sim,
                           const ContinualOptions& options) {
  auto gap = [&](const ContinualCell& c) {
    return target_cost > 0 ? std::abs(c.total_cost - target_cost) / target_cost : std::abs(c.total_cost);
  };
  ContinualCell best = run_cell(offline, online, test, mode, base_lambda, sim);
  if (!options.match_cost || gap(best) <= options.cost_tolerance) return best;

  // Cost grows with lambda; bisect log10(lambda) towards the target.
  double lo = -6.0;
  double hi = 6.0;
  if (best.total_cost > target_cost) hi = std::log10(base_lambda);
  else lo = std::log10(base_lambda);
  for (int step = 0; step < options.tuning_steps; ++step) {
    const double mid = 0.5 * (lo + hi);
    const ContinualCell cell = run_cell(offline, online, test, mode, std::pow(10.0, mid), sim);
    if (gap(cell) < gap(best)) best = cell;
    if (gap(best) <= options.cost_tolerance) break;
    if (cell.total_cost > target_cost) hi = mid;
    else lo = mid;
  }
  return best;
}

}  // namespace

std::vector<ContinualRow> continual_experiment(std::span<const Query> train, std::span<const Query> test,
                                               const Catalog& catalog, const RunConfig& cfg,
                                               std::span<const std::pair<double, double>> ratios,
                                               const ContinualOptions& options) {
  if (test.empty()) throw EmptyInput("continual experiment needs test queries");
  std::vector<ContinualRow> rows;
  for (const auto& [off, on] : ratios) {
    if (!(off > 0) || !(on >= 0)) throw ConfigError("offline:online ratio parts must be positive");
    const auto n_off = static_cast<std::size_t>(std::llround(static_cast<double>(train.size()) * off / (off + on)));
    const auto offline = train.subspan(0, n_off);
    const auto online = train.subspan(n_off);
    const Router base = train_router(catalog, offline, cfg.router, cfg.predictor);

    ContinualRow row;
    row.offline = off;
    row.online = on;
    row.none = run_cell(base, online, test, FeedbackMode::None, cfg.router.lambda, cfg.sim);
    row.refined = matched_cell(base, online, test, FeedbackMode::Refined, cfg.router.lambda, row.none.total_cost,
                               cfg.sim, options);
    row.binary = matched_cell(base, online, test, FeedbackMode::Binary, cfg.router.lambda, row.none.total_cost,
                              cfg.sim, options);
    auto improvement = [&](const ContinualCell& c) {
      return row.none.quality_rate > 0 ? (c.quality_rate - row.none.quality_rate) / row.none.quality_rate : 0.0;
    };
    row.refined.improvement = improvement(row.refined);
    row.binary.improvement = improvement(row.binary);
    rows.push_back(row);
  }
  return rows;
}

std::string costliest(std::span<const CurvePoint> singles) {
  if (singles.empty()) throw EmptyInput("no single-LLM points");
  return std::max_element(singles.begin(), singles.end(), [](const auto& a, const auto& b) {
           return a.total_cost < b.total_cost;
         })->label;
}

Report report(std::span<const CurvePoint> points, std::span<const CurvePoint> singles, const std::string& reference) {
  if (points.empty()) throw EmptyInput("report needs at least one point");
  auto ref = std::find_if(singles.begin(), singles.end(), [&](const auto& p) { return p.label == reference; });
  if (ref == singles.end()) throw UnknownReference("no single-LLM point for reference '" + reference + "'");

  Report out;
  out.reference = reference;
  out.reference_point = *ref;
  out.reference_point.quality_vs_reference = 1.0;
  out.reference_point.cost_vs_reference = 1.0;
  for (CurvePoint p : points) {
    p.quality_vs_reference = ref->total_quality > 0 ? p.total_quality / ref->total_quality : 0.0;
    p.cost_vs_reference = ref->total_cost > 0 ? p.total_cost / ref->total_cost : 0.0;
    out.points.push_back(std::move(p));
  }
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (out.points[i].cost_vs_reference >= 1.0) continue;
    if (!out.best || out.points[i].quality_vs_reference > out.points[*out.best].quality_vs_reference) out.best = i;
  }
  return out;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> points) {
  out << "lambda,total_quality,total_cost,timeouts,quality_frac,cost_frac\n";
  for (const auto& p : points) {
    out << fmt_double(p.lambda) << ',' << fmt_double(p.total_quality) << ',' << fmt_double(p.total_cost) << ','
        << p.timeout_count << ',' << fmt_double(p.quality_vs_reference) << ',' << fmt_double(p.cost_vs_reference)
        << '\n';
  }
}

std::vector<CurvePoint> read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "lambda,total_quality,total_cost,timeouts,quality_frac,cost_frac") {
    throw SchemaError(1, "unexpected curve CSV header");
  }
  std::vector<CurvePoint> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ss(line);
    CurvePoint p;
    char c1, c2, c3, c4, c5;
    if (!(ss >> p.lambda >> c1 >> p.total_quality >> c2 >> p.total_cost >> c3 >> p.timeout_count >> c4 >>
          p.quality_vs_reference >> c5 >> p.cost_vs_reference)) {
      throw ParseError(row, "malformed curve CSV row");
    }
    p.label = "mixroute";
    out.push_back(p);
  }
  return out;
}

}  // namespace mixroute
