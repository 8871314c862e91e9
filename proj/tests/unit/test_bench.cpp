#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "mixroute/bench.hpp"
#include "mixroute/synthetic.hpp"

using namespace mixroute;
using namespace testing_helpers;

namespace {

SimConfig no_latency() {
  SimConfig s;
  s.latency = false;
  return s;
}

SyntheticData synthetic(std::size_t n, std::uint64_t seed = 42) {
  SyntheticSpec spec = default_synthetic_spec();
  spec.queries = n;
  spec.seed = seed;
  return make_synthetic(spec);
}

CurvePoint point(std::string label, double q, double c) {
  CurvePoint p;
  p.label = std::move(label);
  p.total_quality = q;
  p.total_cost = c;
  return p;
}

}  // namespace

TEST(Oracle, PicksCheapestAboveThreshold) {
  Catalog c(2);
  c.add_candidate(candidate("a", 0, 0.010));
  c.add_candidate(candidate("b", 0, 0.002));
  c.add_candidate(candidate("c", 0, 0.001));
  Query q = query("q", unit(2, 0), 0);
  q.truth["a"] = GroundTruth{0.95, 1000, std::nullopt};
  q.truth["b"] = GroundTruth{0.92, 1000, std::nullopt};
  q.truth["c"] = GroundTruth{0.60, 1000, std::nullopt};
  const std::vector<Query> qs{q};
  const CurvePoint p = oracle_curve(qs, 0.9, c);
  EXPECT_NEAR(p.total_cost, 0.002, 1e-15);
  EXPECT_NEAR(p.total_quality, 0.92, 1e-15);
}

TEST(Oracle, FallsBackToBestQualityCheapestTie) {
  Catalog c(2);
  c.add_candidate(candidate("a", 0, 0.010));
  c.add_candidate(candidate("b", 0, 0.002));
  c.add_candidate(candidate("c", 0, 0.001));
  Query q = query("q", unit(2, 0), 0);
  q.truth["a"] = GroundTruth{0.8, 1000, std::nullopt};
  q.truth["b"] = GroundTruth{0.8, 1000, std::nullopt};
  q.truth["c"] = GroundTruth{0.3, 1000, std::nullopt};
  const std::vector<Query> qs{q};
  const CurvePoint p = oracle_curve(qs, 0.9, c);
  EXPECT_NEAR(p.total_quality, 0.8, 1e-15);
  EXPECT_NEAR(p.total_cost, 0.002, 1e-15);
}

TEST(RandomBaseline, SingleCandidateEqualsSinglePoint) {
  SyntheticData d = synthetic(100);
  Catalog c = d.catalog;
  for (std::size_t i = 1; i < c.size(); ++i) c.remove_candidate(c.at(i).llm_id);
  const CurvePoint r = random_baseline(d.dataset.queries, c, SimConfig{}, 5);
  const auto singles = single_llm_points(d.dataset.queries, c, SimConfig{});
  ASSERT_EQ(singles.size(), 1u);
  EXPECT_EQ(r.total_quality, singles[0].total_quality);
  EXPECT_EQ(r.total_cost, singles[0].total_cost);
}

TEST(RandomBaseline, NearExpectationAndSeeded) {
  const SyntheticData d = synthetic(1000);
  const auto& qs = d.dataset.queries;
  const auto active = d.catalog.active_indices();
  double mean = 0, var = 0;
  for (const auto& q : qs) {
    double m = 0, m2 = 0;
    for (std::size_t i : active) {
      const double v = q.truth_for(d.catalog.at(i).llm_id).quality;
      m += v;
      m2 += v * v;
    }
    m /= static_cast<double>(active.size());
    m2 /= static_cast<double>(active.size());
    mean += m;
    var += m2 - m * m;
  }
  const CurvePoint r = random_baseline(qs, d.catalog, no_latency(), 11);
  EXPECT_LE(std::abs(r.total_quality - mean), 3 * std::sqrt(var));
  const CurvePoint again = random_baseline(qs, d.catalog, no_latency(), 11);
  const CurvePoint other = random_baseline(qs, d.catalog, no_latency(), 12);
  EXPECT_EQ(r.total_quality, again.total_quality);
  EXPECT_NE(r.total_cost, other.total_cost);
}

TEST(SinglePoints, ConservationWithoutLatency) {
  const SyntheticData d = synthetic(200);
  const auto singles = single_llm_points(d.dataset.queries, d.catalog, no_latency());
  ASSERT_EQ(singles.size(), d.catalog.active_count());
  for (const auto& p : singles) {
    const LLMCandidate& c = d.catalog.at(p.label);
    double q = 0, cost = 0;
    for (const auto& x : d.dataset.queries) {
      q += x.truth_for(c.llm_id).quality;
      cost += truth_cost(x.truth_for(c.llm_id), c, x.prompt_tokens);
    }
    EXPECT_NEAR(p.total_quality, q, 1e-9);
    EXPECT_NEAR(p.total_cost, cost, 1e-12);
  }
}

TEST(SinglePoints, PerfectCandidateScoresN) {
  Catalog c(2);
  c.add_candidate(candidate("perfect", 0.001, 0.001, 0.0, 1e6));
  std::vector<Query> qs;
  for (int i = 0; i < 50; ++i) {
    Query q = query("q" + std::to_string(i), unit(2, 0));
    q.truth["perfect"] = GroundTruth{1.0, 10, std::nullopt};
    qs.push_back(q);
  }
  EXPECT_DOUBLE_EQ(single_llm_points(qs, c, SimConfig{})[0].total_quality, 50.0);
}

TEST(SinglePoints, SaturationCostsQuality) {
  Catalog c(2);
  c.add_candidate(candidate("slow", 0.001, 0.001, 0.0, 10.0));
  std::vector<Query> qs;
  for (int i = 0; i < 300; ++i) {
    Query q = query("q" + std::to_string(i), unit(2, 0));
    q.truth["slow"] = GroundTruth{1.0, 10, std::nullopt};
    qs.push_back(q);
  }
  const CurvePoint busy = single_llm_points(qs, c, SimConfig{})[0];
  EXPECT_LT(busy.total_quality, 300.0);
  EXPECT_GT(busy.timeout_count, 0u);
  EXPECT_DOUBLE_EQ(single_llm_points(qs, c, no_latency())[0].total_quality, 300.0);
}

TEST(Report, FractionsExample) {
  const std::vector<CurvePoint> singles{point("gpt4", 800, 12.0), point("small", 500, 1.0)};
  const std::vector<CurvePoint> pts{point("mixroute", 778, 2.9016)};
  const Report r = report(pts, singles, "gpt4");
  EXPECT_NEAR(r.points[0].quality_vs_reference, 0.9725, 1e-12);
  EXPECT_NEAR(r.points[0].cost_vs_reference, 0.2418, 1e-12);
  ASSERT_TRUE(r.best);
  EXPECT_EQ(*r.best, 0u);
  const Report self = report(singles, singles, "gpt4");
  EXPECT_EQ(self.points[0].quality_vs_reference, 1.0);
  EXPECT_EQ(self.points[0].cost_vs_reference, 1.0);
  EXPECT_EQ(costliest(singles), "gpt4");
}

TEST(Report, Errors) {
  const std::vector<CurvePoint> singles{point("gpt4", 800, 12.0)};
  const std::vector<CurvePoint> none;
  EXPECT_THROW(report(none, singles, "gpt4"), EmptyInput);
  EXPECT_THROW(report(singles, singles, "nope"), UnknownReference);
  EXPECT_THROW(costliest(none), EmptyInput);
}

TEST(LambdaGrid, LogSpaced) {
  const auto g = lambda_grid();
  ASSERT_EQ(g.size(), 25u);
  EXPECT_NEAR(g.front(), 1e-6, 1e-18);
  EXPECT_NEAR(g.back(), 1e6, 1e-6);
  EXPECT_NEAR(g[12], 1.0, 1e-12);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(std::log10(g[i] / g[i - 1]), 0.5, 1e-12);
  EXPECT_THROW(lambda_grid(0), ConfigError);
  EXPECT_THROW(lambda_grid(3, 0.0, 1.0), ConfigError);
}

TEST(Sweep, SmallLambdaIsCheapest) {
  const SyntheticData d = synthetic(500);
  const std::span<const Query> all(d.dataset.queries);
  RouterConfig cfg;
  cfg.beta = 0;
  cfg.alpha = 0;
  const Router r = train_router(d.catalog, all.first(300), cfg, PredictorConfig{});
  const auto grid = lambda_grid();
  const auto pts = sweep_lambda(all.subspan(300), r, grid, no_latency());
  ASSERT_EQ(pts.size(), grid.size());
  for (const auto& p : pts) EXPECT_GE(p.total_cost, pts.front().total_cost);
  EXPECT_GT(pts.back().total_quality, pts.front().total_quality);
  EXPECT_EQ(r.config().lambda, 1.0);
}

TEST(TopK, KOneMatchesSelect) {
  const SyntheticData d = synthetic(300);
  const std::span<const Query> all(d.dataset.queries);
  const Router r = train_router(d.catalog, all.first(200), RouterConfig{}, PredictorConfig{});
  const CurvePoint top1 = topk_policy(all.subspan(200), r, 1, no_latency());
  Router copy = r;
  RouterPolicy policy(copy, {}, no_latency());
  const SimResult direct = run_stream(all.subspan(200), policy, no_latency(), false);
  EXPECT_EQ(top1.total_quality, direct.total_quality);
  EXPECT_EQ(top1.total_cost, direct.total_cost);
  EXPECT_THROW(topk_policy(all.subspan(200), r, 5, no_latency()), KTooLarge);
  EXPECT_THROW(topk_policy(all.subspan(200), r, 0, no_latency()), ConfigError);
}

TEST(CurveCsv, RoundTrip) {
  std::vector<CurvePoint> pts{point("mixroute", 12.5, 0.125), point("mixroute", 1.0 / 3.0, 1e-9)};
  pts[0].lambda = 1e-6;
  pts[1].lambda = 31.622776601683793;
  pts[1].timeout_count = 4;
  pts[1].quality_vs_reference = 0.75;
  std::ostringstream out;
  write_curve_csv(out, pts);
  std::istringstream in(out.str());
  const auto back = read_curve_csv(in);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(back[i].lambda, pts[i].lambda, 1e-11 * pts[i].lambda);
    EXPECT_NEAR(back[i].total_quality, pts[i].total_quality, 1e-11);
    EXPECT_EQ(back[i].timeout_count, pts[i].timeout_count);
  }
  std::ostringstream again;
  write_curve_csv(again, back);
  EXPECT_EQ(again.str(), out.str());
  std::istringstream bad("x,y\n");
  EXPECT_THROW(read_curve_csv(bad), SchemaError);
}

TEST(Continual, RowStructure) {
  const SyntheticData d = synthetic(300);
  const std::span<const Query> all(d.dataset.queries);
  RunConfig cfg;
  cfg.sim.latency = false;
  const std::vector<std::pair<double, double>> ratios{{80, 20}, {50, 50}};
  ContinualOptions opts;
  opts.match_cost = false;
  const auto rows = continual_experiment(all.first(200), all.subspan(200), d.catalog, cfg, ratios, opts);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].offline, 80.0);
  for (const auto& row : rows) {
    EXPECT_EQ(row.none.improvement, 0.0);
    for (const ContinualCell* c : {&row.none, &row.refined, &row.binary}) {
      EXPECT_GE(c->quality_rate, 0.0);
      EXPECT_LE(c->quality_rate, 1.0);
      EXPECT_EQ(c->lambda, cfg.router.lambda);
    }
    EXPECT_NEAR(row.refined.improvement, (row.refined.quality_rate - row.none.quality_rate) / row.none.quality_rate,
                1e-12);
  }
  EXPECT_THROW(continual_experiment(all, {}, d.catalog, cfg, ratios), EmptyInput);
}
