#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "mixroute/stream_sim.hpp"
#include "mixroute/synthetic.hpp"

using namespace mixroute;
using namespace testing_helpers;

namespace {

Catalog one_arm(double init, double tps) {
  Catalog c(2);
  c.add_candidate(candidate("only", 0.001, 0.002, init, tps));
  return c;
}

std::vector<Query> stream(std::size_t n, const std::vector<std::string>& ids, double quality, std::int64_t tokens) {
  std::vector<Query> qs;
  for (std::size_t i = 0; i < n; ++i) {
    Query q = query("q" + std::to_string(i), unit(2, static_cast<int>(i % 2)));
    for (const auto& id : ids) q.truth[id] = GroundTruth{quality, tokens, std::nullopt};
    qs.push_back(q);
  }
  return qs;
}

}  // namespace

TEST(ServiceTime, Examples) {
  EXPECT_DOUBLE_EQ(service_time(candidate("a", 0, 0, 0.5, 100), 200), 2.5);
  EXPECT_DOUBLE_EQ(service_time(candidate("a", 0, 0, 0.5, 100), 0), 0.5);
}

TEST(QueueState, WaitingTime) {
  QueueState q(1);
  q.dispatch(0, "x", 0.0, 12.0);
  EXPECT_DOUBLE_EQ(waiting_time(q, 0, 10.0), 2.0);
  EXPECT_DOUBLE_EQ(waiting_time(q, 0, 15.0), 0.0);
}

TEST(QueueState, FifoDispatch) {
  QueueState q(2);
  EXPECT_DOUBLE_EQ(q.dispatch(0, "a", 0.0, 3.0), 3.0);
  EXPECT_DOUBLE_EQ(q.dispatch(0, "b", 1.0, 2.0), 5.0);
  EXPECT_DOUBLE_EQ(q.dispatch(0, "c", 9.0, 1.0), 10.0);
  EXPECT_DOUBLE_EQ(q.dispatch(1, "d", 1.0, 1.0), 2.0);
  EXPECT_EQ(q.complete(0).query_id, "a");
  EXPECT_EQ(q.complete(0).query_id, "b");
  EXPECT_EQ(q.complete(0).query_id, "c");
  EXPECT_THROW(q.complete(0), IndexOutOfRange);
}

TEST(RunStream, SingleIdleQuery) {
  const Catalog c = one_arm(0.5, 100);
  FixedPolicy p(c, 0);
  const auto qs = stream(1, {"only"}, 0.8, 200);
  const SimResult r = run_stream(qs, p, SimConfig{});
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_DOUBLE_EQ(r.records[0].wait, 2.5);
  EXPECT_FALSE(r.records[0].timed_out);
  EXPECT_DOUBLE_EQ(r.total_quality, 0.8);
  EXPECT_NEAR(r.total_cost, (100 * 0.001 + 200 * 0.002) / 1000, 1e-15);
}

TEST(RunStream, OverloadedArmBacklogAndTimeouts) {
  const Catalog c = one_arm(1.0, 1e9);
  FixedPolicy p(c, 0);
  const auto qs = stream(300, {"only"}, 1.0, 0);
  const SimResult r = run_stream(qs, p, SimConfig{});
  std::size_t expected_timeouts = 0;
  double prev = 0;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    // arrivals every 0.1 s; job i finishes at (i + 1) seconds
    const double wait = static_cast<double>(i + 1) - 0.1 * static_cast<double>(i);
    EXPECT_NEAR(r.records[i].wait, wait, 1e-9);
    EXPECT_GE(r.records[i].wait, prev);
    prev = r.records[i].wait;
    const bool to = wait > 30.0;
    EXPECT_EQ(r.records[i].timed_out, to);
    if (to) {
      ++expected_timeouts;
      EXPECT_EQ(r.records[i].quality, 0.0);
    }
  }
  EXPECT_EQ(r.timeout_count, expected_timeouts);
  EXPECT_EQ(expected_timeouts, 267u);
}

TEST(RunStream, FreeTimeoutsDropCost) {
  const Catalog c = one_arm(1.0, 1e9);
  FixedPolicy p(c, 0);
  const auto qs = stream(300, {"only"}, 1.0, 0);
  SimConfig cfg;
  const SimResult paid = run_stream(qs, p, cfg);
  cfg.free_timeouts = true;
  const SimResult free = run_stream(qs, p, cfg);
  EXPECT_NEAR(free.total_cost, paid.total_cost * 33.0 / 300.0, 1e-12);
}

TEST(RunStream, LatencyOffHasNoTimeouts) {
  const Catalog c = one_arm(1.0, 1e9);
  FixedPolicy p(c, 0);
  SimConfig cfg;
  cfg.latency = false;
  const SimResult r = run_stream(stream(300, {"only"}, 1.0, 0), p, cfg);
  EXPECT_EQ(r.timeout_count, 0u);
  EXPECT_DOUBLE_EQ(r.total_quality, 300.0);
}

TEST(RunStream, ConservationAndNoLostQueries) {
  SyntheticSpec spec = default_synthetic_spec();
  spec.queries = 400;
  const SyntheticData data = make_synthetic(spec);
  RandomPolicy p(data.catalog, 9);
  const SimResult r = run_stream(data.dataset.queries, p, SimConfig{});
  ASSERT_EQ(r.records.size(), 400u);
  double q = 0, cost = 0;
  std::size_t to = 0;
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    EXPECT_EQ(r.records[i].query_id, data.dataset.queries[i].id);
    ASSERT_EQ(r.records[i].chosen.size(), 1u);
    q += r.records[i].quality;
    cost += r.records[i].cost;
    to += r.records[i].timed_out;
    ++seen[r.records[i].query_id];
  }
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_NEAR(r.total_quality, q, 1e-9);
  EXPECT_NEAR(r.total_cost, cost, 1e-12);
  EXPECT_EQ(r.timeout_count, to);
  // every arrival has one completion
  std::size_t arrivals = 0, completions = 0;
  for (const auto& ev : r.events) {
    arrivals += ev.kind == StreamEvent::Kind::Arrival;
    completions += ev.kind == StreamEvent::Kind::Completion;
  }
  EXPECT_EQ(arrivals, 400u);
  EXPECT_EQ(completions, 400u);
}

TEST(RunStream, EventsOrderedAndFifoPerArm) {
  SyntheticSpec spec = default_synthetic_spec();
  spec.queries = 300;
  const SyntheticData data = make_synthetic(spec);
  RandomPolicy p(data.catalog, 3);
  const SimResult r = run_stream(data.dataset.queries, p, SimConfig{});
  std::map<std::string, std::vector<std::string>> arrived, completed;
  std::map<std::string, std::string> arm_of;
  for (const auto& rec : r.records) arm_of[rec.query_id] = rec.chosen.front();
  for (std::size_t i = 0; i < r.events.size(); ++i) {
    if (i) EXPECT_LE(r.events[i - 1].time, r.events[i].time);
    const auto& ev = r.events[i];
    if (ev.kind == StreamEvent::Kind::Arrival) arrived[arm_of[ev.query_id]].push_back(ev.query_id);
    if (ev.kind == StreamEvent::Kind::Completion) completed[ev.llm_id].push_back(ev.query_id);
  }
  EXPECT_EQ(arrived, completed);
}

TEST(RunStream, DeterministicUnderSeed) {
  SyntheticSpec spec = default_synthetic_spec();
  spec.queries = 200;
  const SyntheticData data = make_synthetic(spec);
  SimConfig cfg;
  cfg.jitter = true;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    cfg.seed = seed;
    RandomPolicy p1(data.catalog, seed);
    RandomPolicy p2(data.catalog, seed);
    const SimResult a = run_stream(data.dataset.queries, p1, cfg);
    const SimResult b = run_stream(data.dataset.queries, p2, cfg);
    EXPECT_EQ(a.total_quality, b.total_quality);
    EXPECT_EQ(a.total_cost, b.total_cost);
    for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].wait, b.records[i].wait);
  }
}

TEST(RunStream, JitterStaysInsideSlot) {
  const Catalog c = one_arm(0.01, 1e6);
  FixedPolicy p(c, 0);
  SimConfig cfg;
  cfg.jitter = true;
  const SimResult r = run_stream(stream(100, {"only"}, 1.0, 1), p, cfg);
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    EXPECT_GE(r.records[i].arrival, 0.1 * static_cast<double>(i));
    EXPECT_LT(r.records[i].arrival, 0.1 * static_cast<double>(i + 1));
  }
}

TEST(RunStream, MissingTruthThrows) {
  Catalog c = one_arm(0.5, 100);
  c.add_candidate(candidate("other"));
  FixedPolicy p(c, 0);
  EXPECT_THROW(run_stream(stream(3, {"only"}, 1.0, 1), p, SimConfig{}), MissingGroundTruth);
}

TEST(RunStream, StaleSnapshotUntilTick) {
  Catalog c(2);
  c.add_candidate(candidate("a", 0.001, 0.002, 0.0, 1.0));
  c.add_candidate(candidate("b", 0.001, 0.002, 0.0, 1.0));
  Router router(c, RouterConfig{}, PredictorConfig{});
  router.set_cost_scale(1.0);
  RouterPolicy p(router, {}, SimConfig{});
  const auto qs = stream(150, {"a", "b"}, 0.5, 5);
  const SimResult r = run_stream(qs, p, SimConfig{});
  // before the 10 s tick every wait looks zero, so ties all go to "a"
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(r.records[i].chosen.front(), "a");
  EXPECT_EQ(r.records[100].chosen.front(), "b");
  EXPECT_GT(r.decisions[100].breakdown[0].wait, 0.0);
  EXPECT_EQ(r.decisions[99].breakdown[0].wait, 0.0);
}

TEST(BinaryReward, Examples) {
  const SimConfig cfg;
  EXPECT_TRUE(binary_reward(0.8, 10, cfg));
  EXPECT_FALSE(binary_reward(0.8, 20, cfg));
  EXPECT_FALSE(binary_reward(0.69, 1, cfg));
  EXPECT_FALSE(binary_reward(0.7, 1, cfg));
}

TEST(SimConfig, Validation) {
  SimConfig cfg;
  cfg.tick = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.arrival_rate = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(RouterPolicy, RefinedFeedbackUpdatesChosenArmOnly) {
  SyntheticSpec spec = default_synthetic_spec();
  spec.queries = 100;
  const SyntheticData data = make_synthetic(spec);
  Router router(data.catalog, RouterConfig{}, PredictorConfig{});
  router.set_cost_scale(1.0);
  const Router before = router;
  RouterPolicy p(router, {FeedbackMode::Refined, false, 1}, SimConfig{});
  const SimResult r = run_stream(data.dataset.queries, p, SimConfig{});
  std::map<std::string, std::size_t> counts;
  for (const auto& rec : r.records) ++counts[rec.chosen.front()];
  for (std::size_t i = 0; i < router.catalog().size(); ++i) {
    const std::string& id = router.catalog().at(i).llm_id;
    EXPECT_EQ(router.arm(i).uncertainty.updates(), counts[id]);
    if (counts[id] == 0) EXPECT_EQ(router.arm(i), before.arm(i));
  }
}

TEST(ApplyFeedbackLoop, RefinedScopes) {
  SyntheticSpec spec = default_synthetic_spec();
  spec.queries = 50;
  const SyntheticData data = make_synthetic(spec);
  Router router(data.catalog, RouterConfig{}, PredictorConfig{});
  router.set_cost_scale(1.0);
  RouterPolicy p(router, {}, SimConfig{});
  const SimResult r = run_stream(data.dataset.queries, p, SimConfig{});

  Router chosen = router;
  apply_feedback_loop(chosen, data.dataset.queries, r, FeedbackMode::Refined, FeedbackScope::ChosenArm, SimConfig{});
  std::size_t total = 0;
  for (std::size_t i = 0; i < chosen.catalog().size(); ++i) total += chosen.arm(i).uncertainty.updates();
  EXPECT_EQ(total, 50u);

  Router all = router;
  apply_feedback_loop(all, data.dataset.queries, r, FeedbackMode::Refined, FeedbackScope::AllArms, SimConfig{});
  for (std::size_t i = 0; i < all.catalog().size(); ++i) EXPECT_EQ(all.arm(i).uncertainty.updates(), 50u);

  Router none = router;
  apply_feedback_loop(none, data.dataset.queries, r, FeedbackMode::None, FeedbackScope::AllArms, SimConfig{});
  for (std::size_t i = 0; i < none.catalog().size(); ++i) EXPECT_EQ(none.arm(i), router.arm(i));

  Router binary = router;
  apply_feedback_loop(binary, data.dataset.queries, r, FeedbackMode::Binary, FeedbackScope::ChosenArm, SimConfig{});
  for (std::size_t i = 0; i < binary.catalog().size(); ++i) EXPECT_EQ(binary.arm(i), router.arm(i));

  EXPECT_THROW(apply_feedback_loop(binary, std::span<const Query>(data.dataset.queries).first(10), r,
                                   FeedbackMode::Refined, FeedbackScope::ChosenArm, SimConfig{}),
               DimensionMismatch);
}
