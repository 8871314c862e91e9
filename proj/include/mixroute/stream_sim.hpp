#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "mixroute/core.hpp"
#include "mixroute/router.hpp"

namespace mixroute {

struct SimConfig {
  double arrival_rate = 100.0;  // queries per window
  double window = 10.0;         // seconds
  double tau = 30.0;            // timeout threshold on user-perceived wait, seconds
  double tick = 10.0;           // wait snapshot / update period, seconds
  std::uint64_t seed = 42;
  bool jitter = false;          // random offset of each arrival inside its slot
  bool free_timeouts = false;   // timed-out queries cost nothing
  bool latency = true;          // false: no queueing, no timeouts
  double satisfied_quality = 0.7;  // binary feedback: quality must exceed this
  double satisfied_wait = 15.0;    // ... and the wait must stay below this

  void validate() const;
};

/// init_latency + response_tokens / tokens_per_second.
double service_time(const LLMCandidate& c, double response_tokens);

/// Single-server FIFO queue per candidate.
class QueueState {
 public:
  struct Job {
    std::string query_id;
    double service = 0.0;
    double finish = 0.0;
  };

  explicit QueueState(std::size_t candidates = 0);

  std::size_t size() const noexcept { return busy_until_.size(); }
  double busy_until(std::size_t candidate) const { return busy_until_.at(candidate); }
  const std::deque<Job>& pending(std::size_t candidate) const { return pending_.at(candidate); }

  /// max(0, busy_until - now).
  double waiting_time(std::size_t candidate, double now) const;

  /// Enqueues a job arriving at `now`; returns its completion time.
  double dispatch(std::size_t candidate, std::string query_id, double now, double service);

  /// Pops the head job of a candidate's queue.
  Job complete(std::size_t candidate);

 private:
  std::vector<double> busy_until_;
  std::vector<std::deque<Job>> pending_;
};

inline double waiting_time(const QueueState& queue, std::size_t candidate, double now) {
  return queue.waiting_time(candidate, now);
}

struct StreamEvent {
  enum class Kind { Completion, Tick, Arrival };  // order of processing at equal times
  double time = 0.0;
  Kind kind = Kind::Arrival;
  std::string query_id;
  std::string llm_id;
};

struct QueryOutcome {
  std::string query_id;
  std::vector<std::string> chosen;  // first entry is the primary choice
  double arrival = 0.0;
  double quality = 0.0;             // 0 when timed out
  double cost = 0.0;
  double wait = 0.0;                // queue delay + own service time
  bool timed_out = false;
};

struct SimResult {
  std::vector<QueryOutcome> records;  // input order
  double total_quality = 0.0;
  double total_cost = 0.0;
  std::size_t timeout_count = 0;
  std::vector<StreamEvent> events;
  std::vector<RoutingDecision> decisions;
};

enum class FeedbackMode { None, Refined, Binary };

/// Simulated user satisfaction: quality above and wait below the thresholds.
bool binary_reward(double quality, double wait, const SimConfig& cfg);

/// Decides where each arriving query goes and consumes completed-query
/// feedback at tick boundaries.
class RoutingPolicy {
 public:
  virtual ~RoutingPolicy() = default;
  virtual const Catalog& catalog() const = 0;
  /// Chosen catalog indices, primary first. `waits` holds the last tick's
  /// snapshot per catalog index. Fill `decision` when the policy has one.
  virtual std::vector<std::size_t> route(const Query& q, std::span<const double> waits, double now,
                                         RoutingDecision* decision) = 0;
  virtual void feedback(const Query& /*q*/, std::size_t /*index*/, double /*wait*/) {}
};

/// Routes with a Router, optionally learning from completions.
class RouterPolicy : public RoutingPolicy {
 public:
  struct Options {
    FeedbackMode feedback = FeedbackMode::None;
    bool online_scoring = false;  // score with select_online
    std::size_t k = 1;            // candidates per query (top-k by s_final)
  };

  RouterPolicy(Router& router, Options options, SimConfig sim);

  const Catalog& catalog() const override { return router_.catalog(); }
  std::vector<std::size_t> route(const Query& q, std::span<const double> waits, double now,
                                 RoutingDecision* decision) override;
  void feedback(const Query& q, std::size_t index, double wait) override;

 private:
  Router& router_;
  Options options_;
  SimConfig sim_;
};

/// Sends everything to one candidate.
class FixedPolicy : public RoutingPolicy {
 public:
  FixedPolicy(const Catalog& catalog, std::size_t index);
  const Catalog& catalog() const override { return catalog_; }
  std::vector<std::size_t> route(const Query&, std::span<const double>, double, RoutingDecision*) override {
    return {index_};
  }

 private:
  const Catalog& catalog_;
  std::size_t index_;
};

/// Uniform choice among active candidates.
class RandomPolicy : public RoutingPolicy {
 public:
  RandomPolicy(const Catalog& catalog, std::uint64_t seed);
  const Catalog& catalog() const override { return catalog_; }
  std::vector<std::size_t> route(const Query&, std::span<const double>, double, RoutingDecision*) override;

 private:
  const Catalog& catalog_;
  std::vector<std::size_t> active_;
  std::uint64_t state_;
};

/// Replays `queries` as an evenly spaced stream through `policy`.
///
/// Arrivals are spaced window/arrival_rate apart. Wait snapshots are taken
/// at every tick and stay stale in between; completed-query feedback is
/// also delivered at ticks. A query's wait is its queue delay plus its own
/// service time and it times out when that exceeds tau, scoring quality 0
/// (its cost is still charged unless free_timeouts is set).
/// Throws MissingGroundTruth if any query lacks a record for an active
/// candidate.
SimResult run_stream(std::span<const Query> queries, RoutingPolicy& policy, const SimConfig& cfg,
                     bool record_events = true);

enum class FeedbackScope { ChosenArm, AllArms };

/// Replays a finished simulation's feedback into the router. Refined mode
/// updates the chosen arm (or every active arm) with true quality and
/// length; binary mode applies one policy-gradient step per query.
void apply_feedback_loop(Router& router, std::span<const Query> queries, const SimResult& result,
                         FeedbackMode mode, FeedbackScope scope, const SimConfig& cfg);

}  // namespace mixroute
