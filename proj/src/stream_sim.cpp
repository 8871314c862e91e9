#include "mixroute/stream_sim.hpp"

#include <algorithm>
#include <queue>
#include <random>
#include <unordered_map>

namespace mixroute {

void SimConfig::validate() const {
  if (!(arrival_rate > 0) || !(window > 0) || !(tau > 0) || !(tick > 0)) {
    throw ConfigError("arrival_rate, window, tau and tick must all be > 0");
  }
}

double service_time(const LLMCandidate& c, double response_tokens) {
  return c.init_latency + response_tokens / c.tokens_per_second;
}

QueueState::QueueState(std::size_t candidates) : busy_until_(candidates, 0.0), pending_(candidates) {}

double QueueState::waiting_time(std::size_t candidate, double now) const {
  return std::max(0.0, busy_until_.at(candidate) - now);
}

double QueueState::dispatch(std::size_t candidate, std::string query_id, double now, double service) {
  const double start = std::max(now, busy_until_.at(candidate));
  const double finish = start + service;
  busy_until_[candidate] = finish;
  pending_[candidate].push_back({std::move(query_id), service, finish});
  return finish;
}

QueueState::Job QueueState::complete(std::size_t candidate) {
  auto& q = pending_.at(candidate);
  if (q.empty()) throw IndexOutOfRange("completion on an empty queue");
  Job job = std::move(q.front());
  q.pop_front();
  return job;
}

bool binary_reward(double quality, double wait, const SimConfig& cfg) {
  return quality > cfg.satisfied_quality && wait < cfg.satisfied_wait;
}

RouterPolicy::RouterPolicy(Router& router, Options options, SimConfig sim)
    : router_(router), options_(options), sim_(sim) {
  if (options_.k == 0) throw ConfigError("k must be >= 1");
}

std::vector<std::size_t> RouterPolicy::route(const Query& q, std::span<const double> waits, double now,
                                             RoutingDecision* decision) {
  RoutingDecision d = options_.online_scoring ? router_.select_online(q, waits, now)
                                              : router_.select(q, waits, now);
  std::vector<std::size_t> chosen;
  if (options_.k == 1) {
    chosen.push_back(d.chosen_index);
  } else {
    if (options_.k > d.breakdown.size()) {
      throw KTooLarge("k = " + std::to_string(options_.k) + " exceeds " +
                      std::to_string(d.breakdown.size()) + " active candidates");
    }
    chosen = Router::ranking(d);
    chosen.resize(options_.k);
  }
  if (decision) *decision = std::move(d);
  return chosen;
}

void RouterPolicy::feedback(const Query& q, std::size_t index, double wait) {
  if (options_.feedback == FeedbackMode::None) return;
  const GroundTruth& truth = q.truth_for(router_.catalog().at(index).llm_id);
  const Vector e = router_.embed(q);
  if (options_.feedback == FeedbackMode::Refined) {
    router_.refined_update(e, index, truth);
  } else {
    router_.binary_update(e, index, binary_reward(truth.quality, wait, sim_));
  }
}

FixedPolicy::FixedPolicy(const Catalog& catalog, std::size_t index) : catalog_(catalog), index_(index) {
  if (index >= catalog.size() || !catalog.at(index).active) {
    throw UnknownId("fixed policy target is not an active candidate");
  }
}

RandomPolicy::RandomPolicy(const Catalog& catalog, std::uint64_t seed)
    : catalog_(catalog), active_(catalog.active_indices()), state_(seed) {
  if (active_.empty()) throw NoActiveCandidates("random policy needs an active candidate");
}

std::vector<std::size_t> RandomPolicy::route(const Query&, std::span<const double>, double, RoutingDecision*) {
  std::mt19937_64 rng(state_);
  state_ = rng();
  std::uniform_int_distribution<std::size_t> pick(0, active_.size() - 1);
  return {active_[pick(rng)]};
}

namespace {

struct Scheduled {
  double time;
  StreamEvent::Kind kind;
  std::size_t seq;
  std::size_t query;      // Arrival / Completion
  std::size_t candidate;  // Completion

  bool operator>(const Scheduled& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return kind > o.kind;
    return seq > o.seq;
  }
};

struct Completed {
  std::size_t query;
  std::size_t candidate;
  double wait;
};

}  // namespace

SimResult run_stream(std::span<const Query> queries, RoutingPolicy& policy, const SimConfig& cfg,
                     bool record_events) {
  cfg.validate();
  const Catalog& catalog = policy.catalog();
  const auto active = catalog.active_indices();
  for (const auto& q : queries) {
    for (std::size_t i : active) q.truth_for(catalog.at(i).llm_id);
  }

  SimResult result;
  result.records.resize(queries.size());
  if (record_events) result.decisions.resize(queries.size());

  std::priority_queue<Scheduled, std::vector<Scheduled>, std::greater<>> agenda;
  std::size_t seq = 0;
  const double spacing = cfg.window / cfg.arrival_rate;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> offset(0.0, spacing);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    double t = static_cast<double>(i) * spacing;
    if (cfg.jitter) t += offset(rng);
    agenda.push({t, StreamEvent::Kind::Arrival, seq++, i, 0});
  }
  const double last_arrival = queries.empty() ? 0.0 : static_cast<double>(queries.size()) * spacing;
  for (std::size_t k = 0; static_cast<double>(k) * cfg.tick <= last_arrival; ++k) {
    agenda.push({static_cast<double>(k) * cfg.tick, StreamEvent::Kind::Tick, seq++, 0, 0});
  }

  QueueState queue(catalog.size());
  std::vector<double> snapshot(catalog.size(), 0.0);
  std::vector<Completed> undelivered;
  std::unordered_map<std::size_t, double> waits_by_job;  // (query * catalog + candidate) -> wait

  auto log = [&](double t, StreamEvent::Kind kind, std::size_t qi, std::size_t ci) {
    if (!record_events) return;
    StreamEvent ev{t, kind, {}, {}};
    if (kind != StreamEvent::Kind::Tick) ev.query_id = queries[qi].id;
    if (kind == StreamEvent::Kind::Completion) ev.llm_id = catalog.at(ci).llm_id;
    result.events.push_back(std::move(ev));
  };

  auto deliver = [&] {
    for (const auto& c : undelivered) policy.feedback(queries[c.query], c.candidate, c.wait);
    undelivered.clear();
  };

  while (!agenda.empty()) {
    const Scheduled ev = agenda.top();
    agenda.pop();
    switch (ev.kind) {
      case StreamEvent::Kind::Tick: {
        for (std::size_t i = 0; i < catalog.size(); ++i) {
          snapshot[i] = cfg.latency ? queue.waiting_time(i, ev.time) : 0.0;
        }
        log(ev.time, ev.kind, 0, 0);
        deliver();
        break;
      }
      case StreamEvent::Kind::Completion: {
        if (cfg.latency) queue.complete(ev.candidate);
        log(ev.time, ev.kind, ev.query, ev.candidate);
        const std::size_t key = ev.query * catalog.size() + ev.candidate;
        undelivered.push_back({ev.query, ev.candidate, waits_by_job.at(key)});
        waits_by_job.erase(key);
        break;
      }
      case StreamEvent::Kind::Arrival: {
        const Query& q = queries[ev.query];
        log(ev.time, ev.kind, ev.query, 0);
        RoutingDecision* decision = record_events ? &result.decisions[ev.query] : nullptr;
        const auto chosen = policy.route(q, snapshot, ev.time, decision);
        if (chosen.empty()) throw NoActiveCandidates("policy returned no candidate");

        QueryOutcome& out = result.records[ev.query];
        out.query_id = q.id;
        out.arrival = ev.time;
        bool any_answered = false;
        for (std::size_t ci : chosen) {
          const LLMCandidate& c = catalog.at(ci);
          const GroundTruth& truth = q.truth_for(c.llm_id);
          const double service = service_time(c, static_cast<double>(truth.response_tokens));
          const double finish = cfg.latency ? queue.dispatch(ci, q.id, ev.time, service) : ev.time + service;
          const double wait = finish - ev.time;
          const bool timed_out = cfg.latency && wait > cfg.tau;
          out.chosen.push_back(c.llm_id);
          out.wait = std::max(out.wait, wait);
          if (!timed_out) {
            out.quality = any_answered ? std::max(out.quality, truth.quality) : truth.quality;
            any_answered = true;
          }
          if (!(timed_out && cfg.free_timeouts)) out.cost += truth_cost(truth, c, q.prompt_tokens);
          waits_by_job[ev.query * catalog.size() + ci] = wait;
          agenda.push({finish, StreamEvent::Kind::Completion, seq++, ev.query, ci});
        }
        out.timed_out = !any_answered;
        break;
      }
    }
  }
  deliver();

  for (const auto& r : result.records) {
    result.total_quality += r.quality;
    result.total_cost += r.cost;
    if (r.timed_out) ++result.timeout_count;
  }
  return result;
}

void apply_feedback_loop(Router& router, std::span<const Query> queries, const SimResult& result,
                         FeedbackMode mode, FeedbackScope scope, const SimConfig& cfg) {
  if (mode == FeedbackMode::None) return;
  if (queries.size() != result.records.size()) {
    throw DimensionMismatch("feedback replay needs one record per query");
  }
  const Catalog& catalog = router.catalog();
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const Query& q = queries[i];
    const QueryOutcome& rec = result.records[i];
    if (rec.chosen.empty()) continue;
    const Vector e = router.embed(q);
    const std::size_t chosen = catalog.index_of(rec.chosen.front());
    if (mode == FeedbackMode::Binary) {
      const GroundTruth& truth = q.truth_for(rec.chosen.front());
      router.binary_update(e, chosen, binary_reward(truth.quality, rec.wait, cfg));
      continue;
    }
    if (scope == FeedbackScope::AllArms) {
      for (std::size_t idx : catalog.active_indices()) {
        router.refined_update(e, idx, q.truth_for(catalog.at(idx).llm_id));
      }
    } else {
      router.refined_update(e, chosen, q.truth_for(rec.chosen.front()));
    }
  }
}

}  // namespace mixroute
