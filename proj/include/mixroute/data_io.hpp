#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixroute/core.hpp"
#include "mixroute/embed_space.hpp"
#include "mixroute/predictors.hpp"
#include "mixroute/router.hpp"
#include "mixroute/stream_sim.hpp"

namespace mixroute {

/// Rectangular set of queries: every query has ground truth for the same
/// candidate ids.
struct Dataset {
  std::vector<Query> queries;
  int domains = 0;  // max domain label + 1
  std::string source;

  int d_base() const { return queries.empty() ? 0 : static_cast<int>(queries.front().base_embedding.size()); }
  /// Candidate ids covered by the ground truth (sorted).
  std::vector<std::string> llm_ids() const;

  bool operator==(const Dataset& o) const { return queries == o.queries && domains == o.domains; }
};

/// Parses the JSONL dataset format, one query per line:
///   {"id": str, "base_embedding": [num], "prompt_tokens": int,
///    "domain_label": int|null,
///    "truth": {"<llm_id>": {"quality": num, "response_tokens": int, "cost_usd": num|null}}}
/// Blank lines are skipped. Errors name the 1-based line.
Dataset parse_dataset(std::istream& in, std::string source = "<stream>");
Dataset load_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, const Dataset& ds);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);

struct CostResolution {
  std::size_t filled = 0;      // truth records whose cost was computed from pricing
  std::size_t mismatched = 0;  // supplied costs more than 1% off the pricing formula
};

/// Fills every missing cost_usd from the catalog pricing and counts (and
/// logs) supplied costs that disagree with it by more than 1%.
CostResolution resolve_costs(Dataset& ds, const Catalog& catalog);

enum class SplitKind { Random, OodDomain };

struct SplitSpec {
  SplitKind kind = SplitKind::Random;
  double train_fraction = 0.8;
  std::optional<std::pair<double, double>> offline_online;  // e.g. {30, 70}
  std::uint64_t seed = 42;

  void validate() const;
};

/// When offline_online is set, `train` is further cut (in order) into
/// `offline` and `online`; otherwise those stay empty.
struct Split {
  std::vector<Query> train;
  std::vector<Query> test;
  std::vector<Query> offline;
  std::vector<Query> online;
};

/// Random: seeded shuffle, first round(n * train_fraction) rows train.
/// OodDomain: whole domains move to the test side in seeded order until it
/// holds at least (1 - train_fraction) of the rows; at least one domain
/// always stays in training and unlabeled rows always train. Throws
/// InsufficientDomains with fewer than two labeled domains.
Split split(const Dataset& ds, const SplitSpec& spec);

/// Catalog JSON: either a list of candidates or {"d_base": int,
/// "d_route": int, "candidates": [...]}; candidate keys are llm_id,
/// prompt_price_per_1k, response_price_per_1k, init_latency_s, tokens_per_s.
/// d_base falls back to `d_base` when the file does not carry one.
Catalog parse_catalog(const std::string& text, int d_base = 0);
Catalog load_catalog(const std::filesystem::path& path, int d_base = 0);
std::string dump_catalog(const Catalog& catalog);

/// Run configuration file. Top-level router keys: alpha, beta, gamma, xi,
/// tau_s, lambda, epsilon, eta3, df_window, cost_scale (plus optional
/// reward, ascend, hidden, net_seed). Optional sections: "predictor",
/// "sim", "embed". Unknown keys are rejected.
struct RunConfig {
  RouterConfig router;
  PredictorConfig predictor;
  SimConfig sim;
  EmbedTrainConfig embed;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string dump_run_config(const RunConfig& cfg);

std::string read_file(const std::filesystem::path& path);

}  // namespace mixroute
