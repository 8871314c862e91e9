#include "mixroute/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

namespace mixroute {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> Dataset::llm_ids() const {
  std::vector<std::string> ids;
  if (queries.empty()) return ids;
  for (const auto& [id, _] : queries.front().truth) ids.push_back(id);
  return ids;
}

namespace {

Query parse_query(const json& j, std::size_t row) {
  if (!j.is_object()) throw SchemaError(row, "expected a JSON object");
  auto require = [&](const char* key) -> const json& {
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(row, std::string("missing field '") + key + "'");
    return *it;
  };

  Query q;
  const json& id = require("id");
  if (!id.is_string() || id.get<std::string>().empty()) throw SchemaError(row, "'id' must be a non-empty string");
  q.id = id.get<std::string>();

  const json& emb = require("base_embedding");
  if (!emb.is_array() || emb.empty()) throw SchemaError(row, "'base_embedding' must be a non-empty array");
  q.base_embedding.resize(static_cast<Eigen::Index>(emb.size()));
  for (std::size_t i = 0; i < emb.size(); ++i) {
    if (!emb[i].is_number()) throw SchemaError(row, "'base_embedding' must hold numbers");
    q.base_embedding(static_cast<Eigen::Index>(i)) = emb[i].get<double>();
  }

  const json& prompt = require("prompt_tokens");
  if (!prompt.is_number_integer()) throw SchemaError(row, "'prompt_tokens' must be an integer");
  q.prompt_tokens = prompt.get<std::int64_t>();
  if (q.prompt_tokens < 0) throw RangeError(row, "'prompt_tokens' must be >= 0");

  if (auto it = j.find("domain_label"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw SchemaError(row, "'domain_label' must be an integer or null");
    const auto label = it->get<std::int64_t>();
    if (label < 0) throw RangeError(row, "'domain_label' must be >= 0");
    q.domain_label = static_cast<int>(label);
  }

  if (auto it = j.find("truth"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw SchemaError(row, "'truth' must be an object");
    for (const auto& [llm, rec] : it->items()) {
      if (!rec.is_object()) throw SchemaError(row, "truth for '" + llm + "' must be an object");
      GroundTruth t;
      auto quality = rec.find("quality");
      if (quality == rec.end() || !quality->is_number()) {
        throw SchemaError(row, "truth for '" + llm + "' needs a numeric 'quality'");
      }
      t.quality = quality->get<double>();
      if (!(t.quality >= 0.0 && t.quality <= 1.0)) {
        throw RangeError(row, "quality " + quality->dump() + " for '" + llm + "' outside [0, 1]");
      }
      auto tokens = rec.find("response_tokens");
      if (tokens == rec.end() || !tokens->is_number_integer()) {
        throw SchemaError(row, "truth for '" + llm + "' needs an integer 'response_tokens'");
      }
      t.response_tokens = tokens->get<std::int64_t>();
      if (t.response_tokens < 0) throw RangeError(row, "response_tokens for '" + llm + "' must be >= 0");
      if (auto cost = rec.find("cost_usd"); cost != rec.end() && !cost->is_null()) {
        if (!cost->is_number()) throw SchemaError(row, "'cost_usd' must be a number or null");
        t.cost_usd = cost->get<double>();
        if (*t.cost_usd < 0) throw RangeError(row, "cost_usd for '" + llm + "' must be >= 0");
      }
      q.truth.emplace(llm, t);
    }
  }
  return q;
}

}  // namespace

Dataset parse_dataset(std::istream& in, std::string source) {
  Dataset ds;
  ds.source = std::move(source);
  std::set<std::string> ids;
  std::vector<std::string> truth_ids;
  std::string line;
  std::size_t row = 0;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++row;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(row, e.what());
    }
    Query q = parse_query(j, row);
    if (!ids.insert(q.id).second) throw SchemaError(row, "duplicate id '" + q.id + "'");

    std::vector<std::string> keys;
    for (const auto& [llm, _] : q.truth) keys.push_back(llm);
    if (ds.queries.empty()) {
      truth_ids = keys;
    } else {
      if (q.base_embedding.size() != ds.queries.front().base_embedding.size()) {
        throw SchemaError(row, "embedding dimension differs from the first row");
      }
      if (keys != truth_ids) throw SchemaError(row, "ground-truth candidates differ from the first row (non-rectangular)");
    }
    if (q.domain_label) max_label = std::max(max_label, *q.domain_label);
    ds.queries.push_back(std::move(q));
  }
  ds.domains = max_label + 1;
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  return parse_dataset(in, path.string());
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  for (const auto& q : ds.queries) {
    json truth = json::object();
    for (const auto& [llm, t] : q.truth) {
      truth[llm] = {{"quality", t.quality},
                    {"response_tokens", t.response_tokens},
                    {"cost_usd", t.cost_usd ? json(*t.cost_usd) : json(nullptr)}};
    }
    json emb = json::array();
    for (Eigen::Index i = 0; i < q.base_embedding.size(); ++i) emb.push_back(q.base_embedding(i));
    json row{{"id", q.id},
             {"base_embedding", std::move(emb)},
             {"prompt_tokens", q.prompt_tokens},
             {"domain_label", q.domain_label ? json(*q.domain_label) : json(nullptr)},
             {"truth", std::move(truth)}};
    out << row.dump() << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_dataset(out, ds);
}

CostResolution resolve_costs(Dataset& ds, const Catalog& catalog) {
  CostResolution res;
  for (auto& q : ds.queries) {
    for (auto& [llm, t] : q.truth) {
      const auto idx = catalog.find(llm);
      if (!idx) continue;
      const double priced =
          estimate_cost(catalog.at(*idx), q.prompt_tokens, static_cast<double>(t.response_tokens)).total;
      if (!t.cost_usd) {
        t.cost_usd = priced;
        ++res.filled;
      } else if (std::abs(*t.cost_usd - priced) > 0.01 * std::max(std::abs(priced), 1e-12)) {
        ++res.mismatched;
      }
    }
  }
  if (res.mismatched) {
    spdlog::warn("{} supplied costs differ from catalog pricing by more than 1%", res.mismatched);
  }
  return res;
}

void SplitSpec::validate() const {
  if (!(train_fraction > 0 && train_fraction < 1)) throw ConfigError("train_fraction must lie in (0, 1)");
  if (offline_online && (!(offline_online->first > 0) || !(offline_online->second > 0))) {
    throw ConfigError("offline:online ratio parts must be positive");
  }
}

Split split(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> order(ds.queries.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  Split out;
  if (spec.kind == SplitKind::Random) {
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(order.size()) * spec.train_fraction));
    for (std::size_t k = 0; k < order.size(); ++k) {
      (k < n_train ? out.train : out.test).push_back(ds.queries[order[k]]);
    }
  } else {
    std::map<int, std::size_t> sizes;
    for (const auto& q : ds.queries) {
      if (q.domain_label) ++sizes[*q.domain_label];
    }
    if (sizes.size() < 2) throw InsufficientDomains("out-of-domain split needs at least two labeled domains");
    std::vector<int> domains;
    for (const auto& [d, _] : sizes) domains.push_back(d);
    std::shuffle(domains.begin(), domains.end(), rng);

    const double target = static_cast<double>(ds.queries.size()) * (1.0 - spec.train_fraction);
    std::set<int> test_domains;
    std::size_t test_rows = 0;
    for (int d : domains) {
      if (static_cast<double>(test_rows) >= target || test_domains.size() + 1 == domains.size()) break;
      test_domains.insert(d);
      test_rows += sizes[d];
    }
    for (std::size_t idx : order) {
      const Query& q = ds.queries[idx];
      const bool test = q.domain_label && test_domains.count(*q.domain_label);
      (test ? out.test : out.train).push_back(q);
    }
  }

  if (spec.offline_online) {
    const double frac = spec.offline_online->first / (spec.offline_online->first + spec.offline_online->second);
    const auto n_off = static_cast<std::size_t>(std::llround(static_cast<double>(out.train.size()) * frac));
    out.offline.assign(out.train.begin(), out.train.begin() + static_cast<std::ptrdiff_t>(n_off));
    out.online.assign(out.train.begin() + static_cast<std::ptrdiff_t>(n_off), out.train.end());
  }
  return out;
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

LLMCandidate candidate_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("catalog entries must be objects");
  reject_unknown(j, {"llm_id", "prompt_price_per_1k", "response_price_per_1k", "init_latency_s", "tokens_per_s", "active"},
                 "catalog entry");
  try {
    LLMCandidate c;
    c.llm_id = j.at("llm_id").get<std::string>();
    c.prompt_price = j.at("prompt_price_per_1k").get<double>();
    c.response_price = j.at("response_price_per_1k").get<double>();
    c.init_latency = j.at("init_latency_s").get<double>();
    c.tokens_per_second = j.at("tokens_per_s").get<double>();
    c.active = j.value("active", true);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("catalog entry: ") + e.what());
  }
}

}  // namespace

Catalog parse_catalog(const std::string& text, int d_base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, e.what());
  }
  const json* list = &j;
  int d_route = 0;
  if (j.is_object()) {
    reject_unknown(j, {"d_base", "d_route", "candidates"}, "catalog");
    if (j.contains("d_base")) d_base = j.at("d_base").get<int>();
    d_route = j.value("d_route", 0);
    list = &j.at("candidates");
  }
  if (!list->is_array()) throw ConfigError("catalog must list candidates in an array");
  if (d_base <= 0) throw ConfigError("catalog d_base unknown: set it in the file or pass a dataset");
  Catalog catalog(d_base, d_route);
  for (const auto& entry : *list) {
    LLMCandidate c = candidate_from_json(entry);
    const bool active = c.active;
    catalog.add_candidate(c);
    if (!active) catalog.remove_candidate(c.llm_id);
  }
  return catalog;
}

Catalog load_catalog(const std::filesystem::path& path, int d_base) {
  return parse_catalog(read_file(path), d_base);
}

std::string dump_catalog(const Catalog& catalog) {
  json list = json::array();
  for (const auto& c : catalog.candidates()) {
    json entry{{"llm_id", c.llm_id},
               {"prompt_price_per_1k", c.prompt_price},
               {"response_price_per_1k", c.response_price},
               {"init_latency_s", c.init_latency},
               {"tokens_per_s", c.tokens_per_second}};
    if (!c.active) entry["active"] = false;
    list.push_back(std::move(entry));
  }
  return json{{"d_base", catalog.d_base()}, {"d_route", catalog.d_route()}, {"candidates", std::move(list)}}.dump(2);
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      field = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  // Router keys may sit at the top level or under "router".
  json router = j.contains("router") ? j.at("router") : j;
  RunConfig cfg;
  reject_unknown(j, {"alpha", "beta", "gamma", "xi", "tau_s", "lambda", "epsilon", "eta3", "df_window", "cost_scale",
                     "reward", "ascend", "hidden", "net_seed", "uncertainty_check_interval", "router", "predictor",
                     "sim", "embed"},
                 "config");
  reject_unknown(router, {"alpha", "beta", "gamma", "xi", "tau_s", "lambda", "epsilon", "eta3", "df_window",
                          "cost_scale", "reward", "ascend", "hidden", "net_seed", "uncertainty_check_interval",
                          "router", "predictor", "sim", "embed"},
                 "router config");
  RouterConfig& r = cfg.router;
  read(router, "alpha", r.alpha);
  read(router, "beta", r.beta);
  read(router, "gamma", r.gamma);
  read(router, "xi", r.xi);
  read(router, "tau_s", r.tau);
  read(router, "lambda", r.lambda);
  read(router, "epsilon", r.epsilon);
  read(router, "eta3", r.eta3);
  read(router, "df_window", r.df_window);
  read(router, "cost_scale", r.cost_scale);
  read(router, "ascend", r.ascend);
  read(router, "hidden", r.hidden);
  read(router, "net_seed", r.net_seed);
  read(router, "uncertainty_check_interval", r.uncertainty_check_interval);
  if (router.contains("reward")) {
    const auto reward = router.at("reward").get<std::string>();
    if (reward == "zero-one") r.reward = RewardConvention::ZeroOne;
    else if (reward == "plus-minus-one") r.reward = RewardConvention::PlusMinusOne;
    else throw ConfigError("reward must be 'zero-one' or 'plus-minus-one'");
  }
  r.validate();

  cfg.sim.tau = r.tau;
  if (j.contains("predictor")) {
    const json& p = j.at("predictor");
    reject_unknown(p, {"kind", "eta1", "eta2", "ridge", "knn_k", "quality_prior", "length_prior"}, "predictor");
    if (p.contains("kind")) {
      const auto kind = p.at("kind").get<std::string>();
      if (kind == "linear-ridge") cfg.predictor.kind = RegressorKind::LinearRidge;
      else if (kind == "knn" || kind == "k-nearest-neighbor") cfg.predictor.kind = RegressorKind::KNearest;
      else throw ConfigError("unknown predictor kind '" + kind + "'");
    }
    read(p, "eta1", cfg.predictor.eta1);
    read(p, "eta2", cfg.predictor.eta2);
    read(p, "ridge", cfg.predictor.ridge);
    read(p, "knn_k", cfg.predictor.knn_k);
    read(p, "quality_prior", cfg.predictor.quality_prior);
    read(p, "length_prior", cfg.predictor.length_prior);
  }
  cfg.predictor.validate();
  if (j.contains("sim")) {
    const json& s = j.at("sim");
    reject_unknown(s, {"arrival_rate", "window_s", "tau_s", "tick_s", "seed", "jitter", "free_timeouts", "latency",
                       "satisfied_quality", "satisfied_wait_s"},
                   "sim");
    read(s, "arrival_rate", cfg.sim.arrival_rate);
    read(s, "window_s", cfg.sim.window);
    read(s, "tau_s", cfg.sim.tau);
    read(s, "tick_s", cfg.sim.tick);
    read(s, "seed", cfg.sim.seed);
    read(s, "jitter", cfg.sim.jitter);
    read(s, "free_timeouts", cfg.sim.free_timeouts);
    read(s, "latency", cfg.sim.latency);
    read(s, "satisfied_quality", cfg.sim.satisfied_quality);
    read(s, "satisfied_wait_s", cfg.sim.satisfied_wait);
  }
  cfg.sim.validate();
  if (j.contains("embed")) {
    const json& e = j.at("embed");
    reject_unknown(e, {"epochs", "learning_rate", "batch_size", "seed", "d_route"}, "embed");
    read(e, "epochs", cfg.embed.epochs);
    read(e, "learning_rate", cfg.embed.learning_rate);
    read(e, "batch_size", cfg.embed.batch_size);
    read(e, "seed", cfg.embed.seed);
    read(e, "d_route", cfg.embed.d_route);
  }
  cfg.embed.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_file(path)); }

std::string dump_run_config(const RunConfig& cfg) {
  const RouterConfig& r = cfg.router;
  const PredictorConfig& p = cfg.predictor;
  const SimConfig& s = cfg.sim;
  const EmbedTrainConfig& e = cfg.embed;
  json j{{"router",
          {{"alpha", r.alpha},
           {"beta", r.beta},
           {"gamma", r.gamma},
           {"xi", r.xi},
           {"tau_s", r.tau},
           {"lambda", r.lambda},
           {"epsilon", r.epsilon},
           {"eta3", r.eta3},
           {"df_window", r.df_window},
           {"cost_scale", r.cost_scale},
           {"reward", r.reward == RewardConvention::ZeroOne ? "zero-one" : "plus-minus-one"},
           {"ascend", r.ascend},
           {"hidden", r.hidden},
           {"net_seed", r.net_seed},
           {"uncertainty_check_interval", r.uncertainty_check_interval}}},
         {"predictor",
          {{"kind", p.kind == RegressorKind::LinearRidge ? "linear-ridge" : "knn"},
           {"eta1", p.eta1},
           {"eta2", p.eta2},
           {"ridge", p.ridge},
           {"knn_k", p.knn_k},
           {"quality_prior", p.quality_prior},
           {"length_prior", p.length_prior}}},
         {"sim",
          {{"arrival_rate", s.arrival_rate},
           {"window_s", s.window},
           {"tau_s", s.tau},
           {"tick_s", s.tick},
           {"seed", s.seed},
           {"jitter", s.jitter},
           {"free_timeouts", s.free_timeouts},
           {"latency", s.latency},
           {"satisfied_quality", s.satisfied_quality},
           {"satisfied_wait_s", s.satisfied_wait}}},
         {"embed",
          {{"epochs", e.epochs},
           {"learning_rate", e.learning_rate},
           {"batch_size", e.batch_size},
           {"seed", e.seed},
           {"d_route", e.d_route}}}};
  return j.dump(2);
}

}  // namespace mixroute
