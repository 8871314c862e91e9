#include <filesystem>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "mixroute/data_io.hpp"
#include "mixroute/serialize.hpp"
#include "mixroute/synthetic.hpp"

using namespace mixroute;
using namespace testing_helpers;

namespace {

const char* kThreeRows =
    R"({"id":"a","base_embedding":[1,0],"prompt_tokens":10,"domain_label":0,"truth":{"m1":{"quality":0.5,"response_tokens":20,"cost_usd":null},"m2":{"quality":1,"response_tokens":5}}}
{"id":"b","base_embedding":[0,1],"prompt_tokens":0,"domain_label":1,"truth":{"m1":{"quality":0,"response_tokens":0},"m2":{"quality":0.25,"response_tokens":7,"cost_usd":0.5}}}

{"id":"c","base_embedding":[0.5,0.5],"prompt_tokens":3,"domain_label":null,"truth":{"m1":{"quality":1,"response_tokens":1},"m2":{"quality":0,"response_tokens":2}}}
)";

Dataset labeled(std::size_t n, int domains) {
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    Query q = query("q" + std::to_string(i), unit(2, 0));
    q.domain_label = static_cast<int>(i % static_cast<std::size_t>(domains));
    q.truth["m"] = GroundTruth{0.5, 1, std::nullopt};
    ds.queries.push_back(q);
  }
  ds.domains = domains;
  return ds;
}

std::set<std::string> ids(const std::vector<Query>& qs) {
  std::set<std::string> out;
  for (const auto& q : qs) out.insert(q.id);
  return out;
}

}  // namespace

TEST(Dataset, ParsesThreeRows) {
  std::istringstream in(kThreeRows);
  const Dataset ds = parse_dataset(in);
  ASSERT_EQ(ds.queries.size(), 3u);
  EXPECT_EQ(ds.d_base(), 2);
  EXPECT_EQ(ds.domains, 2);
  EXPECT_EQ(ds.llm_ids(), (std::vector<std::string>{"m1", "m2"}));
  EXPECT_FALSE(ds.queries[0].truth.at("m1").cost_usd);
  EXPECT_EQ(ds.queries[1].truth.at("m2").cost_usd, 0.5);
  EXPECT_FALSE(ds.queries[2].domain_label);
  EXPECT_EQ(ds.queries[2].base_embedding(1), 0.5);
}

TEST(Dataset, QualityOutOfRangeNamesRow) {
  std::istringstream in(
      R"({"id":"a","base_embedding":[1],"prompt_tokens":1,"domain_label":0,"truth":{"m":{"quality":0.5,"response_tokens":1}}}
{"id":"b","base_embedding":[1],"prompt_tokens":1,"domain_label":0,"truth":{"m":{"quality":1.3,"response_tokens":1}}}
)");
  try {
    parse_dataset(in);
    FAIL() << "expected RangeError";
  } catch (const RangeError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
}

TEST(Dataset, NonRectangularRejected) {
  std::istringstream in(
      R"({"id":"a","base_embedding":[1],"prompt_tokens":1,"domain_label":0,"truth":{"m":{"quality":0.5,"response_tokens":1}}}
{"id":"b","base_embedding":[1],"prompt_tokens":1,"domain_label":0,"truth":{"n":{"quality":0.5,"response_tokens":1}}}
)");
  EXPECT_THROW(parse_dataset(in), SchemaError);
}

TEST(Dataset, MalformedAndInvalidRows) {
  auto rejects = [](const std::string& text) {
    std::istringstream in(text);
    EXPECT_THROW(parse_dataset(in), RowError) << text;
  };
  rejects("{not json}\n");
  rejects(R"({"id":"a","base_embedding":[1],"prompt_tokens":-1,"truth":{}})");
  rejects(R"({"id":"a","base_embedding":[],"prompt_tokens":1,"truth":{}})");
  rejects(R"({"id":"a","base_embedding":[1],"prompt_tokens":1.5,"truth":{}})");
  rejects(R"({"base_embedding":[1],"prompt_tokens":1,"truth":{}})");
  rejects(R"({"id":"a","base_embedding":[1],"prompt_tokens":1,"truth":{"m":{"quality":0.5,"response_tokens":-2}}})");
  rejects(
      "{\"id\":\"a\",\"base_embedding\":[1],\"prompt_tokens\":1,\"truth\":{}}\n"
      "{\"id\":\"a\",\"base_embedding\":[1],\"prompt_tokens\":1,\"truth\":{}}\n");
  rejects(
      "{\"id\":\"a\",\"base_embedding\":[1],\"prompt_tokens\":1,\"truth\":{}}\n"
      "{\"id\":\"b\",\"base_embedding\":[1,2],\"prompt_tokens\":1,\"truth\":{}}\n");
}

TEST(Dataset, RoundTrip) {
  SyntheticSpec spec = default_synthetic_spec();
  spec.queries = 60;
  const Dataset ds = make_synthetic(spec).dataset;
  std::ostringstream out;
  write_dataset(out, ds);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_dataset(in), ds);

  const auto path = std::filesystem::temp_directory_path() / "mixroute_roundtrip.jsonl";
  save_dataset(path, ds);
  EXPECT_EQ(load_dataset(path), ds);
  std::filesystem::remove(path);
}

TEST(ResolveCosts, FillsAndCountsMismatches) {
  std::istringstream in(kThreeRows);
  Dataset ds = parse_dataset(in);
  Catalog c(2);
  c.add_candidate(candidate("m1", 1.0, 2.0));
  c.add_candidate(candidate("m2", 1.0, 2.0));
  const CostResolution res = resolve_costs(ds, c);
  EXPECT_EQ(res.filled, 5u);
  EXPECT_EQ(res.mismatched, 1u);  // 0.5 supplied, 0.014 priced
  EXPECT_NEAR(*ds.queries[0].truth.at("m1").cost_usd, (10 * 1.0 + 20 * 2.0) / 1000, 1e-15);
  EXPECT_EQ(*ds.queries[1].truth.at("m2").cost_usd, 0.5);
}

TEST(Split, RandomReproducibleAndPartition) {
  const Dataset ds = labeled(100, 4);
  SplitSpec spec;
  const Split a = split(ds, spec);
  const Split b = split(ds, spec);
  EXPECT_EQ(a.train.size(), 80u);
  EXPECT_EQ(a.test.size(), 20u);
  EXPECT_EQ(ids(a.train), ids(b.train));
  EXPECT_EQ(ids(a.test), ids(b.test));
  std::set<std::string> all = ids(a.train);
  for (const auto& id : ids(a.test)) EXPECT_TRUE(all.insert(id).second);
  EXPECT_EQ(all, ids(ds.queries));
  spec.seed = 7;
  EXPECT_NE(ids(split(ds, spec).test), ids(a.test));
}

TEST(Split, OodDisjointDomains) {
  const Dataset ds = labeled(120, 5);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SplitSpec spec;
    spec.kind = SplitKind::OodDomain;
    spec.seed = seed;
    const Split s = split(ds, spec);
    std::set<int> train_d, test_d;
    for (const auto& q : s.train) train_d.insert(*q.domain_label);
    for (const auto& q : s.test) test_d.insert(*q.domain_label);
    for (int d : test_d) EXPECT_FALSE(train_d.count(d));
    EXPECT_FALSE(train_d.empty());
    EXPECT_FALSE(test_d.empty());
    EXPECT_GE(static_cast<double>(s.test.size()), 0.2 * 120);
    EXPECT_EQ(s.train.size() + s.test.size(), 120u);
  }
}

TEST(Split, OodNeedsTwoDomains) {
  SplitSpec spec;
  spec.kind = SplitKind::OodDomain;
  EXPECT_THROW(split(labeled(10, 1), spec), InsufficientDomains);
}

TEST(Split, OfflineOnlineSizes) {
  const Dataset ds = labeled(101, 3);
  SplitSpec spec;
  spec.offline_online = std::pair{30.0, 70.0};
  const Split s = split(ds, spec);
  const double n = static_cast<double>(s.train.size());
  EXPECT_NEAR(static_cast<double>(s.offline.size()), 0.3 * n, 1.0);
  EXPECT_NEAR(static_cast<double>(s.online.size()), 0.7 * n, 1.0);
  EXPECT_EQ(s.offline.size() + s.online.size(), s.train.size());
  for (std::size_t i = 0; i < s.offline.size(); ++i) EXPECT_EQ(s.offline[i].id, s.train[i].id);
}

TEST(Split, InvalidSpec) {
  SplitSpec spec;
  spec.train_fraction = 1.0;
  EXPECT_THROW(split(labeled(10, 2), spec), ConfigError);
  spec = {};
  spec.offline_online = std::pair{0.0, 1.0};
  EXPECT_THROW(split(labeled(10, 2), spec), ConfigError);
}

TEST(Catalog, ParseListAndObject) {
  const Catalog a = parse_catalog(
      R"([{"llm_id":"x","prompt_price_per_1k":0.001,"response_price_per_1k":0.002,"init_latency_s":0.1,"tokens_per_s":50}])",
      8);
  EXPECT_EQ(a.d_base(), 8);
  EXPECT_EQ(a.at("x").tokens_per_second, 50.0);
  const Catalog b = parse_catalog(R"({"d_base":4,"d_route":2,"candidates":[]})");
  EXPECT_EQ(b.d_route(), 2);
  EXPECT_THROW(parse_catalog("[]"), ConfigError);
  EXPECT_THROW(parse_catalog("[", 2), ParseError);
}

TEST(Catalog, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_catalog(
                   R"([{"llm_id":"x","prompt_price_per_1k":0,"response_price_per_1k":0,"init_latency_s":0,"tokens_per_s":1,"color":1}])",
                   2),
               ConfigError);
  EXPECT_THROW(parse_catalog(
                   R"([{"llm_id":"x","prompt_price_per_1k":-1,"response_price_per_1k":0,"init_latency_s":0,"tokens_per_s":1}])",
                   2),
               ConfigError);
  EXPECT_THROW(parse_catalog(R"([{"llm_id":"x"}])", 2), ConfigError);
}

TEST(Catalog, DumpRoundTrip) {
  Catalog c(6, 3);
  c.add_candidate(candidate("a", 0.1, 0.3, 0.25, 80));
  c.add_candidate(candidate("b"));
  c.remove_candidate("b");
  const Catalog back = parse_catalog(dump_catalog(c));
  EXPECT_EQ(back, c);
}

TEST(RunConfig, ParseKeysAndSections) {
  const RunConfig cfg = parse_run_config(R"({
    "alpha": 0.2, "beta": 0.3, "gamma": 0.5, "xi": 0.4, "tau_s": 20, "lambda": 3,
    "epsilon": 1e-3, "eta3": 0.01, "df_window": 10, "cost_scale": 2, "reward": "plus-minus-one",
    "predictor": {"kind": "knn", "knn_k": 3, "eta1": 0.5},
    "sim": {"arrival_rate": 50, "tick_s": 5, "latency": false},
    "embed": {"epochs": 10, "d_route": 4}})");
  EXPECT_EQ(cfg.router.alpha, 0.2);
  EXPECT_EQ(cfg.router.tau, 20.0);
  EXPECT_EQ(cfg.sim.tau, 20.0);
  EXPECT_EQ(cfg.router.df_window, 10u);
  EXPECT_EQ(cfg.router.reward, RewardConvention::PlusMinusOne);
  EXPECT_EQ(cfg.predictor.kind, RegressorKind::KNearest);
  EXPECT_EQ(cfg.predictor.knn_k, 3);
  EXPECT_EQ(cfg.predictor.eta1, 0.5);
  EXPECT_EQ(cfg.sim.arrival_rate, 50.0);
  EXPECT_FALSE(cfg.sim.latency);
  EXPECT_EQ(cfg.embed.d_route, 4);
}

TEST(RunConfig, RejectsUnknownAndInvalid) {
  EXPECT_THROW(parse_run_config(R"({"alpah": 1})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"sim": {"speed": 1}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"alpha": -1})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"alpha": "x"})"), ConfigError);
  EXPECT_THROW(parse_run_config("[1]"), ConfigError);
  EXPECT_THROW(parse_run_config("{"), ParseError);
}

TEST(RunConfig, DumpRoundTrip) {
  RunConfig cfg;
  cfg.router.alpha = 0.125;
  cfg.router.reward = RewardConvention::PlusMinusOne;
  cfg.sim.jitter = true;
  cfg.predictor.ridge = 0.5;
  cfg.embed.epochs = 7;
  const RunConfig back = parse_run_config(dump_run_config(cfg));
  EXPECT_EQ(back.router.alpha, 0.125);
  EXPECT_EQ(back.router.reward, RewardConvention::PlusMinusOne);
  EXPECT_TRUE(back.sim.jitter);
  EXPECT_EQ(back.predictor.ridge, 0.5);
  EXPECT_EQ(back.embed.epochs, 7);
  EXPECT_EQ(dump_run_config(back), dump_run_config(cfg));
}

TEST(Serialize, RouterSnapshotRoundTrip) {
  SyntheticSpec spec = default_synthetic_spec();
  spec.queries = 80;
  const SyntheticData data = make_synthetic(spec);
  Router r(data.catalog, RouterConfig{}, PredictorConfig{});
  r.offline_fit(data.dataset.queries);
  r.remove_candidate(data.catalog.at(1).llm_id);
  r.select_online(data.dataset.queries[0]);
  r.select_online(data.dataset.queries[1]);
  const Router back = router_from_snapshot(router_snapshot(r));
  EXPECT_EQ(back.catalog(), r.catalog());
  EXPECT_EQ(back.cost_scale(), r.cost_scale());
  EXPECT_EQ(back.feedback_net(), r.feedback_net());
  for (std::size_t i = 0; i < r.catalog().size(); ++i) {
    if (r.catalog().at(i).active) EXPECT_EQ(arm_state_bytes(back, i), arm_state_bytes(r, i));
  }
  EXPECT_EQ(router_snapshot(back).dump(), router_snapshot(r).dump());
  for (const auto& q : data.dataset.queries) EXPECT_EQ(back.select(q).chosen, r.select(q).chosen);
}

TEST(Serialize, ProjectionRoundTrip) {
  SyntheticSpec spec = default_synthetic_spec();
  spec.queries = 80;
  const Dataset ds = make_synthetic(spec).dataset;
  std::vector<LabeledVector> rows;
  for (const auto& q : ds.queries) rows.push_back({q.base_embedding, *q.domain_label});
  EmbedTrainConfig cfg;
  cfg.epochs = 5;
  cfg.d_route = 6;
  const ProjectionModel m = train_projection(rows, cfg);
  const ProjectionModel back = projection_from_json(to_json(m));
  EXPECT_EQ(back.weight, m.weight);
  EXPECT_EQ(back.centers, m.centers);
  EXPECT_EQ(to_json(back).dump(), to_json(m).dump());
}

TEST(Serialize, MatrixJsonExact) {
  Matrix m(2, 3);
  m << 0.1, 1.0 / 3.0, -2e-300, 4, 5, 6;
  EXPECT_EQ(matrix_from_json(matrix_to_json(m)), m);
  EXPECT_THROW(matrix_from_json(json{{"rows", 2}, {"cols", 2}, {"data", {1, 2, 3}}}), Error);
}
