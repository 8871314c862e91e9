#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "mixroute/bench.hpp"
#include "mixroute/data_io.hpp"
#include "mixroute/embed_space.hpp"
#include "mixroute/serialize.hpp"
#include "mixroute/stream_sim.hpp"
#include "mixroute/synthetic.hpp"

namespace fs = std::filesystem;
using namespace mixroute;

namespace {

struct Globals {
  std::string catalog;
  std::string dataset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "run";
  std::vector<std::string> argv;
};

struct SplitOptions {
  std::string kind = "random";
  double train_fraction = 0.8;
};

struct Inputs {
  RunConfig cfg;
  Dataset dataset;
  Catalog catalog;
  std::uint64_t seed = 42;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

RunConfig load_config(const Globals& g) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : load_run_config(g.config);
  if (g.seed) {
    cfg.sim.seed = *g.seed;
    cfg.embed.seed = *g.seed;
  }
  return cfg;
}

Inputs load_inputs(const Globals& g, bool need_catalog = true) {
  if (g.dataset.empty()) throw ConfigError("--dataset is required");
  Inputs in;
  in.cfg = load_config(g);
  in.seed = g.seed.value_or(42);
  in.dataset = load_dataset(g.dataset);
  if (need_catalog) {
    if (g.catalog.empty()) throw ConfigError("--catalog is required");
    in.catalog = load_catalog(g.catalog, in.dataset.d_base());
    if (in.catalog.d_base() != in.dataset.d_base()) {
      throw DimensionMismatch("catalog d_base " + std::to_string(in.catalog.d_base()) + " but dataset rows have " +
                              std::to_string(in.dataset.d_base()));
    }
    resolve_costs(in.dataset, in.catalog);
  }
  return in;
}

Split do_split(const Inputs& in, const SplitOptions& opt) {
  SplitSpec spec;
  spec.kind = opt.kind == "ood" ? SplitKind::OodDomain : SplitKind::Random;
  if (opt.kind != "ood" && opt.kind != "random") throw ConfigError("--split must be random or ood");
  spec.train_fraction = opt.train_fraction;
  spec.seed = in.seed;
  return split(in.dataset, spec);
}

fs::path run_dir(const Globals& g) {
  const fs::path dir(g.out);
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& verb, const Globals& g, const RunConfig& cfg,
                    const std::vector<std::string>& outputs, json extra = json::object()) {
  json m;
  m["tool"] = "mixroute";
  m["version"] = MIXROUTE_VERSION;
  m["command"] = verb;
  m["argv"] = g.argv;
  m["seed"] = g.seed.value_or(42);
  m["inputs"] = {{"dataset", g.dataset}, {"catalog", g.catalog}, {"config", g.config}};
  m["config"] = json::parse(dump_run_config(cfg));
  m["outputs"] = outputs;
  if (!extra.empty()) m["parameters"] = std::move(extra);
  write_json(dir / "manifest.json", m);
}

std::optional<ProjectionModel> load_projection(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return projection_from_json(json::parse(read_file(path)));
}

Router obtain_router(const Inputs& in, std::span<const Query> train, const std::string& router_path,
                     const std::string& projection_path) {
  if (!router_path.empty()) {
    Router r = load_router(router_path);
    if (!(r.catalog().active_ids() == in.catalog.active_ids())) {
      spdlog::warn("router snapshot candidates differ from --catalog; using the snapshot's catalog");
    }
    return r;
  }
  return train_router(in.catalog, train, in.cfg.router, in.cfg.predictor, load_projection(projection_path));
}

json point_json(const CurvePoint& p) {
  return {{"label", p.label},
          {"lambda", p.lambda},
          {"total_quality", p.total_quality},
          {"total_cost", p.total_cost},
          {"timeouts", p.timeout_count},
          {"quality_frac", p.quality_vs_reference},
          {"cost_frac", p.cost_vs_reference}};
}

CurvePoint point_from_json(const json& j) {
  CurvePoint p;
  p.label = j.at("label").get<std::string>();
  p.lambda = j.value("lambda", 0.0);
  p.total_quality = j.at("total_quality").get<double>();
  p.total_cost = j.at("total_cost").get<double>();
  p.timeout_count = j.value("timeouts", std::size_t{0});
  return p;
}

FeedbackMode parse_feedback(const std::string& s) {
  if (s == "none") return FeedbackMode::None;
  if (s == "refined") return FeedbackMode::Refined;
  if (s == "binary") return FeedbackMode::Binary;
  throw ConfigError("--feedback must be none, refined or binary");
}

std::vector<std::pair<double, double>> parse_ratios(const std::string& text) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("ratio '" + item + "' is not of the form a:b");
    out.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
  }
  if (out.empty()) throw ConfigError("no ratios given");
  return out;
}

void add_split_options(CLI::App* cmd, SplitOptions& opt) {
  cmd->add_option("--split", opt.kind, "random or ood")->check(CLI::IsMember({"random", "ood"}));
  cmd->add_option("--train-fraction", opt.train_fraction, "share of rows used for training");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost, quality and latency aware LLM routing: training, simulation and benchmarks"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  g.argv.assign(argv, argv + argc);
  app.add_option("--catalog", g.catalog, "catalog JSON");
  app.add_option("--dataset", g.dataset, "dataset JSONL");
  app.add_option("--config", g.config, "run configuration JSON");
  app.add_option("--seed", g.seed, "seed for splits, simulation and training (default 42)");
  app.add_option("--out", g.out, "run directory")->capture_default_str();
  app.set_version_flag("--version", std::string(MIXROUTE_VERSION));

  SplitOptions split_opt;
  std::string router_path;
  std::string projection_path;

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset and catalog");
  std::size_t synth_queries = 500;
  int synth_domains = 4;
  int synth_dim = 16;
  bool synth_binary = false;
  synth->add_option("--queries", synth_queries)->capture_default_str();
  synth->add_option("--domains", synth_domains)->capture_default_str();
  synth->add_option("--d-base", synth_dim)->capture_default_str();
  synth->add_flag("--binary", synth_binary, "0/1 correctness instead of graded quality");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate a dataset, fill costs and write the split");
  add_split_options(ingest, split_opt);

  // train-embed
  auto* train_embed = app.add_subcommand("train-embed", "train the routing projection on domain labels");
  std::optional<int> embed_epochs;
  std::optional<double> embed_lr;
  std::optional<int> embed_d_route;
  train_embed->add_option("--epochs", embed_epochs);
  train_embed->add_option("--learning-rate", embed_lr);
  train_embed->add_option("--d-route", embed_d_route);

  // train-offline
  auto* train_offline = app.add_subcommand("train-offline", "fit the router on the training split");
  add_split_options(train_offline, split_opt);
  train_offline->add_option("--projection", projection_path, "projection JSON from train-embed");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "stream the test split through the router");
  add_split_options(simulate, split_opt);
  std::optional<double> sim_lambda;
  std::string sim_feedback = "none";
  bool sim_online = false;
  std::size_t sim_k = 1;
  simulate->add_option("--router", router_path, "router snapshot (trained on the split when absent)");
  simulate->add_option("--projection", projection_path);
  simulate->add_option("--lambda", sim_lambda);
  simulate->add_option("--feedback", sim_feedback, "none, refined or binary")->capture_default_str();
  simulate->add_flag("--online-scoring", sim_online, "add the feedback-network term to every score");
  simulate->add_option("--k", sim_k, "candidates per query")->capture_default_str();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "trace the quality/cost curve over willingness to pay");
  add_split_options(sweep, split_opt);
  std::size_t sweep_points = 25;
  double sweep_lo = 1e-6;
  double sweep_hi = 1e6;
  sweep->add_option("--router", router_path);
  sweep->add_option("--projection", projection_path);
  sweep->add_option("--points", sweep_points)->capture_default_str();
  sweep->add_option("--lambda-min", sweep_lo)->capture_default_str();
  sweep->add_option("--lambda-max", sweep_hi)->capture_default_str();

  // oracle
  auto* oracle = app.add_subcommand("oracle", "cheapest-qualifying-candidate reference point");
  add_split_options(oracle, split_opt);
  double oracle_threshold = 0.9;
  oracle->add_option("--threshold", oracle_threshold)->capture_default_str();

  // baselines
  auto* baselines = app.add_subcommand("baselines", "random routing and single-candidate points");
  add_split_options(baselines, split_opt);

  // continual
  auto* continual = app.add_subcommand("continual", "offline vs online feedback comparison");
  add_split_options(continual, split_opt);
  std::string ratios_text = "80:20,50:50,30:70";
  bool no_match = false;
  double cost_tolerance = 0.02;
  continual->add_option("--ratios", ratios_text)->capture_default_str();
  continual->add_flag("--no-match-cost", no_match, "keep the configured lambda in every cell");
  continual->add_option("--cost-tolerance", cost_tolerance)->capture_default_str();

  // topk
  auto* topk = app.add_subcommand("topk", "route each query to its k best candidates");
  add_split_options(topk, split_opt);
  std::vector<std::size_t> topk_values;
  topk->add_option("--router", router_path);
  topk->add_option("--projection", projection_path);
  topk->add_option("--k", topk_values, "values of k (default 1..active count)");

  // report
  auto* report_cmd = app.add_subcommand("report", "fractions against a reference candidate");
  std::string report_run;
  std::string reference;
  report_cmd->add_option("--run", report_run, "directory holding sweep.csv and baselines.json")->required();
  report_cmd->add_option("--reference", reference, "reference candidate (default: costliest)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      SyntheticSpec spec = default_synthetic_spec();
      spec.queries = synth_queries;
      spec.d_base = synth_dim;
      spec.binary_quality = synth_binary;
      spec.seed = g.seed.value_or(42);
      if (synth_domains != spec.domains) {
        for (auto& arm : spec.arms) {
          std::vector<double> q;
          for (int d = 0; d < synth_domains; ++d) q.push_back(arm.domain_quality[static_cast<std::size_t>(d) % 4]);
          arm.domain_quality = q;
        }
        spec.domains = synth_domains;
      }
      const SyntheticData data = make_synthetic(spec);
      const fs::path dir = run_dir(g);
      save_dataset(dir / "dataset.jsonl", data.dataset);
      write_text(dir / "catalog.json", dump_catalog(data.catalog));
      write_manifest(dir, "synth", g, load_config(g), {"dataset.jsonl", "catalog.json"},
                     {{"queries", synth_queries}, {"domains", synth_domains}, {"d_base", synth_dim},
                      {"binary", synth_binary}});
      std::printf("wrote %zu queries over %zu candidates to %s\n", data.dataset.queries.size(),
                  data.catalog.size(), dir.c_str());
      return 0;
    }

    if (*report_cmd) {
      const fs::path run(report_run);
      std::ifstream csv(run / "sweep.csv");
      if (!csv) throw ConfigError("no sweep.csv in " + run.string());
      const auto points = read_curve_csv(csv);
      const json b = json::parse(read_file(run / "baselines.json"));
      std::vector<CurvePoint> singles;
      for (const auto& j : b.at("single")) singles.push_back(point_from_json(j));
      const std::string ref = reference.empty() ? costliest(singles) : reference;
      const Report r = report(points, singles, ref);
      json out;
      out["reference"] = r.reference;
      out["reference_point"] = point_json(r.reference_point);
      out["points"] = json::array();
      for (const auto& p : r.points) out["points"].push_back(point_json(p));
      if (r.best) out["best"] = *r.best;
      const fs::path dir = run_dir(g);
      write_json(dir / "report.json", out);
      write_manifest(dir, "report", g, load_config(g), {"report.json"}, {{"run", report_run}, {"reference", ref}});
      std::printf("reference %s: quality %.4f cost %.6f\n", ref.c_str(), r.reference_point.total_quality,
                  r.reference_point.total_cost);
      for (std::size_t i = 0; i < r.points.size(); ++i) {
        const auto& p = r.points[i];
        std::printf("%s lambda=%-12.6g quality %.2f%% cost %.2f%%\n", r.best && *r.best == i ? "*" : " ", p.lambda,
                    100 * p.quality_vs_reference, 100 * p.cost_vs_reference);
      }
      return 0;
    }

    if (*train_embed) {
      Inputs in = load_inputs(g, false);
      EmbedTrainConfig ec = in.cfg.embed;
      if (embed_epochs) ec.epochs = *embed_epochs;
      if (embed_lr) ec.learning_rate = *embed_lr;
      if (embed_d_route) ec.d_route = *embed_d_route;
      std::vector<LabeledVector> rows;
      for (const auto& q : in.dataset.queries) {
        if (q.domain_label) rows.push_back({q.base_embedding, *q.domain_label});
      }
      EmbedTrainReport rep;
      const ProjectionModel model = train_projection(rows, ec, &rep);
      const fs::path dir = run_dir(g);
      write_json(dir / "projection.json", to_json(model));
      write_json(dir / "embed_report.json",
                 {{"rows", rows.size()}, {"initial_loss", rep.initial_loss}, {"final_loss", rep.final_loss},
                  {"epoch_loss", rep.epoch_loss}});
      in.cfg.embed = ec;
      write_manifest(dir, "train-embed", g, in.cfg, {"projection.json", "embed_report.json"});
      std::printf("projection %dx%d over %d domains, loss %.6f -> %.6f\n", model.d_route(), model.d_base(),
                  model.domains(), rep.initial_loss, rep.final_loss);
      return 0;
    }

    Inputs in = load_inputs(g);
    const Split parts = do_split(in, split_opt);
    const json split_params = {{"split", split_opt.kind}, {"train_fraction", split_opt.train_fraction},
                               {"train_rows", parts.train.size()}, {"test_rows", parts.test.size()}};
    const fs::path dir = run_dir(g);

    if (*ingest) {
      save_dataset(dir / "dataset.jsonl", in.dataset);
      Dataset tr{parts.train, in.dataset.domains, in.dataset.source};
      Dataset te{parts.test, in.dataset.domains, in.dataset.source};
      save_dataset(dir / "train.jsonl", tr);
      save_dataset(dir / "test.jsonl", te);
      Dataset fresh = load_dataset(g.dataset);
      const CostResolution costs = resolve_costs(fresh, in.catalog);
      const json summary = {{"rows", in.dataset.queries.size()},
                            {"domains", in.dataset.domains},
                            {"d_base", in.dataset.d_base()},
                            {"llm_ids", in.dataset.llm_ids()},
                            {"costs_filled", costs.filled},
                            {"costs_mismatched", costs.mismatched},
                            {"train_rows", parts.train.size()},
                            {"test_rows", parts.test.size()}};
      write_json(dir / "ingest.json", summary);
      write_manifest(dir, "ingest", g, in.cfg, {"dataset.jsonl", "train.jsonl", "test.jsonl", "ingest.json"},
                     split_params);
      std::printf("%s\n", summary.dump().c_str());
      return 0;
    }

    if (*train_offline) {
      const Router router = obtain_router(in, parts.train, "", projection_path);
      save_router(dir / "router.json", router);
      write_manifest(dir, "train-offline", g, in.cfg, {"router.json"}, split_params);
      std::printf("trained %zu candidates on %zu rows, cost scale %.6g\n", router.catalog().active_count(),
                  parts.train.size(), router.cost_scale());
      return 0;
    }

    if (*simulate) {
      Router router = obtain_router(in, parts.train, router_path, projection_path);
      if (sim_lambda) router.config().lambda = *sim_lambda;
      router.config().validate();
      const FeedbackMode mode = parse_feedback(sim_feedback);
      RouterPolicy policy(router, {mode, sim_online, sim_k}, in.cfg.sim);
      const SimResult result = run_stream(parts.test, policy, in.cfg.sim, true);
      std::ofstream decisions(dir / "decisions.jsonl");
      write_decision_log(decisions, result);
      std::ofstream outcomes(dir / "outcomes.jsonl");
      write_outcomes(outcomes, result);
      json summary = summary_json(result);
      summary["lambda"] = router.config().lambda;
      write_json(dir / "summary.json", summary);
      std::vector<std::string> outputs = {"decisions.jsonl", "outcomes.jsonl", "summary.json"};
      if (mode != FeedbackMode::None) {
        save_router(dir / "router.json", router);
        outputs.push_back("router.json");
      }
      json params = split_params;
      params["feedback"] = sim_feedback;
      params["online_scoring"] = sim_online;
      params["k"] = sim_k;
      write_manifest(dir, "simulate", g, in.cfg, outputs, params);
      std::printf("%s\n", summary.dump().c_str());
      return 0;
    }

    if (*sweep) {
      const Router trained = obtain_router(in, parts.train, router_path, projection_path);
      const auto grid = lambda_grid(sweep_points, sweep_lo, sweep_hi);
      const auto points = sweep_lambda(parts.test, trained, grid, in.cfg.sim);
      const auto singles = single_llm_points(parts.test, trained.catalog(), in.cfg.sim);
      const Report r = report(points, singles, costliest(singles));
      std::ofstream csv(dir / "sweep.csv", std::ios::binary);
      write_curve_csv(csv, r.points);
      json params = split_params;
      params["points"] = sweep_points;
      params["lambda_min"] = sweep_lo;
      params["lambda_max"] = sweep_hi;
      params["reference"] = r.reference;
      write_manifest(dir, "sweep", g, in.cfg, {"sweep.csv"}, params);
      std::printf("%zu points against %s written to %s\n", r.points.size(), r.reference.c_str(),
                  (dir / "sweep.csv").c_str());
      return 0;
    }

    if (*oracle) {
      const CurvePoint p = oracle_curve(parts.test, oracle_threshold, in.catalog);
      json params = split_params;
      params["threshold"] = oracle_threshold;
      write_json(dir / "oracle.json", point_json(p));
      write_manifest(dir, "oracle", g, in.cfg, {"oracle.json"}, params);
      std::printf("%s\n", point_json(p).dump().c_str());
      return 0;
    }

    if (*baselines) {
      const auto singles = single_llm_points(parts.test, in.catalog, in.cfg.sim);
      const CurvePoint random = random_baseline(parts.test, in.catalog, in.cfg.sim, in.seed);
      json out = {{"random", point_json(random)}, {"single", json::array()}};
      for (const auto& p : singles) out["single"].push_back(point_json(p));
      write_json(dir / "baselines.json", out);
      write_manifest(dir, "baselines", g, in.cfg, {"baselines.json"}, split_params);
      std::printf("%s\n", out.dump(2).c_str());
      return 0;
    }

    if (*continual) {
      const auto ratios = parse_ratios(ratios_text);
      ContinualOptions options;
      options.match_cost = !no_match;
      options.cost_tolerance = cost_tolerance;
      const auto rows = continual_experiment(parts.train, parts.test, in.catalog, in.cfg, ratios, options);
      std::ofstream csv(dir / "continual.csv", std::ios::binary);
      csv << "offline,online,mode,lambda,quality_rate,total_cost,improvement\n";
      json out = json::array();
      for (const auto& row : rows) {
        auto emit = [&](const char* mode, const ContinualCell& c) {
          char line[256];
          std::snprintf(line, sizeof line, "%g,%g,%s,%.12g,%.12g,%.12g,%.12g\n", row.offline, row.online, mode,
                        c.lambda, c.quality_rate, c.total_cost, c.improvement);
          csv << line;
          out.push_back({{"offline", row.offline}, {"online", row.online}, {"mode", mode}, {"lambda", c.lambda},
                         {"quality_rate", c.quality_rate}, {"total_cost", c.total_cost},
                         {"improvement", c.improvement}});
        };
        emit("none", row.none);
        emit("refined", row.refined);
        emit("binary", row.binary);
      }
      csv.close();
      json params = split_params;
      params["ratios"] = ratios_text;
      params["match_cost"] = options.match_cost;
      params["cost_tolerance"] = cost_tolerance;
      write_manifest(dir, "continual", g, in.cfg, {"continual.csv"}, params);
      std::printf("%s", read_file(dir / "continual.csv").c_str());
      return 0;
    }

    if (*topk) {
      const Router trained = obtain_router(in, parts.train, router_path, projection_path);
      if (topk_values.empty()) {
        for (std::size_t k = 1; k <= trained.catalog().active_count(); ++k) topk_values.push_back(k);
      }
      std::ofstream csv(dir / "topk.csv", std::ios::binary);
      csv << "k,lambda,total_quality,total_cost,timeouts\n";
      for (std::size_t k : topk_values) {
        const CurvePoint p = topk_policy(parts.test, trained, k, in.cfg.sim);
        char line[256];
        std::snprintf(line, sizeof line, "%zu,%.12g,%.12g,%.12g,%zu\n", k, p.lambda, p.total_quality, p.total_cost,
                      p.timeout_count);
        csv << line;
      }
      csv.close();
      write_manifest(dir, "topk", g, in.cfg, {"topk.csv"}, split_params);
      std::printf("%s", read_file(dir / "topk.csv").c_str());
      return 0;
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
