#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mixroute/bench.hpp"
#include "mixroute/data_io.hpp"
#include "mixroute/router.hpp"
#include "mixroute/serialize.hpp"
#include "mixroute/stream_sim.hpp"
#include "mixroute/synthetic.hpp"

namespace py = pybind11;
using namespace mixroute;

namespace {

std::vector<int> labels_of(const std::vector<Query>& qs) {
  std::vector<int> out;
  for (const auto& q : qs) out.push_back(q.domain_label.value_or(-1));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cost- and latency-aware LLM routing";
  m.attr("__version__") = MIXROUTE_VERSION;

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base.ptr());
  py::register_exception<UnknownId>(m, "UnknownId", base.ptr());
  py::register_exception<DuplicateId>(m, "DuplicateId", base.ptr());
  py::register_exception<NoActiveCandidates>(m, "NoActiveCandidates", base.ptr());
  py::register_exception<KTooLarge>(m, "KTooLarge", base.ptr());
  py::register_exception<RowError>(m, "RowError", base.ptr());

  py::class_<GroundTruth>(m, "GroundTruth")
      .def(py::init([](double quality, std::int64_t tokens, std::optional<double> cost) {
             return GroundTruth{quality, tokens, cost};
           }),
           py::arg("quality"), py::arg("response_tokens"), py::arg("cost_usd") = py::none())
      .def_readwrite("quality", &GroundTruth::quality)
      .def_readwrite("response_tokens", &GroundTruth::response_tokens)
      .def_readwrite("cost_usd", &GroundTruth::cost_usd);

  py::class_<Query>(m, "Query")
      .def(py::init([](std::string id, Vector emb, std::int64_t prompt, std::optional<int> domain,
                       std::map<std::string, GroundTruth> truth) {
             return Query{std::move(id), std::move(emb), prompt, domain, std::move(truth)};
           }),
           py::arg("id"), py::arg("base_embedding"), py::arg("prompt_tokens") = 0, py::arg("domain_label") = py::none(),
           py::arg("truth") = std::map<std::string, GroundTruth>{})
      .def_readwrite("id", &Query::id)
      .def_readwrite("base_embedding", &Query::base_embedding)
      .def_readwrite("prompt_tokens", &Query::prompt_tokens)
      .def_readwrite("domain_label", &Query::domain_label)
      .def_readwrite("truth", &Query::truth);

  py::class_<LLMCandidate>(m, "LLMCandidate")
      .def(py::init([](std::string id, double pp, double rp, double init, double tps) {
             LLMCandidate c{std::move(id), pp, rp, init, tps};
             c.validate();
             return c;
           }),
           py::arg("llm_id"), py::arg("prompt_price"), py::arg("response_price"), py::arg("init_latency") = 0.0,
           py::arg("tokens_per_second") = 1.0)
      .def_readonly("llm_id", &LLMCandidate::llm_id)
      .def_readonly("prompt_price", &LLMCandidate::prompt_price)
      .def_readonly("response_price", &LLMCandidate::response_price)
      .def_readonly("init_latency", &LLMCandidate::init_latency)
      .def_readonly("tokens_per_second", &LLMCandidate::tokens_per_second)
      .def_readonly("active", &LLMCandidate::active);

  py::class_<Catalog>(m, "Catalog")
      .def(py::init<int, int>(), py::arg("d_base"), py::arg("d_route") = 0)
      .def_property_readonly("d_base", &Catalog::d_base)
      .def_property_readonly("d_route", &Catalog::d_route)
      .def("add_candidate", &Catalog::add_candidate)
      .def("remove_candidate", &Catalog::remove_candidate)
      .def("active_ids", &Catalog::active_ids)
      .def("__len__", &Catalog::size)
      .def("__getitem__", [](const Catalog& c, const std::string& id) { return c.at(id); })
      .def("to_json", &dump_catalog)
      .def_static("from_json", &parse_catalog, py::arg("text"), py::arg("d_base") = 0);

  py::class_<RouterConfig>(m, "RouterConfig")
      .def(py::init<>())
      .def_readwrite("alpha", &RouterConfig::alpha)
      .def_readwrite("beta", &RouterConfig::beta)
      .def_readwrite("gamma", &RouterConfig::gamma)
      .def_readwrite("xi", &RouterConfig::xi)
      .def_readwrite("tau", &RouterConfig::tau)
      .def_readwrite("lambda_", &RouterConfig::lambda)
      .def_readwrite("epsilon", &RouterConfig::epsilon)
      .def_readwrite("eta3", &RouterConfig::eta3)
      .def_readwrite("cost_scale", &RouterConfig::cost_scale)
      .def_readwrite("ascend", &RouterConfig::ascend)
      .def("validate", &RouterConfig::validate);

  py::class_<PredictorConfig>(m, "PredictorConfig")
      .def(py::init<>())
      .def_readwrite("eta1", &PredictorConfig::eta1)
      .def_readwrite("eta2", &PredictorConfig::eta2)
      .def_readwrite("ridge", &PredictorConfig::ridge);

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("arrival_rate", &SimConfig::arrival_rate)
      .def_readwrite("window", &SimConfig::window)
      .def_readwrite("tau", &SimConfig::tau)
      .def_readwrite("tick", &SimConfig::tick)
      .def_readwrite("seed", &SimConfig::seed)
      .def_readwrite("latency", &SimConfig::latency)
      .def_readwrite("free_timeouts", &SimConfig::free_timeouts);

  py::class_<ScoreBreakdown>(m, "ScoreBreakdown")
      .def_readonly("llm_id", &ScoreBreakdown::llm_id)
      .def_readonly("p_hat", &ScoreBreakdown::p_hat)
      .def_readonly("predicted_len", &ScoreBreakdown::predicted_len)
      .def_readonly("c_hat", &ScoreBreakdown::c_hat)
      .def_readonly("wait", &ScoreBreakdown::wait)
      .def_readonly("s_trade", &ScoreBreakdown::s_trade)
      .def_readonly("s_unc", &ScoreBreakdown::s_unc)
      .def_readonly("s_pen", &ScoreBreakdown::s_pen)
      .def_readonly("s", &ScoreBreakdown::s)
      .def_readonly("s_df", &ScoreBreakdown::s_df)
      .def_readonly("kappa", &ScoreBreakdown::kappa)
      .def_readonly("s_final", &ScoreBreakdown::s_final);

  py::class_<RoutingDecision>(m, "RoutingDecision")
      .def_readonly("query_id", &RoutingDecision::query_id)
      .def_readonly("chosen", &RoutingDecision::chosen)
      .def_readonly("chosen_index", &RoutingDecision::chosen_index)
      .def_readonly("breakdown", &RoutingDecision::breakdown);

  py::class_<Router>(m, "Router")
      .def(py::init<Catalog, RouterConfig, PredictorConfig>(), py::arg("catalog"),
           py::arg("config") = RouterConfig{}, py::arg("predictor") = PredictorConfig{})
      .def_property_readonly("catalog", &Router::catalog)
      .def_property_readonly("cost_scale", &Router::cost_scale)
      .def("set_lambda", [](Router& r, double lambda) {
        r.config().lambda = lambda;
        r.config().validate();
      })
      .def("embed", &Router::embed)
      .def("select", [](const Router& r, const Query& q, std::vector<double> waits) { return r.select(q, waits); },
           py::arg("query"), py::arg("waits") = std::vector<double>{})
      .def("select_online",
           [](Router& r, const Query& q, std::vector<double> waits) { return r.select_online(q, waits); },
           py::arg("query"), py::arg("waits") = std::vector<double>{})
      .def("offline_fit", [](Router& r, const std::vector<Query>& qs) { r.offline_fit(qs); })
      .def("refined_update", &Router::refined_update)
      .def("binary_update", &Router::binary_update)
      .def("add_candidate", &Router::add_candidate)
      .def("remove_candidate", &Router::remove_candidate)
      .def("uncertainty", [](const Router& r, std::size_t i, const Vector& e) { return r.arm(i).uncertainty.score(e); })
      .def("to_json", [](const Router& r) { return router_snapshot(r).dump(); })
      .def_static("from_json", [](const std::string& text) { return router_from_snapshot(json::parse(text)); });

  m.def("trade_score", &trade_score, py::arg("p_hat"), py::arg("c_hat"), py::arg("lambda_"));
  m.def("latency_penalty", &latency_penalty, py::arg("wait"), py::arg("config") = RouterConfig{});
  m.def("combine_scores", &combine_scores, py::arg("s_trade"), py::arg("s_unc"), py::arg("s_pen"),
        py::arg("config") = RouterConfig{});
  m.def("normalize", &normalize);
  m.def("intra_loss", [](const std::vector<Vector>& e, const std::vector<int>& labels, const Matrix& centers) {
    return intra_loss(e, labels, centers);
  });
  m.def("inter_loss", &inter_loss);
  m.def("total_loss", [](const std::vector<Vector>& e, const std::vector<int>& labels, const Matrix& centers) {
    return total_loss(e, labels, centers);
  });

  py::class_<ProjectionModel>(m, "ProjectionModel")
      .def_readonly("weight", &ProjectionModel::weight)
      .def_readonly("centers", &ProjectionModel::centers)
      .def("project", [](const ProjectionModel& p, const Vector& v) { return project(p, v); });
  m.def(
      "train_projection",
      [](const std::vector<Query>& qs, int d_route, int epochs, double lr, std::uint64_t seed) {
        std::vector<LabeledVector> rows;
        const auto labels = labels_of(qs);
        for (std::size_t i = 0; i < qs.size(); ++i) {
          if (labels[i] >= 0) rows.push_back({qs[i].base_embedding, labels[i]});
        }
        EmbedTrainConfig cfg;
        cfg.d_route = d_route;
        cfg.epochs = epochs;
        cfg.learning_rate = lr;
        cfg.seed = seed;
        EmbedTrainReport report;
        ProjectionModel model = train_projection(rows, cfg, &report);
        return py::make_tuple(model, report.initial_loss, report.final_loss);
      },
      py::arg("queries"), py::arg("d_route") = 0, py::arg("epochs") = 200, py::arg("learning_rate") = 0.05,
      py::arg("seed") = 42);

  m.def("uncertainty_after", [](const std::vector<Vector>& updates, const Vector& e) {
    ArmUncertainty a(static_cast<int>(e.size()));
    for (const auto& u : updates) a.update(u);
    return a.score(e);
  });

  m.def(
      "synthetic",
      [](std::size_t queries, int domains, int d_base, std::uint64_t seed, bool binary) {
        SyntheticSpec spec = default_synthetic_spec();
        spec.queries = queries;
        spec.domains = domains;
        spec.d_base = d_base;
        spec.seed = seed;
        spec.binary_quality = binary;
        for (auto& arm : spec.arms) arm.domain_quality.resize(static_cast<std::size_t>(domains), 0.5);
        SyntheticData d = make_synthetic(spec);
        return py::make_tuple(d.dataset.queries, d.catalog);
      },
      py::arg("queries") = 500, py::arg("domains") = 4, py::arg("d_base") = 16, py::arg("seed") = 42,
      py::arg("binary") = false);
  m.def("load_dataset", [](const std::string& path) { return load_dataset(path).queries; });
  m.def("save_dataset", [](const std::string& path, const std::vector<Query>& qs) {
    Dataset ds;
    ds.queries = qs;
    save_dataset(path, ds);
  });
  m.def("load_catalog", [](const std::string& path, int d_base) { return load_catalog(path, d_base); },
        py::arg("path"), py::arg("d_base") = 0);

  py::class_<CurvePoint>(m, "CurvePoint")
      .def_readonly("label", &CurvePoint::label)
      .def_readonly("lambda_", &CurvePoint::lambda)
      .def_readonly("total_quality", &CurvePoint::total_quality)
      .def_readonly("total_cost", &CurvePoint::total_cost)
      .def_readonly("timeout_count", &CurvePoint::timeout_count)
      .def_readonly("quality_vs_reference", &CurvePoint::quality_vs_reference)
      .def_readonly("cost_vs_reference", &CurvePoint::cost_vs_reference);

  m.def("lambda_grid", &lambda_grid, py::arg("n") = 25, py::arg("lo") = 1e-6, py::arg("hi") = 1e6);
  m.def(
      "train_router",
      [](const Catalog& c, const std::vector<Query>& train, const RouterConfig& cfg, const PredictorConfig& p) {
        return train_router(c, train, cfg, p);
      },
      py::arg("catalog"), py::arg("train"), py::arg("config") = RouterConfig{},
      py::arg("predictor") = PredictorConfig{});
  m.def(
      "sweep",
      [](const std::vector<Query>& test, const Router& r, const std::vector<double>& lambdas, const SimConfig& sim) {
        return sweep_lambda(test, r, lambdas, sim);
      },
      py::arg("test"), py::arg("router"), py::arg("lambdas"), py::arg("sim") = SimConfig{});
  m.def(
      "oracle",
      [](const std::vector<Query>& test, double threshold, const Catalog& c) { return oracle_curve(test, threshold, c); },
      py::arg("test"), py::arg("threshold"), py::arg("catalog"));
  m.def(
      "random_baseline",
      [](const std::vector<Query>& test, const Catalog& c, const SimConfig& sim, std::uint64_t seed) {
        return random_baseline(test, c, sim, seed);
      },
      py::arg("test"), py::arg("catalog"), py::arg("sim") = SimConfig{}, py::arg("seed") = 42);
  m.def(
      "single_llm_points",
      [](const std::vector<Query>& test, const Catalog& c, const SimConfig& sim) {
        return single_llm_points(test, c, sim);
      },
      py::arg("test"), py::arg("catalog"), py::arg("sim") = SimConfig{});
  m.def(
      "topk",
      [](const std::vector<Query>& test, const Router& r, std::size_t k, const SimConfig& sim) {
        return topk_policy(test, r, k, sim);
      },
      py::arg("test"), py::arg("router"), py::arg("k"), py::arg("sim") = SimConfig{});
}
