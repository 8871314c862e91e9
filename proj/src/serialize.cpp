#include "mixroute/serialize.hpp"

#include <fstream>
#include <ostream>

#include "mixroute/data_io.hpp"

namespace mixroute {

json matrix_to_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw SchemaError(0, "matrix data length does not match its shape");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)].get<double>();
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

namespace {

const char* kind_name(RegressorKind k) { return k == RegressorKind::LinearRidge ? "linear-ridge" : "knn"; }

RegressorKind kind_from(const std::string& s) {
  if (s == "linear-ridge") return RegressorKind::LinearRidge;
  if (s == "knn" || s == "k-nearest-neighbor") return RegressorKind::KNearest;
  throw SchemaError(0, "unknown regressor kind '" + s + "'");
}

}  // namespace

json to_json(const Regressor& r) {
  json ex = json::array();
  for (const auto& x : r.exemplars()) ex.push_back(vector_to_json(x));
  return {{"kind", kind_name(r.kind())},
          {"target", r.target() == Target::Quality ? "quality" : "length"},
          {"dim", r.dim()},
          {"prior", r.prior()},
          {"knn_k", r.knn_k()},
          {"theta", vector_to_json(r.theta())},
          {"bias", r.bias()},
          {"exemplars", std::move(ex)},
          {"exemplar_targets", r.exemplar_targets()}};
}

Regressor regressor_from_json(const json& j) {
  const Target target = j.at("target").get<std::string>() == "quality" ? Target::Quality : Target::Length;
  Regressor r(kind_from(j.at("kind").get<std::string>()), target, j.at("dim").get<int>(),
              j.at("prior").get<double>(), j.at("knn_k").get<int>());
  std::vector<Vector> ex;
  for (const auto& x : j.at("exemplars")) ex.push_back(vector_from_json(x));
  r.set_state(vector_from_json(j.at("theta")), j.at("bias").get<double>(), std::move(ex),
              j.at("exemplar_targets").get<std::vector<double>>());
  return r;
}

json to_json(const ArmUncertainty& u) {
  return {{"A", matrix_to_json(u.a())}, {"A_inv", matrix_to_json(u.a_inv())}, {"updates", u.updates()}};
}

ArmUncertainty uncertainty_from_json(const json& j, int check_interval) {
  Matrix a = matrix_from_json(j.at("A"));
  ArmUncertainty u(static_cast<int>(a.rows()), check_interval);
  u.set_state(std::move(a), matrix_from_json(j.at("A_inv")), j.at("updates").get<std::size_t>());
  return u;
}

json to_json(const ArmState& s) {
  return {{"quality", to_json(s.quality)}, {"length", to_json(s.length)}, {"uncertainty", to_json(s.uncertainty)}};
}

ArmState arm_state_from_json(const json& j, int check_interval) {
  return {regressor_from_json(j.at("quality")), regressor_from_json(j.at("length")),
          uncertainty_from_json(j.at("uncertainty"), check_interval)};
}

json to_json(const FeedbackNet& net) {
  const auto& p = net.params();
  json recent = json::array();
  for (std::size_t k = 0; k < net.width(); ++k) {
    const auto& w = net.recent_scores(k);
    recent.push_back(std::vector<double>(w.begin(), w.end()));
  }
  return {{"w1", matrix_to_json(p.w1)}, {"b1", vector_to_json(p.b1)}, {"w2", matrix_to_json(p.w2)},
          {"b2", vector_to_json(p.b2)}, {"w3", matrix_to_json(p.w3)}, {"b3", vector_to_json(p.b3)},
          {"slots", net.slots()},       {"recent_scores", std::move(recent)}, {"window", net.window()}};
}

FeedbackNet feedback_net_from_json(const json& j) {
  FeedbackNet::Params p{matrix_from_json(j.at("w1")), vector_from_json(j.at("b1")),
                        matrix_from_json(j.at("w2")), vector_from_json(j.at("b2")),
                        matrix_from_json(j.at("w3")), vector_from_json(j.at("b3"))};
  std::vector<std::deque<double>> recent;
  for (const auto& w : j.at("recent_scores")) {
    const auto values = w.get<std::vector<double>>();
    recent.emplace_back(values.begin(), values.end());
  }
  FeedbackNet net;
  net.set_state(std::move(p), j.at("slots").get<std::vector<std::string>>(), std::move(recent),
                j.at("window").get<std::size_t>());
  return net;
}

json to_json(const ProjectionModel& m) {
  return {{"d_base", m.d_base()},
          {"d_route", m.d_route()},
          {"domains", m.domains()},
          {"weight", matrix_to_json(m.weight)},
          {"centers", matrix_to_json(m.centers)}};
}

ProjectionModel projection_from_json(const json& j) {
  ProjectionModel m{matrix_from_json(j.at("weight")), matrix_from_json(j.at("centers"))};
  if (m.d_base() != j.at("d_base").get<int>() || m.d_route() != j.at("d_route").get<int>() ||
      (m.domains() > 0 && m.centers.cols() != m.weight.rows())) {
    throw SchemaError(0, "projection dimensions are inconsistent");
  }
  return m;
}

json to_json(const RouterConfig& c) {
  return json::parse(dump_run_config(RunConfig{c, {}, {}, {}})).at("router");
}

json to_json(const PredictorConfig& c) {
  return json::parse(dump_run_config(RunConfig{{}, c, {}, {}})).at("predictor");
}

json router_snapshot(const Router& router) {
  json arms = json::array();
  const Catalog& catalog = router.catalog();
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    arms.push_back({{"llm_id", catalog.at(i).llm_id}, {"state", to_json(router.arm(i))}});
  }
  RunConfig cfg{router.config(), router.predictor_config(), {}, {}};
  json out{{"format", "mixroute-router/1"},
           {"catalog", json::parse(dump_catalog(catalog))},
           {"config", json::parse(dump_run_config(cfg))},
           {"cost_scale", router.cost_scale()},
           {"arms", std::move(arms)},
           {"feedback_net", to_json(router.feedback_net())}};
  out["projection"] = router.projection() ? to_json(*router.projection()) : json(nullptr);
  return out;
}

Router router_from_snapshot(const json& j) {
  if (j.value("format", "") != "mixroute-router/1") throw SchemaError(0, "not a router snapshot");
  const RunConfig cfg = parse_run_config(j.at("config").dump());
  const json& cat = j.at("catalog");
  Catalog catalog = parse_catalog(cat.dump());
  std::optional<ProjectionModel> projection;
  if (!j.at("projection").is_null()) projection = projection_from_json(j.at("projection"));
  Router router(catalog, cfg.router, cfg.predictor, projection);
  std::vector<ArmState> arms;
  for (const auto& a : j.at("arms")) arms.push_back(arm_state_from_json(a.at("state"), cfg.router.uncertainty_check_interval));
  router.restore(std::move(arms), feedback_net_from_json(j.at("feedback_net")), j.at("cost_scale").get<double>());
  return router;
}

void save_router(const std::filesystem::path& path, const Router& router) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << router_snapshot(router).dump() << '\n';
}

Router load_router(const std::filesystem::path& path) {
  try {
    return router_from_snapshot(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

std::string arm_state_bytes(const Router& router, std::size_t index) {
  return to_json(router.arm(index)).dump();
}

json to_json(const RoutingDecision& d) {
  json rows = json::array();
  for (const auto& b : d.breakdown) {
    rows.push_back({{"llm_id", b.llm_id},
                    {"p_hat", b.p_hat},
                    {"predicted_len", b.predicted_len},
                    {"cost_usd", b.cost_usd},
                    {"c_hat", b.c_hat},
                    {"wait", b.wait},
                    {"s_trade", b.s_trade},
                    {"s_unc", b.s_unc},
                    {"s_pen", b.s_pen},
                    {"s_df", b.s_df ? json(*b.s_df) : json(nullptr)},
                    {"kappa", b.kappa ? json(*b.kappa) : json(nullptr)},
                    {"s_final", b.s_final}});
  }
  return {{"query_id", d.query_id},
          {"chosen", d.chosen},
          {"timestamp", d.timestamp},
          {"online", d.online},
          {"breakdown", std::move(rows)}};
}

json to_json(const QueryOutcome& r) {
  return {{"query_id", r.query_id},
          {"chosen", r.chosen.empty() ? json(nullptr) : json(r.chosen.front())},
          {"chosen_set", r.chosen},
          {"arrival", r.arrival},
          {"quality", r.quality},
          {"cost_usd", r.cost},
          {"wait_s", r.wait},
          {"timed_out", r.timed_out}};
}

json summary_json(const SimResult& r) {
  return {{"queries", r.records.size()},
          {"total_quality", r.total_quality},
          {"total_cost", r.total_cost},
          {"timeouts", r.timeout_count}};
}

void write_decision_log(std::ostream& out, const SimResult& r) {
  for (const auto& d : r.decisions) {
    if (!d.chosen.empty()) out << to_json(d).dump() << '\n';
  }
}

void write_outcomes(std::ostream& out, const SimResult& r) {
  for (const auto& rec : r.records) out << to_json(rec).dump() << '\n';
}

}  // namespace mixroute
