#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "mixroute/core.hpp"
#include "mixroute/embed_space.hpp"
#include "mixroute/feedback_net.hpp"
#include "mixroute/predictors.hpp"
#include "mixroute/router.hpp"
#include "mixroute/stream_sim.hpp"
#include "mixroute/uncertainty.hpp"

// JSON encodings of model state. Matrices are written as
// {"rows": r, "cols": c, "data": [row-major values]}; doubles are printed
// with enough digits to round-trip exactly, so equal states produce equal
// bytes.
namespace mixroute {

using json = nlohmann::json;

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);
json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j);

json to_json(const Regressor& r);
Regressor regressor_from_json(const json& j);

json to_json(const ArmUncertainty& u);
ArmUncertainty uncertainty_from_json(const json& j, int check_interval = 1);

json to_json(const ArmState& s);
ArmState arm_state_from_json(const json& j, int check_interval = 1);

json to_json(const FeedbackNet& net);
FeedbackNet feedback_net_from_json(const json& j);

/// {"d_base", "d_route", "domains", "weight", "centers"}.
json to_json(const ProjectionModel& m);
ProjectionModel projection_from_json(const json& j);

json to_json(const RouterConfig& cfg);
json to_json(const PredictorConfig& cfg);

/// Complete router snapshot: catalog (including inactive entries), configs,
/// optional projection, per-arm state keyed by llm_id, feedback net, cost
/// scale.
json router_snapshot(const Router& router);
Router router_from_snapshot(const json& j);
void save_router(const std::filesystem::path& path, const Router& router);
Router load_router(const std::filesystem::path& path);

/// Serialized predictor + uncertainty state of one arm.
std::string arm_state_bytes(const Router& router, std::size_t index);

/// One decision-log record: query_id, chosen, timestamp, online, and a
/// breakdown list of {llm_id, p_hat, c_hat, cost_usd, wait, s_trade, s_unc,
/// s_pen, s_df, kappa, s_final}.
json to_json(const RoutingDecision& d);
json to_json(const QueryOutcome& r);
/// Aggregates of a simulation (queries, total_quality, total_cost, timeouts).
json summary_json(const SimResult& r);

/// Appends one JSON line per decision.
void write_decision_log(std::ostream& out, const SimResult& r);
/// Appends one JSON line per query outcome.
void write_outcomes(std::ostream& out, const SimResult& r);

}  // namespace mixroute
