#pragma once

#include <string>

#include <json.hpp>

#include "ggreg/evaluation.hpp"
#include "ggreg/simulation.hpp"
#include "ggreg/two_step.hpp"

namespace ggreg::io {

struct SchemaError : Error {
  using Error::Error;
};

nlohmann::json precision_to_json(const graph::PrecisionModel& model);
graph::PrecisionModel precision_from_json(const nlohmann::json& j);

nlohmann::json sim_config_to_json(const sim::SimConfig& cfg);
sim::SimConfig sim_config_from_json(const nlohmann::json& j);

nlohmann::json truth_to_json(const sim::GroundTruth& truth);
sim::GroundTruth truth_from_json(const nlohmann::json& j);

nlohmann::json fitted_model_to_json(const twostep::FittedModel& model);

/// Reads back what cmd_evaluate needs: gamma, precision, diagnostics.
/// Node coefficient vectors are not part of the serialized form.
struct StoredModel {
  Matrix gamma;
  graph::PrecisionModel precision;
};
StoredModel stored_model_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const eval::ReplicationReport& report);

/// Aligned plain-text tables in the layout of the paper's result tables:
/// method, TPR, FPR, F1, error, each as "mean (SE)".
std::string report_to_text(const eval::ReplicationReport& report);

}  // namespace ggreg::io
