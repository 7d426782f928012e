#include "ggreg/json_io.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace ggreg::io {

using nlohmann::json;

namespace {

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& j) {
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = j[i].get<double>();
  return v;
}

json matrix_to_json(const Matrix& m) {
  // Row-major nested arrays.
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, int expected_cols = -1) {
  const int rows = static_cast<int>(j.size());
  if (rows == 0) {
    return Matrix(0, std::max(expected_cols, 0));
  }
  const int cols = static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols) {
      throw SchemaError("ragged matrix in JSON");
    }
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

void require_schema(const json& j, const char* what) {
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1) {
    throw SchemaError(std::string(what) + ": unsupported or missing schema_version");
  }
}

std::string cell(const eval::MetricSummary& s, int precision) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision);
  if (std::isnan(s.mean)) {
    out << "n/a";
  } else {
    out << s.mean << " (" << s.se << ")";
  }
  return out.str();
}

}  // namespace

json precision_to_json(const graph::PrecisionModel& model) {
  json edges = json::array();
  for (const auto& e : model.edges) {
    edges.push_back({{"j", e.j}, {"k", e.k}, {"h", e.h}, {"value", e.value}});
  }
  return json{{"p", model.p},
              {"q", model.q},
              {"sigma_diag", vector_to_json(model.sigma_diag)},
              {"edges", std::move(edges)}};
}

graph::PrecisionModel precision_from_json(const json& j) {
  graph::PrecisionModel model;
  model.p = j.at("p").get<int>();
  model.q = j.at("q").get<int>();
  model.sigma_diag = vector_from_json(j.at("sigma_diag"));
  if (model.sigma_diag.size() != model.p) {
    throw SchemaError("sigma_diag length does not match p");
  }
  for (const auto& e : j.at("edges")) {
    graph::PrecisionEdge edge;
    edge.j = e.at("j").get<int>();
    edge.k = e.at("k").get<int>();
    edge.h = e.at("h").get<int>();
    edge.value = e.at("value").get<double>();
    if (edge.j < 0 || edge.k <= edge.j || edge.k >= model.p || edge.h < 0 ||
        edge.h > model.q) {
      throw SchemaError("edge indices out of range");
    }
    model.edges.push_back(edge);
  }
  model.sort_edges();
  return model;
}

json sim_config_to_json(const sim::SimConfig& cfg) {
  return json{{"schema_version", 1},
              {"n", cfg.n},
              {"p", cfg.p},
              {"q", cfg.q},
              {"q_e", cfg.q_e},
              {"v_e", cfg.v_e},
              {"s_gamma", cfg.s_gamma},
              {"gamma_value", cfg.gamma_value},
              {"powerlaw_exponent", cfg.powerlaw_exponent},
              {"coef_low", cfg.coef_low},
              {"coef_high", cfg.coef_high},
              {"discrete_fraction", cfg.discrete_fraction},
              {"seed", cfg.seed}};
}

sim::SimConfig sim_config_from_json(const json& j) {
  require_schema(j, "simulation config");
  sim::SimConfig cfg;
  try {
    cfg.n = j.at("n").get<int>();
    cfg.p = j.at("p").get<int>();
    cfg.q = j.at("q").get<int>();
    if (j.contains("q_e")) cfg.q_e = j["q_e"].get<int>();
    if (j.contains("v_e")) cfg.v_e = j["v_e"].get<double>();
    if (j.contains("s_gamma")) cfg.s_gamma = j["s_gamma"].get<double>();
    if (j.contains("gamma_value")) cfg.gamma_value = j["gamma_value"].get<double>();
    if (j.contains("powerlaw_exponent")) {
      cfg.powerlaw_exponent = j["powerlaw_exponent"].get<double>();
    }
    if (j.contains("coef_low")) cfg.coef_low = j["coef_low"].get<double>();
    if (j.contains("coef_high")) cfg.coef_high = j["coef_high"].get<double>();
    if (j.contains("discrete_fraction")) {
      cfg.discrete_fraction = j["discrete_fraction"].get<double>();
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("simulation config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json truth_to_json(const sim::GroundTruth& truth) {
  json supports = json::array();
  for (const auto& s : truth.supports) supports.push_back(s);
  return json{{"schema_version", 1},
              {"gamma", matrix_to_json(truth.gamma)},
              {"precision", precision_to_json(truth.precision)},
              {"effective_covariates", truth.effective_covariates},
              {"supports", std::move(supports)},
              {"pd_scale_factor", truth.pd_scale_factor}};
}

sim::GroundTruth truth_from_json(const json& j) {
  require_schema(j, "truth");
  sim::GroundTruth truth;
  try {
    truth.precision = precision_from_json(j.at("precision"));
    truth.gamma = matrix_from_json(j.at("gamma"), truth.precision.q);
    truth.effective_covariates =
        j.at("effective_covariates").get<std::vector<int>>();
    truth.supports = j.at("supports").get<std::vector<std::vector<int>>>();
    truth.pd_scale_factor = j.at("pd_scale_factor").get<double>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("truth: ") + e.what());
  }
  return truth;
}

json fitted_model_to_json(const twostep::FittedModel& model) {
  json nodes = json::array();
  for (const auto& fit : model.node_fits) {
    nodes.push_back({{"j", fit.layout.j},
                     {"chosen_lambda", fit.chosen_lambda},
                     {"chosen_lambda_group", fit.chosen_lambda_group},
                     {"bic", std::isnan(fit.bic) ? json() : json(fit.bic)},
                     {"support_size", fit.support_size},
                     {"noise_variance", fit.noise_variance}});
  }
  json out{{"schema_version", 1},
           {"gamma", matrix_to_json(model.gamma_hat)},
           {"precision", precision_to_json(model.precision)},
           {"nodes", std::move(nodes)}};
  if (model.standardization) {
    out["standardization"] = {
        {"covariate_means", vector_to_json(model.standardization->covariate_means)},
        {"covariate_scales", vector_to_json(model.standardization->covariate_scales)},
        {"x_means", vector_to_json(model.standardization->x_means)}};
  } else {
    out["standardization"] = nullptr;
  }
  return out;
}

StoredModel stored_model_from_json(const json& j) {
  require_schema(j, "model");
  StoredModel model;
  try {
    model.precision = precision_from_json(j.at("precision"));
    model.gamma = matrix_from_json(j.at("gamma"), model.precision.q);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model: ") + e.what());
  }
  return model;
}

json report_to_json(const eval::ReplicationReport& report) {
  auto summary = [](const eval::MetricSummary& s) {
    return json{{"mean", std::isnan(s.mean) ? json() : json(s.mean)},
                {"se", std::isnan(s.se) ? json() : json(s.se)},
                {"included", s.included}};
  };
  json methods = json::array();
  for (const auto& m : report.methods) {
    json reps = json::array();
    for (const auto& r : m.replications) {
      if (r.failed) {
        reps.push_back({{"failed", true}, {"error", r.error}});
      } else {
        reps.push_back({{"beta_tpr", r.beta_tpr},
                        {"beta_fpr", r.beta_fpr},
                        {"beta_f1", r.beta_f1},
                        {"beta_error", r.beta_error},
                        {"gamma_tpr", r.gamma_tpr},
                        {"gamma_fpr", r.gamma_fpr},
                        {"gamma_f1", r.gamma_f1},
                        {"gamma_error", r.gamma_error}});
      }
    }
    methods.push_back({{"method", eval::method_name(m.method)},
                       {"failures", m.failures},
                       {"beta_tpr", summary(m.beta_tpr)},
                       {"beta_fpr", summary(m.beta_fpr)},
                       {"beta_f1", summary(m.beta_f1)},
                       {"beta_error", summary(m.beta_error)},
                       {"gamma_tpr", summary(m.gamma_tpr)},
                       {"gamma_fpr", summary(m.gamma_fpr)},
                       {"gamma_f1", summary(m.gamma_f1)},
                       {"gamma_error", summary(m.gamma_error)},
                       {"replications", std::move(reps)}});
  }
  return json{{"schema_version", 1},
              {"config", sim_config_to_json(report.config)},
              {"replication_count", report.replications},
              {"methods", std::move(methods)}};
}

std::string report_to_text(const eval::ReplicationReport& report) {
  std::ostringstream out;
  const auto& cfg = report.config;
  out << "n=" << cfg.n << "  (p,q)=(" << cfg.p << "," << cfg.q
      << ")  R=" << report.replications << "\n\n";

  auto print_block = [&](const std::string& title, bool gamma) {
    out << title << "\n";
    out << std::left << std::setw(12) << "method" << std::right
        << std::setw(16) << "TPR" << std::setw(18) << "FPR" << std::setw(16)
        << "F1" << std::setw(16) << "error"
        << "\n";
    for (const auto& m : report.methods) {
      out << std::left << std::setw(12) << eval::method_name(m.method)
          << std::right << std::setw(16)
          << cell(gamma ? m.gamma_tpr : m.beta_tpr, 3) << std::setw(18)
          << cell(gamma ? m.gamma_fpr : m.beta_fpr, 4) << std::setw(16)
          << cell(gamma ? m.gamma_f1 : m.beta_f1, 3) << std::setw(16)
          << cell(gamma ? m.gamma_error : m.beta_error, 3) << "\n";
    }
    out << "\n";
  };
  print_block("mean coefficients (Gamma)", true);
  print_block("precision coefficients (beta)", false);

  int failures = 0;
  for (const auto& m : report.methods) failures += m.failures;
  if (failures > 0) {
    out << "failed replications: " << failures << "\n";
  }
  return out.str();
}

}  // namespace ggreg::io
