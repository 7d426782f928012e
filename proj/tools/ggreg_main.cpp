#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ggreg/csv.hpp"
#include "ggreg/evaluation.hpp"
#include "ggreg/json_io.hpp"
#include "ggreg/parallel.hpp"
#include "ggreg/rng.hpp"
#include "ggreg/simulation.hpp"
#include "ggreg/two_step.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitUserError = 2;
constexpr int kExitIoError = 3;
constexpr int kExitNumericError = 4;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

int default_threads(int flag_value) {
  if (flag_value != 0) return flag_value;
  if (const char* env = std::getenv("GGREG_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  return 0;  // resolve_threads picks all cores
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ggreg::io::IoError("cannot create directory " + dir);
}

void write_manifest(const std::string& dir, const std::string& command,
                    std::uint64_t seed, const json& config,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    double wall_seconds) {
  json manifest{{"schema_version", 1},
                {"command", command},
                {"seed", seed},
                {"tool_version", kVersion},
                {"config", config},
                {"inputs", inputs},
                {"outputs", outputs},
                {"wall_time_seconds", wall_seconds}};
  ggreg::io::write_file((fs::path(dir) / "manifest.json").string(),
                        manifest.dump(2) + "\n");
}

int run_simulate(const std::string& config_path, const std::string& out_dir) {
  Stopwatch watch;
  json config_json;
  try {
    config_json = json::parse(ggreg::io::read_file(config_path));
  } catch (const ggreg::io::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const json::exception& e) {
    std::cerr << "error: " << config_path << ": " << e.what() << "\n";
    return kExitUserError;
  }
  const ggreg::sim::SimConfig cfg =
      ggreg::io::sim_config_from_json(config_json);

  ensure_directory(out_dir);
  ggreg::Rng rng(cfg.seed);
  const ggreg::sim::GroundTruth truth =
      ggreg::sim::generate_ground_truth(cfg, rng);
  const ggreg::sim::Dataset data =
      ggreg::sim::sample_dataset(truth, cfg.n, cfg, rng);

  const fs::path out(out_dir);
  ggreg::io::write_csv((out / "X.csv").string(), data.X);
  ggreg::io::write_csv((out / "U.csv").string(), data.U);
  ggreg::io::write_file((out / "truth.json").string(),
                        ggreg::io::truth_to_json(truth).dump(2) + "\n");
  write_manifest(out_dir, "simulate", cfg.seed,
                 ggreg::io::sim_config_to_json(cfg),
                 {config_path},
                 {"X.csv", "U.csv", "truth.json"}, watch.seconds());
  std::cout << "wrote " << cfg.n << " samples (p=" << cfg.p
            << ", q=" << cfg.q << ") to " << out_dir << "\n";
  return kExitOk;
}

struct FitOptions {
  std::string x_path;
  std::string u_path;
  std::string out_dir;
  std::string method = "reggmm";
  std::string rule = "max";
  bool header = false;
  bool no_standardize = false;
  std::uint64_t seed = 0;
  int threads = 0;
  int lambda_grid_size = 30;
  double lambda_min_ratio = 0.01;
  double lambda1 = -1.0;  // <0 means BIC grid
  std::string u_point;
};

int run_fit(const FitOptions& opt) {
  Stopwatch watch;
  const ggreg::Matrix X = ggreg::io::read_csv(opt.x_path, opt.header);
  const ggreg::Matrix U = ggreg::io::read_csv(opt.u_path, opt.header);

  ggreg::twostep::PipelineConfig config;
  config.standardize_covariates = !opt.no_standardize;
  config.seed = opt.seed;
  config.threads = ggreg::resolve_threads(default_threads(opt.threads));
  config.lambda_grid_size = opt.lambda_grid_size;
  config.lambda_min_ratio = opt.lambda_min_ratio;
  if (opt.lambda1 >= 0.0) config.lambda1 = opt.lambda1;
  if (opt.rule == "min") {
    config.rule = ggreg::graph::SymmetrizeRule::kMin;
  } else if (opt.rule != "max") {
    std::cerr << "error: unknown symmetrization rule '" << opt.rule << "'\n";
    return kExitUserError;
  }

  ggreg::twostep::FittedModel model;
  if (opt.method == "reggmm") {
    model = ggreg::twostep::fit_pipeline(X, U, config);
  } else if (opt.method == "lasso") {
    model = ggreg::eval::fit_baseline_lasso(X, U, config);
  } else if (opt.method == "grouplasso") {
    model = ggreg::eval::fit_baseline_group_lasso(X, U, config);
  } else {
    std::cerr << "error: unknown method '" << opt.method << "'\n";
    return kExitUserError;
  }

  ensure_directory(opt.out_dir);
  const fs::path out(opt.out_dir);
  ggreg::io::write_file((out / "model.json").string(),
                        ggreg::io::fitted_model_to_json(model).dump(2) + "\n");

  // Edge list sorted by magnitude, ties by index for determinism.
  std::vector<ggreg::graph::PrecisionEdge> edges = model.precision.edges;
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    const double ma = std::abs(a.value), mb = std::abs(b.value);
    if (ma != mb) return ma > mb;
    return std::tie(a.j, a.k, a.h) < std::tie(b.j, b.k, b.h);
  });
  std::string edge_text = "# j k h value\n";
  for (const auto& e : edges) {
    edge_text += std::to_string(e.j) + " " + std::to_string(e.k) + " " +
                 std::to_string(e.h) + " " +
                 ggreg::io::format_double(e.value) + "\n";
  }
  ggreg::io::write_file((out / "edges.txt").string(), edge_text);

  std::vector<std::string> outputs{"model.json", "edges.txt"};
  if (!opt.u_point.empty()) {
    std::vector<double> coords;
    std::size_t start = 0;
    while (start <= opt.u_point.size()) {
      const std::size_t comma = opt.u_point.find(',', start);
      const std::string tok = opt.u_point.substr(
          start, comma == std::string::npos ? std::string::npos
                                            : comma - start);
      try {
        coords.push_back(std::stod(tok));
      } catch (const std::exception&) {
        std::cerr << "error: bad --u-point component '" << tok << "'\n";
        return kExitUserError;
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (static_cast<int>(coords.size()) != model.precision.q) {
      std::cerr << "error: --u-point needs " << model.precision.q
                << " components\n";
      return kExitUserError;
    }
    ggreg::Vector u(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) u(static_cast<int>(i)) = coords[i];
    ggreg::io::write_csv((out / "Omega_at_u.csv").string(),
                         ggreg::graph::precision_at(model.precision, u));
    outputs.push_back("Omega_at_u.csv");
  }

  json config_echo{{"method", opt.method},
                   {"standardize_covariates", config.standardize_covariates},
                   {"lambda_grid_size", config.lambda_grid_size},
                   {"lambda_min_ratio", config.lambda_min_ratio},
                   {"threads", config.threads}};
  if (config.lambda1) config_echo["lambda1"] = *config.lambda1;
  if (opt.method == "reggmm") {
    // Only the sparse group lasso carries a group-penalty ratio grid.
    json ratios = json::array();
    for (double r : config.ratio_grid) ratios.push_back(r);
    config_echo["ratio_grid"] =
        config.ratio_grid.empty() ? json("default") : json(ratios);
    config_echo["symmetrize_rule"] = opt.rule;
  }
  if (opt.method == "grouplasso") config_echo["symmetrize_rule"] = opt.rule;
  write_manifest(opt.out_dir, "fit", opt.seed, config_echo,
                 {opt.x_path, opt.u_path}, outputs, watch.seconds());
  std::cout << "fit " << model.precision.p << " nodes; "
            << model.precision.edges.size() << " nonzero edge coefficients\n";
  return kExitOk;
}

int run_evaluate(const std::string& model_path, const std::string& truth_path,
                 const std::string& out_path) {
  json model_json, truth_json;
  try {
    model_json = json::parse(ggreg::io::read_file(model_path));
    truth_json = json::parse(ggreg::io::read_file(truth_path));
  } catch (const ggreg::io::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  }
  const ggreg::io::StoredModel stored =
      ggreg::io::stored_model_from_json(model_json);
  const ggreg::sim::GroundTruth truth = ggreg::io::truth_from_json(truth_json);

  if (stored.precision.p != truth.precision.p ||
      stored.precision.q != truth.precision.q) {
    std::cerr << "error: model and truth dimensions disagree\n";
    return kExitUserError;
  }

  ggreg::twostep::FittedModel fitted;
  fitted.gamma_hat = stored.gamma;
  fitted.precision = stored.precision;

  const auto beta = ggreg::eval::selection_metrics(
      ggreg::eval::beta_support(fitted.precision),
      ggreg::eval::beta_support(truth.precision),
      ggreg::eval::beta_universe_size(truth.precision.p, truth.precision.q));
  const auto gamma = ggreg::eval::selection_metrics(
      ggreg::eval::gamma_support(fitted.gamma_hat),
      ggreg::eval::gamma_support(truth.gamma),
      static_cast<long>(truth.precision.p) * truth.precision.q);
  const auto [gamma_err, beta_err] =
      ggreg::eval::estimation_errors(fitted, truth);

  auto metrics_json = [](const ggreg::eval::SelectionMetrics& m) {
    return json{{"tpr", std::isnan(m.tpr) ? json() : json(m.tpr)},
                {"fpr", std::isnan(m.fpr) ? json() : json(m.fpr)},
                {"f1", std::isnan(m.f1) ? json() : json(m.f1)},
                {"tp", m.tp},
                {"fp", m.fp},
                {"fn", m.fn},
                {"tn", m.tn}};
  };
  json out{{"schema_version", 1},
           {"gamma", metrics_json(gamma)},
           {"beta", metrics_json(beta)},
           {"gamma_frobenius_error", gamma_err},
           {"beta_l2_error_sum", beta_err}};
  ggreg::io::write_file(out_path, out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int run_experiment_cmd(const std::string& table, int n, int p, int q, int reps,
                       std::uint64_t seed, int threads,
                       const std::string& out_dir) {
  Stopwatch watch;
  const bool known_row =
      (n == 200 || n == 400) &&
      ((p == 25 && (q == 50 || q == 100)) ||
       (p == 50 && (q == 50 || q == 100)));
  if (!known_row) {
    std::cerr << "error: unknown row; expected n in {200,400}, (p,q) in "
                 "{(25,50),(25,100),(50,50),(50,100)}\n";
    return kExitUserError;
  }
  if (table != "table1" && table != "table2") {
    std::cerr << "error: table must be 'table1' or 'table2'\n";
    return kExitUserError;
  }

  ggreg::sim::SimConfig cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.q = q;
  cfg.seed = seed;

  std::vector<ggreg::eval::Method> methods;
  if (table == "table1") {
    methods = {ggreg::eval::Method::kRegGmm};
  } else {
    methods = {ggreg::eval::Method::kRegGmm, ggreg::eval::Method::kLasso,
               ggreg::eval::Method::kGroupLasso};
  }

  const ggreg::eval::ReplicationReport report = ggreg::eval::run_experiment(
      cfg, methods, reps, ggreg::resolve_threads(default_threads(threads)));

  ensure_directory(out_dir);
  const fs::path out(out_dir);
  const std::string text = ggreg::io::report_to_text(report);
  ggreg::io::write_file((out / "report.json").string(),
                        ggreg::io::report_to_json(report).dump(2) + "\n");
  ggreg::io::write_file((out / "report.txt").string(), text);
  write_manifest(out_dir, "experiment", seed,
                 json{{"table", table},
                      {"config", ggreg::io::sim_config_to_json(cfg)},
                      {"replications", reps}},
                 {}, {"report.json", "report.txt"}, watch.seconds());
  std::cout << text;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian graphical regression: simulate, fit, evaluate, "
               "reproduce experiments"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset");
  std::string sim_config, sim_out;
  simulate->add_option("--config", sim_config, "JSON config file")->required();
  simulate->add_option("--out", sim_out, "output directory")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a model to CSV data");
  FitOptions fopt;
  fit->add_option("--x", fopt.x_path, "response matrix CSV (n x p)")->required();
  fit->add_option("--u", fopt.u_path, "covariate matrix CSV (n x q)")->required();
  fit->add_option("--out", fopt.out_dir, "output directory")->required();
  fit->add_option("--method", fopt.method, "reggmm | lasso | grouplasso");
  fit->add_option("--rule", fopt.rule, "symmetrization rule: max | min");
  fit->add_flag("--header", fopt.header, "skip one header line in the CSVs");
  fit->add_flag("--no-standardize", fopt.no_standardize,
                "fit on raw covariates");
  fit->add_option("--seed", fopt.seed, "seed recorded in the manifest");
  fit->add_option("--threads", fopt.threads,
                  "worker threads (0 = all cores; env GGREG_THREADS)");
  fit->add_option("--lambda1", fopt.lambda1,
                  "fixed mean-model penalty (default: per-row BIC)");
  fit->add_option("--lambda-grid-size", fopt.lambda_grid_size,
                  "points per tuning path");
  fit->add_option("--lambda-min-ratio", fopt.lambda_min_ratio,
                  "smallest lambda as a fraction of lambda_max");
  fit->add_option("--u-point", fopt.u_point,
                  "comma-separated u; also writes Omega_at_u.csv");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a model against truth");
  std::string eval_model, eval_truth, eval_out = "metrics.json";
  evaluate->add_option("--model", eval_model, "model.json from fit")->required();
  evaluate->add_option("--truth", eval_truth, "truth.json from simulate")->required();
  evaluate->add_option("--out", eval_out, "metrics output path");

  // experiment
  auto* experiment =
      app.add_subcommand("experiment", "Monte Carlo table reproduction");
  std::string exp_table = "table2", exp_out = "experiment_out";
  int exp_n = 400, exp_p = 25, exp_q = 50, exp_reps = 50, exp_threads = 0;
  std::uint64_t exp_seed = 20240101;
  experiment->add_option("--table", exp_table, "table1 | table2");
  experiment->add_option("--n", exp_n, "sample size (200 or 400)");
  experiment->add_option("--p", exp_p, "node count (25 or 50)");
  experiment->add_option("--q", exp_q, "covariate count (50 or 100)");
  experiment->add_option("--reps", exp_reps, "replication count");
  experiment->add_option("--seed", exp_seed, "master seed");
  experiment->add_option("--threads", exp_threads, "worker threads");
  experiment->add_option("--out", exp_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUserError;
  }

  try {
    if (*simulate) return run_simulate(sim_config, sim_out);
    if (*fit) return run_fit(fopt);
    if (*evaluate) return run_evaluate(eval_model, eval_truth, eval_out);
    if (*experiment) {
      return run_experiment_cmd(exp_table, exp_n, exp_p, exp_q, exp_reps,
                                exp_seed, exp_threads, exp_out);
    }
  } catch (const ggreg::io::CsvError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const ggreg::io::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const ggreg::io::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const ggreg::DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericError;
  }
  return kExitOk;
}
