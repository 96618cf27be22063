#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "siren/attribution.hpp"
#include "siren/baselines.hpp"
#include "siren/bench.hpp"
#include "siren/error.hpp"
#include "siren/fcm.hpp"
#include "siren/io.hpp"
#include "siren/parallel.hpp"
#include "siren/score.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace siren;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Settings shared by every command. A config file supplies defaults and
// flags given on the command line win.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t jobs = 0;
  std::string out = ".";
  std::string in = ".";
  std::string method = "siren";
  std::vector<std::string> methods;
  std::string suite = "random";
  std::optional<std::string> kind;
  std::string model = "model.json";
  std::string outlier = "outlier.json";
  std::string preset = "desk";
  std::optional<std::size_t> n_cases;
  std::optional<std::size_t> m;
  std::optional<std::size_t> n_steps;
  std::optional<std::size_t> epochs;
  bool deterministic = false;
  bool skip_scores = false;
};

template <typename T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

template <typename T>
void take(const json& j, const char* key, std::optional<T>& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

RunConfig load_config(const fs::path& path) {
  static const std::vector<std::string> known{
      "seed",  "jobs",    "out",     "in",      "method", "methods",       "suite",
      "kind",  "model",   "outlier", "preset",  "n_cases", "m",            "n_steps",
      "epochs", "deterministic", "skip_scores"};
  const json j = read_json_file(path);
  if (!j.is_object()) throw ParseError(fmt::format("{}: config must be a JSON object", path.string()));
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw UsageError(fmt::format("{}: unknown config key '{}'", path.string(), key));
    }
  }
  RunConfig c;
  try {
    take(j, "seed", c.seed);
    take(j, "jobs", c.jobs);
    take(j, "out", c.out);
    take(j, "in", c.in);
    take(j, "method", c.method);
    take(j, "methods", c.methods);
    take(j, "suite", c.suite);
    take(j, "kind", c.kind);
    take(j, "model", c.model);
    take(j, "outlier", c.outlier);
    take(j, "preset", c.preset);
    take(j, "n_cases", c.n_cases);
    take(j, "m", c.m);
    take(j, "n_steps", c.n_steps);
    take(j, "epochs", c.epochs);
    take(j, "deterministic", c.deterministic);
    take(j, "skip_scores", c.skip_scores);
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return c;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

MechanismKind parse_kind(const std::string& name) {
  try {
    return mechanism_kind_from_string(name);
  } catch (const ArgumentError&) {
    throw UsageError(fmt::format("unknown kind '{}' (valid: linear, anm, lsn)", name));
  }
}

Suite parse_suite(const std::string& name) {
  try {
    return suite_from_string(name);
  } catch (const std::exception&) {
    throw UsageError(
        fmt::format("unknown suite '{}' (valid: random, microservice, supplychain)", name));
  }
}

void check_method(const std::string& name) {
  if (!is_method(name)) {
    throw UsageError(fmt::format(
        "unknown method '{}' (valid: siren, naive, traversal, circa, causalrca, bigen)", name));
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("{}: {}", dir.string(), ec.message()));
}

int cmd_generate(const RunConfig& cfg) {
  const Suite suite = parse_suite(cfg.suite);
  ExperimentConfig ec;
  ec.seed = cfg.seed;
  BenchCase bc = generate_case(suite, ec, derive_seed(cfg.seed, "generate"));
  const fs::path out(cfg.out);
  ensure_dir(out);
  write_json_file(out / "graph.json", to_json(bc.dag()));
  write_data_csv(out / "normal_data.csv", bc.normal_data);
  write_json_file(out / "outlier.json",
                  {{"x", to_vector(bc.outlier)}, {"noise", to_vector(bc.outlier_noise)}});
  write_json_file(out / "ground_truth.json", to_json(bc.truth));
  spdlog::info("wrote {} case with {} nodes to {}", to_string(suite), bc.dag().n_nodes(),
               out.string());
  return kOk;
}

int cmd_fit(const RunConfig& cfg) {
  const fs::path in(cfg.in);
  const Dag dag = dag_from_json(read_json_file(in / "graph.json"));
  const Eigen::MatrixXd data = read_data_csv(in / "normal_data.csv", dag.n_nodes());
  const MechanismKind kind =
      cfg.kind ? parse_kind(*cfg.kind) : default_kind(parse_suite(cfg.suite));

  FcmFitConfig fit;
  fit.seed = derive_seed(cfg.seed, "fit");
  if (cfg.epochs) fit.mean.epochs = *cfg.epochs;
  FcmFitReport fit_report;
  FittedFcm fcm = fit_fcm(dag, data, kind, fit, &fit_report);

  json bundle{{"kind", to_string(kind)},
              {"fcm", to_json(fcm)},
              {"stats", to_json(compute_stats(data))}};
  json diagnostics{{"fcm_final_losses", json::array()}, {"warnings", fit_report.warnings}};
  for (double v : fit_report.final_losses) {
    diagnostics["fcm_final_losses"].push_back(std::isfinite(v) ? json(v) : json(nullptr));
  }
  if (!cfg.skip_scores) {
    ScoreTrainConfig sc;
    sc.seed = derive_seed(cfg.seed, "score");
    if (cfg.epochs) sc.epochs = *cfg.epochs;
    ScoreSetReport score_report;
    ScoreSet scores = train_score_set(fcm, data, NoiseSchedule(), sc, &score_report);
    bundle["scores"] = to_json(scores);
    diagnostics["score_final_losses"] = score_report.final_losses;
    for (const auto& w : score_report.warnings) diagnostics["warnings"].push_back(w);
  }
  for (const auto& w : diagnostics["warnings"]) spdlog::warn("{}", w.get<std::string>());
  bundle["diagnostics"] = diagnostics;

  const fs::path out(cfg.out);
  ensure_dir(out);
  write_json_file(out / "model.json", bundle);
  spdlog::info("fitted {} model on {} rows, wrote {}", to_string(kind), data.rows(),
               (out / "model.json").string());
  return kOk;
}

AttributionResult run_method(const std::string& method, const json& bundle, const FittedFcm& fcm,
                             std::span<const double> x, const RunConfig& cfg) {
  const NodeId leaf = fcm.dag().leaf();
  if (method == "naive") {
    return naive_zscore(data_stats_from_json(bundle.at("stats")), x);
  }
  if (method == "traversal") {
    return traversal(fcm.dag(), data_stats_from_json(bundle.at("stats")), x, leaf);
  }
  if (method == "circa") {
    try {
      return circa(fcm, x);
    } catch (const ArgumentError& e) {
      throw UsageError(fmt::format("circa needs a linear model bundle: {}", e.what()));
    }
  }
  if (method == "causalrca") {
    CausalRcaConfig c{50, 500, 50, false, derive_seed(cfg.seed, "causalrca")};
    return causalrca_shapley(fcm, x, leaf, c);
  }
  if (method == "bigen") {
    BigenConfig c;
    c.seed = derive_seed(cfg.seed, "bigen");
    return bigen_ig(fcm, x, leaf, c);
  }
  if (!bundle.contains("scores")) {
    throw ConfigurationError("siren needs score models; refit without --skip-scores");
  }
  SirenConfig c;
  c.seed = derive_seed(cfg.seed, "siren");
  c.deterministic = cfg.deterministic;
  if (cfg.m) c.m = *cfg.m;
  if (cfg.n_steps) c.n_steps = *cfg.n_steps;
  return siren_attribute(fcm, score_set_from_json(bundle.at("scores")), x, leaf, c);
}

int cmd_attribute(const RunConfig& cfg) {
  check_method(cfg.method);
  const json bundle = read_json_file(cfg.model);
  FittedFcm fcm = [&] {
    try {
      return fcm_from_json(bundle.at("fcm"));
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("{}: {}", cfg.model, e.what()));
    }
  }();
  const json outlier = read_json_file(cfg.outlier);
  std::vector<double> x;
  try {
    x = outlier.at("x").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", cfg.outlier, e.what()));
  }
  if (x.size() != fcm.n_nodes()) {
    throw UsageError(fmt::format("outlier has {} values but the model has {} nodes", x.size(),
                                 fcm.n_nodes()));
  }

  const AttributionResult result = run_method(cfg.method, bundle, fcm, x, cfg);
  for (const auto& w : result.warnings) spdlog::warn("{}", w);

  const fs::path out(cfg.out);
  ensure_dir(out);
  write_json_file(out / "attribution.json", to_json(result));

  std::printf("%-6s %-6s %14s\n", "rank", "node", "xi");
  for (std::size_t r = 0; r < result.ranking.size(); ++r) {
    const NodeId j = result.ranking[r];
    std::printf("%-6zu n%-5zu %14.6g\n", r + 1, j, result.xi[j]);
  }
  return kOk;
}

int cmd_bench(const RunConfig& cfg) {
  const Suite suite = parse_suite(cfg.suite);
  ExperimentConfig ec;
  ec.seed = cfg.seed;
  if (cfg.preset == "smoke") {
    ec.n_cases = 2;
    ec.methods = {"naive", "traversal"};
    ec.random.n_nodes_min = ec.random.n_nodes_max = 8;
    ec.random.min_depth = 3;
  } else if (cfg.preset == "full") {
    const auto filter = ec.random.filter;
    ec.random = RandomGraphConfig::full_scale();
    ec.random.filter = filter;
  } else if (cfg.preset != "desk") {
    throw UsageError(fmt::format("unknown preset '{}' (valid: smoke, desk, full)", cfg.preset));
  }
  if (!cfg.methods.empty()) ec.methods = cfg.methods;
  for (const auto& m : ec.methods) check_method(m);
  if (cfg.n_cases) ec.n_cases = *cfg.n_cases;
  if (cfg.kind) ec.kind = parse_kind(*cfg.kind);
  if (cfg.epochs) {
    ec.fit.mean.epochs = *cfg.epochs;
    ec.score.epochs = *cfg.epochs;
  }
  if (cfg.m) ec.siren.m = *cfg.m;
  if (cfg.n_steps) ec.siren.n_steps = *cfg.n_steps;
  ec.siren.deterministic = cfg.deterministic;

  const ExperimentReport report = run_experiment(suite, ec);
  const fs::path out(cfg.out);
  ensure_dir(out);
  write_json_file(out / "report.json", to_json(report));
  write_text_file(out / "ndcg.csv", ndcg_csv(report));
  write_text_file(out / "rankings.csv", rankings_csv(report));

  int code = kOk;
  for (const auto& s : report.summary) {
    std::printf("%-10s mean NDCG %.4f (sd %.4f) over %zu cases\n", s.method.c_str(),
                s.mean_across_k, s.std_across_k, s.n_succeeded);
    if (s.n_succeeded == 0) {
      spdlog::error("{} failed on every case", s.method);
      code = kNumerical;
    }
  }
  return code;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("siren-rca");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("SIREN_RCA_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Root cause attribution for outliers in causal systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs, n_cases, m, n_steps, epochs;
  std::optional<std::string> out, in, method, suite, kind, model, outlier, preset;
  std::optional<std::vector<std::string>> methods;
  bool deterministic = false, skip_scores = false;

  app.add_option("--config", config_path, "flat JSON file with default settings");
  app.add_option("--seed", seed, "global seed");
  app.add_option("--jobs", jobs, "worker thread cap (0 = hardware)");
  app.add_option("--out", out, "output directory");
  app.add_option("--suite", suite, "random | microservice | supplychain");
  app.add_option("--kind", kind, "linear | anm | lsn");
  app.add_option("--epochs", epochs, "training epochs for every network");

  auto* gen = app.add_subcommand("generate", "sample a benchmark case");
  gen->fallthrough();

  auto* fit = app.add_subcommand("fit", "fit mechanisms and score models");
  fit->add_option("--in", in, "directory holding graph.json and normal_data.csv");
  fit->add_flag("--skip-scores", skip_scores, "fit mechanisms only");
  fit->fallthrough();

  auto* attr = app.add_subcommand("attribute", "rank root causes of one outlier");
  attr->add_option("--model", model, "model bundle written by fit");
  attr->add_option("--outlier", outlier, "outlier JSON written by generate");
  attr->add_option("--method", method, "siren | naive | traversal | circa | causalrca | bigen");
  attr->add_option("--m", m, "SIREN trajectories");
  attr->add_option("--n-steps", n_steps, "SIREN sampler steps");
  attr->add_flag("--deterministic", deterministic, "drift-only sampler");
  attr->fallthrough();

  auto* bench = app.add_subcommand("bench", "run a benchmark suite and score NDCG@k");
  bench->add_option("--method", method, "single method to run");
  bench->add_option("--methods", methods, "methods to run")->delimiter(',');
  bench->add_option("--preset", preset, "smoke | desk | full");
  bench->add_option("--n-cases", n_cases, "number of cases");
  bench->add_option("--m", m, "SIREN trajectories");
  bench->add_option("--n-steps", n_steps, "SIREN sampler steps");
  bench->add_flag("--deterministic", deterministic, "drift-only SIREN sampler");
  bench->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (jobs) cfg.jobs = *jobs;
    if (out) cfg.out = *out;
    if (in) cfg.in = *in;
    if (method) cfg.method = *method;
    if (methods) cfg.methods = *methods;
    if (suite) cfg.suite = *suite;
    if (kind) cfg.kind = *kind;
    if (model) cfg.model = *model;
    if (outlier) cfg.outlier = *outlier;
    if (preset) cfg.preset = *preset;
    if (n_cases) cfg.n_cases = *n_cases;
    if (m) cfg.m = *m;
    if (n_steps) cfg.n_steps = *n_steps;
    if (epochs) cfg.epochs = *epochs;
    if (deterministic) cfg.deterministic = true;
    if (skip_scores) cfg.skip_scores = true;
    if (bench->parsed() && method && !methods) cfg.methods = {*method};
    set_max_jobs(cfg.jobs);

    if (gen->parsed()) return cmd_generate(cfg);
    if (fit->parsed()) return cmd_fit(cfg);
    if (attr->parsed()) return cmd_attribute(cfg);
    return cmd_bench(cfg);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const ArgumentError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const ConfigurationError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return kData;
  } catch (const IoError& e) {
    spdlog::error("{}", e.what());
    return kData;
  } catch (const StructuralError& e) {
    spdlog::error("{}", e.what());
    return kData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kNumerical;
  }
}
