#include "siren/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <functional>
#include <random>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "siren/error.hpp"
#include "siren/parallel.hpp"

namespace siren {
namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// 1 to 3 distinct nodes of the candidate set, ascending.
std::vector<NodeId> pick_root_causes(std::span<const NodeId> candidates,
                                     std::mt19937_64& rng) {
  std::vector<NodeId> pool(candidates.begin(), candidates.end());
  const std::size_t k = std::min<std::size_t>(1 + rng() % 3, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

using Injector = std::function<void(std::mt19937_64&, GroundTruth&, Eigen::VectorXd&)>;

BenchCase build_case(FittedFcm generator, std::size_t n_rows, std::uint64_t seed,
                     const OutlierFilter& filter, const Injector& inject) {
  BenchCase c;
  c.normal_data = generator.sample(n_rows, derive_seed(seed, "normal"));
  const auto leaf = static_cast<Eigen::Index>(generator.dag().leaf());
  const Eigen::VectorXd col = c.normal_data.col(leaf);
  const double mean = col.mean();
  const double sd = std::sqrt((col.array() - mean).square().mean());

  std::mt19937_64 rng(derive_seed(seed, "inject"));
  const std::size_t tries = std::max<std::size_t>(1, filter.max_tries);
  double best = -1.0;
  for (std::size_t attempt = 0; attempt < tries; ++attempt) {
    GroundTruth truth;
    Eigen::VectorXd z =
        generator.sample_noise(1, derive_seed(seed, "outlier", attempt)).row(0).transpose();
    inject(rng, truth, z);
    Eigen::VectorXd x =
        generator.forward(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
    const double leaf_z = sd > 0.0 ? std::abs(x(leaf) - mean) / sd : 0.0;
    if (leaf_z > best) {
      best = leaf_z;
      c.outlier = std::move(x);
      c.outlier_noise = std::move(z);
      c.truth = std::move(truth);
    }
    if (leaf_z >= filter.min_leaf_zscore) break;
  }
  c.generator = std::move(generator);
  return c;
}

}  // namespace

RandomGraphConfig RandomGraphConfig::full_scale() {
  RandomGraphConfig c;
  c.n_nodes_min = 50;
  c.n_nodes_max = 100;
  c.min_depth = 10;
  c.edge_prob = 0.1;
  return c;
}

BenchCase gen_random_graph_case(const RandomGraphConfig& config) {
  if (config.n_nodes_min < 2 || config.n_nodes_max < config.n_nodes_min) {
    throw ArgumentError("random graph node range is invalid");
  }
  if (config.n_rows == 0) throw ArgumentError("n_rows must be at least 1");
  std::mt19937_64 rng(derive_seed(config.seed, "random-case"));
  const std::size_t n_nodes =
      config.n_nodes_min + rng() % (config.n_nodes_max - config.n_nodes_min + 1);

  std::optional<Dag> dag;
  for (std::size_t attempt = 0; attempt < config.max_retries && !dag; ++attempt) {
    dag = select_rooted_subgraph(
        random_dag(n_nodes, config.edge_prob, derive_seed(config.seed, "graph", attempt)),
        config.min_depth);
  }
  if (!dag) {
    throw GenerationError(fmt::format(
        "no rooted subgraph of depth {} after {} graphs", config.min_depth, config.max_retries));
  }
  const std::size_t n = dag->n_nodes();

  std::vector<NodeMechanism> mechs(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (NodeId j = 0; j < n; ++j) {
    const double alpha = uniform(rng, 0.1, 0.9);
    const double m0 = normal(rng);
    const double m1 = normal(rng);
    mechs[j].kind = MechanismKind::kAnm;
    mechs[j].noise = MixtureNoise{{alpha, 1.0 - alpha}, {m0, m1}, {1.0, 1.0}};
  }

  // Mechanism nets are rescaled to zero mean and unit spread on a
  // calibration sample of the normal regime.
  std::vector<NodeMechanism> calib = mechs;
  const FittedFcm noise_only(*dag, calib);
  const Eigen::MatrixXd z = noise_only.sample_noise(config.n_rows, derive_seed(config.seed, "calibration"));
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  for (NodeId j : dag->topo_order()) {
    const auto parents = dag->parents(j);
    const auto col = static_cast<Eigen::Index>(j);
    if (parents.empty()) {
      mechs[j].mean = ConstantFn{0.0};
      x.col(col) = z.col(col);
      continue;
    }
    const std::size_t dims[] = {parents.size(), config.hidden_units, 1};
    Mlp net = Mlp::initialize(dims, Activation::kRelu, OutputTransform::kIdentity,
                              derive_seed(config.seed, "mechanism", j));
    Eigen::MatrixXd pa(static_cast<Eigen::Index>(parents.size()), x.rows());
    for (std::size_t i = 0; i < parents.size(); ++i) {
      pa.row(static_cast<Eigen::Index>(i)) = x.col(static_cast<Eigen::Index>(parents[i])).transpose();
    }
    const Eigen::RowVectorXd raw = net.forward_batch(pa).row(0);
    const double mean = raw.mean();
    const double sd = std::sqrt((raw.array() - mean).square().mean());
    if (sd > 1e-12) {
      net.scaling().output_scale = 1.0 / sd;
      net.scaling().output_offset = -mean / sd;
    } else {
      net.scaling().output_offset = -mean;
    }
    x.col(col) = net.forward_batch(pa).row(0).transpose() + z.col(col);
    mechs[j].mean = std::move(net);
  }
  FittedFcm generator(*dag, std::move(mechs));

  const std::vector<NodeId> closure = ancestor_closure(generator.dag(), generator.dag().leaf());
  const double factor = config.injection_factor;
  std::vector<double> mix_means;
  for (const auto& m : generator.mechanisms()) mix_means.push_back(noise_mean(m.noise));
  auto inject = [&closure, &mix_means, factor](std::mt19937_64& r, GroundTruth& truth,
                                               Eigen::VectorXd& zo) {
    truth.root_causes = pick_root_causes(closure, r);
    for (NodeId node : truth.root_causes) {
      const double mu = mix_means[node];
      auto& v = zo(static_cast<Eigen::Index>(node));
      v = mu + factor * (v - mu);
      truth.injections.push_back({node, "noise_scale", {{"factor", factor}}});
    }
  };
  return build_case(std::move(generator), config.n_rows, config.seed, config.filter, inject);
}

Dag microservice_dag() {
  // 0 catalog, 1 auth, 2 api-gateway, 3 inventory, 4 product-db,
  // 5 shipping-cost, 6 customer-db, 7 payment, 8 checkout, 9 order-db,
  // 10 order-confirmation.
  return Dag(11,
             {{0, 4},
              {1, 5},
              {3, 5},
              {4, 5},
              {1, 6},
              {2, 7},
              {1, 8},
              {5, 8},
              {6, 8},
              {7, 8},
              {6, 9},
              {8, 9},
              {9, 10}},
             10);
}

BenchCase gen_microservice_case(const MicroserviceConfig& config) {
  if (config.n_rows == 0) throw ArgumentError("n_rows must be at least 1");
  Dag dag = microservice_dag();
  std::mt19937_64 rng(derive_seed(config.seed, "microservice-case"));
  std::vector<NodeMechanism> mechs(dag.n_nodes());
  for (NodeId j = 0; j < dag.n_nodes(); ++j) {
    auto& m = mechs[j];
    m.kind = MechanismKind::kLinear;
    const std::size_t n_pa = dag.parents(j).size();
    if (n_pa == 0) {
      m.mean = ConstantFn{0.0};
    } else {
      m.mean = LinearFn{0.0, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n_pa))};
    }
    const double loc = uniform(rng, 100.0, 500.0);
    const double scale = uniform(rng, 100.0, 200.0);
    m.noise = HalfNormalNoise{loc, scale};
  }
  FittedFcm generator(dag, std::move(mechs));

  const std::vector<NodeId> closure = ancestor_closure(dag, dag.leaf());
  const double factor = config.injection_factor;
  std::vector<HalfNormalNoise> delays;
  for (const auto& m : generator.mechanisms()) delays.push_back(std::get<HalfNormalNoise>(m.noise));
  auto inject = [&closure, &delays, factor](std::mt19937_64& r, GroundTruth& truth,
                                            Eigen::VectorXd& zo) {
    truth.root_causes = pick_root_causes(closure, r);
    for (NodeId node : truth.root_causes) {
      const HalfNormalNoise& h = delays[node];
      const HalfNormalNoise shifted{factor * h.loc, factor * h.scale};
      zo(static_cast<Eigen::Index>(node)) = draw(shifted, r);
      truth.injections.push_back(
          {node, "mean_and_scale", {{"factor", factor}, {"loc", shifted.loc}, {"scale", shifted.scale}}});
    }
  };
  return build_case(std::move(generator), config.n_rows, config.seed, config.filter, inject);
}

Dag supplychain_dag() { return Dag(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}}, 5); }

BenchCase gen_supplychain_case(const SupplyChainConfig& config) {
  if (config.n_rows == 0) throw ArgumentError("n_rows must be at least 1");
  if (!(config.swap_hi > config.swap_lo)) throw ArgumentError("swap range is empty");
  Dag dag = supplychain_dag();
  std::vector<NodeMechanism> mechs(dag.n_nodes());
  for (NodeId j = 0; j < dag.n_nodes(); ++j) {
    auto& m = mechs[j];
    m.kind = MechanismKind::kLsn;
    m.noise = GaussianNoise{0.0, 1.0};
    if (j == 0) {
      m.mean = ConstantFn{10.0};
    } else {
      // Each stage adds a unit of lead time; its delay spread grows with the
      // volume handed over by the previous stage.
      m.mean = LinearFn{1.0, Eigen::VectorXd::Constant(1, 1.0)};
      m.scale = LinearFn{0.5, Eigen::VectorXd::Constant(1, 0.05)};
    }
  }
  FittedFcm generator(dag, std::move(mechs));

  const std::vector<NodeId> closure = ancestor_closure(dag, dag.leaf());
  const double lo = config.swap_lo;
  const double hi = config.swap_hi;
  auto inject = [&closure, lo, hi](std::mt19937_64& r, GroundTruth& truth, Eigen::VectorXd& zo) {
    truth.root_causes = pick_root_causes(closure, r);
    for (NodeId node : truth.root_causes) {
      zo(static_cast<Eigen::Index>(node)) = uniform(r, lo, hi);
      truth.injections.push_back({node, "distribution_swap", {{"lo", lo}, {"hi", hi}}});
    }
  };
  return build_case(std::move(generator), config.n_rows, config.seed, config.filter, inject);
}

double ndcg_at_k(std::span<const NodeId> ranking, std::span<const NodeId> truth,
                 std::size_t k) {
  if (k == 0) throw ArgumentError("k must be at least 1");
  std::set<NodeId> seen;
  for (NodeId v : ranking) {
    if (!seen.insert(v).second) {
      throw ArgumentError(fmt::format("ranking lists node {} twice", v));
    }
  }
  const std::set<NodeId> relevant(truth.begin(), truth.end());
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
    if (relevant.count(ranking[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, relevant.size()); ++i) {
    idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

std::string_view to_string(Suite suite) {
  switch (suite) {
    case Suite::kRandom:
      return "random";
    case Suite::kMicroservice:
      return "microservice";
    case Suite::kSupplyChain:
      return "supplychain";
  }
  return "random";
}

Suite suite_from_string(std::string_view name) {
  if (name == "random") return Suite::kRandom;
  if (name == "microservice") return Suite::kMicroservice;
  if (name == "supplychain") return Suite::kSupplyChain;
  throw ArgumentError(fmt::format(
      "unknown suite '{}' (expected random, microservice or supplychain)", name));
}

MechanismKind default_kind(Suite suite) {
  switch (suite) {
    case Suite::kRandom:
      return MechanismKind::kAnm;
    case Suite::kMicroservice:
      return MechanismKind::kLinear;
    case Suite::kSupplyChain:
      return MechanismKind::kLsn;
  }
  return MechanismKind::kAnm;
}

bool is_method(std::string_view name) {
  return std::find(std::begin(kMethodNames), std::end(kMethodNames), name) !=
         std::end(kMethodNames);
}

nlohmann::json to_json(const ExperimentConfig& config) {
  return {
      {"n_cases", config.n_cases},
      {"methods", config.methods},
      {"ks", config.ks},
      {"seed", config.seed},
      {"kind", config.kind ? nlohmann::json(to_string(*config.kind)) : nlohmann::json(nullptr)},
      {"random",
       {{"n_nodes_min", config.random.n_nodes_min},
        {"n_nodes_max", config.random.n_nodes_max},
        {"edge_prob", config.random.edge_prob},
        {"min_depth", config.random.min_depth},
        {"n_rows", config.random.n_rows},
        {"injection_factor", config.random.injection_factor}}},
      {"microservice",
       {{"n_rows", config.microservice.n_rows},
        {"injection_factor", config.microservice.injection_factor}}},
      {"supplychain",
       {{"n_rows", config.supplychain.n_rows},
        {"swap_lo", config.supplychain.swap_lo},
        {"swap_hi", config.supplychain.swap_hi}}},
      {"fit",
       {{"hidden_dims", config.fit.mean.hidden_dims},
        {"epochs", config.fit.mean.epochs},
        {"learning_rate", config.fit.mean.learning_rate},
        {"l2_weight", config.fit.mean.l2_weight},
        {"batch_size", config.fit.mean.batch_size}}},
      {"score",
       {{"hidden_dims", config.score.hidden_dims},
        {"epochs", config.score.epochs},
        {"learning_rate", config.score.learning_rate},
        {"batch_size", config.score.batch_size}}},
      {"siren", to_json(config.siren)},
      {"traversal", {{"threshold", config.traversal.threshold}}},
      {"causalrca",
       {{"n_permutations", config.causalrca.n_permutations},
        {"n_references", config.causalrca.n_references},
        {"n_value_samples", config.causalrca.n_value_samples}}},
      {"bigen",
       {{"n_steps", config.bigen.n_steps},
        {"m", config.bigen.m},
        {"dropout_passes", config.bigen.dropout_passes},
        {"dropout_sigma", config.bigen.dropout_sigma}}},
  };
}

BenchCase generate_case(Suite suite, const ExperimentConfig& config, std::uint64_t seed) {
  switch (suite) {
    case Suite::kRandom: {
      RandomGraphConfig c = config.random;
      c.seed = seed;
      return gen_random_graph_case(c);
    }
    case Suite::kMicroservice: {
      MicroserviceConfig c = config.microservice;
      c.seed = seed;
      return gen_microservice_case(c);
    }
    case Suite::kSupplyChain: {
      SupplyChainConfig c = config.supplychain;
      c.seed = seed;
      return gen_supplychain_case(c);
    }
  }
  throw ArgumentError("unknown suite");
}

namespace {

bool wants(const ExperimentConfig& config, std::string_view method) {
  return std::find(config.methods.begin(), config.methods.end(), method) != config.methods.end();
}

CaseRecord run_case(Suite suite, const ExperimentConfig& config, std::size_t index) {
  CaseRecord rec;
  rec.index = index;
  rec.seed = derive_seed(config.seed, "case", index);
  const std::size_t n_methods = config.methods.size();
  rec.rankings.assign(n_methods, {});
  rec.ndcg.assign(n_methods, {});
  rec.errors.assign(n_methods, "");

  std::optional<BenchCase> bc;
  std::optional<FittedFcm> fcm, linear_fcm;
  std::optional<ScoreSet> scores;
  const MechanismKind kind = config.kind.value_or(default_kind(suite));
  try {
    bc = generate_case(suite, config, rec.seed);
    rec.truth = bc->truth;
    FcmFitConfig fit = config.fit;
    fit.seed = derive_seed(rec.seed, "fit");
    if (wants(config, "siren") || wants(config, "causalrca") || wants(config, "bigen")) {
      fcm = fit_fcm(bc->dag(), bc->normal_data, kind, fit);
    }
    if (wants(config, "circa")) {
      if (fcm && kind == MechanismKind::kLinear) {
        linear_fcm = fcm;
      } else {
        linear_fcm = fit_fcm(bc->dag(), bc->normal_data, MechanismKind::kLinear, fit);
      }
    }
    if (wants(config, "siren")) {
      ScoreTrainConfig sc = config.score;
      sc.seed = derive_seed(rec.seed, "score");
      scores = train_score_set(*fcm, bc->normal_data, NoiseSchedule(config.siren.sigma_max), sc);
    }
  } catch (const std::exception& e) {
    rec.case_error = e.what();
    return rec;
  }

  const DataStats stats = compute_stats(bc->normal_data);
  const NodeId leaf = bc->dag().leaf();
  const std::span<const double> x(bc->outlier.data(), static_cast<std::size_t>(bc->outlier.size()));
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    const std::string& method = config.methods[mi];
    try {
      AttributionResult res;
      if (method == "siren") {
        SirenConfig c = config.siren;
        c.seed = derive_seed(rec.seed, "siren");
        res = siren_attribute(*fcm, *scores, x, leaf, c);
      } else if (method == "naive") {
        res = naive_zscore(stats, x);
      } else if (method == "traversal") {
        res = traversal(bc->dag(), stats, x, leaf, config.traversal);
      } else if (method == "circa") {
        res = circa(*linear_fcm, x);
      } else if (method == "causalrca") {
        CausalRcaConfig c = config.causalrca;
        c.seed = derive_seed(rec.seed, "causalrca");
        res = causalrca_shapley(*fcm, x, leaf, c);
      } else if (method == "bigen") {
        BigenConfig c = config.bigen;
        c.seed = derive_seed(rec.seed, "bigen");
        res = bigen_ig(*fcm, x, leaf, c);
      } else {
        throw ArgumentError(fmt::format("unknown method '{}'", method));
      }
      rec.rankings[mi] = res.ranking;
      for (std::size_t k : config.ks) {
        rec.ndcg[mi].push_back(ndcg_at_k(res.ranking, rec.truth.root_causes, k));
      }
    } catch (const std::exception& e) {
      rec.errors[mi] = e.what();
      rec.rankings[mi].clear();
      rec.ndcg[mi].clear();
    }
  }
  return rec;
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::vector<MethodSummary> summarize(const std::vector<CaseRecord>& cases,
                                     const std::vector<std::string>& methods,
                                     std::size_t n_ks) {
  std::vector<MethodSummary> out;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    MethodSummary s;
    s.method = methods[mi];
    std::vector<std::vector<double>> per_k(n_ks);
    std::vector<double> across;
    for (const auto& c : cases) {
      const bool ok = c.case_error.empty() && mi < c.errors.size() && c.errors[mi].empty() &&
                      c.ndcg[mi].size() == n_ks;
      if (!ok) {
        ++s.n_failed;
        continue;
      }
      ++s.n_succeeded;
      for (std::size_t k = 0; k < n_ks; ++k) per_k[k].push_back(c.ndcg[mi][k]);
      across.push_back(mean_of(c.ndcg[mi]));
    }
    for (std::size_t k = 0; k < n_ks; ++k) {
      const double m = mean_of(per_k[k]);
      s.mean.push_back(m);
      s.std.push_back(sample_std(per_k[k], m));
    }
    s.mean_across_k = mean_of(across);
    s.std_across_k = sample_std(across, s.mean_across_k);
    out.push_back(std::move(s));
  }
  return out;
}

ExperimentReport run_experiment(Suite suite, const ExperimentConfig& config) {
  if (config.methods.empty()) throw ArgumentError("at least one method is required");
  for (const auto& m : config.methods) {
    if (!is_method(m)) {
      throw ArgumentError(fmt::format(
          "unknown method '{}' (valid: siren, naive, traversal, circa, causalrca, bigen)", m));
    }
  }
  if (config.ks.empty()) throw ArgumentError("at least one k is required");
  for (std::size_t k : config.ks) {
    if (k == 0) throw ArgumentError("k must be at least 1");
  }

  ExperimentReport report;
  report.suite = std::string(to_string(suite));
  report.methods = config.methods;
  report.ks = config.ks;
  report.config = to_json(config);
  report.cases.resize(config.n_cases);
  parallel_for(config.n_cases, [&](std::size_t i) {
    report.cases[i] = run_case(suite, config, i);
  });
  for (const auto& c : report.cases) {
    if (!c.case_error.empty()) {
      report.warnings.push_back(fmt::format("case {} skipped: {}", c.index, c.case_error));
    }
    for (std::size_t mi = 0; mi < c.errors.size(); ++mi) {
      if (!c.errors[mi].empty()) {
        report.warnings.push_back(
            fmt::format("case {} {} failed: {}", c.index, config.methods[mi], c.errors[mi]));
      }
    }
  }
  for (const auto& w : report.warnings) spdlog::warn("{}", w);
  report.summary = summarize(report.cases, report.methods, report.ks.size());
  return report;
}

nlohmann::json to_json(const GroundTruth& truth) {
  nlohmann::json inj = nlohmann::json::array();
  for (const auto& i : truth.injections) {
    inj.push_back({{"node", i.node}, {"mechanism", i.mechanism}, {"params", i.params}});
  }
  return {{"root_causes", truth.root_causes}, {"injections", inj}};
}

GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  try {
    GroundTruth t;
    t.root_causes = j.at("root_causes").get<std::vector<NodeId>>();
    for (const auto& i : j.value("injections", nlohmann::json::array())) {
      t.injections.push_back({i.at("node").get<NodeId>(), i.at("mechanism").get<std::string>(),
                              i.value("params", nlohmann::json::object())});
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("ground truth json: {}", e.what()));
  }
}

nlohmann::json to_json(const ExperimentReport& report) {
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& s : report.summary) {
    summary.push_back({{"method", s.method},
                       {"ndcg_mean", s.mean},
                       {"ndcg_std", s.std},
                       {"mean_across_k", s.mean_across_k},
                       {"std_across_k", s.std_across_k},
                       {"n_succeeded", s.n_succeeded},
                       {"n_failed", s.n_failed}});
  }
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : report.cases) {
    nlohmann::json results = nlohmann::json::object();
    for (std::size_t mi = 0; mi < report.methods.size() && mi < c.rankings.size(); ++mi) {
      nlohmann::json r{{"ranking", c.rankings[mi]}, {"ndcg", c.ndcg[mi]}};
      if (!c.errors[mi].empty()) r["error"] = c.errors[mi];
      results[report.methods[mi]] = std::move(r);
    }
    nlohmann::json jc{{"index", c.index}, {"seed", c.seed}, {"truth", to_json(c.truth)},
                      {"results", results}};
    if (!c.case_error.empty()) jc["error"] = c.case_error;
    cases.push_back(std::move(jc));
  }
  return {{"suite", report.suite},   {"methods", report.methods}, {"ks", report.ks},
          {"summary", summary},      {"cases", cases},            {"config", report.config},
          {"warnings", report.warnings}};
}

std::string ndcg_csv(const ExperimentReport& report) {
  std::string out = "k";
  for (const auto& m : report.methods) out += fmt::format(",{}_mean,{}_std", m, m);
  out += '\n';
  for (std::size_t ki = 0; ki < report.ks.size(); ++ki) {
    out += fmt::format("{}", report.ks[ki]);
    for (const auto& s : report.summary) {
      out += fmt::format(",{:.4f},{:.4f}", 100.0 * s.mean[ki], 100.0 * s.std[ki]);
    }
    out += '\n';
  }
  out += "mean";
  for (const auto& s : report.summary) {
    out += fmt::format(",{:.4f},{:.4f}", 100.0 * s.mean_across_k, 100.0 * s.std_across_k);
  }
  out += '\n';
  return out;
}

namespace {

std::string join(const std::vector<NodeId>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += fmt::format("{}{}", i ? ";" : "", v[i]);
  return out;
}

}  // namespace

std::string rankings_csv(const ExperimentReport& report) {
  std::string out = "case,method,truth,ranking\n";
  for (const auto& c : report.cases) {
    for (std::size_t mi = 0; mi < report.methods.size() && mi < c.rankings.size(); ++mi) {
      out += fmt::format("{},{},{},{}\n", c.index, report.methods[mi], join(c.truth.root_causes),
                         join(c.rankings[mi]));
    }
  }
  return out;
}

}  // namespace siren
