#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "siren/attribution.hpp"
#include "siren/baselines.hpp"
#include "siren/fcm.hpp"
#include "siren/graph.hpp"
#include "siren/score.hpp"

namespace siren {

struct Injection {
  NodeId node = 0;
  std::string mechanism;  // noise_scale | mean_and_scale | distribution_swap
  nlohmann::json params;
};

struct GroundTruth {
  std::vector<NodeId> root_causes;  // ascending
  std::vector<Injection> injections;
};

struct BenchCase {
  FittedFcm generator;
  Eigen::MatrixXd normal_data;  // rows are samples
  Eigen::VectorXd outlier;
  Eigen::VectorXd outlier_noise;
  GroundTruth truth;

  const Dag& dag() const { return generator.dag(); }
};

// Injections are redrawn until the leaf lies at least min_leaf_zscore
// standard deviations from its normal mean; after max_tries the most extreme
// attempt is kept. A threshold of 0 accepts the first draw.
struct OutlierFilter {
  double min_leaf_zscore = 3.0;
  std::size_t max_tries = 100;
};

struct RandomGraphConfig {
  std::size_t n_nodes_min = 15;
  std::size_t n_nodes_max = 15;
  double edge_prob = 0.3;
  std::size_t min_depth = 5;
  std::size_t n_rows = 1000;
  std::size_t hidden_units = 50;
  double injection_factor = 3.0;
  std::size_t max_retries = 50;
  OutlierFilter filter;
  std::uint64_t seed = 0;

  // 50-100 nodes, depth >= 10.
  static RandomGraphConfig full_scale();
};

struct MicroserviceConfig {
  std::size_t n_rows = 1000;
  double injection_factor = 3.0;
  OutlierFilter filter;
  std::uint64_t seed = 0;
};

struct SupplyChainConfig {
  std::size_t n_rows = 1000;
  double swap_lo = 3.0;
  double swap_hi = 5.0;
  OutlierFilter filter;
  std::uint64_t seed = 0;
};

BenchCase gen_random_graph_case(const RandomGraphConfig& config);
BenchCase gen_microservice_case(const MicroserviceConfig& config);
BenchCase gen_supplychain_case(const SupplyChainConfig& config);

// The fixed service graph: 10 services plus the order-confirmation leaf.
Dag microservice_dag();
// Demand -> Forecast -> Order -> Confirmed -> Shipped -> Received.
Dag supplychain_dag();

// Binary relevance NDCG; 0 when there is no relevant node.
double ndcg_at_k(std::span<const NodeId> ranking, std::span<const NodeId> truth,
                 std::size_t k);

enum class Suite { kRandom, kMicroservice, kSupplyChain };

std::string_view to_string(Suite suite);
Suite suite_from_string(std::string_view name);
// Mechanism kind SIREN, CausalRCA and BIGEN fit on each suite.
MechanismKind default_kind(Suite suite);

inline constexpr std::string_view kMethodNames[] = {"siren", "naive", "traversal",
                                                    "circa", "causalrca", "bigen"};
bool is_method(std::string_view name);

struct ExperimentConfig {
  std::size_t n_cases = 10;
  std::vector<std::string> methods{"siren", "naive", "traversal", "circa", "causalrca", "bigen"};
  std::vector<std::size_t> ks{1, 2, 3, 4, 5};
  std::uint64_t seed = 0;
  std::optional<MechanismKind> kind;

  RandomGraphConfig random;
  MicroserviceConfig microservice;
  SupplyChainConfig supplychain;
  FcmFitConfig fit;
  ScoreTrainConfig score;
  SirenConfig siren;
  TraversalConfig traversal;
  CausalRcaConfig causalrca{50, 500, 50, false, 0};
  BigenConfig bigen;
};

nlohmann::json to_json(const ExperimentConfig& config);

struct CaseRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  GroundTruth truth;
  // Indexed like ExperimentConfig::methods.
  std::vector<std::vector<NodeId>> rankings;
  std::vector<std::vector<double>> ndcg;  // per method, per k
  std::vector<std::string> errors;        // empty when the method succeeded
  std::string case_error;                 // generation or fitting failure
};

struct MethodSummary {
  std::string method;
  std::vector<double> mean;  // per k
  std::vector<double> std;
  double mean_across_k = 0.0;
  double std_across_k = 0.0;
  std::size_t n_succeeded = 0;
  std::size_t n_failed = 0;
};

struct ExperimentReport {
  std::string suite;
  std::vector<std::string> methods;
  std::vector<std::size_t> ks;
  std::vector<CaseRecord> cases;
  std::vector<MethodSummary> summary;
  nlohmann::json config;
  std::vector<std::string> warnings;
};

// Mean and sample standard deviation per method and k over the cases where
// the method succeeded.
std::vector<MethodSummary> summarize(const std::vector<CaseRecord>& cases,
                                     const std::vector<std::string>& methods,
                                     std::size_t n_ks);

BenchCase generate_case(Suite suite, const ExperimentConfig& config, std::uint64_t seed);

ExperimentReport run_experiment(Suite suite, const ExperimentConfig& config);

nlohmann::json to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentReport& report);
// k on rows, <method>_mean and <method>_std on columns, then a row "mean"
// with the across-k average.
std::string ndcg_csv(const ExperimentReport& report);
// case,method,truth,ranking with ';'-joined node lists.
std::string rankings_csv(const ExperimentReport& report);

}  // namespace siren
