#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "siren/attribution.hpp"
#include "siren/fcm.hpp"
#include "siren/graph.hpp"

namespace siren {

// Column means and standard deviations of the normal data.
struct DataStats {
  std::vector<double> mean;
  std::vector<double> std;
};

DataStats compute_stats(const Eigen::MatrixXd& data);
nlohmann::json to_json(const DataStats& stats);
DataStats data_stats_from_json(const nlohmann::json& j);

// Information content -log p_hat(x) under a Gaussian fitted to reference
// leaf values, and the tail score -log P(info >= info(x)) estimated by rank
// among the references, smoothed to (r + 1) / (M + 1).
class TailScoreEstimator {
 public:
  explicit TailScoreEstimator(std::span<const double> reference);
  double information(double x) const;
  double tail_probability(double x) const;
  double score(double x) const;
  std::size_t size() const { return sorted_info_.size(); }
  double mean() const { return mean_; }
  double variance() const { return variance_; }

 private:
  double mean_ = 0.0;
  double variance_ = 1.0;
  std::vector<double> sorted_info_;
};

AttributionResult naive_zscore(const DataStats& stats, std::span<const double> x);

struct TraversalConfig {
  double threshold = 3.0;
};

// Every node is ranked: root-cause candidates first by |z|, then the rest by
// |z|. The candidate list is echoed in config.candidates.
AttributionResult traversal(const Dag& dag, const DataStats& stats,
                            std::span<const double> x, NodeId leaf,
                            const TraversalConfig& config = {});

// |z_j| / sigma_hat_j on a LINEAR fit.
AttributionResult circa(const FittedFcm& fcm, std::span<const double> x);

struct CausalRcaConfig {
  std::size_t n_permutations = 200;
  std::size_t n_references = 1000;    // M, tail-score reference draws
  std::size_t n_value_samples = 100;  // draws averaged per coalition value
  bool exhaustive = false;            // all orderings of the players
  std::uint64_t seed = 0;
};

// Shapley game over the noise variables of the leaf's ancestor closure.
// Coalition members keep the outlier's noise, the rest take fixed resampled
// residual draws (the same draws for every coalition).
class ShapleyGame {
 public:
  ShapleyGame(const FittedFcm& fcm, std::span<const double> x, NodeId leaf,
              const CausalRcaConfig& config);
  const std::vector<NodeId>& players() const { return players_; }
  // Bit i of mask selects players()[i].
  double value(std::uint64_t mask) const;
  const TailScoreEstimator& tail() const { return tail_; }

 private:
  const FittedFcm& fcm_;
  NodeId leaf_;
  std::vector<NodeId> players_;
  Eigen::VectorXd z_;
  Eigen::MatrixXd background_;  // n_value_samples x n_nodes
  TailScoreEstimator tail_;
};

inline constexpr std::size_t kMinReferences = 50;
inline constexpr std::size_t kMaxExhaustivePlayers = 8;

AttributionResult causalrca_shapley(const FittedFcm& fcm, std::span<const double> x,
                                    NodeId leaf, const CausalRcaConfig& config = {});

struct BigenConfig {
  std::size_t n_steps = 50;
  std::size_t m = 8;  // references
  std::size_t dropout_passes = 16;
  double dropout_sigma = 0.1;
  std::size_t n_references = 1000;  // draws used to fit the leaf Gaussian
  std::uint64_t seed = 0;
};

// Midpoint-rule integrated gradients of density.surprise(x_leaf(z)) along the
// straight line from ref to z.
Eigen::VectorXd straight_line_ig(const FittedFcm& fcm, const Eigen::VectorXd& z,
                                 const Eigen::VectorXd& ref,
                                 const GaussianLeafMarginal& density, std::size_t n_steps,
                                 const FcmMasks* masks = nullptr);

// Straight-line integrated gradients of the Gaussian leaf surprise in noise
// space, averaged over resampled references and dropout passes.
AttributionResult bigen_ig(const FittedFcm& fcm, std::span<const double> x, NodeId leaf,
                           const BigenConfig& config = {});

}  // namespace siren
