#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "siren/diffusion.hpp"
#include "siren/fcm.hpp"
#include "siren/graph.hpp"
#include "siren/score.hpp"

namespace siren {

struct AttributionResult {
  std::string method;
  std::vector<double> xi;        // per node
  std::vector<NodeId> ranking;   // candidates by descending xi
  std::vector<double> std_errors;  // sampling error of xi, when estimated
  nlohmann::json config;         // echo of the settings used
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

// Candidates sorted by descending score, ties by ascending index.
std::vector<NodeId> rank_by_score(std::span<const double> scores,
                                  std::span<const NodeId> candidates);
std::vector<NodeId> rank_by_score(std::span<const double> scores);

struct PathOptions {
  // The trajectory starts at the outlier and ends at the reference; the sum
  // is negated so the integral still runs from reference to outlier.
  bool outlier_first = false;
  // Use the signed displacement z_j - z'_j as the prefactor instead of its
  // magnitude. Outliers in the lower tail then get negative contributions.
  bool signed_base = false;
};

// 1/2 |z_j - z'_j| * sum_k -s_j(states[k]) * steps[k][j] along the path from
// the reference z' to the outlier z, where leaf_scores[k] is the composed
// leaf score at states[k].
double path_contribution(const Trajectory& trajectory,
                         std::span<const Eigen::VectorXd> leaf_scores, NodeId node,
                         const PathOptions& options = {});

struct SirenConfig {
  std::size_t m = 8;
  std::size_t n_steps = 100;
  double sigma_max = kDefaultSigmaMax;
  std::uint64_t seed = 0;
  bool deterministic = false;
  ComposeOptions compose;
  // Divide xi_j by node j's noise scale so contributions are unit-free.
  bool standardize = true;
  bool signed_base = false;
};

nlohmann::json to_json(const SirenConfig& config);

AttributionResult siren_attribute(const FittedFcm& fcm, const ScoreSet& scores,
                                  std::span<const double> x, NodeId leaf,
                                  const SirenConfig& config = {});

// Closed-form marginal of the leaf for FCMs whose mechanisms are all linear
// (or constant) with Gaussian noise and no scale function.
struct GaussianLeafMarginal {
  double mean = 0.0;
  double variance = 1.0;
  // -log p(x)
  double surprise(double x) const;
  double score(double x) const { return -(x - mean) / variance; }
};

std::optional<GaussianLeafMarginal> linear_gaussian_leaf(const FittedFcm& fcm);

struct EfficiencyCheck {
  double lhs = 0.0;  // sum_j sum_k -s_j dz_j
  double rhs = 0.0;  // S(end) - S(start)
};

// Throws UnsupportedDiagnostic when the leaf density has no closed form.
EfficiencyCheck verify_efficiency(const FittedFcm& fcm, const ScoreSet& scores,
                                  const Trajectory& trajectory,
                                  const ComposeOptions& options = {});

// Straight line from start to end in n equal increments; times are all t.
Trajectory straight_path(std::span<const double> start, std::span<const double> end,
                         std::size_t n_steps, double t = 0.0);

// 1/2 (x - x_ref) * integral_{x_ref}^{x} p(u) (-s(u)) du by the midpoint rule.
double triangle_area(double x_ref, double x, const std::function<double(double)>& density,
                     const std::function<double(double)>& score, std::size_t n_steps);

nlohmann::json to_json(const AttributionResult& result);
AttributionResult attribution_from_json(const nlohmann::json& j);

}  // namespace siren
