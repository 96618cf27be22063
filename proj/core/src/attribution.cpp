#include "siren/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "siren/error.hpp"
#include "siren/parallel.hpp"

namespace siren {

std::vector<NodeId> rank_by_score(std::span<const double> scores,
                                  std::span<const NodeId> candidates) {
  std::vector<NodeId> out(candidates.begin(), candidates.end());
  for (NodeId c : out) {
    if (c >= scores.size()) {
      throw ArgumentError(fmt::format("candidate {} has no score", c));
    }
  }
  std::stable_sort(out.begin(), out.end(), [&](NodeId a, NodeId b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return out;
}

std::vector<NodeId> rank_by_score(std::span<const double> scores) {
  std::vector<NodeId> all(scores.size());
  std::iota(all.begin(), all.end(), NodeId{0});
  return rank_by_score(scores, all);
}

double path_contribution(const Trajectory& trajectory,
                         std::span<const Eigen::VectorXd> leaf_scores, NodeId node,
                         const PathOptions& options) {
  if (leaf_scores.size() != trajectory.n_steps()) {
    throw std::logic_error(fmt::format("{} leaf scores for {} steps",
                                       leaf_scores.size(), trajectory.n_steps()));
  }
  if (trajectory.states.size() != trajectory.n_steps() + 1) {
    throw std::logic_error("trajectory states and steps disagree");
  }
  const auto j = static_cast<Eigen::Index>(node);
  double integral = 0.0;
  for (std::size_t k = 0; k < leaf_scores.size(); ++k) {
    integral += -leaf_scores[k](j) * trajectory.steps[k](j);
  }
  if (options.outlier_first) integral = -integral;
  double base = trajectory.states.back()(j) - trajectory.states.front()(j);
  if (options.outlier_first) base = -base;
  if (!options.signed_base) base = std::abs(base);
  return 0.5 * base * integral;
}

nlohmann::json to_json(const SirenConfig& config) {
  return {{"m", config.m},
          {"n_steps", config.n_steps},
          {"sigma_max", config.sigma_max},
          {"deterministic", config.deterministic},
          {"chain_rule", config.compose.rule == ChainRule::kTotalDerivative
                             ? "total_derivative"
                             : "as_printed"},
          {"leaf_time", config.compose.leaf_time ? nlohmann::json(*config.compose.leaf_time)
                                                 : nlohmann::json(nullptr)},
          {"standardize", config.standardize},
          {"signed_base", config.signed_base}};
}

AttributionResult siren_attribute(const FittedFcm& fcm, const ScoreSet& scores,
                                  std::span<const double> x, NodeId leaf,
                                  const SirenConfig& config) {
  const Dag& dag = fcm.dag();
  if (leaf != dag.leaf()) {
    throw ArgumentError(
        fmt::format("leaf {} does not match the graph's leaf {}", leaf, dag.leaf()));
  }
  if (config.m == 0 || config.n_steps == 0) {
    throw ArgumentError("m and n_steps must be at least 1");
  }
  const std::size_t n = fcm.n_nodes();
  if (scores.noise.size() != n) {
    throw ConfigurationError(
        fmt::format("{} noise score models for {} nodes", scores.noise.size(), n));
  }

  AttributionResult result;
  result.method = "siren";
  result.seed = config.seed;
  result.config = to_json(config);
  const Eigen::VectorXd z = fcm.invert_noise(x, &result.warnings);
  const std::vector<double> times = descending_time_grid(config.n_steps, kTimeEpsilon);
  const double dt = (1.0 - kTimeEpsilon) / static_cast<double>(config.n_steps);
  SamplerOptions sampler{config.sigma_max, config.deterministic};

  std::vector<std::vector<double>> per_run(config.m, std::vector<double>(n, 0.0));
  parallel_for(config.m, [&](std::size_t r) {
    const Trajectory tr =
        sample_trajectory(scores.noise, std::span<const double>(z.data(), n), times, dt,
                          derive_seed(config.seed, "trajectory", r), sampler);
    std::vector<Eigen::VectorXd> leaf_scores;
    leaf_scores.reserve(tr.n_steps());
    for (std::size_t k = 0; k < tr.n_steps(); ++k) {
      leaf_scores.push_back(compose_leaf_score(
          fcm, scores, std::span<const double>(tr.states[k].data(), n), tr.times[k],
          config.compose));
    }
    const PathOptions path{true, config.signed_base};
    for (NodeId j = 0; j < n; ++j) per_run[r][j] = path_contribution(tr, leaf_scores, j, path);
  });

  result.xi.assign(n, 0.0);
  for (NodeId j = 0; j < n; ++j) {
    double total = 0.0;
    for (const auto& run : per_run) total += run[j];
    double xi = total / static_cast<double>(config.m);
    if (config.standardize) xi /= scores.noise[j]->scale();
    result.xi[j] = xi + 0.0;
  }
  result.ranking = rank_by_score(result.xi, ancestor_closure(dag, leaf));
  return result;
}

double GaussianLeafMarginal::surprise(double x) const {
  return 0.5 * std::log(2.0 * M_PI * variance) + (x - mean) * (x - mean) / (2.0 * variance);
}

std::optional<GaussianLeafMarginal> linear_gaussian_leaf(const FittedFcm& fcm) {
  const std::size_t n = fcm.n_nodes();
  Eigen::VectorXd means(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sds(static_cast<Eigen::Index>(n));
  for (NodeId j = 0; j < n; ++j) {
    const auto& m = fcm.mechanism(j);
    if (m.scale) return std::nullopt;
    if (std::holds_alternative<Mlp>(m.mean)) return std::nullopt;
    const auto* g = std::get_if<GaussianNoise>(&m.noise);
    if (!g) return std::nullopt;
    means(static_cast<Eigen::Index>(j)) = g->mean;
    sds(static_cast<Eigen::Index>(j)) = g->sigma;
  }
  std::span<const double> mz(means.data(), n);
  const Eigen::VectorXd sens = fcm.leaf_sensitivity(mz);
  GaussianLeafMarginal out;
  out.mean = fcm.forward(mz)(static_cast<Eigen::Index>(fcm.dag().leaf()));
  out.variance = sens.cwiseProduct(sds).squaredNorm();
  if (!(out.variance > 0.0)) return std::nullopt;
  return out;
}

EfficiencyCheck verify_efficiency(const FittedFcm& fcm, const ScoreSet& scores,
                                  const Trajectory& trajectory,
                                  const ComposeOptions& options) {
  const auto marginal = linear_gaussian_leaf(fcm);
  if (!marginal) {
    throw UnsupportedDiagnostic(
        "efficiency check needs a linear-Gaussian model with a closed-form leaf density");
  }
  const std::size_t n = fcm.n_nodes();
  EfficiencyCheck check;
  for (std::size_t k = 0; k < trajectory.n_steps(); ++k) {
    const Eigen::VectorXd s = compose_leaf_score(
        fcm, scores, std::span<const double>(trajectory.states[k].data(), n),
        trajectory.times[k], options);
    check.lhs += -s.dot(trajectory.steps[k]);
  }
  const auto leaf = static_cast<Eigen::Index>(fcm.dag().leaf());
  auto surprise = [&](const Eigen::VectorXd& z) {
    return marginal->surprise(fcm.forward(std::span<const double>(z.data(), n))(leaf));
  };
  check.rhs = surprise(trajectory.states.back()) - surprise(trajectory.states.front());
  return check;
}

Trajectory straight_path(std::span<const double> start, std::span<const double> end,
                         std::size_t n_steps, double t) {
  if (start.size() != end.size()) throw ArgumentError("path endpoints differ in dimension");
  if (n_steps == 0) throw ArgumentError("path needs at least one step");
  const auto d = static_cast<Eigen::Index>(start.size());
  const Eigen::Map<const Eigen::VectorXd> a(start.data(), d);
  const Eigen::Map<const Eigen::VectorXd> b(end.data(), d);
  const Eigen::VectorXd step = (b - a) / static_cast<double>(n_steps);
  Trajectory tr;
  tr.states.push_back(a);
  for (std::size_t i = 0; i < n_steps; ++i) {
    tr.steps.push_back(step);
    tr.scores.push_back(Eigen::VectorXd::Zero(d));
    tr.times.push_back(t);
    tr.states.push_back(tr.states.back() + step);
  }
  return tr;
}

double triangle_area(double x_ref, double x, const std::function<double(double)>& density,
                     const std::function<double(double)>& score, std::size_t n_steps) {
  if (n_steps == 0) throw ArgumentError("triangle_area needs at least one step");
  const double h = (x - x_ref) / static_cast<double>(n_steps);
  double integral = 0.0;
  for (std::size_t i = 0; i < n_steps; ++i) {
    const double u = x_ref + (static_cast<double>(i) + 0.5) * h;
    integral += density(u) * -score(u) * h;
  }
  return 0.5 * (x - x_ref) * integral;
}

nlohmann::json to_json(const AttributionResult& result) {
  nlohmann::json j{{"method", result.method},
                   {"xi", result.xi},
                   {"ranking", result.ranking},
                   {"config", result.config},
                   {"seed", result.seed}};
  if (!result.std_errors.empty()) j["std_errors"] = result.std_errors;
  if (!result.warnings.empty()) j["warnings"] = result.warnings;
  return j;
}

AttributionResult attribution_from_json(const nlohmann::json& j) {
  try {
    AttributionResult r;
    r.method = j.at("method").get<std::string>();
    r.xi = j.at("xi").get<std::vector<double>>();
    r.ranking = j.at("ranking").get<std::vector<NodeId>>();
    r.config = j.value("config", nlohmann::json::object());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.std_errors = j.value("std_errors", std::vector<double>{});
    r.warnings = j.value("warnings", std::vector<std::string>{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("attribution json: {}", e.what()));
  }
}

}  // namespace siren
