#include "siren/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "siren/error.hpp"
#include "siren/parallel.hpp"

namespace siren {
namespace {

// Rows of noise drawn per node from the stored residuals (bootstrap), or from
// the noise model when no residuals are stored.
Eigen::MatrixXd resample_noise(const FittedFcm& fcm, std::size_t rows,
                               std::uint64_t seed) {
  const std::size_t n = fcm.n_nodes();
  Eigen::MatrixXd z(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
  for (NodeId j = 0; j < n; ++j) {
    std::mt19937_64 rng(derive_seed(seed, "resample", j));
    const auto& m = fcm.mechanism(j);
    const auto col = static_cast<Eigen::Index>(j);
    if (m.residuals.empty()) {
      for (Eigen::Index r = 0; r < z.rows(); ++r) z(r, col) = draw(m.noise, rng);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, m.residuals.size() - 1);
      for (Eigen::Index r = 0; r < z.rows(); ++r) z(r, col) = m.residuals[pick(rng)];
    }
  }
  return z;
}

std::vector<double> leaf_column(const FittedFcm& fcm, const Eigen::MatrixXd& z) {
  const Eigen::MatrixXd x = fcm.forward_batch(z);
  const auto leaf = static_cast<Eigen::Index>(fcm.dag().leaf());
  return std::vector<double>(x.col(leaf).data(), x.col(leaf).data() + x.rows());
}

void check_leaf(const Dag& dag, NodeId leaf) {
  if (leaf != dag.leaf()) {
    throw ArgumentError(
        fmt::format("leaf {} does not match the graph's leaf {}", leaf, dag.leaf()));
  }
}

}  // namespace

DataStats compute_stats(const Eigen::MatrixXd& data) {
  if (data.rows() == 0) throw ArgumentError("data statistics need at least one row");
  DataStats s;
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const double mean = data.col(c).mean();
    const double var = (data.col(c).array() - mean).square().mean();
    s.mean.push_back(mean);
    s.std.push_back(std::sqrt(var));
  }
  return s;
}

nlohmann::json to_json(const DataStats& stats) {
  return {{"mean", stats.mean}, {"std", stats.std}};
}

DataStats data_stats_from_json(const nlohmann::json& j) {
  try {
    DataStats s{j.at("mean").get<std::vector<double>>(),
                j.at("std").get<std::vector<double>>()};
    if (s.mean.size() != s.std.size()) throw ParseError("data stats size mismatch");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("data stats json: {}", e.what()));
  }
}

// ---- Tail score -----------------------------------------------------------

TailScoreEstimator::TailScoreEstimator(std::span<const double> reference) {
  if (reference.size() < 2) throw ArgumentError("tail estimator needs references");
  mean_ = std::accumulate(reference.begin(), reference.end(), 0.0) / reference.size();
  double ss = 0.0;
  for (double v : reference) ss += (v - mean_) * (v - mean_);
  variance_ = ss / reference.size();
  if (!(variance_ > 0.0)) throw NumericalError("reference leaf values have zero variance");
  sorted_info_.reserve(reference.size());
  for (double v : reference) sorted_info_.push_back(information(v));
  std::sort(sorted_info_.begin(), sorted_info_.end());
}

double TailScoreEstimator::information(double x) const {
  return 0.5 * std::log(2.0 * M_PI * variance_) + (x - mean_) * (x - mean_) / (2.0 * variance_);
}

double TailScoreEstimator::tail_probability(double x) const {
  const double info = information(x);
  const auto first = std::lower_bound(sorted_info_.begin(), sorted_info_.end(), info);
  const auto at_least = static_cast<double>(sorted_info_.end() - first);
  return (at_least + 1.0) / (static_cast<double>(sorted_info_.size()) + 1.0);
}

double TailScoreEstimator::score(double x) const { return -std::log(tail_probability(x)); }

// ---- Naive, traversal, circa ---------------------------------------------

namespace {

std::vector<double> abs_zscores(const DataStats& stats, std::span<const double> x,
                                std::vector<std::string>& warnings) {
  if (stats.mean.size() != x.size() || stats.std.size() != x.size()) {
    throw ArgumentError(fmt::format("observation has dimension {}, stats have {}",
                                    x.size(), stats.mean.size()));
  }
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (stats.std[j] > 0.0) {
      out[j] = std::abs(x[j] - stats.mean[j]) / stats.std[j];
    } else {
      warnings.push_back(fmt::format("node {} has zero standard deviation", j));
    }
  }
  return out;
}

}  // namespace

AttributionResult naive_zscore(const DataStats& stats, std::span<const double> x) {
  if (stats.mean.empty()) throw ArgumentError("naive z-score needs data statistics");
  AttributionResult r;
  r.method = "naive";
  r.xi = abs_zscores(stats, x, r.warnings);
  r.ranking = rank_by_score(r.xi);
  r.config = nlohmann::json::object();
  return r;
}

AttributionResult traversal(const Dag& dag, const DataStats& stats,
                            std::span<const double> x, NodeId leaf,
                            const TraversalConfig& config) {
  check_leaf(dag, leaf);
  AttributionResult r;
  r.method = "traversal";
  r.xi = abs_zscores(stats, x, r.warnings);
  const std::size_t n = dag.n_nodes();
  std::vector<bool> anomalous(n);
  for (NodeId j = 0; j < n; ++j) anomalous[j] = r.xi[j] > config.threshold;

  // reaches[j]: j starts an all-anomalous directed path ending at the leaf.
  std::vector<bool> reaches(n, false);
  const auto& order = dag.topo_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId j = *it;
    if (!anomalous[j]) continue;
    if (j == leaf) {
      reaches[j] = true;
      continue;
    }
    for (NodeId c : dag.children(j)) {
      if (reaches[c]) {
        reaches[j] = true;
        break;
      }
    }
  }
  std::vector<NodeId> candidates, rest;
  for (NodeId j = 0; j < n; ++j) {
    bool parents_normal = true;
    for (NodeId p : dag.parents(j)) parents_normal = parents_normal && !anomalous[p];
    (reaches[j] && parents_normal ? candidates : rest).push_back(j);
  }
  r.ranking = rank_by_score(r.xi, candidates);
  for (NodeId j : rank_by_score(r.xi, rest)) r.ranking.push_back(j);
  r.config = {{"threshold", config.threshold}, {"candidates", rank_by_score(r.xi, candidates)}};
  return r;
}

AttributionResult circa(const FittedFcm& fcm, std::span<const double> x) {
  if (fcm.kind() != MechanismKind::kLinear) {
    throw ArgumentError("circa needs a model fitted with linear mechanisms");
  }
  AttributionResult r;
  r.method = "circa";
  r.config = nlohmann::json::object();
  const Eigen::VectorXd z = fcm.invert_noise(x, &r.warnings);
  r.xi.assign(fcm.n_nodes(), 0.0);
  for (NodeId j = 0; j < fcm.n_nodes(); ++j) {
    const double sd = noise_std(fcm.mechanism(j).noise);
    if (sd > 1e-9) {
      r.xi[j] = std::abs(z(static_cast<Eigen::Index>(j))) / sd;
    } else {
      r.warnings.push_back(fmt::format("node {} has zero residual deviation", j));
    }
  }
  r.ranking = rank_by_score(r.xi);
  return r;
}

// ---- CausalRCA ------------------------------------------------------------

namespace {

std::vector<double> reference_leaf_values(const FittedFcm& fcm, std::size_t m,
                                          std::uint64_t seed) {
  if (m < kMinReferences) {
    throw ArgumentError(fmt::format("need at least {} reference samples, got {}",
                                    kMinReferences, m));
  }
  return leaf_column(fcm, resample_noise(fcm, m, derive_seed(seed, "reference")));
}

}  // namespace

ShapleyGame::ShapleyGame(const FittedFcm& fcm, std::span<const double> x, NodeId leaf,
                         const CausalRcaConfig& config)
    : fcm_(fcm),
      leaf_(leaf),
      players_(ancestor_closure(fcm.dag(), leaf)),
      z_(fcm.invert_noise(x)),
      tail_(reference_leaf_values(fcm, config.n_references, config.seed)) {
  check_leaf(fcm.dag(), leaf);
  if (players_.size() > 63) throw ArgumentError("too many players for a coalition mask");
  if (config.n_value_samples == 0) throw ArgumentError("n_value_samples must be >= 1");
  background_ = resample_noise(fcm, config.n_value_samples, derive_seed(config.seed, "background"));
}

double ShapleyGame::value(std::uint64_t mask) const {
  Eigen::MatrixXd z = background_;
  for (std::size_t i = 0; i < players_.size(); ++i) {
    if (mask >> i & 1U) {
      z.col(static_cast<Eigen::Index>(players_[i])).setConstant(z_(static_cast<Eigen::Index>(players_[i])));
    }
  }
  const std::vector<double> leaf = leaf_column(fcm_, z);
  double total = 0.0;
  for (double v : leaf) total += tail_.score(v);
  return total / static_cast<double>(leaf.size());
}

AttributionResult causalrca_shapley(const FittedFcm& fcm, std::span<const double> x,
                                    NodeId leaf, const CausalRcaConfig& config) {
  const ShapleyGame game(fcm, x, leaf, config);
  const std::size_t p = game.players().size();
  if (config.exhaustive && p > kMaxExhaustivePlayers) {
    throw ArgumentError(fmt::format("exhaustive Shapley limited to {} players, got {}",
                                    kMaxExhaustivePlayers, p));
  }
  if (!config.exhaustive && config.n_permutations == 0) {
    throw ArgumentError("n_permutations must be at least 1");
  }

  std::unordered_map<std::uint64_t, double> cache;
  auto value = [&](std::uint64_t mask) {
    auto it = cache.find(mask);
    if (it != cache.end()) return it->second;
    const double v = game.value(mask);
    cache.emplace(mask, v);
    return v;
  };

  std::vector<double> sum(p, 0.0), sum_sq(p, 0.0);
  std::size_t n_orders = 0;
  auto walk = [&](const std::vector<std::size_t>& order) {
    std::uint64_t mask = 0;
    double prev = value(0);
    for (std::size_t i : order) {
      mask |= std::uint64_t{1} << i;
      const double cur = value(mask);
      sum[i] += cur - prev;
      sum_sq[i] += (cur - prev) * (cur - prev);
      prev = cur;
    }
    ++n_orders;
  };

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (config.exhaustive) {
    do {
      walk(order);
    } while (std::next_permutation(order.begin(), order.end()));
  } else {
    std::mt19937_64 rng(derive_seed(config.seed, "permutations"));
    for (std::size_t k = 0; k < config.n_permutations; ++k) {
      for (std::size_t i = p; i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
      }
      walk(order);
    }
  }

  AttributionResult r;
  r.method = "causalrca";
  r.seed = config.seed;
  r.config = {{"n_permutations", config.exhaustive ? n_orders : config.n_permutations},
              {"n_references", config.n_references},
              {"n_value_samples", config.n_value_samples},
              {"exhaustive", config.exhaustive},
              {"v_all", value((std::uint64_t{1} << p) - 1)},
              {"v_empty", value(0)}};
  r.xi.assign(fcm.n_nodes(), 0.0);
  r.std_errors.assign(fcm.n_nodes(), 0.0);
  const auto count = static_cast<double>(n_orders);
  for (std::size_t i = 0; i < p; ++i) {
    const NodeId node = game.players()[i];
    const double mean = sum[i] / count;
    r.xi[node] = mean;
    if (!config.exhaustive && n_orders > 1) {
      const double var = std::max(sum_sq[i] - count * mean * mean, 0.0) / (count - 1.0);
      r.std_errors[node] = std::sqrt(var / count);
    }
  }
  r.ranking = rank_by_score(r.xi, game.players());
  return r;
}

// ---- BIGEN ----------------------------------------------------------------

Eigen::VectorXd straight_line_ig(const FittedFcm& fcm, const Eigen::VectorXd& z,
                                 const Eigen::VectorXd& ref,
                                 const GaussianLeafMarginal& density, std::size_t n_steps,
                                 const FcmMasks* masks) {
  const std::size_t n = fcm.n_nodes();
  if (static_cast<std::size_t>(z.size()) != n || static_cast<std::size_t>(ref.size()) != n) {
    throw ArgumentError("integrated gradient endpoints do not match the graph");
  }
  if (n_steps == 0) throw ArgumentError("integrated gradients need at least one step");
  const auto leaf = static_cast<Eigen::Index>(fcm.dag().leaf());
  const Eigen::VectorXd delta = z - ref;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n_steps; ++i) {
    const double alpha = (static_cast<double>(i) + 0.5) / static_cast<double>(n_steps);
    const Eigen::VectorXd za = ref + alpha * delta;
    const std::span<const double> zs(za.data(), n);
    const double xl = fcm.forward(zs, masks)(leaf);
    acc += -density.score(xl) * fcm.leaf_sensitivity(zs, masks);
  }
  return acc.cwiseProduct(delta) / static_cast<double>(n_steps);
}

AttributionResult bigen_ig(const FittedFcm& fcm, std::span<const double> x, NodeId leaf,
                           const BigenConfig& config) {
  check_leaf(fcm.dag(), leaf);
  if (config.n_steps == 0 || config.m == 0) {
    throw ArgumentError("bigen needs n_steps and m of at least 1");
  }
  const std::size_t n = fcm.n_nodes();
  const TailScoreEstimator gauss(reference_leaf_values(fcm, config.n_references, config.seed));

  AttributionResult r;
  r.method = "bigen";
  r.seed = config.seed;
  r.config = {{"n_steps", config.n_steps},
              {"m", config.m},
              {"dropout_passes", config.dropout_passes},
              {"dropout_sigma", config.dropout_sigma},
              {"n_references", config.n_references}};
  const Eigen::VectorXd z = fcm.invert_noise(x, &r.warnings);
  const Eigen::MatrixXd refs = resample_noise(fcm, config.m, derive_seed(config.seed, "ig-refs"));

  const std::size_t passes = std::max<std::size_t>(config.dropout_passes, 1);
  std::vector<FcmMasks> masks(passes, FcmMasks(n));
  if (config.dropout_passes > 0) {
    std::mt19937_64 rng(derive_seed(config.seed, "dropout"));
    std::normal_distribution<double> noise(1.0, config.dropout_sigma);
    for (auto& pass : masks) {
      for (NodeId j = 0; j < n; ++j) {
        const auto* net = std::get_if<Mlp>(&fcm.mechanism(j).mean);
        if (!net) continue;
        const auto dims = net->layer_dims();
        for (std::size_t l = 1; l + 1 < dims.size(); ++l) {
          Eigen::VectorXd mk(static_cast<Eigen::Index>(dims[l]));
          for (Eigen::Index u = 0; u < mk.size(); ++u) mk(u) = noise(rng);
          pass[j].push_back(std::move(mk));
        }
      }
    }
  }

  const std::size_t jobs = passes * config.m;
  const GaussianLeafMarginal density{gauss.mean(), gauss.variance()};
  std::vector<Eigen::VectorXd> ig(jobs);
  parallel_for(jobs, [&](std::size_t job) {
    const FcmMasks* mk = config.dropout_passes > 0 ? &masks[job / config.m] : nullptr;
    const Eigen::VectorXd ref = refs.row(static_cast<Eigen::Index>(job % config.m)).transpose();
    ig[job] = straight_line_ig(fcm, z, ref, density, config.n_steps, mk);
  });

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (const auto& v : ig) mean += v;
  mean /= static_cast<double>(jobs);
  r.xi.resize(n);
  for (NodeId j = 0; j < n; ++j) r.xi[j] = mean(static_cast<Eigen::Index>(j)) + 0.0;
  r.ranking = rank_by_score(r.xi, ancestor_closure(fcm.dag(), leaf));
  return r;
}

}  // namespace siren
