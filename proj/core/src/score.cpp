#include "siren/score.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "siren/diffusion.hpp"
#include "siren/error.hpp"
#include "siren/parallel.hpp"

namespace siren {

NoiseSchedule::NoiseSchedule(double sigma_max) : sigma_max_(sigma_max) {
  if (!(sigma_max > 1.0)) {
    throw ArgumentError(fmt::format("sigma_max must exceed 1, got {}", sigma_max));
  }
}

double NoiseSchedule::variance(double t) const {
  return diffusion_coefficient(t, sigma_max_);
}

double NoiseSchedule::sigma(double t) const { return std::sqrt(variance(t)); }

namespace {

// Network inputs and output gain at time t: the perturbed value is scaled to
// unit variance and the raw output is divided by the perturbed sd.
struct Preconditioning {
  double value_gain;
  double time_feature;
  double output_gain;
};

Preconditioning precondition(const NoiseSchedule& schedule, double t) {
  const double v = schedule.variance(std::max(t, kTimeEpsilon));
  const double g = 1.0 / std::sqrt(1.0 + v);
  return {g, t, g};
}

}  // namespace

ScoreModel::ScoreModel(Mlp net, NoiseSchedule schedule, double center, double scale)
    : net_(std::move(net)), schedule_(schedule), center_(center), scale_(scale) {
  if (net_.input_dim() != 2 || net_.output_dim() != 1) {
    throw ArgumentError("score net must map (value, t) to a scalar");
  }
  if (!(scale > 0.0)) throw ArgumentError("score model scale must be > 0");
}

double ScoreModel::score(double value, double t) const {
  const Preconditioning p = precondition(schedule_, t);
  const double in[2] = {p.value_gain * (value - center_) / scale_, p.time_feature};
  return p.output_gain * net_.forward(in)(0) / scale_;
}

GaussianScore::GaussianScore(double mean, double sd, NoiseSchedule schedule)
    : mean_(mean), sd_(sd), schedule_(schedule) {
  if (!(sd > 0.0)) throw ArgumentError("gaussian score needs sd > 0");
}

double GaussianScore::score(double value, double t) const {
  return -(value - mean_) / (sd_ * sd_ * (1.0 + schedule_.variance(t)));
}

ScoreModel train_score_model(std::span<const double> samples,
                             const NoiseSchedule& schedule,
                             const ScoreTrainConfig& config, FitReport* report) {
  if (samples.size() < kMinScoreSamples) {
    throw ArgumentError(fmt::format("score training needs at least {} samples, got {}",
                                    kMinScoreSamples, samples.size()));
  }
  if (config.epochs == 0) throw ArgumentError("epochs must be at least 1");
  const std::size_t m = samples.size();
  const double center = std::accumulate(samples.begin(), samples.end(), 0.0) / m;
  double ss = 0.0;
  for (double v : samples) ss += (v - center) * (v - center);
  double scale = std::sqrt(ss / m);
  if (!(scale > 1e-12)) {
    scale = 1.0;
    if (report) report->warnings.push_back("score samples have zero variance");
  }
  std::vector<double> u(m);
  for (std::size_t i = 0; i < m; ++i) u[i] = (samples[i] - center) / scale;

  std::vector<std::size_t> dims{2};
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(1);
  Mlp net = Mlp::initialize(dims, config.activation, OutputTransform::kIdentity,
                            config.seed);
  Adam adam(net, config.learning_rate);
  Mlp::Tape tape;

  TrainConfig batching;
  batching.batch_size = config.batch_size;
  const std::size_t batch = effective_batch_size(batching, m);
  std::mt19937_64 rng(derive_seed(config.seed, "dsm"));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> time(kTimeEpsilon, 1.0);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = m; i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    }
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < m; start += batch) {
      const auto b = static_cast<Eigen::Index>(std::min(batch, m - start));
      Eigen::MatrixXd x(2, b);
      Eigen::RowVectorXd sig(b), n(b), gain(b);
      for (Eigen::Index i = 0; i < b; ++i) {
        const double t = time(rng);
        const Preconditioning p = precondition(schedule, t);
        sig(i) = schedule.sigma(t);
        n(i) = normal(rng);
        gain(i) = sig(i) * p.output_gain;
        x(0, i) = p.value_gain * (u[order[start + static_cast<std::size_t>(i)]] + sig(i) * n(i));
        x(1, i) = p.time_feature;
      }
      const Eigen::MatrixXd out = net.forward_raw(x, &tape);
      const Eigen::RowVectorXd r = gain.cwiseProduct(out.row(0)) + n;
      const double loss = r.squaredNorm() / static_cast<double>(b);
      if (!std::isfinite(loss)) {
        throw TrainingError(fmt::format(
            "score training diverged (epoch {}, loss {})", epoch, loss));
      }
      auto grads = net.zero_gradients();
      net.backward_raw(tape, (2.0 / static_cast<double>(b)) * r.cwiseProduct(gain), grads);
      if (config.l2_weight > 0.0) {
        for (std::size_t l = 0; l < grads.size(); ++l) {
          grads[l].weight += 2.0 * config.l2_weight * net.layers()[l].weight;
          grads[l].bias += 2.0 * config.l2_weight * net.layers()[l].bias;
        }
      }
      adam.step(net, grads);
      total += loss;
      ++batches;
    }
    if (report) report->epoch_losses.push_back(total / batches);
  }
  if (!net.all_finite()) throw TrainingError("score network parameters diverged");
  return ScoreModel(std::move(net), schedule, center, scale);
}

ScoreSet train_score_set(const FittedFcm& fcm, const Eigen::MatrixXd& data,
                         const NoiseSchedule& schedule,
                         const ScoreTrainConfig& config, ScoreSetReport* report) {
  const std::size_t n = fcm.n_nodes();
  if (static_cast<std::size_t>(data.cols()) != n) {
    throw ArgumentError(fmt::format("data has {} columns but graph has {} nodes",
                                    data.cols(), n));
  }
  std::vector<std::vector<double>> samples(n + 1);
  for (NodeId j = 0; j < n; ++j) {
    samples[j] = fcm.mechanism(j).residuals;
    if (samples[j].empty()) {
      Eigen::MatrixXd z(data.rows(), data.cols());
      for (Eigen::Index r = 0; r < data.rows(); ++r) {
        const Eigen::VectorXd row = data.row(r).transpose();
        z.row(r) = fcm.invert_noise(std::span<const double>(row.data(), n)).transpose();
      }
      for (NodeId k = 0; k < n; ++k) {
        if (!samples[k].empty()) continue;
        const auto col = static_cast<Eigen::Index>(k);
        samples[k].assign(z.col(col).data(), z.col(col).data() + z.rows());
      }
    }
  }
  const auto leaf = static_cast<Eigen::Index>(fcm.dag().leaf());
  samples[n].assign(data.col(leaf).data(), data.col(leaf).data() + data.rows());

  std::vector<std::optional<ScoreModel>> models(n + 1);
  std::vector<FitReport> reports(n + 1);
  parallel_for(n + 1, [&](std::size_t j) {
    ScoreTrainConfig c = config;
    c.seed = j < n ? derive_seed(config.seed, "score", j)
                   : derive_seed(config.seed, "leaf-score");
    models[j].emplace(train_score_model(samples[j], schedule, c, &reports[j]));
  });

  ScoreSet set;
  for (std::size_t j = 0; j <= n; ++j) {
    auto ptr = std::make_shared<const ScoreModel>(std::move(*models[j]));
    if (j < n) {
      set.noise.push_back(std::move(ptr));
    } else {
      set.leaf_marginal = std::move(ptr);
    }
    if (report) {
      for (auto& w : reports[j].warnings) {
        report->warnings.push_back(j < n ? fmt::format("score {}: {}", j, w)
                                         : fmt::format("leaf score: {}", w));
      }
      report->final_losses.push_back(reports[j].epoch_losses.back());
    }
  }
  return set;
}

Eigen::VectorXd compose_leaf_score(const FittedFcm& fcm, const ScoreSet& scores,
                                   std::span<const double> z, double t,
                                   const ComposeOptions& options,
                                   const FcmMasks* masks) {
  const std::size_t n = fcm.n_nodes();
  if (z.size() != n) {
    throw ArgumentError(fmt::format("noise vector has dimension {}, expected {}",
                                    z.size(), n));
  }
  const NodeId leaf = fcm.dag().leaf();
  const double t_leaf = options.leaf_time.value_or(t);

  if (options.rule == ChainRule::kTotalDerivative) {
    if (!scores.leaf_marginal) {
      throw ConfigurationError("leaf marginal score model is missing");
    }
    const Eigen::VectorXd x = fcm.forward(z, masks);
    const double s_leaf = scores.leaf_marginal->score(x(static_cast<Eigen::Index>(leaf)), t_leaf);
    return s_leaf * fcm.leaf_sensitivity(z, masks);
  }

  if (scores.noise.size() <= leaf || !scores.noise[leaf]) {
    throw ConfigurationError(fmt::format("score model for leaf {} is missing", leaf));
  }
  const Eigen::VectorXd x = fcm.forward(z, masks);
  std::span<const double> xs(x.data(), n);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  s(static_cast<Eigen::Index>(leaf)) = scores.noise[leaf]->score(z[leaf], t_leaf);
  const auto& order = fcm.dag().topo_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId k = *it;
    const double a = s(static_cast<Eigen::Index>(k));
    if (a == 0.0) continue;
    const HiddenMasks* mk =
        masks && k < masks->size() && !(*masks)[k].empty() ? &(*masks)[k] : nullptr;
    const Eigen::VectorXd jac = fcm.parent_jacobian(k, xs, z[k], mk);
    const double sign = k == leaf ? -1.0 : 1.0;
    const auto parents = fcm.dag().parents(k);
    for (std::size_t i = 0; i < parents.size(); ++i) {
      s(static_cast<Eigen::Index>(parents[i])) += sign * a * jac(static_cast<Eigen::Index>(i));
    }
  }
  return s;
}

nlohmann::json to_json(const NoiseSchedule& schedule) {
  return {{"sigma_max", schedule.sigma_max()}};
}

NoiseSchedule schedule_from_json(const nlohmann::json& j) {
  try {
    return NoiseSchedule(j.at("sigma_max").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("schedule json: {}", e.what()));
  } catch (const ArgumentError& e) {
    throw ParseError(fmt::format("schedule json: {}", e.what()));
  }
}

nlohmann::json to_json(const ScoreModel& model) {
  return {{"schedule", to_json(model.schedule())},
          {"center", model.center()},
          {"scale", model.scale()},
          {"net", to_json(model.net())}};
}

ScoreModel score_model_from_json(const nlohmann::json& j) {
  try {
    return ScoreModel(mlp_from_json(j.at("net")), schedule_from_json(j.at("schedule")),
                      j.at("center").get<double>(), j.at("scale").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("score model json: {}", e.what()));
  } catch (const ArgumentError& e) {
    throw ParseError(fmt::format("score model json: {}", e.what()));
  }
}

namespace {

const ScoreModel& as_model(const std::shared_ptr<const LocalScore>& s) {
  const auto* m = dynamic_cast<const ScoreModel*>(s.get());
  if (!m) throw ArgumentError("only learned score models can be serialized");
  return *m;
}

}  // namespace

nlohmann::json to_json(const ScoreSet& set) {
  nlohmann::json noise = nlohmann::json::array();
  for (const auto& s : set.noise) noise.push_back(to_json(as_model(s)));
  nlohmann::json j{{"noise", noise}};
  if (set.leaf_marginal) j["leaf_marginal"] = to_json(as_model(set.leaf_marginal));
  return j;
}

ScoreSet score_set_from_json(const nlohmann::json& j) {
  try {
    ScoreSet set;
    for (const auto& s : j.at("noise")) {
      set.noise.push_back(std::make_shared<const ScoreModel>(score_model_from_json(s)));
    }
    if (j.contains("leaf_marginal")) {
      set.leaf_marginal =
          std::make_shared<const ScoreModel>(score_model_from_json(j.at("leaf_marginal")));
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("score set json: {}", e.what()));
  }
}

}  // namespace siren
