#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "siren/fcm.hpp"
#include "siren/graph.hpp"
#include "siren/mlp.hpp"

namespace siren {

inline constexpr double kDefaultSigmaMax = 10.0;
inline constexpr double kTimeEpsilon = 1e-3;

// Variance-exploding schedule sigma^2(t) = (sigma_max^(2t) - 1) / (2 ln sigma_max).
class NoiseSchedule {
 public:
  explicit NoiseSchedule(double sigma_max = kDefaultSigmaMax);
  double sigma_max() const { return sigma_max_; }
  double variance(double t) const;
  double sigma(double t) const;

 private:
  double sigma_max_;
};

// Time-conditioned score d/dv log p_t(v) of one scalar variable.
class LocalScore {
 public:
  virtual ~LocalScore() = default;
  virtual double score(double value, double t) const = 0;
  // Natural scale of the variable. The diffusion perturbs value by
  // scale() * sigma(t), so unit-scale models see the plain schedule.
  virtual double scale() const { return 1.0; }
};

// Learned score: the net sees ((v - center) / scale, t) and predicts the
// standardized score.
class ScoreModel final : public LocalScore {
 public:
  ScoreModel(Mlp net, NoiseSchedule schedule, double center, double scale);
  double score(double value, double t) const override;
  double scale() const override { return scale_; }
  double center() const { return center_; }
  const Mlp& net() const { return net_; }
  const NoiseSchedule& schedule() const { return schedule_; }

 private:
  Mlp net_;
  NoiseSchedule schedule_;
  double center_;
  double scale_;
};

// Exact score of N(mean, sd^2) convolved with N(0, sd^2 sigma^2(t)).
class GaussianScore final : public LocalScore {
 public:
  GaussianScore(double mean, double sd, NoiseSchedule schedule = NoiseSchedule());
  double score(double value, double t) const override;
  double scale() const override { return sd_; }

 private:
  double mean_, sd_;
  NoiseSchedule schedule_;
};

class FunctionScore final : public LocalScore {
 public:
  explicit FunctionScore(std::function<double(double, double)> fn, double scale = 1.0)
      : fn_(std::move(fn)), scale_(scale) {}
  double score(double value, double t) const override { return fn_(value, t); }
  double scale() const override { return scale_; }

 private:
  std::function<double(double, double)> fn_;
  double scale_;
};

// Per-node noise scores plus the score of the leaf's marginal density.
struct ScoreSet {
  std::vector<std::shared_ptr<const LocalScore>> noise;
  std::shared_ptr<const LocalScore> leaf_marginal;
};

struct ScoreTrainConfig {
  std::vector<std::size_t> hidden_dims{100, 100, 100};
  Activation activation = Activation::kSwish;
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  std::size_t batch_size = 0;  // 0 picks kDefaultBatchSize
  double l2_weight = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kMinScoreSamples = 100;

// Denoising score matching: minimizes E |sigma(t) s(v_t, t) + n|^2 with
// v_t = v + sigma(t) n, t ~ U(eps, 1), on standardized samples.
ScoreModel train_score_model(std::span<const double> samples,
                             const NoiseSchedule& schedule,
                             const ScoreTrainConfig& config,
                             FitReport* report = nullptr);

struct ScoreSetReport {
  std::vector<std::string> warnings;
  std::vector<double> final_losses;  // per node, then the leaf marginal
};

// Noise scores on each node's fitted residuals and the leaf marginal score
// on the leaf column of data.
ScoreSet train_score_set(const FittedFcm& fcm, const Eigen::MatrixXd& data,
                         const NoiseSchedule& schedule,
                         const ScoreTrainConfig& config,
                         ScoreSetReport* report = nullptr);

enum class ChainRule {
  // d/dz_j of log p_leaf(x_leaf(z)): leaf marginal score times the total
  // derivative of x_leaf with respect to z_j.
  kTotalDerivative,
  // Leaf noise score seeded at z_leaf, first hop carries -df/dx, deeper hops
  // +df/dx, no noise-scale factor.
  kAsPrinted,
};

struct ComposeOptions {
  ChainRule rule = ChainRule::kTotalDerivative;
  // Time at which the leaf score is evaluated; nullopt uses the state's t.
  std::optional<double> leaf_time;
};

// Score of the leaf with respect to every noise variable at state z. Nodes
// outside the leaf's ancestor closure get exactly 0.
Eigen::VectorXd compose_leaf_score(const FittedFcm& fcm, const ScoreSet& scores,
                                   std::span<const double> z, double t,
                                   const ComposeOptions& options = {},
                                   const FcmMasks* masks = nullptr);

nlohmann::json to_json(const NoiseSchedule& schedule);
NoiseSchedule schedule_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScoreModel& model);
ScoreModel score_model_from_json(const nlohmann::json& j);
// Only learned ScoreModel entries can be written.
nlohmann::json to_json(const ScoreSet& set);
ScoreSet score_set_from_json(const nlohmann::json& j);

}  // namespace siren
