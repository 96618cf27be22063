#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace siren {

enum class Activation { kTanh, kRelu, kSwish };

// kShiftedTanh is 0.5 + tanh(a), floored at kScaleFloor so it can serve as a
// positive scale.
enum class OutputTransform { kIdentity, kShiftedTanh };

inline constexpr double kScaleFloor = 1e-3;

std::string_view to_string(Activation a);
std::string_view to_string(OutputTransform t);
Activation activation_from_string(std::string_view name);
OutputTransform output_transform_from_string(std::string_view name);

// Affine maps around the raw network: inputs are standardized before the
// first layer, the output is mapped back by offset + scale * y. Empty input
// vectors mean identity.
struct Scaling {
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_scale;
  double output_offset = 0.0;
  double output_scale = 1.0;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Multiplicative noise applied to each hidden activation (Gaussian dropout);
// one vector per hidden layer.
using HiddenMasks = std::vector<Eigen::VectorXd>;

class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<DenseLayer> layers, Activation activation,
      OutputTransform transform, Scaling scaling = {});

  // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static Mlp initialize(std::span<const std::size_t> layer_dims,
                        Activation activation, OutputTransform transform,
                        std::uint64_t seed);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::vector<std::size_t> layer_dims() const;
  std::size_t n_hidden() const { return layers_.empty() ? 0 : layers_.size() - 1; }
  Activation activation() const { return activation_; }
  OutputTransform output_transform() const { return transform_; }

  Eigen::VectorXd forward(std::span<const double> x,
                          const HiddenMasks* masks = nullptr) const;
  // Columns of `inputs` are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;
  // Exact d forward / d x, output_dim x input_dim.
  Eigen::MatrixXd input_jacobian(std::span<const double> x,
                                 const HiddenMasks* masks = nullptr) const;

  // Raw network pieces used by the trainers. Inputs are already standardized
  // and the returned output is post-transform, pre output scaling.
  struct Tape {
    std::vector<Eigen::MatrixXd> pre;   // per layer
    std::vector<Eigen::MatrixXd> post;  // per hidden layer
    Eigen::MatrixXd input;
  };
  Eigen::MatrixXd forward_raw(const Eigen::MatrixXd& inputs, Tape* tape) const;
  // Accumulates parameter gradients of sum(grad_output .* output) into grads.
  void backward_raw(const Tape& tape, const Eigen::MatrixXd& grad_output,
                    std::vector<DenseLayer>& grads) const;
  std::vector<DenseLayer> zero_gradients() const;
  double squared_norm() const;
  bool all_finite() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  Scaling& scaling() { return scaling_; }
  const Scaling& scaling() const { return scaling_; }

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  Eigen::VectorXd standardize(std::span<const double> x) const;

  std::vector<DenseLayer> layers_;
  Activation activation_ = Activation::kTanh;
  OutputTransform transform_ = OutputTransform::kIdentity;
  Scaling scaling_;
};

// Adam update (beta1 0.9, beta2 0.999, eps 1e-8).
class Adam {
 public:
  Adam(const Mlp& net, double learning_rate);
  void step(Mlp& net, const std::vector<DenseLayer>& grads);

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<DenseLayer> m_, v_;
};

inline constexpr std::size_t kDefaultBatchSize = 64;

struct TrainConfig {
  std::vector<std::size_t> hidden_dims{100, 100};
  Activation activation = Activation::kTanh;
  double l2_weight = 1e-4;
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  // 0 picks kDefaultBatchSize.
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
};

std::size_t effective_batch_size(const TrainConfig& config, std::size_t rows);

struct FitReport {
  std::vector<double> epoch_losses;
  std::vector<std::string> warnings;
};

// inputs: rows are samples. Minimizes mean squared error plus
// l2_weight * ||params||^2 on z-standardized inputs and targets; the
// statistics are stored in the returned net's Scaling.
Mlp fit_regression(const Eigen::MatrixXd& inputs,
                   std::span<const double> targets, const TrainConfig& config,
                   FitReport* report = nullptr);

struct HeteroscedasticFit {
  Mlp mean;
  Mlp scale;  // shifted-tanh output, floored, in target units
};

// Joint Gaussian negative log-likelihood
//   (y - mu(x))^2 / (2 sigma(x)^2) + log sigma(x)
// plus the same L2 penalty on both nets.
HeteroscedasticFit fit_heteroscedastic(const Eigen::MatrixXd& inputs,
                                       std::span<const double> targets,
                                       const TrainConfig& config,
                                       FitReport* report = nullptr);

nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace siren
