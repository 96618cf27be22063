#include "siren/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "siren/error.hpp"

namespace siren {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
    case Activation::kSwish:
      return z * sigmoid(z);
  }
  return z;
}

// Subgradient 0 for relu at exactly 0.
double activate_deriv(Activation a, double z) {
  switch (a) {
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::kSwish: {
      const double s = sigmoid(z);
      return s + z * s * (1.0 - s);
    }
  }
  return 1.0;
}

double transform(OutputTransform t, double z) {
  if (t == OutputTransform::kShiftedTanh) {
    return std::max(0.5 + std::tanh(z), kScaleFloor);
  }
  return z;
}

double transform_deriv(OutputTransform t, double z) {
  if (t == OutputTransform::kShiftedTanh) {
    const double th = std::tanh(z);
    return 0.5 + th > kScaleFloor ? 1.0 - th * th : 0.0;
  }
  return 1.0;
}

struct ColumnStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
};

ColumnStats column_stats(const Eigen::MatrixXd& rows,
                         std::vector<std::string>* warnings) {
  ColumnStats s;
  s.mean = rows.colwise().mean().transpose();
  s.scale.resize(rows.cols());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const double var =
        (rows.col(c).array() - s.mean(c)).square().sum() / rows.rows();
    if (var > 1e-24) {
      s.scale(c) = std::sqrt(var);
    } else {
      s.scale(c) = 1.0;
      if (warnings) {
        warnings->push_back(fmt::format("input column {} has zero variance", c));
      }
    }
  }
  return s;
}

void check_training_inputs(const Eigen::MatrixXd& inputs,
                           std::span<const double> targets,
                           const TrainConfig& config) {
  if (inputs.rows() == 0 || targets.empty()) {
    throw ArgumentError("cannot fit a network on an empty dataset");
  }
  if (static_cast<std::size_t>(inputs.rows()) != targets.size()) {
    throw ArgumentError(fmt::format("{} input rows but {} targets",
                                    inputs.rows(), targets.size()));
  }
  if (inputs.cols() == 0) {
    throw ArgumentError("regression needs at least one input column");
  }
  if (config.epochs == 0) {
    throw ArgumentError("epochs must be at least 1");
  }
}

// Standardized copy of the training data, columns are samples.
struct PreparedData {
  Eigen::MatrixXd x;  // in x m
  Eigen::VectorXd y;  // m
  Scaling scaling;
};

PreparedData prepare(const Eigen::MatrixXd& inputs,
                     std::span<const double> targets,
                     std::vector<std::string>* warnings) {
  PreparedData d;
  const ColumnStats in = column_stats(inputs, warnings);
  d.x = ((inputs.rowwise() - in.mean.transpose()).array().rowwise() /
         in.scale.transpose().array())
            .matrix()
            .transpose();
  Eigen::Map<const Eigen::VectorXd> y(targets.data(),
                                      static_cast<Eigen::Index>(targets.size()));
  const double y_mean = y.mean();
  double y_scale = std::sqrt((y.array() - y_mean).square().mean());
  if (!(y_scale > 1e-12)) {
    y_scale = 1.0;
    if (warnings) warnings->push_back("target has zero variance");
  }
  d.y = (y.array() - y_mean) / y_scale;
  d.scaling.input_mean = in.mean;
  d.scaling.input_scale = in.scale;
  d.scaling.output_offset = y_mean;
  d.scaling.output_scale = y_scale;
  return d;
}

std::vector<std::size_t> layer_dims_for(std::size_t in,
                                        const std::vector<std::size_t>& hidden,
                                        std::size_t out) {
  std::vector<std::size_t> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

void add_l2(const Mlp& net, double weight, std::vector<DenseLayer>& grads) {
  if (weight == 0.0) return;
  for (std::size_t l = 0; l < grads.size(); ++l) {
    grads[l].weight += 2.0 * weight * net.layers()[l].weight;
    grads[l].bias += 2.0 * weight * net.layers()[l].bias;
  }
}

void shuffle(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

// Runs epochs of shuffled minibatches. batch_step(columns) returns the data
// loss of the batch and performs the parameter update.
void run_epochs(std::size_t rows, const TrainConfig& config,
                const std::function<double(std::span<const std::size_t>)>&
                    batch_step,
                FitReport* report) {
  std::mt19937_64 rng(config.seed ^ 0x5eedf00dULL);
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = effective_batch_size(config, rows);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < rows; start += batch) {
      const std::size_t len = std::min(batch, rows - start);
      const double loss =
          batch_step(std::span<const std::size_t>(order).subspan(start, len));
      if (!std::isfinite(loss)) {
        throw TrainingError(
            fmt::format("training loss diverged (epoch {}, loss {})", epoch,
                        loss));
      }
      total += loss;
      ++batches;
    }
    if (report) report->epoch_losses.push_back(total / batches);
  }
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m,
                               std::span<const std::size_t> cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = m.col(static_cast<Eigen::Index>(cols[i]));
  }
  return out;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
    case Activation::kSwish:
      return "swish";
  }
  return "tanh";
}

std::string_view to_string(OutputTransform t) {
  return t == OutputTransform::kShiftedTanh ? "shifted_tanh" : "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "swish") return Activation::kSwish;
  throw ParseError(fmt::format("unknown activation '{}'", name));
}

OutputTransform output_transform_from_string(std::string_view name) {
  if (name == "identity") return OutputTransform::kIdentity;
  if (name == "shifted_tanh") return OutputTransform::kShiftedTanh;
  throw ParseError(fmt::format("unknown output transform '{}'", name));
}

Mlp::Mlp(std::vector<DenseLayer> layers, Activation activation,
         OutputTransform transform, Scaling scaling)
    : layers_(std::move(layers)),
      activation_(activation),
      transform_(transform),
      scaling_(std::move(scaling)) {
  if (layers_.empty()) throw ArgumentError("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.bias.size() != layer.weight.rows()) {
      throw ArgumentError(fmt::format("layer {} bias size mismatch", l));
    }
    if (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows()) {
      throw ArgumentError(fmt::format(
          "layer {} expects {} inputs but layer {} emits {}", l,
          layer.weight.cols(), l - 1, layers_[l - 1].weight.rows()));
    }
  }
  const auto in = static_cast<Eigen::Index>(input_dim());
  if ((scaling_.input_mean.size() != 0 && scaling_.input_mean.size() != in) ||
      (scaling_.input_scale.size() != 0 && scaling_.input_scale.size() != in)) {
    throw ArgumentError("input scaling does not match the input dimension");
  }
}

Mlp Mlp::initialize(std::span<const std::size_t> layer_dims,
                    Activation activation, OutputTransform transform,
                    std::uint64_t seed) {
  if (layer_dims.size() < 2) {
    throw ArgumentError("layer_dims needs an input and an output size");
  }
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(layer_dims[l]);
    const auto out = static_cast<Eigen::Index>(layer_dims[l + 1]);
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = u(rng);
    }
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers), activation, transform);
}

std::size_t Mlp::input_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.cols());
}

std::size_t Mlp::output_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weight.rows());
}

std::vector<std::size_t> Mlp::layer_dims() const {
  std::vector<std::size_t> dims;
  if (layers_.empty()) return dims;
  dims.push_back(input_dim());
  for (const auto& l : layers_) dims.push_back(static_cast<std::size_t>(l.weight.rows()));
  return dims;
}

Eigen::VectorXd Mlp::standardize(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    throw ArgumentError(fmt::format("network expects {} inputs, got {}",
                                    input_dim(), x.size()));
  }
  Eigen::VectorXd v =
      Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  if (scaling_.input_mean.size() != 0) v -= scaling_.input_mean;
  if (scaling_.input_scale.size() != 0) v = v.cwiseQuotient(scaling_.input_scale);
  return v;
}

Eigen::VectorXd Mlp::forward(std::span<const double> x,
                             const HiddenMasks* masks) const {
  Eigen::VectorXd a = standardize(x);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::VectorXd z = layers_[l].weight * a + layers_[l].bias;
    if (l + 1 < layers_.size()) {
      a = z.unaryExpr([this](double v) { return activate(activation_, v); });
      if (masks) a = a.cwiseProduct((*masks)[l]);
    } else {
      a = z.unaryExpr([this](double v) { return transform(transform_, v); });
    }
  }
  return (scaling_.output_offset + scaling_.output_scale * a.array()).matrix();
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs) const {
  if (static_cast<std::size_t>(inputs.rows()) != input_dim()) {
    throw ArgumentError(fmt::format("network expects {} inputs, got {}",
                                    input_dim(), inputs.rows()));
  }
  Eigen::MatrixXd x = inputs;
  if (scaling_.input_mean.size() != 0) x.colwise() -= scaling_.input_mean;
  if (scaling_.input_scale.size() != 0) {
    x = x.array().colwise() / scaling_.input_scale.array();
  }
  Eigen::MatrixXd out = forward_raw(x, nullptr);
  return (scaling_.output_offset + scaling_.output_scale * out.array()).matrix();
}

Eigen::MatrixXd Mlp::input_jacobian(std::span<const double> x,
                                    const HiddenMasks* masks) const {
  Eigen::VectorXd a = standardize(x);
  Eigen::MatrixXd jac;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Eigen::VectorXd z = layers_[l].weight * a + layers_[l].bias;
    jac = l == 0 ? Eigen::MatrixXd(layers_[0].weight)
                 : Eigen::MatrixXd(layers_[l].weight * jac);
    Eigen::VectorXd d(z.size());
    if (l + 1 < layers_.size()) {
      for (Eigen::Index i = 0; i < z.size(); ++i) d(i) = activate_deriv(activation_, z(i));
      a = z.unaryExpr([this](double v) { return activate(activation_, v); });
      if (masks) {
        d = d.cwiseProduct((*masks)[l]);
        a = a.cwiseProduct((*masks)[l]);
      }
    } else {
      for (Eigen::Index i = 0; i < z.size(); ++i) d(i) = transform_deriv(transform_, z(i));
    }
    jac = d.asDiagonal() * jac;
  }
  jac *= scaling_.output_scale;
  if (scaling_.input_scale.size() != 0) {
    jac = jac * scaling_.input_scale.cwiseInverse().asDiagonal();
  }
  return jac;
}

Eigen::MatrixXd Mlp::forward_raw(const Eigen::MatrixXd& inputs,
                                 Tape* tape) const {
  if (tape) {
    tape->pre.clear();
    tape->post.clear();
    tape->input = inputs;
  }
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = (layers_[l].weight * a).colwise() + layers_[l].bias;
    if (l + 1 < layers_.size()) {
      a = z.unaryExpr([this](double v) { return activate(activation_, v); });
      if (tape) {
        tape->pre.push_back(std::move(z));
        tape->post.push_back(a);
      }
    } else {
      a = z.unaryExpr([this](double v) { return transform(transform_, v); });
      if (tape) tape->pre.push_back(std::move(z));
    }
  }
  return a;
}

void Mlp::backward_raw(const Tape& tape, const Eigen::MatrixXd& grad_output,
                       std::vector<DenseLayer>& grads) const {
  const std::size_t n = layers_.size();
  Eigen::MatrixXd delta = grad_output.cwiseProduct(tape.pre[n - 1].unaryExpr(
      [this](double v) { return transform_deriv(transform_, v); }));
  for (std::size_t l = n; l-- > 0;) {
    const Eigen::MatrixXd& below = l == 0 ? tape.input : tape.post[l - 1];
    grads[l].weight.noalias() += delta * below.transpose();
    grads[l].bias += delta.rowwise().sum();
    if (l == 0) break;
    delta = (layers_[l].weight.transpose() * delta)
                .cwiseProduct(tape.pre[l - 1].unaryExpr(
                    [this](double v) { return activate_deriv(activation_, v); }));
  }
}

std::vector<DenseLayer> Mlp::zero_gradients() const {
  std::vector<DenseLayer> g;
  g.reserve(layers_.size());
  for (const auto& l : layers_) {
    g.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                 Eigen::VectorXd::Zero(l.bias.size())});
  }
  return g;
}

double Mlp::squared_norm() const {
  double total = 0.0;
  for (const auto& l : layers_) {
    total += l.weight.squaredNorm() + l.bias.squaredNorm();
  }
  return total;
}

bool Mlp::all_finite() const {
  for (const auto& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.activation_ != b.activation_ || a.transform_ != b.transform_ ||
      a.layers_.size() != b.layers_.size()) {
    return false;
  }
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (a.layers_[l].weight != b.layers_[l].weight ||
        a.layers_[l].bias != b.layers_[l].bias) {
      return false;
    }
  }
  const auto& sa = a.scaling_;
  const auto& sb = b.scaling_;
  return sa.input_mean == sb.input_mean && sa.input_scale == sb.input_scale &&
         sa.output_offset == sb.output_offset &&
         sa.output_scale == sb.output_scale;
}

Adam::Adam(const Mlp& net, double learning_rate)
    : lr_(learning_rate), m_(net.zero_gradients()), v_(net.zero_gradients()) {}

void Adam::step(Mlp& net, const std::vector<DenseLayer>& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (std::size_t l = 0; l < grads.size(); ++l) {
    auto& layer = net.layers()[l];
    update(layer.weight, m_[l].weight, v_[l].weight, grads[l].weight);
    update(layer.bias, m_[l].bias, v_[l].bias, grads[l].bias);
  }
}

std::size_t effective_batch_size(const TrainConfig& config, std::size_t rows) {
  if (config.batch_size > 0) return std::min(config.batch_size, rows);
  return std::min<std::size_t>(kDefaultBatchSize, rows);
}

Mlp fit_regression(const Eigen::MatrixXd& inputs,
                   std::span<const double> targets, const TrainConfig& config,
                   FitReport* report) {
  check_training_inputs(inputs, targets, config);
  PreparedData data =
      prepare(inputs, targets, report ? &report->warnings : nullptr);
  const auto dims = layer_dims_for(static_cast<std::size_t>(inputs.cols()),
                                   config.hidden_dims, 1);
  Mlp net = Mlp::initialize(dims, config.activation, OutputTransform::kIdentity,
                            config.seed);
  Adam adam(net, config.learning_rate);
  Mlp::Tape tape;

  run_epochs(
      data.y.size(), config,
      [&](std::span<const std::size_t> cols) {
        const Eigen::MatrixXd x = gather_columns(data.x, cols);
        Eigen::RowVectorXd y(static_cast<Eigen::Index>(cols.size()));
        for (std::size_t i = 0; i < cols.size(); ++i) {
          y(static_cast<Eigen::Index>(i)) = data.y(static_cast<Eigen::Index>(cols[i]));
        }
        const Eigen::MatrixXd out = net.forward_raw(x, &tape);
        const Eigen::RowVectorXd err = out.row(0) - y;
        const double b = static_cast<double>(cols.size());
        auto grads = net.zero_gradients();
        net.backward_raw(tape, (2.0 / b) * err, grads);
        add_l2(net, config.l2_weight, grads);
        adam.step(net, grads);
        return err.squaredNorm() / b;
      },
      report);

  if (!net.all_finite()) throw TrainingError("network parameters diverged");
  // Refit the output bias exactly so the training residuals average to zero.
  const Eigen::RowVectorXd err = data.y.transpose() - net.forward_raw(data.x, nullptr).row(0);
  net.layers().back().bias(0) += err.mean();
  net.scaling() = data.scaling;
  return net;
}

HeteroscedasticFit fit_heteroscedastic(const Eigen::MatrixXd& inputs,
                                       std::span<const double> targets,
                                       const TrainConfig& config,
                                       FitReport* report) {
  check_training_inputs(inputs, targets, config);
  PreparedData data =
      prepare(inputs, targets, report ? &report->warnings : nullptr);
  const auto dims = layer_dims_for(static_cast<std::size_t>(inputs.cols()),
                                   config.hidden_dims, 1);
  Mlp mean = Mlp::initialize(dims, config.activation,
                             OutputTransform::kIdentity, config.seed);
  Mlp scale = Mlp::initialize(dims, config.activation,
                              OutputTransform::kShiftedTanh,
                              config.seed ^ 0xa5a5a5a5ULL);
  // Start from a flat scale of 0.5 standard deviations.
  scale.layers().back().weight.setZero();
  Adam adam_mean(mean, config.learning_rate);
  Adam adam_scale(scale, config.learning_rate);
  Mlp::Tape tape_mean, tape_scale;

  run_epochs(
      data.y.size(), config,
      [&](std::span<const std::size_t> cols) {
        const Eigen::MatrixXd x = gather_columns(data.x, cols);
        const auto b = static_cast<Eigen::Index>(cols.size());
        Eigen::RowVectorXd y(b);
        for (Eigen::Index i = 0; i < b; ++i) {
          y(i) = data.y(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(i)]));
        }
        const Eigen::MatrixXd mu = mean.forward_raw(x, &tape_mean);
        const Eigen::MatrixXd sigma = scale.forward_raw(x, &tape_scale);
        const Eigen::ArrayXXd r = (y - mu.row(0)).array();
        const Eigen::ArrayXXd s = sigma.row(0).array();
        const Eigen::ArrayXXd s2 = s.square();
        const double loss =
            (r.square() / (2.0 * s2) + s.log()).sum() / static_cast<double>(b);
        const Eigen::MatrixXd d_mu = (-r / s2 / static_cast<double>(b)).matrix();
        const Eigen::MatrixXd d_sigma =
            ((1.0 / s - r.square() / (s2 * s)) / static_cast<double>(b)).matrix();
        auto g_mean = mean.zero_gradients();
        auto g_scale = scale.zero_gradients();
        mean.backward_raw(tape_mean, d_mu, g_mean);
        scale.backward_raw(tape_scale, d_sigma, g_scale);
        add_l2(mean, config.l2_weight, g_mean);
        add_l2(scale, config.l2_weight, g_scale);
        adam_mean.step(mean, g_mean);
        adam_scale.step(scale, g_scale);
        return loss;
      },
      report);

  if (!mean.all_finite() || !scale.all_finite()) {
    throw TrainingError("network parameters diverged");
  }
  {
    // Exact output-bias step for the mean under the fitted scales.
    const Eigen::ArrayXd r =
        (data.y.transpose() - mean.forward_raw(data.x, nullptr).row(0)).array().transpose();
    const Eigen::ArrayXd w =
        scale.forward_raw(data.x, nullptr).row(0).array().transpose().square().inverse();
    mean.layers().back().bias(0) += (r * w).sum() / w.sum();
  }
  mean.scaling() = data.scaling;
  scale.scaling() = data.scaling;
  scale.scaling().output_offset = 0.0;
  return {std::move(mean), std::move(scale)};
}

nlohmann::json to_json(const Mlp& net) {
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    }
    weights.push_back(w);
    biases.push_back(std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size()));
  }
  const Scaling& s = net.scaling();
  return {
      {"layer_dims", net.layer_dims()},
      {"activation", to_string(net.activation())},
      {"output_transform", to_string(net.output_transform())},
      {"weights", weights},
      {"biases", biases},
      {"scaling",
       {{"input_mean", std::vector<double>(s.input_mean.data(),
                                           s.input_mean.data() + s.input_mean.size())},
        {"input_scale", std::vector<double>(s.input_scale.data(),
                                            s.input_scale.data() + s.input_scale.size())},
        {"output_offset", s.output_offset},
        {"output_scale", s.output_scale}}},
  };
}

Mlp mlp_from_json(const nlohmann::json& j) {
  try {
    const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (dims.size() < 2 || weights.size() != dims.size() - 1 ||
        biases.size() != dims.size() - 1) {
      throw ParseError("network json: layer count mismatch");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      const auto w = weights[l].get<std::vector<double>>();
      const auto b = biases[l].get<std::vector<double>>();
      if (w.size() != dims[l] * dims[l + 1] || b.size() != dims[l + 1]) {
        throw ParseError(fmt::format("network json: layer {} has wrong size", l));
      }
      DenseLayer layer{Eigen::MatrixXd(static_cast<Eigen::Index>(dims[l + 1]),
                                       static_cast<Eigen::Index>(dims[l])),
                       Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()))};
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = w[k++];
      }
      layers.push_back(std::move(layer));
    }
    Scaling s;
    const auto& js = j.at("scaling");
    const auto mean = js.at("input_mean").get<std::vector<double>>();
    const auto scale = js.at("input_scale").get<std::vector<double>>();
    s.input_mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    s.input_scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
    s.output_offset = js.at("output_offset").get<double>();
    s.output_scale = js.at("output_scale").get<double>();
    return Mlp(std::move(layers),
               activation_from_string(j.at("activation").get<std::string>()),
               output_transform_from_string(j.at("output_transform").get<std::string>()),
               std::move(s));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("network json: {}", e.what()));
  }
}

}  // namespace siren
