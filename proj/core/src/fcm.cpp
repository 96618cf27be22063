#include "siren/fcm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "siren/error.hpp"
#include "siren/parallel.hpp"

namespace siren {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double floored_scale(double s, NodeId node, std::vector<std::string>* warnings) {
  if (s >= kScaleFloor) return s;
  if (warnings) {
    warnings->push_back(fmt::format(
        "node {}: scale {} below floor, using {}", node, s, kScaleFloor));
  }
  return kScaleFloor;
}

double population_std(std::span<const double> v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / v.size());
}

}  // namespace

// ---- Noise models ---------------------------------------------------------

void validate(const NoiseModel& noise) {
  std::visit(
      Overloaded{
          [](const GaussianNoise& g) {
            if (!(g.sigma > 0.0)) throw ArgumentError("gaussian sigma must be > 0");
          },
          [](const MixtureNoise& m) {
            if (m.weights.empty() || m.weights.size() != m.means.size() ||
                m.weights.size() != m.sigmas.size()) {
              throw ArgumentError("mixture needs matching weights, means, sigmas");
            }
            double total = 0.0;
            for (std::size_t i = 0; i < m.weights.size(); ++i) {
              if (m.weights[i] < 0.0 || !(m.sigmas[i] > 0.0)) {
                throw ArgumentError("mixture weights must be >= 0 and sigmas > 0");
              }
              total += m.weights[i];
            }
            if (std::abs(total - 1.0) > 1e-9) {
              throw ArgumentError("mixture weights must sum to 1");
            }
          },
          [](const HalfNormalNoise& h) {
            if (!(h.scale > 0.0)) throw ArgumentError("half-normal scale must be > 0");
          },
          [](const UniformNoise& u) {
            if (!(u.hi > u.lo)) throw ArgumentError("uniform needs hi > lo");
          },
          [](const EmpiricalNoise& e) {
            if (e.samples.size() < kMinEmpiricalSamples) {
              throw ArgumentError(fmt::format(
                  "empirical noise needs at least {} samples, got {}",
                  kMinEmpiricalSamples, e.samples.size()));
            }
          },
      },
      noise);
}

double draw(const NoiseModel& noise, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return std::visit(
      Overloaded{
          [&](const GaussianNoise& g) { return g.mean + g.sigma * normal(rng); },
          [&](const MixtureNoise& m) {
            std::discrete_distribution<std::size_t> pick(m.weights.begin(),
                                                         m.weights.end());
            const std::size_t c = pick(rng);
            return m.means[c] + m.sigmas[c] * normal(rng);
          },
          [&](const HalfNormalNoise& h) {
            return h.loc + h.scale * std::abs(normal(rng));
          },
          [&](const UniformNoise& u) {
            return std::uniform_real_distribution<double>(u.lo, u.hi)(rng);
          },
          [&](const EmpiricalNoise& e) {
            std::uniform_int_distribution<std::size_t> pick(0, e.samples.size() - 1);
            return e.samples[pick(rng)];
          },
      },
      noise);
}

double noise_mean(const NoiseModel& noise) {
  return std::visit(
      Overloaded{
          [](const GaussianNoise& g) { return g.mean; },
          [](const MixtureNoise& m) {
            double mu = 0.0;
            for (std::size_t i = 0; i < m.weights.size(); ++i) mu += m.weights[i] * m.means[i];
            return mu;
          },
          [](const HalfNormalNoise& h) { return h.loc + h.scale * 2.0 * kInvSqrt2Pi; },
          [](const UniformNoise& u) { return 0.5 * (u.lo + u.hi); },
          [](const EmpiricalNoise& e) {
            return std::accumulate(e.samples.begin(), e.samples.end(), 0.0) /
                   e.samples.size();
          },
      },
      noise);
}

double noise_std(const NoiseModel& noise) {
  return std::visit(
      Overloaded{
          [](const GaussianNoise& g) { return g.sigma; },
          [](const MixtureNoise& m) {
            double mu = 0.0, second = 0.0;
            for (std::size_t i = 0; i < m.weights.size(); ++i) {
              mu += m.weights[i] * m.means[i];
              second += m.weights[i] * (m.sigmas[i] * m.sigmas[i] + m.means[i] * m.means[i]);
            }
            return std::sqrt(std::max(second - mu * mu, 0.0));
          },
          [](const HalfNormalNoise& h) { return h.scale * std::sqrt(1.0 - 2.0 / M_PI); },
          [](const UniformNoise& u) { return (u.hi - u.lo) / std::sqrt(12.0); },
          [](const EmpiricalNoise& e) { return population_std(e.samples); },
      },
      noise);
}

std::string_view noise_kind(const NoiseModel& noise) {
  return std::visit(Overloaded{
                        [](const GaussianNoise&) { return "gaussian"; },
                        [](const MixtureNoise&) { return "mixture"; },
                        [](const HalfNormalNoise&) { return "half_normal"; },
                        [](const UniformNoise&) { return "uniform"; },
                        [](const EmpiricalNoise&) { return "empirical"; },
                    },
                    noise);
}

// ---- Parent functions -----------------------------------------------------

std::string_view to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::kAnm:
      return "anm";
    case MechanismKind::kLsn:
      return "lsn";
    case MechanismKind::kLinear:
      return "linear";
  }
  return "anm";
}

MechanismKind mechanism_kind_from_string(std::string_view name) {
  if (name == "anm") return MechanismKind::kAnm;
  if (name == "lsn") return MechanismKind::kLsn;
  if (name == "linear") return MechanismKind::kLinear;
  throw ArgumentError(
      fmt::format("unknown mechanism kind '{}' (expected linear, anm or lsn)", name));
}

std::size_t input_dim(const ParentFn& fn) {
  return std::visit(Overloaded{
                        [](const ConstantFn&) -> std::size_t { return 0; },
                        [](const LinearFn& l) {
                          return static_cast<std::size_t>(l.coef.size());
                        },
                        [](const Mlp& m) { return m.input_dim(); },
                    },
                    fn);
}

double evaluate(const ParentFn& fn, std::span<const double> pa,
                const HiddenMasks* masks) {
  return std::visit(
      Overloaded{
          [](const ConstantFn& c) { return c.value; },
          [&](const LinearFn& l) {
            double v = l.intercept;
            for (std::size_t i = 0; i < pa.size(); ++i) {
              v += l.coef(static_cast<Eigen::Index>(i)) * pa[i];
            }
            return v;
          },
          [&](const Mlp& m) { return m.forward(pa, masks)(0); },
      },
      fn);
}

Eigen::RowVectorXd evaluate_batch(const ParentFn& fn, const Eigen::MatrixXd& pa) {
  return std::visit(
      Overloaded{
          [&](const ConstantFn& c) -> Eigen::RowVectorXd {
            return Eigen::RowVectorXd::Constant(pa.cols(), c.value);
          },
          [&](const LinearFn& l) {
            Eigen::RowVectorXd v = l.coef.transpose() * pa;
            return Eigen::RowVectorXd(v.array() + l.intercept);
          },
          [&](const Mlp& m) { return Eigen::RowVectorXd(m.forward_batch(pa).row(0)); },
      },
      fn);
}

Eigen::VectorXd gradient(const ParentFn& fn, std::span<const double> pa,
                         const HiddenMasks* masks) {
  return std::visit(
      Overloaded{
          [&](const ConstantFn&) {
            return Eigen::VectorXd(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pa.size())));
          },
          [](const LinearFn& l) { return l.coef; },
          [&](const Mlp& m) {
            return Eigen::VectorXd(m.input_jacobian(pa, masks).row(0).transpose());
          },
      },
      fn);
}

// ---- FittedFcm ------------------------------------------------------------

FittedFcm::FittedFcm(Dag dag, std::vector<NodeMechanism> mechanisms)
    : dag_(std::move(dag)), mechanisms_(std::move(mechanisms)) {
  if (mechanisms_.size() != dag_.n_nodes()) {
    throw ArgumentError(fmt::format("{} mechanisms for {} nodes",
                                    mechanisms_.size(), dag_.n_nodes()));
  }
  for (NodeId j = 0; j < mechanisms_.size(); ++j) {
    const auto& m = mechanisms_[j];
    const std::size_t n_pa = dag_.parents(j).size();
    const std::size_t mean_dim = input_dim(m.mean);
    if (mean_dim != n_pa && !(mean_dim == 0 && std::holds_alternative<ConstantFn>(m.mean))) {
      throw ArgumentError(fmt::format(
          "node {}: mean function takes {} inputs but node has {} parents", j,
          mean_dim, n_pa));
    }
    if (m.scale) {
      const std::size_t scale_dim = input_dim(*m.scale);
      if (scale_dim != n_pa && !std::holds_alternative<ConstantFn>(*m.scale)) {
        throw ArgumentError(fmt::format(
            "node {}: scale function takes {} inputs but node has {} parents", j,
            scale_dim, n_pa));
      }
    }
    validate(m.noise);
  }
}

const NodeMechanism& FittedFcm::mechanism(NodeId node) const {
  if (node >= mechanisms_.size()) {
    throw ArgumentError(fmt::format("node {} out of range", node));
  }
  return mechanisms_[node];
}

std::optional<MechanismKind> FittedFcm::kind() const {
  if (mechanisms_.empty()) return std::nullopt;
  const MechanismKind k = mechanisms_.front().kind;
  for (const auto& m : mechanisms_) {
    if (m.kind != k) return std::nullopt;
  }
  return k;
}

std::vector<double> FittedFcm::parent_values(NodeId node,
                                             std::span<const double> x) const {
  std::vector<double> pa;
  for (NodeId p : dag_.parents(node)) pa.push_back(x[p]);
  return pa;
}

Eigen::MatrixXd FittedFcm::parent_columns(NodeId node,
                                          const Eigen::MatrixXd& x) const {
  const auto parents = dag_.parents(node);
  Eigen::MatrixXd pa(static_cast<Eigen::Index>(parents.size()), x.rows());
  for (std::size_t i = 0; i < parents.size(); ++i) {
    pa.row(static_cast<Eigen::Index>(i)) =
        x.col(static_cast<Eigen::Index>(parents[i])).transpose();
  }
  return pa;
}

namespace {

void check_dim(std::size_t got, std::size_t want, std::string_view what) {
  if (got != want) {
    throw ArgumentError(
        fmt::format("{} has dimension {}, expected {}", what, got, want));
  }
}

const HiddenMasks* node_masks(const FcmMasks* masks, NodeId node) {
  if (!masks || node >= masks->size() || (*masks)[node].empty()) return nullptr;
  return &(*masks)[node];
}

}  // namespace

Eigen::VectorXd FittedFcm::forward(std::span<const double> z,
                                   const FcmMasks* masks) const {
  check_dim(z.size(), n_nodes(), "noise vector");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_nodes()));
  std::span<const double> xs(x.data(), n_nodes());
  for (NodeId j : dag_.topo_order()) {
    const auto& m = mechanisms_[j];
    const auto pa = parent_values(j, xs);
    const HiddenMasks* mk = node_masks(masks, j);
    double scale = 1.0;
    if (m.scale) scale = floored_scale(evaluate(*m.scale, pa), j, nullptr);
    x(static_cast<Eigen::Index>(j)) = evaluate(m.mean, pa, mk) + scale * z[j];
  }
  return x;
}

Eigen::MatrixXd FittedFcm::forward_batch(const Eigen::MatrixXd& z) const {
  check_dim(static_cast<std::size_t>(z.cols()), n_nodes(), "noise matrix");
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  for (NodeId j : dag_.topo_order()) {
    const auto& m = mechanisms_[j];
    const Eigen::MatrixXd pa = parent_columns(j, x);
    const auto col = static_cast<Eigen::Index>(j);
    Eigen::RowVectorXd v = evaluate_batch(m.mean, pa);
    if (m.scale) {
      const Eigen::RowVectorXd s =
          evaluate_batch(*m.scale, pa).array().max(kScaleFloor).matrix();
      v += s.cwiseProduct(z.col(col).transpose());
    } else {
      v += z.col(col).transpose();
    }
    x.col(col) = v.transpose();
  }
  return x;
}

Eigen::VectorXd FittedFcm::invert_noise(std::span<const double> x,
                                        std::vector<std::string>* warnings) const {
  check_dim(x.size(), n_nodes(), "observation");
  Eigen::VectorXd z(static_cast<Eigen::Index>(n_nodes()));
  for (NodeId j = 0; j < n_nodes(); ++j) {
    const auto& m = mechanisms_[j];
    const auto pa = parent_values(j, x);
    double scale = 1.0;
    if (m.scale) scale = floored_scale(evaluate(*m.scale, pa), j, warnings);
    z(static_cast<Eigen::Index>(j)) = (x[j] - evaluate(m.mean, pa)) / scale;
  }
  return z;
}

Eigen::MatrixXd FittedFcm::sample_noise(std::size_t m, std::uint64_t seed) const {
  if (m == 0) throw ArgumentError("sample size must be at least 1");
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n_nodes()));
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    for (NodeId j = 0; j < n_nodes(); ++j) {
      z(r, static_cast<Eigen::Index>(j)) = draw(mechanisms_[j].noise, rng);
    }
  }
  return z;
}

Eigen::MatrixXd FittedFcm::sample(std::size_t m, std::uint64_t seed) const {
  return forward_batch(sample_noise(m, seed));
}

double FittedFcm::scale_at(NodeId node, std::span<const double> x) const {
  const auto& m = mechanism(node);
  if (!m.scale) return 1.0;
  return floored_scale(evaluate(*m.scale, parent_values(node, x)), node, nullptr);
}

Eigen::VectorXd FittedFcm::parent_jacobian(NodeId node, std::span<const double> x,
                                           double z_node,
                                           const HiddenMasks* masks) const {
  const auto& m = mechanism(node);
  const auto pa = parent_values(node, x);
  Eigen::VectorXd jac = gradient(m.mean, pa, masks);
  if (m.scale && evaluate(*m.scale, pa) >= kScaleFloor) {
    jac += z_node * gradient(*m.scale, pa);
  }
  return jac;
}

Eigen::VectorXd FittedFcm::leaf_sensitivity(std::span<const double> z,
                                            const FcmMasks* masks) const {
  const Eigen::VectorXd x = forward(z, masks);
  std::span<const double> xs(x.data(), n_nodes());
  Eigen::VectorXd adj = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_nodes()));
  adj(static_cast<Eigen::Index>(dag_.leaf())) = 1.0;
  const auto& order = dag_.topo_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId k = *it;
    const double a = adj(static_cast<Eigen::Index>(k));
    if (a == 0.0) continue;
    const Eigen::VectorXd jac = parent_jacobian(k, xs, z[k], node_masks(masks, k));
    const auto parents = dag_.parents(k);
    for (std::size_t i = 0; i < parents.size(); ++i) {
      adj(static_cast<Eigen::Index>(parents[i])) += a * jac(static_cast<Eigen::Index>(i));
    }
  }
  for (NodeId j = 0; j < n_nodes(); ++j) {
    adj(static_cast<Eigen::Index>(j)) *= scale_at(j, xs);
  }
  return adj;
}

// ---- Fitting --------------------------------------------------------------

namespace {

struct NodeFit {
  NodeMechanism mechanism;
  std::vector<std::string> warnings;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
};

LinearFn fit_linear(const Eigen::MatrixXd& pa, const Eigen::VectorXd& y,
                    double l2) {
  const Eigen::RowVectorXd pa_mean = pa.colwise().mean();
  const Eigen::MatrixXd centered = pa.rowwise() - pa_mean;
  const double y_mean = y.mean();
  Eigen::MatrixXd gram = centered.transpose() * centered;
  gram.diagonal().array() += l2 * static_cast<double>(pa.rows());
  const Eigen::VectorXd rhs = centered.transpose() * (y.array() - y_mean).matrix();
  LinearFn fn;
  fn.coef = gram.completeOrthogonalDecomposition().solve(rhs);
  fn.intercept = y_mean - pa_mean.dot(fn.coef);
  return fn;
}

NodeFit fit_node(const Dag& dag, const Eigen::MatrixXd& data, NodeId j,
                 MechanismKind kind, const FcmFitConfig& config) {
  NodeFit out;
  NodeMechanism& mech = out.mechanism;
  mech.kind = kind;
  const auto col = static_cast<Eigen::Index>(j);
  const Eigen::VectorXd y = data.col(col);
  const auto parents = dag.parents(j);
  const auto m = static_cast<Eigen::Index>(data.rows());

  Eigen::MatrixXd pa(m, static_cast<Eigen::Index>(parents.size()));
  bool all_constant = true;
  for (std::size_t i = 0; i < parents.size(); ++i) {
    pa.col(static_cast<Eigen::Index>(i)) = data.col(static_cast<Eigen::Index>(parents[i]));
    const double sd = population_std(std::span<const double>(
        pa.col(static_cast<Eigen::Index>(i)).data(), static_cast<std::size_t>(m)));
    if (sd > 1e-12) {
      all_constant = false;
    } else {
      out.warnings.push_back(
          fmt::format("node {}: parent {} has zero variance", j, parents[i]));
    }
  }

  if (parents.empty() || all_constant) {
    if (!parents.empty()) {
      out.warnings.push_back(
          fmt::format("node {}: all parents constant, using constant mechanism", j));
      LinearFn fn{y.mean(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parents.size()))};
      mech.mean = fn;
    } else {
      mech.mean = ConstantFn{y.mean()};
    }
  } else if (kind == MechanismKind::kLinear) {
    mech.mean = fit_linear(pa, y, config.linear_l2);
  } else {
    TrainConfig tc = config.mean;
    tc.seed = derive_seed(config.seed, "mean", j);
    FitReport rep;
    const std::span<const double> targets(y.data(), static_cast<std::size_t>(m));
    if (kind == MechanismKind::kAnm) {
      mech.mean = fit_regression(pa, targets, tc, &rep);
    } else {
      auto fit = fit_heteroscedastic(pa, targets, tc, &rep);
      mech.mean = std::move(fit.mean);
      mech.scale = std::move(fit.scale);
    }
    for (auto& w : rep.warnings) out.warnings.push_back(fmt::format("node {}: {}", j, w));
    if (!rep.epoch_losses.empty()) out.final_loss = rep.epoch_losses.back();
  }

  // Residuals on the training data.
  Eigen::MatrixXd pa_t = pa.transpose();
  Eigen::RowVectorXd resid = y.transpose() - evaluate_batch(mech.mean, pa_t);
  if (mech.scale) {
    Eigen::RowVectorXd s = evaluate_batch(*mech.scale, pa_t);
    if ((s.array() < kScaleFloor).any()) {
      out.warnings.push_back(fmt::format("node {}: fitted scale hit the floor", j));
    }
    resid = resid.cwiseQuotient(s.cwiseMax(kScaleFloor));
  }
  mech.residuals.assign(resid.data(), resid.data() + resid.size());
  double sd = population_std(mech.residuals);
  if (!(sd > 1e-9)) {
    out.warnings.push_back(fmt::format("node {}: residuals have zero variance", j));
    sd = 1e-9;
  }
  mech.noise = GaussianNoise{0.0, sd};
  return out;
}

}  // namespace

FittedFcm fit_fcm(const Dag& dag, const Eigen::MatrixXd& data,
                  MechanismKind kind, const FcmFitConfig& config,
                  FcmFitReport* report) {
  if (static_cast<std::size_t>(data.rows()) < kMinFitRows) {
    throw ArgumentError(fmt::format("fitting needs at least {} rows, got {}",
                                    kMinFitRows, data.rows()));
  }
  if (static_cast<std::size_t>(data.cols()) != dag.n_nodes()) {
    throw ArgumentError(fmt::format("data has {} columns but graph has {} nodes",
                                    data.cols(), dag.n_nodes()));
  }
  if (!data.allFinite()) throw ArgumentError("data contains non-finite values");

  std::vector<NodeFit> fits(dag.n_nodes());
  parallel_for(dag.n_nodes(), [&](std::size_t j) {
    fits[j] = fit_node(dag, data, j, kind, config);
  });

  std::vector<NodeMechanism> mechs;
  mechs.reserve(fits.size());
  for (auto& f : fits) {
    if (report) {
      report->warnings.insert(report->warnings.end(), f.warnings.begin(), f.warnings.end());
      report->final_losses.push_back(f.final_loss);
    }
    mechs.push_back(std::move(f.mechanism));
  }
  return FittedFcm(dag, std::move(mechs));
}

// ---- JSON -----------------------------------------------------------------

nlohmann::json to_json(const NoiseModel& noise) {
  nlohmann::json j = std::visit(
      Overloaded{
          [](const GaussianNoise& g) {
            return nlohmann::json{{"mean", g.mean}, {"sigma", g.sigma}};
          },
          [](const MixtureNoise& m) {
            return nlohmann::json{
                {"weights", m.weights}, {"means", m.means}, {"sigmas", m.sigmas}};
          },
          [](const HalfNormalNoise& h) {
            return nlohmann::json{{"loc", h.loc}, {"scale", h.scale}};
          },
          [](const UniformNoise& u) {
            return nlohmann::json{{"lo", u.lo}, {"hi", u.hi}};
          },
          [](const EmpiricalNoise& e) { return nlohmann::json{{"samples", e.samples}}; },
      },
      noise);
  j["kind"] = noise_kind(noise);
  return j;
}

NoiseModel noise_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    NoiseModel out;
    if (kind == "gaussian") {
      out = GaussianNoise{j.at("mean").get<double>(), j.at("sigma").get<double>()};
    } else if (kind == "mixture") {
      out = MixtureNoise{j.at("weights").get<std::vector<double>>(),
                         j.at("means").get<std::vector<double>>(),
                         j.at("sigmas").get<std::vector<double>>()};
    } else if (kind == "half_normal") {
      out = HalfNormalNoise{j.at("loc").get<double>(), j.at("scale").get<double>()};
    } else if (kind == "uniform") {
      out = UniformNoise{j.at("lo").get<double>(), j.at("hi").get<double>()};
    } else if (kind == "empirical") {
      out = EmpiricalNoise{j.at("samples").get<std::vector<double>>()};
    } else {
      throw ParseError(fmt::format("unknown noise kind '{}'", kind));
    }
    validate(out);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("noise json: {}", e.what()));
  } catch (const ArgumentError& e) {
    throw ParseError(fmt::format("noise json: {}", e.what()));
  }
}

nlohmann::json to_json(const ParentFn& fn) {
  return std::visit(
      Overloaded{
          [](const ConstantFn& c) {
            return nlohmann::json{{"type", "constant"}, {"value", c.value}};
          },
          [](const LinearFn& l) {
            return nlohmann::json{
                {"type", "linear"},
                {"intercept", l.intercept},
                {"coef", std::vector<double>(l.coef.data(), l.coef.data() + l.coef.size())}};
          },
          [](const Mlp& m) { return nlohmann::json{{"type", "mlp"}, {"net", to_json(m)}}; },
      },
      fn);
}

ParentFn parent_fn_from_json(const nlohmann::json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "constant") return ConstantFn{j.at("value").get<double>()};
    if (type == "linear") {
      const auto coef = j.at("coef").get<std::vector<double>>();
      return LinearFn{j.at("intercept").get<double>(),
                      Eigen::Map<const Eigen::VectorXd>(coef.data(),
                                                        static_cast<Eigen::Index>(coef.size()))};
    }
    if (type == "mlp") return mlp_from_json(j.at("net"));
    throw ParseError(fmt::format("unknown function type '{}'", type));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("function json: {}", e.what()));
  }
}

nlohmann::json to_json(const FittedFcm& fcm) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& m : fcm.mechanisms()) {
    nlohmann::json n{{"kind", to_string(m.kind)},
                     {"mean", to_json(m.mean)},
                     {"noise", to_json(m.noise)},
                     {"residuals", m.residuals}};
    if (m.scale) n["scale"] = to_json(*m.scale);
    nodes.push_back(std::move(n));
  }
  return {{"graph", to_json(fcm.dag())}, {"mechanisms", nodes}};
}

FittedFcm fcm_from_json(const nlohmann::json& j) {
  try {
    Dag dag = dag_from_json(j.at("graph"));
    std::vector<NodeMechanism> mechs;
    for (const auto& n : j.at("mechanisms")) {
      NodeMechanism m;
      try {
        m.kind = mechanism_kind_from_string(n.at("kind").get<std::string>());
      } catch (const ArgumentError& e) {
        throw ParseError(e.what());
      }
      m.mean = parent_fn_from_json(n.at("mean"));
      if (n.contains("scale")) m.scale = parent_fn_from_json(n.at("scale"));
      m.noise = noise_from_json(n.at("noise"));
      m.residuals = n.value("residuals", std::vector<double>{});
      mechs.push_back(std::move(m));
    }
    return FittedFcm(std::move(dag), std::move(mechs));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("fcm json: {}", e.what()));
  } catch (const ArgumentError& e) {
    throw ParseError(fmt::format("fcm json: {}", e.what()));
  }
}

}  // namespace siren
