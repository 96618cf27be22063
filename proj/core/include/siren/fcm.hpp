#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "siren/graph.hpp"
#include "siren/mlp.hpp"

namespace siren {

// ---- Noise models ---------------------------------------------------------

struct GaussianNoise {
  double mean = 0.0;
  double sigma = 1.0;
};

struct MixtureNoise {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sigmas;
};

// loc + |N(0, scale^2)|
struct HalfNormalNoise {
  double loc = 0.0;
  double scale = 1.0;
};

struct UniformNoise {
  double lo = 0.0;
  double hi = 1.0;
};

// Resamples the stored values with replacement. Needs at least 30 values.
struct EmpiricalNoise {
  std::vector<double> samples;
};

using NoiseModel = std::variant<GaussianNoise, MixtureNoise, HalfNormalNoise,
                                UniformNoise, EmpiricalNoise>;

inline constexpr std::size_t kMinEmpiricalSamples = 30;

void validate(const NoiseModel& noise);
double draw(const NoiseModel& noise, std::mt19937_64& rng);
double noise_mean(const NoiseModel& noise);
double noise_std(const NoiseModel& noise);
std::string_view noise_kind(const NoiseModel& noise);

// ---- Mechanisms -----------------------------------------------------------

enum class MechanismKind { kAnm, kLsn, kLinear };

std::string_view to_string(MechanismKind kind);
MechanismKind mechanism_kind_from_string(std::string_view name);

struct ConstantFn {
  double value = 0.0;
};

struct LinearFn {
  double intercept = 0.0;
  Eigen::VectorXd coef;
};

// A function of the parent values. Mlp entries take the parents in ascending
// index order.
using ParentFn = std::variant<ConstantFn, LinearFn, Mlp>;

std::size_t input_dim(const ParentFn& fn);
double evaluate(const ParentFn& fn, std::span<const double> pa,
                const HiddenMasks* masks = nullptr);
// Columns of pa are samples.
Eigen::RowVectorXd evaluate_batch(const ParentFn& fn, const Eigen::MatrixXd& pa);
Eigen::VectorXd gradient(const ParentFn& fn, std::span<const double> pa,
                         const HiddenMasks* masks = nullptr);

struct NodeMechanism {
  MechanismKind kind = MechanismKind::kAnm;
  ParentFn mean = ConstantFn{};
  // LSN only; a missing scale means 1.
  std::optional<ParentFn> scale;
  NoiseModel noise = GaussianNoise{};
  // Fitted residuals (standardized for LSN), kept for resampling.
  std::vector<double> residuals;
};

// Per node, the hidden-activation masks for its Mlp mean function (empty for
// non-network mechanisms).
using FcmMasks = std::vector<HiddenMasks>;

class FittedFcm {
 public:
  FittedFcm() = default;
  FittedFcm(Dag dag, std::vector<NodeMechanism> mechanisms);

  const Dag& dag() const { return dag_; }
  std::size_t n_nodes() const { return dag_.n_nodes(); }
  const NodeMechanism& mechanism(NodeId node) const;
  const std::vector<NodeMechanism>& mechanisms() const { return mechanisms_; }
  // The kind shared by all mechanisms, nullopt if mixed.
  std::optional<MechanismKind> kind() const;

  // x_j = f_j(pa) + sigma_j(pa) * z_j in topological order.
  Eigen::VectorXd forward(std::span<const double> z,
                          const FcmMasks* masks = nullptr) const;
  // Rows are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& z) const;
  // z_j = (x_j - f_j(pa)) / sigma_j(pa). A scale below the floor is replaced
  // by the floor and noted in warnings.
  Eigen::VectorXd invert_noise(std::span<const double> x,
                               std::vector<std::string>* warnings = nullptr) const;
  // m rows drawn by pushing independent noise draws through forward.
  Eigen::MatrixXd sample(std::size_t m, std::uint64_t seed) const;
  Eigen::MatrixXd sample_noise(std::size_t m, std::uint64_t seed) const;

  // Scale sigma_j(pa) at the given observation (1 for additive mechanisms).
  double scale_at(NodeId node, std::span<const double> x) const;
  // d x_k / d x_p for each parent p of k (parents order), with z_k fixed.
  Eigen::VectorXd parent_jacobian(NodeId node, std::span<const double> x,
                                  double z_node,
                                  const HiddenMasks* masks = nullptr) const;
  // d x_leaf / d z_j for every node; exactly 0 outside the leaf's closure.
  Eigen::VectorXd leaf_sensitivity(std::span<const double> z,
                                   const FcmMasks* masks = nullptr) const;

 private:
  std::vector<double> parent_values(NodeId node, std::span<const double> x) const;
  Eigen::MatrixXd parent_columns(NodeId node, const Eigen::MatrixXd& x) const;

  Dag dag_;
  std::vector<NodeMechanism> mechanisms_;
};

struct FcmFitConfig {
  TrainConfig mean;  // ANM and LSN networks
  // Ridge penalty for LINEAR mechanisms (0 is plain least squares).
  double linear_l2 = 0.0;
  std::uint64_t seed = 0;
};

struct FcmFitReport {
  std::vector<std::string> warnings;
  // Final epoch loss per node (NaN for closed-form fits).
  std::vector<double> final_losses;
};

inline constexpr std::size_t kMinFitRows = 50;

// Rows of data are samples, columns are nodes.
FittedFcm fit_fcm(const Dag& dag, const Eigen::MatrixXd& data,
                  MechanismKind kind, const FcmFitConfig& config = {},
                  FcmFitReport* report = nullptr);

nlohmann::json to_json(const NoiseModel& noise);
NoiseModel noise_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ParentFn& fn);
ParentFn parent_fn_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FittedFcm& fcm);
FittedFcm fcm_from_json(const nlohmann::json& j);

}  // namespace siren
