#include "siren/diffusion.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "siren/error.hpp"
#include "siren/score.hpp"

namespace siren {

double diffusion_coefficient(double t, double sigma_max) {
  if (!(sigma_max > 1.0)) {
    throw ArgumentError(fmt::format("sigma_max must exceed 1, got {}", sigma_max));
  }
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ArgumentError(fmt::format("diffusion time {} outside [0, 1]", t));
  }
  const double log_s = std::log(sigma_max);
  return std::expm1(2.0 * t * log_s) / (2.0 * log_s);
}

std::vector<double> descending_time_grid(std::size_t n_steps, double eps) {
  if (n_steps == 0) throw ArgumentError("time grid needs at least one step");
  if (!(eps >= 0.0 && eps < 1.0)) throw ArgumentError("eps must lie in [0, 1)");
  const double dt = (1.0 - eps) / static_cast<double>(n_steps);
  std::vector<double> times(n_steps);
  for (std::size_t i = 0; i < n_steps; ++i) times[i] = 1.0 - static_cast<double>(i) * dt;
  return times;
}

Trajectory sample_trajectory(std::span<const std::shared_ptr<const LocalScore>> models,
                             std::span<const double> z0, std::span<const double> times,
                             double dt, std::uint64_t seed,
                             const SamplerOptions& options) {
  const std::size_t d = z0.size();
  if (models.size() != d) {
    throw ArgumentError(fmt::format("{} score models for a {}-dimensional state",
                                    models.size(), d));
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (!models[j]) throw ConfigurationError(fmt::format("score model {} is missing", j));
  }
  if (times.empty()) throw ArgumentError("time grid is empty");
  if (!(dt > 0.0)) throw ArgumentError("dt must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sqrt_dt = std::sqrt(dt);

  Trajectory tr;
  tr.times.assign(times.begin(), times.end());
  tr.states.reserve(times.size() + 1);
  tr.scores.reserve(times.size());
  tr.steps.reserve(times.size());
  tr.states.emplace_back(
      Eigen::Map<const Eigen::VectorXd>(z0.data(), static_cast<Eigen::Index>(d)));

  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    const double var = diffusion_coefficient(t, options.sigma_max);
    const double sigma = std::sqrt(var);
    const Eigen::VectorXd& z = tr.states.back();
    Eigen::VectorXd s(static_cast<Eigen::Index>(d));
    Eigen::VectorXd dz(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double c = models[j]->scale();
      s(jj) = models[j]->score(z(jj), t);
      const double eps = options.deterministic ? 0.0 : normal(rng);
      dz(jj) = c * c * var * s(jj) * dt + c * sigma * sqrt_dt * eps;
    }
    Eigen::VectorXd next = z + dz;
    if (!next.allFinite()) {
      throw NumericalError(fmt::format("trajectory became non-finite at step {}", i));
    }
    tr.scores.push_back(std::move(s));
    tr.steps.push_back(std::move(dz));
    tr.states.push_back(std::move(next));
  }
  return tr;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t,node,z,score,dz\n";
  for (std::size_t i = 0; i < trajectory.n_steps(); ++i) {
    const auto& z = trajectory.states[i];
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      out << fmt::format("{},{},{},{},{}\n", trajectory.times[i], j, z(j),
                         trajectory.scores[i](j), trajectory.steps[i](j));
    }
  }
}

}  // namespace siren
