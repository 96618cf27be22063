#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace siren {

class LocalScore;

// (sigma_max^(2t) - 1) / (2 ln sigma_max)
double diffusion_coefficient(double t, double sigma_max);

// t_i = 1 - i * dt for i = 0..n-1 with dt = (1 - eps) / n.
std::vector<double> descending_time_grid(std::size_t n_steps, double eps = 1e-3);

struct Trajectory {
  std::vector<Eigen::VectorXd> states;  // n + 1
  std::vector<Eigen::VectorXd> scores;  // n, score at states[i], times[i]
  std::vector<Eigen::VectorXd> steps;   // n, states[i + 1] - states[i]
  std::vector<double> times;            // n

  std::size_t n_steps() const { return steps.size(); }
};

struct SamplerOptions {
  double sigma_max = 10.0;
  // Drops the Brownian term (explicit Euler on the drift).
  bool deterministic = false;
};

// Euler-Maruyama on the reverse-time variance-exploding SDE. Component j
// uses models[j] at (z_j, t_i); with c_j = models[j]->scale(),
//   dz_j = c_j^2 sigma^2(t_i) s_j dt + c_j sigma(t_i) sqrt(dt) eps_j.
Trajectory sample_trajectory(
    std::span<const std::shared_ptr<const LocalScore>> models,
    std::span<const double> z0, std::span<const double> times, double dt,
    std::uint64_t seed, const SamplerOptions& options = {});

// Columns t,node,z,score,dz; one row per step and node.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace siren
