#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <sstream>
#include <string>

#include "siren/diffusion.hpp"
#include "siren/error.hpp"
#include "siren/score.hpp"

using namespace siren;

namespace {

using Models = std::vector<std::shared_ptr<const LocalScore>>;

Models repeat(std::shared_ptr<const LocalScore> m, std::size_t d) { return Models(d, m); }

double grid_dt(std::size_t n) { return (1.0 - kTimeEpsilon) / static_cast<double>(n); }

}  // namespace

TEST(DiffusionCoefficient, Values) {
  EXPECT_EQ(diffusion_coefficient(0.0, 10.0), 0.0);
  EXPECT_NEAR(diffusion_coefficient(0.5, 10.0), 9.0 / (2.0 * std::log(10.0)), 1e-12);
  EXPECT_NEAR(diffusion_coefficient(0.5, 10.0), 1.954325, 1e-6);
  EXPECT_NEAR(diffusion_coefficient(1.0, std::exp(1.0)), (std::exp(2.0) - 1.0) / 2.0, 1e-12);
  EXPECT_NEAR(diffusion_coefficient(1.0, std::exp(1.0)), 3.194528, 1e-6);
  EXPECT_NEAR(diffusion_coefficient(1.0, 10.0), 99.0 / (2.0 * std::log(10.0)), 1e-12);
  EXPECT_THROW(diffusion_coefficient(0.5, 1.0), ArgumentError);
  EXPECT_THROW(diffusion_coefficient(1.5, 10.0), ArgumentError);
}

TEST(TimeGrid, Descending) {
  auto t = descending_time_grid(4);
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[0], 1.0);
  EXPECT_NEAR(t[3], 1.0 - 3.0 * 0.999 / 4.0, 1e-15);
  EXPECT_THROW(descending_time_grid(0), ArgumentError);
}

TEST(Sampler, SingleStepBookkeeping) {
  auto m = repeat(std::make_shared<GaussianScore>(0.0, 1.0), 3);
  std::vector<double> z0{1.0, 2.0, 3.0};
  auto times = descending_time_grid(1);
  Trajectory tr = sample_trajectory(m, z0, times, grid_dt(1), 5);
  EXPECT_EQ(tr.states.size(), 2u);
  EXPECT_EQ(tr.steps.size(), 1u);
  EXPECT_EQ(tr.scores.size(), 1u);
  EXPECT_EQ(tr.times.size(), 1u);
  EXPECT_EQ(tr.n_steps(), 1u);
}

TEST(Sampler, StateIdentityBitExact) {
  auto m = repeat(std::make_shared<GaussianScore>(0.3, 2.0), 4);
  std::vector<double> z0{1.0, -2.0, 0.5, 7.0};
  auto times = descending_time_grid(100);
  Trajectory tr = sample_trajectory(m, z0, times, grid_dt(100), 11);
  for (std::size_t i = 0; i < tr.n_steps(); ++i) {
    Eigen::VectorXd next = tr.states[i] + tr.steps[i];
    ASSERT_TRUE((next.array() == tr.states[i + 1].array()).all()) << "step " << i;
  }
}

TEST(Sampler, ScoresRecordedAtStateAndTime) {
  auto g = std::make_shared<GaussianScore>(0.0, 1.0);
  std::vector<double> z0{2.0};
  auto times = descending_time_grid(10);
  Trajectory tr = sample_trajectory(repeat(g, 1), z0, times, grid_dt(10), 1);
  for (std::size_t i = 0; i < tr.n_steps(); ++i) {
    EXPECT_EQ(tr.scores[i](0), g->score(tr.states[i](0), tr.times[i]));
  }
}

TEST(Sampler, SeededDeterminism) {
  auto m = repeat(std::make_shared<GaussianScore>(0.0, 1.0), 3);
  std::vector<double> z0{1.0, 2.0, 3.0};
  auto times = descending_time_grid(50);
  auto a = sample_trajectory(m, z0, times, grid_dt(50), 42);
  auto b = sample_trajectory(m, z0, times, grid_dt(50), 42);
  auto c = sample_trajectory(m, z0, times, grid_dt(50), 43);
  EXPECT_EQ(a.states.back(), b.states.back());
  EXPECT_NE(a.states.back(), c.states.back());
}

TEST(Sampler, ZeroScoreIsBrownian) {
  const std::size_t d = 5, n = 1000, runs = 200;
  auto zero = std::make_shared<FunctionScore>([](double, double) { return 0.0; });
  std::vector<double> z0(d, 1.5);
  auto times = descending_time_grid(n);
  double expected_var = 0.0;
  for (double t : times) expected_var += diffusion_coefficient(t, 10.0) * grid_dt(n);
  Eigen::MatrixXd moved(runs, d);
  for (std::size_t r = 0; r < runs; ++r) {
    Trajectory tr = sample_trajectory(repeat(zero, d), z0, times, grid_dt(n), 100 + r);
    moved.row(static_cast<Eigen::Index>(r)) = (tr.states.back().array() - 1.5).transpose();
  }
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) {
    const double mean = moved.col(j).mean();
    const double var =
        (moved.col(j).array() - mean).square().sum() / static_cast<double>(runs - 1);
    EXPECT_LT(std::abs(mean), 3.0 * std::sqrt(var / runs)) << "component " << j;
  }
  // Pooled variance against the accumulated schedule; relative SE is
  // sqrt(2 / (N - 1)) for N Gaussian draws.
  const double pooled = moved.array().square().mean();
  EXPECT_NEAR(pooled / expected_var, 1.0, 4.0 * std::sqrt(2.0 / (runs * d - 1)));
}

TEST(Sampler, ContractsTowardData) {
  // With the N(0, 1) score every step is linear, so the endpoint is exactly
  // N(a z0, b) with a and b from the step recursion.
  auto g = std::make_shared<GaussianScore>(0.0, 1.0);
  const std::size_t n = 100;
  auto times = descending_time_grid(n);
  double a = 1.0, b = 0.0;
  for (double t : times) {
    const double v = diffusion_coefficient(t, 10.0);
    const double r = 1.0 - v / (1.0 + v) * grid_dt(n);
    a *= r;
    b = b * r * r + v * grid_dt(n);
  }
  const double z0 = 5.0;
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  const double sd = std::sqrt(b);
  const double p_inside = phi((z0 - a * z0) / sd) - phi((-z0 - a * z0) / sd);

  const int runs = 200;
  int contracted = 0;
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < runs; ++r) {
    auto tr = sample_trajectory(repeat(g, 1), std::vector<double>{z0}, times, grid_dt(n), 1000 + r);
    const double end = tr.states.back()(0);
    if (std::abs(end) < z0) ++contracted;
    sum += end;
    sum_sq += end * end;
  }
  const double rate = static_cast<double>(contracted) / runs;
  EXPECT_NEAR(rate, p_inside, 3.0 * std::sqrt(p_inside * (1.0 - p_inside) / runs));
  EXPECT_GT(rate, 0.9);
  const double mean = sum / runs;
  EXPECT_NEAR(mean, a * z0, 3.0 * sd / std::sqrt(runs));
  EXPECT_NEAR((sum_sq - runs * mean * mean) / (runs - 1) / b, 1.0, 3.0 * std::sqrt(2.0 / (runs - 1)));
}

TEST(Sampler, DeterministicModeFirstOrder) {
  // Drift-only flow dz/d(-t) = -v(t) z / (1 + v(t)) for the N(0, 1) score.
  auto g = std::make_shared<GaussianScore>(0.0, 1.0);
  const double z0 = 2.0;
  auto exact_end = [&] {
    const double lo = kTimeEpsilon;
    const std::size_t k = 200000;
    const double h = (1.0 - lo) / k;
    double integral = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double t = lo + (static_cast<double>(i) + 0.5) * h;
      const double v = diffusion_coefficient(t, 10.0);
      integral += v / (1.0 + v) * h;
    }
    return z0 * std::exp(-integral);
  }();
  SamplerOptions opt;
  opt.deterministic = true;
  std::vector<double> logn, logerr;
  for (std::size_t n : {200, 400, 800, 1600}) {
    auto tr = sample_trajectory(repeat(g, 1), std::vector<double>{z0},
                                descending_time_grid(n), grid_dt(n), 0, opt);
    logn.push_back(std::log(static_cast<double>(n)));
    logerr.push_back(std::log(std::abs(tr.states.back()(0) - exact_end)));
  }
  const double mx = (logn[0] + logn[1] + logn[2] + logn[3]) / 4.0;
  const double my = (logerr[0] + logerr[1] + logerr[2] + logerr[3]) / 4.0;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    sxy += (logn[i] - mx) * (logerr[i] - my);
    sxx += (logn[i] - mx) * (logn[i] - mx);
  }
  const double slope = -sxy / sxx;
  EXPECT_GE(slope, 0.8);
  EXPECT_LE(slope, 1.2);
}

TEST(Sampler, NonFiniteReportsStep) {
  auto bad = std::make_shared<FunctionScore>(
      [](double, double t) { return t < 0.5 ? std::nan("") : -1.0; });
  auto times = descending_time_grid(10);
  std::size_t first = 0;
  while (times[first] >= 0.5) ++first;
  try {
    sample_trajectory(repeat(bad, 2), std::vector<double>{0.0, 0.0}, times, grid_dt(10), 1);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step " + std::to_string(first)), std::string::npos)
        << e.what();
  }
}

TEST(Sampler, ArgumentChecks) {
  auto g = std::make_shared<GaussianScore>(0.0, 1.0);
  auto times = descending_time_grid(5);
  EXPECT_THROW(sample_trajectory(repeat(g, 2), std::vector<double>{1.0}, times, 0.1, 1),
               ArgumentError);
  Models missing{g, nullptr};
  EXPECT_THROW(sample_trajectory(missing, std::vector<double>{1.0, 2.0}, times, 0.1, 1),
               ConfigurationError);
}

TEST(TrajectoryCsv, Layout) {
  auto m = repeat(std::make_shared<GaussianScore>(0.0, 1.0), 3);
  auto tr = sample_trajectory(m, std::vector<double>{1.0, 2.0, 3.0}, descending_time_grid(4),
                              grid_dt(4), 2);
  std::ostringstream out;
  write_trajectory_csv(out, tr);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,node,z,score,dz");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4);
  }
  EXPECT_EQ(rows, 12);
}
