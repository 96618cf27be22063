// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Exit status is nonzero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "siren/attribution.hpp"
#include "siren/baselines.hpp"
#include "siren/bench.hpp"
#include "siren/diffusion.hpp"
#include "siren/fcm.hpp"
#include "siren/graph.hpp"
#include "siren/io.hpp"
#include "siren/parallel.hpp"
#include "siren/score.hpp"

namespace fs = std::filesystem;
using namespace siren;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

// Linear-Gaussian FCM on a random DAG over n nodes whose leaf is node n-1.
FittedFcm random_linear_gaussian(std::size_t n, std::uint64_t seed, double edge_prob = 0.6) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.5, 1.5);
  std::uniform_real_distribution<double> sd(0.5, 2.0);
  std::bernoulli_distribution edge(edge_prob);
  std::vector<Edge> edges;
  for (NodeId c = 1; c < n; ++c) {
    for (NodeId p = 0; p < c; ++p) {
      if (edge(rng) || (c == n - 1 && p == n - 2)) edges.push_back({p, c});
    }
  }
  Dag dag(n, edges, n - 1);
  std::vector<NodeMechanism> mechs(n);
  for (NodeId j = 0; j < n; ++j) {
    const auto parents = dag.parents(j);
    mechs[j].kind = MechanismKind::kLinear;
    mechs[j].noise = GaussianNoise{0.0, sd(rng)};
    if (parents.empty()) {
      mechs[j].mean = ConstantFn{coef(rng)};
    } else {
      Eigen::VectorXd w(static_cast<Eigen::Index>(parents.size()));
      for (auto& v : w) v = coef(rng);
      mechs[j].mean = LinearFn{coef(rng), w};
    }
  }
  return FittedFcm(dag, mechs);
}

ScoreSet exact_scores(const FittedFcm& fcm) {
  ScoreSet set;
  for (const auto& m : fcm.mechanisms()) {
    const auto& g = std::get<GaussianNoise>(m.noise);
    set.noise.push_back(std::make_shared<GaussianScore>(g.mean, g.sigma));
  }
  auto leaf = linear_gaussian_leaf(fcm);
  set.leaf_marginal = std::make_shared<GaussianScore>(leaf->mean, std::sqrt(leaf->variance));
  return set;
}

Outcome efficiency() {
  const auto start = Clock::now();
  double worst = 0.0;
  ComposeOptions opt;
  opt.leaf_time = 0.0;
  for (std::uint64_t c = 0; c < 20; ++c) {
    const std::size_t n = 3 + c % 3;
    FittedFcm fcm = random_linear_gaussian(n, derive_seed(1, "efficiency", c));
    std::mt19937_64 rng(derive_seed(2, "efficiency", c));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> ref(n), z(n);
    for (std::size_t j = 0; j < n; ++j) {
      ref[j] = normal(rng);
      z[j] = normal(rng);
    }
    z[rng() % n] += 5.0;
    auto check = verify_efficiency(fcm, exact_scores(fcm), straight_path(ref, z, 2000), opt);
    worst = std::max(worst, std::abs(check.lhs - check.rhs) / std::abs(check.rhs));
  }
  const double secs = seconds_since(start);
  char buf[128];
  std::snprintf(buf, sizeof buf, "worst rel err %.2e over 20 FCMs, %.1fs", worst, secs);
  return {worst < 1e-2 && secs < 60.0, buf};
}

Outcome dummy() {
  std::size_t checked = 0, cases = 0, runs = 0;
  bool ok = true;
  auto check = [&](const FittedFcm& fcm, const Eigen::MatrixXd& data, std::span<const double> x,
                   std::uint64_t seed) {
    const NodeId leaf = fcm.dag().leaf();
    const auto closure = ancestor_closure(fcm.dag(), leaf);
    ScoreTrainConfig sc;
    sc.epochs = 10;
    sc.seed = seed;
    ScoreSet scores = train_score_set(fcm, data, NoiseSchedule(), sc);
    ++cases;
    for (std::uint64_t r = 0; r < 3; ++r) {
      SirenConfig cfg;
      cfg.seed = derive_seed(seed, "run", r);
      cfg.deterministic = r == 2;
      auto res = siren_attribute(fcm, scores, x, leaf, cfg);
      ++runs;
      for (NodeId j = 0; j < fcm.n_nodes(); ++j) {
        if (std::find(closure.begin(), closure.end(), j) != closure.end()) continue;
        ++checked;
        if (res.xi[j] != 0.0) ok = false;
      }
    }
  };
  // Random DAGs whose leaf has non-ancestors.
  for (std::uint64_t c = 0; c < 3; ++c) {
    FittedFcm truth = random_linear_gaussian(10, derive_seed(3, "dummy", c), 0.25);
    Eigen::MatrixXd data = truth.sample(500, derive_seed(4, "dummy", c));
    FittedFcm fcm = fit_fcm(truth.dag(), data, MechanismKind::kLinear);
    Eigen::VectorXd x = data.row(0).transpose();
    x(static_cast<Eigen::Index>(fcm.dag().leaf())) += 10.0;
    check(fcm, data, std::vector<double>(x.data(), x.data() + x.size()),
          derive_seed(5, "dummy", c));
  }
  // Generated benchmark cases.
  ExperimentConfig ec;
  for (Suite suite : {Suite::kRandom, Suite::kMicroservice, Suite::kSupplyChain}) {
    BenchCase bc = generate_case(suite, ec, derive_seed(6, to_string(suite)));
    FittedFcm fcm = fit_fcm(bc.dag(), bc.normal_data, MechanismKind::kLinear);
    check(fcm, bc.normal_data,
          std::vector<double>(bc.outlier.data(), bc.outlier.data() + bc.outlier.size()),
          derive_seed(7, to_string(suite)));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu non-ancestor values over %zu cases, %zu runs", checked,
                cases, runs);
  return {ok && checked > 0, buf};
}

Outcome linearity() {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  double worst = 0.0;
  for (int p = 0; p < 100; ++p) {
    const Eigen::Index d = 2 + p % 4;
    Trajectory tr;
    tr.states.push_back(Eigen::VectorXd::Zero(d));
    for (int k = 0; k < 60; ++k) {
      Eigen::VectorXd step(d);
      for (auto& v : step) v = normal(rng);
      tr.steps.push_back(step);
      tr.scores.push_back(Eigen::VectorXd::Zero(d));
      tr.times.push_back(1.0 - k / 60.0);
      tr.states.push_back(tr.states.back() + step);
    }
    const double a1 = coef(rng), a2 = coef(rng), alpha = coef(rng), beta = coef(rng);
    std::vector<Eigen::VectorXd> u, v, w;
    for (std::size_t k = 0; k < tr.n_steps(); ++k) {
      u.push_back(tr.states[k].unaryExpr([&](double s) { return std::tanh(a1 * s); }));
      v.push_back(tr.states[k].unaryExpr([&](double s) { return std::sin(a2 * s) - s; }));
      w.push_back(alpha * u.back() + beta * v.back());
    }
    for (NodeId j = 0; j < static_cast<NodeId>(d); ++j) {
      const double xu = path_contribution(tr, u, j), xv = path_contribution(tr, v, j);
      const double xw = path_contribution(tr, w, j);
      const double scale = std::abs(alpha * xu) + std::abs(beta * xv);
      if (scale == 0.0) continue;
      worst = std::max(worst, std::abs(xw - (alpha * xu + beta * xv)) / scale);
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "worst rel deviation %.2e over 100 paths", worst);
  return {worst < 1e-12, buf};
}

Outcome chain_rule() {
  const auto start = Clock::now();
  double worst = 0.0;
  ComposeOptions opt;
  opt.leaf_time = 0.0;
  const double h = 1e-5;
  for (std::uint64_t g = 0; g < 10; ++g) {
    FittedFcm fcm = random_linear_gaussian(5, derive_seed(9, "chain", g));
    const ScoreSet set = exact_scores(fcm);
    const GaussianLeafMarginal leaf = *linear_gaussian_leaf(fcm);
    auto surprise = [&](const std::vector<double>& z) {
      return leaf.surprise(fcm.forward(z)(static_cast<Eigen::Index>(fcm.dag().leaf())));
    };
    std::mt19937_64 rng(derive_seed(10, "chain", g));
    std::normal_distribution<double> normal(0.0, 2.0);
    for (int s = 0; s < 50; ++s) {
      std::vector<double> z(5);
      for (auto& v : z) v = normal(rng);
      const Eigen::VectorXd composed = compose_leaf_score(fcm, set, z, 0.5, opt);
      Eigen::VectorXd fd(5);
      for (std::size_t j = 0; j < 5; ++j) {
        auto zp = z, zm = z;
        zp[j] += h;
        zm[j] -= h;
        fd(static_cast<Eigen::Index>(j)) = -(surprise(zp) - surprise(zm)) / (2.0 * h);
      }
      worst = std::max(worst, (composed - fd).norm() / std::max(fd.norm(), 1e-12));
    }
  }
  const double secs = seconds_since(start);
  char buf[128];
  std::snprintf(buf, sizeof buf, "worst rel err %.2e over 10 DAGs x 50 z, %.1fs", worst, secs);
  return {worst < 1e-3 && secs < 60.0, buf};
}

Outcome score_learning() {
  const auto start = Clock::now();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> samples(5000);
  for (auto& v : samples) v = normal(rng);
  ScoreTrainConfig cfg;
  cfg.seed = 12;
  NoiseSchedule schedule;
  ScoreModel model = train_score_model(samples, schedule, cfg);
  double worst = 0.0;
  std::string per_t;
  for (double t : {0.01, 0.25, 0.5, 0.75}) {
    double mae = 0.0;
    int count = 0;
    for (int i = 0; i <= 40; ++i) {
      const double z = -2.0 + 0.1 * i;
      mae += std::abs(model.score(z, t) + z / (1.0 + schedule.variance(t)));
      ++count;
    }
    mae /= count;
    worst = std::max(worst, mae);
    char b[48];
    std::snprintf(b, sizeof b, " t=%.2f:%.3f", t, mae);
    per_t += b;
  }
  const double secs = seconds_since(start);
  char buf[192];
  std::snprintf(buf, sizeof buf, "MAE%s, %.1fs", per_t.c_str(), secs);
  return {worst < 0.15 && secs < 300.0, buf};
}

Outcome triangle() {
  auto pdf = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); };
  const double area = triangle_area(0.0, 2.0, pdf, [](double v) { return -v; }, 2000);
  const double tail = 0.5 * std::erfc(-2.0 / std::sqrt(2.0)) - 0.5;
  const double ratio = area / tail;
  char buf[128];
  std::snprintf(buf, sizeof buf, "area %.6f, tail %.6f, ratio %.3f", area, tail, ratio);
  const bool ok = std::abs(area - 0.34495) < 1e-4 && std::abs(tail - 0.47725) < 1e-5 &&
                  area * tail > 0.0 && ratio >= 0.5 && ratio <= 2.0;
  return {ok, buf};
}

// Shapley value of each player straight from the subset formula.
std::vector<double> subset_shapley(const ShapleyGame& game) {
  const std::size_t n = game.players().size();
  std::vector<double> fact(n + 1, 1.0);
  for (std::size_t i = 1; i <= n; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
  std::vector<double> phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
      if (mask & (1ULL << i)) continue;
      const auto s = static_cast<std::size_t>(__builtin_popcountll(mask));
      const double w = fact[s] * fact[n - s - 1] / fact[n];
      phi[i] += w * (game.value(mask | (1ULL << i)) - game.value(mask));
    }
  }
  return phi;
}

Outcome shapley() {
  double worst_exact = 0.0, worst_se = 0.0;
  bool sampled_ok = true;
  for (std::uint64_t g = 0; g < 3; ++g) {
    FittedFcm fcm = random_linear_gaussian(4, derive_seed(13, "shapley", g));
    Eigen::VectorXd x = fcm.forward(std::vector<double>{1.0, -2.0, 0.5, 4.0});
    std::vector<double> xs(x.data(), x.data() + 4);
    CausalRcaConfig cfg{500, 500, 100, true, derive_seed(14, "shapley", g)};
    auto exhaustive = causalrca_shapley(fcm, xs, 3, cfg);
    ShapleyGame game(fcm, xs, 3, cfg);
    const auto phi = subset_shapley(game);
    double scale = 0.0;
    for (double v : phi) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const NodeId j = game.players()[i];
      worst_exact = std::max(worst_exact, std::abs(exhaustive.xi[j] - phi[i]) / scale);
    }
    cfg.exhaustive = false;
    auto sampled = causalrca_shapley(fcm, xs, 3, cfg);
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const NodeId j = game.players()[i];
      const double dev = std::abs(sampled.xi[j] - phi[i]);
      const double se = sampled.std_errors[j];
      if (dev > 2.0 * se + 1e-12) sampled_ok = false;
      if (se > 0.0) worst_se = std::max(worst_se, dev / se);
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "exhaustive vs subset formula %.1e rel; sampled worst %.2f SE",
                worst_exact, worst_se);
  return {worst_exact < 1e-12 && sampled_ok, buf};
}

Outcome ndcg() {
  const std::vector<NodeId> a{0}, ab{0, 1};
  const double v1 = ndcg_at_k(std::vector<NodeId>{0, 1}, a, 1);
  const double v2 = ndcg_at_k(std::vector<NodeId>{1, 0}, a, 2);
  const double v3 = ndcg_at_k(std::vector<NodeId>{0, 1, 2}, ab, 2);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.5f %.5f %.5f", v1, v2, v3);
  return {v1 == 1.0 && std::abs(v2 - 0.63093) < 5e-6 && v2 == 1.0 / std::log2(3.0) && v3 == 1.0,
          buf};
}

double method_mean(const ExperimentReport& r, const std::string& method, std::size_t k_index) {
  for (const auto& s : r.summary) {
    if (s.method == method) return k_index == SIZE_MAX ? s.mean_across_k : s.mean[k_index];
  }
  return std::nan("");
}

Outcome trends() {
  const auto start = Clock::now();
  ExperimentConfig rc;
  rc.n_cases = 10;
  rc.methods = {"siren", "naive", "traversal"};
  rc.seed = 1;
  const ExperimentReport random = run_experiment(Suite::kRandom, rc);
  const double s = method_mean(random, "siren", SIZE_MAX);
  const double n = method_mean(random, "naive", SIZE_MAX);
  const double t = method_mean(random, "traversal", SIZE_MAX);

  ExperimentConfig sc;
  sc.n_cases = 10;
  sc.methods = {"siren", "naive"};
  sc.seed = 1;
  const ExperimentReport supply = run_experiment(Suite::kSupplyChain, sc);
  const double s1 = method_mean(supply, "siren", 0);
  const double n1 = method_mean(supply, "naive", 0);
  const double secs = seconds_since(start);

  char buf[256];
  std::snprintf(buf, sizeof buf,
                "random mean NDCG siren %.1f naive %.1f traversal %.1f; supplychain NDCG@1 "
                "siren %.1f naive %.1f; %.0fs",
                100 * s, 100 * n, 100 * t, 100 * s1, 100 * n1, secs);
  return {s > n && s > t && s1 > n1 && secs < 1200.0, buf};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  std::vector<std::string> mismatched;
  auto same = [&](const std::string& what, const std::string& a, const std::string& b) {
    if (a != b) mismatched.push_back(what);
  };
  auto artifacts = [] {
    std::vector<std::string> out;
    ExperimentConfig ec;
    BenchCase bc = generate_case(Suite::kSupplyChain, ec, 42);
    std::ostringstream csv;
    write_data_csv(csv, bc.normal_data);
    out.push_back(to_json(bc.dag()).dump() + csv.str() + to_json(bc.truth).dump());
    FcmFitConfig fit;
    fit.seed = 3;
    fit.mean.epochs = 5;
    FittedFcm fcm = fit_fcm(bc.dag(), bc.normal_data, MechanismKind::kAnm, fit);
    ScoreTrainConfig sc;
    sc.seed = 4;
    sc.epochs = 5;
    ScoreSet scores = train_score_set(fcm, bc.normal_data, NoiseSchedule(), sc);
    out.push_back(to_json(fcm).dump() + to_json(scores).dump());
    std::vector<double> x(bc.outlier.data(), bc.outlier.data() + bc.outlier.size());
    SirenConfig cfg;
    cfg.seed = 5;
    out.push_back(to_json(siren_attribute(fcm, scores, x, bc.dag().leaf(), cfg)).dump());
    ExperimentConfig small;
    small.n_cases = 2;
    small.methods = {"naive", "traversal", "circa", "bigen"};
    small.seed = 6;
    auto report = run_experiment(Suite::kSupplyChain, small);
    out.push_back(to_json(report).dump() + ndcg_csv(report) + rankings_csv(report));
    return out;
  };
  const auto first = artifacts(), second = artifacts();
  const char* names[] = {"generate", "fit", "attribute", "bench"};
  for (std::size_t i = 0; i < first.size(); ++i) same(names[i], first[i], second[i]);

#ifdef SIREN_RCA_BIN
  const fs::path root = fs::temp_directory_path() / "siren_acceptance_determinism";
  fs::remove_all(root);
  auto cli = [&](const std::string& args) {
    const std::string cmd = std::string(SIREN_RCA_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  for (const char* run : {"a", "b"}) {
    const fs::path d = root / run;
    cli("generate --suite supplychain --seed 9 --out " + (d / "case").string());
    cli("fit --in " + (d / "case").string() + " --kind anm --epochs 5 --seed 9 --out " +
        (d / "model").string());
    cli("attribute --method siren --seed 9 --model " + (d / "model/model.json").string() +
        " --outlier " + (d / "case/outlier.json").string() + " --out " + (d / "attr").string());
    cli("bench --preset smoke --seed 9 --out " + (d / "bench").string());
  }
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), root / "a");
    ++files;
    same("cli " + rel.string(), slurp(entry.path()), slurp(root / "b" / rel));
  }
  if (files < 9) mismatched.push_back("cli produced " + std::to_string(files) + " files");
  fs::remove_all(root);
#endif

  std::string detail = mismatched.empty() ? "all artifacts byte-identical" : "differs:";
  for (const auto& m : mismatched) detail += " " + m;
  return {mismatched.empty(), detail};
}

Outcome sampler_order() {
  std::vector<std::shared_ptr<const LocalScore>> models{
      std::make_shared<GaussianScore>(0.0, 1.0), std::make_shared<GaussianScore>(1.0, 2.0),
      std::make_shared<FunctionScore>([](double v, double) { return -2.0 * std::tanh(v); })};
  const std::vector<double> z0{2.0, -3.0, 1.5};
  SamplerOptions opt;
  opt.deterministic = true;
  std::vector<Eigen::VectorXd> ends;
  for (std::size_t n : {100, 200, 400, 800, 1600}) {
    const double dt = (1.0 - kTimeEpsilon) / static_cast<double>(n);
    ends.push_back(sample_trajectory(models, z0, descending_time_grid(n), dt, 0, opt).states.back());
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i + 1 < ends.size(); ++i) {
    lx.push_back(std::log(100.0 * std::pow(2.0, static_cast<double>(i))));
    ly.push_back(std::log((ends[i] - ends[i + 1]).norm()));
  }
  const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4.0;
  const double my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4.0;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = -sxy / sxx;
  char buf[64];
  std::snprintf(buf, sizeof buf, "slope %.3f", slope);
  return {slope >= 0.8 && slope <= 1.2, buf};
}

}  // namespace

// With arguments, only the listed criterion numbers run.
int main(int argc, char** argv) {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"efficiency axiom", efficiency},      {"dummy axiom", dummy},
      {"linearity axiom", linearity},        {"chain-rule oracle", chain_rule},
      {"score learning", score_learning},    {"triangle approximation", triangle},
      {"shapley brute force", shapley},      {"ndcg examples", ndcg},
      {"desk-scale trends", trends},         {"determinism", determinism},
      {"sampler order", sampler_order},
  };
  std::vector<std::size_t> selected;
  for (int a = 1; a < argc; ++a) selected.push_back(std::strtoul(argv[a], nullptr, 10) - 1);
  if (selected.empty()) {
    for (std::size_t i = 0; i < criteria.size(); ++i) selected.push_back(i);
  }
  std::size_t failed = 0;
  for (std::size_t i : selected) {
    if (i >= criteria.size()) continue;
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", selected.size() - failed, selected.size());
  return failed == 0 ? 0 : 1;
}
