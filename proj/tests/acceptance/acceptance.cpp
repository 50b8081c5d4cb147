// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/SVD>

#include "../test_util.hpp"
#include "ppf/datagen.hpp"
#include "ppf/error.hpp"
#include "ppf/eval.hpp"
#include "ppf/gradcheck.hpp"
#include "ppf/neighborhood.hpp"
#include "ppf/solver.hpp"

namespace fs = std::filesystem;
using namespace ppf;

namespace {

// Repetitions for the ratio and lambda criteria, which do not fix a count.
constexpr int kTrendReps = 5;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int jobs() { return std::max(1, static_cast<int>(std::thread::hardware_concurrency())); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << name << ": " << o.detail << std::endl;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

Dataset default_city() {
  const SyntheticCity city = generate(SyntheticSpec{});
  return Dataset{city.catalog, city.flows, city.views};
}

// 1 ---------------------------------------------------------------------------

Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  test::Gen g(2024);
  const double lambdas[] = {0.0, 0.1, 10.0};
  double worst = 0.0, off_support = 0.0;
  for (int i = 0; i < 50; ++i) {
    GradCheckInstance inst;
    inst.n = g.integer(3, 6);
    inst.days = g.integer(1, 3);
    inst.views = g.integer(0, 2);
    inst.lambda = lambdas[g.integer(0, 2)];
    inst.k = 2;
    const GradCheckResult r = gradient_check(inst, static_cast<std::uint64_t>(i));
    worst = std::max(worst, r.max_rel_error());
    off_support = std::max(off_support, r.max_abs_off_support_w);
  }
  const double s = seconds_since(t0);
  return {worst < 1e-6 && off_support == 0.0 && s < 30.0,
          "max rel error " + fmt(worst) + ", off-support " + fmt(off_support) + ", " + fmt(s) + " s"};
}

// 2 ---------------------------------------------------------------------------

Outcome loss_descent() {
  const auto t0 = Clock::now();
  const PlantedInstance p = planted_instance(10, 2, 42);
  SolverConfig cfg;
  cfg.k = 2;
  cfg.alpha = 1e-2;
  cfg.max_iter = 2000;
  cfg.epsilon = 1e-300;  // run the whole budget
  const FitResult r = fit(p.observed, p.sim, p.nbr, p.views, build_mask(p.catalog), cfg);
  const double s = seconds_since(t0);

  const auto& l = r.report.losses;
  int increases = 0;
  for (std::size_t t = 6; t < l.size(); ++t)
    if (l[t] > l[t - 1]) ++increases;
  const double ratio = l.back() / l.front();
  const double best = *std::min_element(l.begin(), l.end()) / l.front();
  return {increases == 0 && ratio < 1e-4 && s < 10.0,
          std::to_string(increases) + " increases after iteration 5, final/initial " + fmt(ratio) +
              " (best " + fmt(best) + ") after " + std::to_string(r.report.iterations) +
              " iterations, " + fmt(s) + " s"};
}

// 3 ---------------------------------------------------------------------------

bool observed_bits_equal(const Matrix& work, const Matrix& input, const Matrix& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y(i) != 0.0 && std::bit_cast<std::uint64_t>(work(i)) != std::bit_cast<std::uint64_t>(input(i)))
      return false;
  return true;
}

bool mask_preserved(const FlowTensor& flows, const SimilarityModel& sim, const NeighborModel& nbr,
                    const ViewSet& views, const ObservationMask& mask, const SolverConfig& cfg) {
  const BidirectionalFit b = fit_bidirectional(flows, sim, nbr, views, mask, cfg);
  const Matrix yt = mask.y.transpose();
  for (std::size_t d = 0; d < flows.days.size(); ++d) {
    if (!observed_bits_equal(b.departures.state.flows[d], flows.days[d], mask.y)) return false;
    if (!observed_bits_equal(b.arrivals.state.flows[d], Matrix(flows.days[d].transpose()), yt))
      return false;
  }
  return observed_bits_equal(b.completed, flows.last(), mask.y);
}

Outcome mask_preservation() {
  int instances = 0, broken = 0;
  SolverConfig cfg;
  cfg.max_iter = 200;

  const PlantedInstance p = planted_instance(10, 2, 42);
  ++instances;
  if (!mask_preserved(p.observed, p.sim, p.nbr, p.views, build_mask(p.catalog), cfg)) ++broken;

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    test::Gen g(seed);
    const int n = g.integer(4, 12);
    const AreaCatalog cat = g.catalog(n, 0.7, 3);
    std::vector<Matrix> days;
    for (int d = g.integer(1, 3); d > 0; --d) days.push_back(g.count_matrix(n, n, 40));
    const ViewSet views = g.views(n, g.integer(0, 2));
    const SimilarityModel sim = build_similarity(cat, views);
    const NeighborModel nbr = build_indicator(sim, cat, 2);
    ++instances;
    if (!mask_preserved(FlowTensor{Period::MorningRush, days}, sim, nbr, views, build_mask(cat), cfg))
      ++broken;
  }

  SyntheticSpec spec;
  spec.n = 30;
  spec.days = 3;
  const SyntheticCity city = generate(spec);
  const AreaCatalog cat = with_targets(city.catalog, sample_targets(30, 0.2, 1));
  const SimilarityModel sim = build_similarity(cat, city.views);
  ++instances;
  if (!mask_preserved(city.period(Period::MorningRush), sim, build_indicator(sim, cat, 2), city.views,
                      build_mask(cat), cfg))
    ++broken;

  return {broken == 0, std::to_string(instances - broken) + "/" + std::to_string(instances) +
                           " instances keep every observed entry bit-exact"};
}

// 4 ---------------------------------------------------------------------------

Outcome recovery() {
  const PlantedInstance p = planted_instance(10, 2, 42);
  SolverConfig cfg;
  cfg.k = 2;
  const ObservationMask mask = build_mask(p.catalog);
  const BidirectionalFit b = fit_bidirectional(p.observed, p.sim, p.nbr, p.views, mask, cfg);
  const Matrix& truth = p.truth.last();
  const Matrix held_out = Matrix::Ones(truth.rows(), truth.cols()) - mask.y;
  const double err = mae(b.completed, truth, held_out);
  const double scale = truth.cwiseAbs().mean();
  return {err < 1e-3 * scale, "held-out MAE " + fmt(err) + " vs bound " + fmt(1e-3 * scale)};
}

// 5 ---------------------------------------------------------------------------

Outcome ordinal(const Dataset& city) {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.ratios = {0.2};
  cfg.repetitions = 20;
  cfg.jobs = jobs();
  const auto res = run_experiment(city, cfg);
  const double s = seconds_since(t0);
  double m[3] = {0, 0, 0};
  for (const auto& r : res) m[static_cast<int>(r.method)] = r.mae;
  return {m[0] < m[1] && m[1] < m[2] && s < 600.0,
          "MAE MLC " + fmt(m[0]) + ", LS-KNN " + fmt(m[1]) + ", NMF " + fmt(m[2]) + ", " + fmt(s) +
              " s on " + std::to_string(cfg.jobs) + " thread(s)"};
}

// 6 ---------------------------------------------------------------------------

Outcome ratio_trend(const Dataset& city) {
  ExperimentConfig cfg;
  cfg.methods = {Method::Mlc};
  cfg.ratios = {0.05, 0.25};
  cfg.repetitions = kTrendReps;
  cfg.jobs = jobs();
  const auto res = run_experiment(city, cfg);
  const double low = res[0].mae, high = res[1].mae;
  return {low <= high, "MAE at 0.05 " + fmt(low) + ", at 0.25 " + fmt(high) + " (" +
                           std::to_string(kTrendReps) + " seeds)"};
}

// 7 ---------------------------------------------------------------------------

Outcome lambda_stability(const Dataset& city) {
  ExperimentConfig cfg;
  cfg.methods = {Method::Mlc};
  cfg.ratios = {0.2};
  cfg.repetitions = kTrendReps;
  cfg.jobs = jobs();
  const auto sweep = sweep_parameters(city, {2}, {1e-5, 1e-3, 1e-1, 1.0}, cfg);
  double lo = INFINITY, hi = 0.0;
  std::string values;
  for (const auto& c : sweep.cells) {
    lo = std::min(lo, c.mae);
    hi = std::max(hi, c.mae);
    values += (values.empty() ? "" : ", ") + fmt(c.mae);
  }
  const double spread = (hi - lo) / lo;
  return {spread < 0.2, "MAE " + values + ", spread (max-min)/min " + fmt(spread)};
}

// 8 ---------------------------------------------------------------------------

Matrix svd_pinv(const Matrix& a, double rcond) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector sv = svd.singularValues();
  Matrix s_inv = Matrix::Zero(a.cols(), a.rows());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rcond * sv(0)) s_inv(i, i) = 1.0 / sv(i);
  return svd.matrixV() * s_inv * svd.matrixU().transpose();
}

Outcome knn_and_pinv() {
  int knn_bad = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    test::Gen g(seed);
    const int n = g.integer(3, 15);
    const AreaCatalog cat = g.catalog(n, 0.7, 2);
    SimilarityModel sim;
    sim.s = g.uniform_matrix(n, n, 0.0, 2.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (g.coin(0.2)) sim.s(i, j) = 1.0;
    const int k = g.integer(1, static_cast<int>(cat.known_count()) - 1);
    const NeighborModel nbr = build_indicator(sim, cat, k);
    Matrix expected = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<double, int>> cand;
      for (int j = 0; j < n; ++j)
        if (j != i && cat.known[static_cast<std::size_t>(j)]) cand.push_back({-sim.s(i, j), j});
      std::sort(cand.begin(), cand.end());
      for (int r = 0; r < k; ++r) expected(i, cand[static_cast<std::size_t>(r)].second) = 1.0;
    }
    if (nbr.h != expected) ++knn_bad;
  }

  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    test::Gen g(seed + 1000);
    const int n = g.integer(3, 10);
    const AreaCatalog cat = g.catalog(n, 0.7, 2);
    const ObservationMask mask = build_mask(cat);
    const Matrix f = seed % 2 == 0 ? g.count_matrix(n, n, 30)
                                   : Matrix(g.uniform_matrix(n, 2, 0.0, 3.0) * g.uniform_matrix(2, n, 0.0, 3.0));
    const Matrix s = g.uniform_matrix(n, n, 0.0, 2.0);
    SimilarityModel sim;
    sim.s = s;
    const NeighborModel nbr = build_indicator(sim, cat, 1);
    for (double rcond : {1e-10, SolverConfig{}.rcond}) {
      const Matrix a = mask.y.cwiseProduct(nbr.h.cwiseProduct(s) * f);
      const Matrix expected = svd_pinv(a, rcond) * mask.y.cwiseProduct(f);
      const Matrix c = init_c(f, nbr.h, s, mask, rcond);
      worst = std::max(worst, test::max_abs(c - expected) / std::max(1.0, test::max_abs(expected)));
    }
  }
  return {knn_bad == 0 && worst < 1e-8, std::to_string(100 - knn_bad) +
                                            "/100 indicator matrices match, init C max rel error " +
                                            fmt(worst)};
}

// 9 ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int shell(const std::string& args) {
  const std::string cmd = std::string(PPF_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_determinism() {
  const fs::path dir = fs::temp_directory_path() / ("ppf_acceptance_" + std::to_string(getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string d = dir.string();
  const std::string eval_args = "eval --data " + d + "/city --ratio 0.2 --reps 3 --max-iter 50 --jobs 2";
  int codes = shell("gen --n 30 --days 3 --seed 11 --out " + d + "/city");
  codes += shell(eval_args + " --seed 4 --out " + d + "/a");
  codes += shell(eval_args + " --seed 4 --out " + d + "/b");
  Outcome o;
  if (codes != 0) {
    o = {false, "CLI exited non-zero"};
  } else {
    const std::string a = slurp(dir / "a" / "results.csv");
    const bool same_csv = !a.empty() && a == slurp(dir / "b" / "results.csv");
    const bool same_manifest = slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json");
    o = {same_csv && same_manifest, std::string("results.csv ") + (same_csv ? "identical" : "differs") +
                                        ", manifest " + (same_manifest ? "identical" : "differs")};
  }
  fs::remove_all(dir);
  return o;
}

// 10 --------------------------------------------------------------------------

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

Outcome metrics() {
  bool ok = true;
  ok &= mae(row({3, 1, 4}), row({3, 1, 4}), Matrix::Ones(1, 3)) == 0.0;
  ok &= mae(row({12, 16}), row({10, 20}), Matrix::Ones(1, 2)) == 3.0;
  ok &= nrmse(row({0, 5, 9}), row({0, 5, 9}), Matrix::Ones(1, 3)) == 0.0;
  ok &= nrmse(row({10, 90}), row({0, 100}), Matrix::Ones(1, 2)) == 10.0;
  ok &= nrmse(row({20, 180}), row({0, 200}), Matrix::Ones(1, 2)) == 10.0;

  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    test::Gen g(seed);
    const int r = g.integer(1, 8), c = g.integer(2, 8);
    const Matrix truth = g.uniform_matrix(r, c, 0.0, 100.0);
    const Matrix pred = g.uniform_matrix(r, c, 0.0, 100.0);
    const Matrix ones = Matrix::Ones(r, c);
    const double s = std::pow(10.0, g.uniform(-3.0, 3.0));
    const double base = nrmse(pred, truth, ones);
    worst = std::max(worst, std::abs(nrmse(s * pred, s * truth, ones) - base) / base);
  }
  return {ok && worst < 1e-12, std::string("hand examples ") + (ok ? "exact" : "wrong") +
                                   ", scale invariance rel error " + fmt(worst)};
}

}  // namespace

int main() {
  const Dataset city = default_city();
  report(1, "gradient oracle", gradient_oracle);
  report(2, "loss descent", loss_descent);
  report(3, "mask preservation", mask_preservation);
  report(4, "planted recovery", recovery);
  report(5, "ordinal consistency", [&] { return ordinal(city); });
  report(6, "ratio trend", [&] { return ratio_trend(city); });
  report(7, "lambda stability", [&] { return lambda_stability(city); });
  report(8, "k-NN and pseudo-inverse oracles", knn_and_pinv);
  report(9, "CLI determinism", cli_determinism);
  report(10, "metrics", metrics);

  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
