#include "ppf/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <thread>

#include <json.hpp>

#include "ppf/error.hpp"
#include "ppf/neighborhood.hpp"
#include "ppf/solver.hpp"
#include "ppf/targetsim.hpp"

namespace ppf {

namespace {

void check_eval_shapes(const Matrix& pred, const Matrix& truth, const Matrix& mask) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols() || mask.rows() != truth.rows() ||
      mask.cols() != truth.cols())
    throw InvalidInput("prediction, truth and evaluation mask shapes differ");
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads.
template <class Fn>
void parallel_for(int count, int jobs, Fn&& fn) {
  jobs = std::clamp(jobs, 1, std::max(1, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

double mae(const Matrix& pred, const Matrix& truth, const Matrix& eval_mask) {
  check_eval_shapes(pred, truth, eval_mask);
  double acc = 0.0;
  std::size_t m = 0;
  for (Eigen::Index j = 0; j < truth.cols(); ++j)
    for (Eigen::Index i = 0; i < truth.rows(); ++i)
      if (eval_mask(i, j) != 0.0) {
        acc += std::abs(truth(i, j) - pred(i, j));
        ++m;
      }
  if (m == 0) throw InvalidInput("MAE: evaluation mask selects no entries");
  return acc / static_cast<double>(m);
}

double nrmse(const Matrix& pred, const Matrix& truth, const Matrix& eval_mask) {
  check_eval_shapes(pred, truth, eval_mask);
  double sq = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t m = 0;
  for (Eigen::Index j = 0; j < truth.cols(); ++j)
    for (Eigen::Index i = 0; i < truth.rows(); ++i)
      if (eval_mask(i, j) != 0.0) {
        const double e = truth(i, j) - pred(i, j);
        sq += e * e;
        lo = std::min(lo, truth(i, j));
        hi = std::max(hi, truth(i, j));
        ++m;
      }
  if (m == 0) throw InvalidInput("NRMSE: evaluation mask selects no entries");
  const double range = hi - lo;
  if (!(range > 0.0)) throw InvalidInput("NRMSE: ground truth range is zero");
  return 100.0 * std::sqrt(sq / static_cast<double>(m)) / range;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Mlc: return "mlc";
    case Method::LsKnn: return "lsknn";
    case Method::Nmf: return "nmf";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::Mlc, Method::LsKnn, Method::Nmf})
    if (to_string(m) == name) return m;
  return std::nullopt;
}

std::uint64_t repetition_seed(std::uint64_t base, int rep) {
  return base + static_cast<std::uint64_t>(rep);
}

std::vector<int> sample_targets(std::size_t n, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidInput("target ratio must lie in (0, 1)");
  const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(ratio * n)));
  if (count >= n) throw InvalidInput("target ratio leaves no known area");
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Matrix evaluation_mask(const AreaCatalog& catalog, bool include_target_block) {
  const auto n = static_cast<Eigen::Index>(catalog.size());
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool ti = !catalog.known[i], tj = !catalog.known[j];
      if ((ti && tj && include_target_block) || ti != tj) m(i, j) = 1.0;
    }
  return m;
}

TrialOutcome run_trial(const Dataset& data, Period period, const std::vector<int>& targets,
                       Method method, const ExperimentConfig& cfg) {
  const FlowTensor& truth = data.period(period);
  const AreaCatalog catalog = with_targets(data.catalog, targets);
  const SimilarityModel sim = build_similarity(catalog, data.views);
  const auto [train, plan] = reassign(truth, catalog, sim.geo_dist);
  const ObservationMask mask = build_mask(catalog);
  const Matrix observed = mask.y.cwiseProduct(train.last());

  TrialOutcome out;
  switch (method) {
    case Method::Mlc: {
      const NeighborModel nbr = build_indicator(sim, catalog, cfg.solver.k);
      out.completed = fit_bidirectional(train, sim, nbr, data.views, mask, cfg.solver).completed;
      break;
    }
    case Method::LsKnn:
      out.completed = observed + ls_knn_predict(observed, sim, catalog, cfg.lsknn_k).predicted;
      break;
    case Method::Nmf:
      out.completed = observed + nmf_predict(observed, data.views, mask, cfg.nmf).predicted;
      break;
  }
  out.eval_mask = evaluation_mask(catalog, cfg.include_target_block);
  out.mae = mae(out.completed, truth.last(), out.eval_mask);
  out.nrmse = nrmse(out.completed, truth.last(), out.eval_mask);
  return out;
}

std::vector<EvalResult> run_experiment(const Dataset& data, const ExperimentConfig& cfg) {
  if (cfg.repetitions < 1) throw InvalidInput("repetitions must be >= 1");
  if (cfg.methods.empty() || cfg.periods.empty() || cfg.ratios.empty())
    throw InvalidInput("experiment needs at least one method, period and ratio");
  for (double r : cfg.ratios)
    if (!(r > 0.0 && r < 1.0)) throw InvalidInput("target ratios must lie in (0, 1)");

  std::vector<EvalResult> results;
  for (Period p : cfg.periods)
    for (double r : cfg.ratios)
      for (Method m : cfg.methods) {
        EvalResult e;
        e.method = m;
        e.period = p;
        e.ratio = r;
        e.k = cfg.solver.k;
        e.lambda = cfg.solver.lambda;
        e.seeds.resize(static_cast<std::size_t>(cfg.repetitions));
        e.mae_per_rep.resize(e.seeds.size());
        e.nrmse_per_rep.resize(e.seeds.size());
        results.push_back(std::move(e));
      }

  const int reps = cfg.repetitions;
  const int jobs_total = static_cast<int>(results.size()) * reps;
  parallel_for(jobs_total, cfg.jobs, [&](int job) {
    EvalResult& e = results[static_cast<std::size_t>(job / reps)];
    const int rep = job % reps;
    const std::uint64_t seed = repetition_seed(cfg.seed, rep);
    const auto targets = sample_targets(data.catalog.size(), e.ratio, seed);
    ExperimentConfig trial_cfg = cfg;
    trial_cfg.nmf.seed = seed;
    trial_cfg.solver.seed = seed;
    TrialOutcome t;
    try {
      t = run_trial(data, e.period, targets, e.method, trial_cfg);
    } catch (const DivergenceError& err) {
      throw DivergenceError(std::string(to_string(e.method)) + " seed " + std::to_string(seed) +
                                ": " + err.what(),
                            err.iteration());
    } catch (const Error& err) {
      throw Error(std::string(to_string(e.method)) + " seed " + std::to_string(seed) + ": " +
                  err.what());
    }
    e.seeds[static_cast<std::size_t>(rep)] = seed;
    e.mae_per_rep[static_cast<std::size_t>(rep)] = t.mae;
    e.nrmse_per_rep[static_cast<std::size_t>(rep)] = t.nrmse;
  });

  for (auto& e : results) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < e.seeds.size(); ++i) {
      a += e.mae_per_rep[i];
      b += e.nrmse_per_rep[i];
    }
    e.mae = a / static_cast<double>(e.seeds.size());
    e.nrmse = b / static_cast<double>(e.seeds.size());
  }
  return results;
}

SweepResult sweep_parameters(const Dataset& data, const std::vector<int>& k_grid,
                             const std::vector<double>& lambda_grid,
                             const ExperimentConfig& cfg) {
  if (k_grid.empty() || lambda_grid.empty()) throw InvalidInput("sweep grids must be non-empty");
  SweepResult out;
  for (int k : k_grid)
    for (double lambda : lambda_grid) {
      ExperimentConfig cell = cfg;
      cell.methods = {Method::Mlc};
      cell.periods = {cfg.periods.front()};
      cell.ratios = {cfg.ratios.front()};
      cell.solver.k = k;
      cell.solver.lambda = lambda;
      out.cells.push_back(run_experiment(data, cell).front());
    }
  return out;
}

void write_results_csv(std::ostream& os, const std::vector<EvalResult>& results) {
  os << "method,period,ratio,seed,mae,nrmse\n";
  for (const auto& e : results)
    for (std::size_t i = 0; i < e.seeds.size(); ++i)
      os << to_string(e.method) << ',' << to_string(e.period) << ',' << fmt_double(e.ratio) << ','
         << e.seeds[i] << ',' << fmt_double(e.mae_per_rep[i]) << ','
         << fmt_double(e.nrmse_per_rep[i]) << '\n';
}

std::string results_summary_json(const std::vector<EvalResult>& results) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& e : results) {
    nlohmann::ordered_json j;
    j["method"] = to_string(e.method);
    j["period"] = to_string(e.period);
    j["ratio"] = e.ratio;
    j["k"] = e.k;
    j["lambda"] = e.lambda;
    j["repetitions"] = e.seeds.size();
    j["mae"] = e.mae;
    j["nrmse_percent"] = e.nrmse;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

void write_sweep_csv(std::ostream& os, const SweepResult& sweep) {
  os << "k,lambda,mae,nrmse\n";
  for (const auto& c : sweep.cells)
    os << c.k << ',' << fmt_double(c.lambda) << ',' << fmt_double(c.mae) << ','
       << fmt_double(c.nrmse) << '\n';
}

}  // namespace ppf
