#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ppf/baselines.hpp"
#include "ppf/core.hpp"

namespace ppf {

// Mean absolute error over entries where `eval_mask` is non-zero.
// Throws InvalidInput when the mask selects nothing.
double mae(const Matrix& pred, const Matrix& truth, const Matrix& eval_mask);

// RMSE / (max - min of the selected truth) in percent. Throws InvalidInput
// when nothing is selected or the selected truth is constant.
double nrmse(const Matrix& pred, const Matrix& truth, const Matrix& eval_mask);

enum class Method { Mlc, LsKnn, Nmf };
std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view name);

struct ExperimentConfig {
  std::vector<Method> methods{Method::Mlc, Method::LsKnn, Method::Nmf};
  std::vector<Period> periods{Period::MorningRush};
  std::vector<double> ratios{0.2};
  int repetitions = 20;
  std::uint64_t seed = 0;
  SolverConfig solver;
  int lsknn_k = 4;
  NmfOptions nmf;
  bool include_target_block = true;  // score target x target entries
  int jobs = 1;
};

struct EvalResult {
  Method method = Method::Mlc;
  Period period = Period::MorningRush;
  double ratio = 0.0;
  int k = 0;
  double lambda = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> mae_per_rep;
  std::vector<double> nrmse_per_rep;
  double mae = 0.0;    // mean over repetitions
  double nrmse = 0.0;  // mean over repetitions, percent
};

// Seed used for repetition `rep` of an experiment seeded with `base`.
std::uint64_t repetition_seed(std::uint64_t base, int rep);

// Uniformly samples max(1, round(ratio * n)) target areas.
std::vector<int> sample_targets(std::size_t n, double ratio, std::uint64_t seed);

// Entries scored for a target set: every entry in a target row or column,
// optionally without the target x target block.
Matrix evaluation_mask(const AreaCatalog& catalog, bool include_target_block);

struct TrialOutcome {
  Matrix completed;  // day-D matrix: observed entries plus predictions
  Matrix eval_mask;
  double mae = 0.0;
  double nrmse = 0.0;
};

// One repetition: hide `targets`, reassign their flows, predict with `method`
// and score against the original day-D matrix.
TrialOutcome run_trial(const Dataset& data, Period period, const std::vector<int>& targets,
                       Method method, const ExperimentConfig& cfg);

// Results are ordered by (period, ratio, method) as listed in `cfg`.
std::vector<EvalResult> run_experiment(const Dataset& data, const ExperimentConfig& cfg);

struct SweepResult {
  std::vector<EvalResult> cells;  // k-major
};

// MLC-PPF over the Cartesian product of k and lambda at the first ratio and
// period of `cfg`.
SweepResult sweep_parameters(const Dataset& data, const std::vector<int>& k_grid,
                             const std::vector<double>& lambda_grid, const ExperimentConfig& cfg);

// method,period,ratio,seed,mae,nrmse with one row per repetition.
void write_results_csv(std::ostream& os, const std::vector<EvalResult>& results);
std::string results_summary_json(const std::vector<EvalResult>& results);
// k,lambda,mae,nrmse with one row per cell.
void write_sweep_csv(std::ostream& os, const SweepResult& sweep);

}  // namespace ppf
