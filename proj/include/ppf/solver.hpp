#pragma once

#include <string_view>
#include <vector>

#include "ppf/core.hpp"
#include "ppf/neighborhood.hpp"

namespace ppf {

// Multi-view guidance term: the raw views X_v and their localized forms
// X_v^k = H X_v, weighted by lambda.
struct Guidance {
  double lambda = 0.0;
  std::vector<Matrix> views;
  std::vector<Matrix> localized;

  static Guidance make(const ViewSet& views, const Matrix& h, double lambda);
  bool active() const { return lambda != 0.0 && !views.empty(); }
};

// Learner state. `flows` are working copies of the daily matrices: observed
// entries are never modified, unobserved entries hold the latest fill.
struct ModelState {
  Matrix c;
  Matrix w;
  std::vector<Matrix> flows;
  int iteration = 0;
  std::vector<double> loss_history;
};

enum class StopReason { Converged, MaxIter, ZeroGradient };
std::string_view to_string(StopReason r);

struct FitReport {
  int iterations = 0;
  double final_loss = 0.0;
  std::vector<double> losses;  // losses[0] is the initial loss, losses[t] follows update t
  StopReason stop = StopReason::MaxIter;
  int zero_grad_c = 0;  // updates where C was skipped because gC was zero
  int zero_grad_w = 0;
};

// 1/2 sum_d ||F_d - (H.W) F_d C||_F^2 + lambda/2 sum_v ||X_v - C X_v^k||_F^2
// over the working flows. Throws DivergenceError on a non-finite result.
double loss(const ModelState& state, const Matrix& h, const Guidance& guidance);

// Gradients of `loss`. grad_c includes the guidance term; grad_w is zero off
// the support of H.
Matrix grad_c(const ModelState& state, const Matrix& h, const Guidance& guidance);
Matrix grad_w(const ModelState& state, const Matrix& h);

struct StepOutcome {
  bool c_updated = false;
  bool w_updated = false;
};

// Normalized gradient step on C and W. A variable whose gradient has zero
// Frobenius norm is left as is.
StepOutcome step(ModelState& state, const Matrix& gc, const Matrix& gw, double alpha);

// F_d <- Y.F_d + (1-Y).((H.W) F_d C) for every day. Observed entries are
// copied, never recomputed.
void fill_unobserved(ModelState& state, const Matrix& h, const ObservationMask& mask);

// Moore-Penrose pseudo-inverse via SVD; singular values below
// rcond * sigma_max are treated as zero.
Matrix pseudo_inverse(const Matrix& a, double rcond = 1e-10);

// C0 = (Y.((H.W) F_D))^+ (Y.F_D).
Matrix init_c(const Matrix& flows_last, const Matrix& h, const Matrix& w,
              const ObservationMask& mask, double rcond = 1e-10);

struct FitResult {
  ModelState state;
  FitReport report;
};

// Full learning loop for one orientation (row side = departures). Unobserved
// entries of the input flows are ignored and start at zero.
FitResult fit(const FlowTensor& flows, const SimilarityModel& sim, const NeighborModel& nbr,
              const ViewSet& views, const ObservationMask& mask, const SolverConfig& cfg);

// (1-Y).((H.W) F_D C), negatives clamped to zero. Observed positions are 0.
Matrix predict(const ModelState& state, const Matrix& h, const ObservationMask& mask,
               const Matrix& flows_last);

// Combines a row-side prediction (for target rows) with a column-side
// prediction in the original orientation (for target columns). Observed
// entries come from `observed`, the target x target block is the mean of
// both sides.
Matrix merge_predictions(const Matrix& observed, const Matrix& row_side, const Matrix& col_side,
                         const ObservationMask& mask);

struct BidirectionalFit {
  FitResult departures;  // fit on F_d
  FitResult arrivals;    // fit on F_d^T
  Matrix completed;      // day-D matrix with every unobserved entry predicted
};

BidirectionalFit fit_bidirectional(const FlowTensor& flows, const SimilarityModel& sim,
                                   const NeighborModel& nbr, const ViewSet& views,
                                   const ObservationMask& mask, const SolverConfig& cfg);

FlowTensor transposed(const FlowTensor& flows);

}  // namespace ppf
