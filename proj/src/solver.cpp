#include "ppf/solver.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "ppf/error.hpp"

namespace ppf {

namespace {

// Nonzero entries of H.W, in row order of H's pattern.
struct Entry {
  int i;
  int j;
  double hw;
};
using Pattern = std::vector<Entry>;

Pattern pattern_of(const Matrix& h, const Matrix& w) {
  Pattern p;
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    for (Eigen::Index j = 0; j < h.cols(); ++j)
      if (h(i, j) != 0.0) p.push_back({static_cast<int>(i), static_cast<int>(j), h(i, j) * w(i, j)});
  return p;
}

// out = (H.W) in, walking columns so both operands stay contiguous.
void localize_into(const Pattern& p, const Matrix& in, Matrix& out) {
  out.setZero(in.rows(), in.cols());
  for (Eigen::Index a = 0; a < in.cols(); ++a) {
    const double* src = in.col(a).data();
    double* dst = out.col(a).data();
    for (const Entry& e : p) dst[e.i] += e.hw * src[e.j];
  }
}

Matrix localize(const Matrix& h, const Matrix& w, const Matrix& f) {
  Matrix out;
  localize_into(pattern_of(h, w), f, out);
  return out;
}

// Loss, both gradients and the fitted matrices (H.W) F_d C for one state,
// computed day by day in a single pass.
struct Evaluation {
  double loss = 0.0;
  std::vector<Matrix> fitted;
  Matrix gc;
  Matrix gw;
};

// gC = sum_d G_d^T R_d + lambda sum_v (C X_v^k - X_v) X_v^k^T with
// G_d = (H.W) F_d and R_d = G_d C - F_d, taken as F_d^T ((H.W)^T R_d).
// The printed form of this gradient multiplies the guidance residual by
// X_v X_v^k^T; differentiating the loss gives X_v^k in both places.
//
// gW = H . sum_d R_d C^T F_d^T, evaluated on the support of H only as dot
// products of rows of R_d with rows of F_d C.
Evaluation evaluate(const ModelState& st, const Matrix& h, const Guidance& g, bool gradients) {
  const Eigen::Index n = st.c.rows();
  const Pattern p = pattern_of(h, st.w);
  Evaluation ev;
  ev.fitted.reserve(st.flows.size());
  if (gradients) ev.gc = Matrix::Zero(n, n);
  std::vector<double> acc(p.size(), 0.0);
  Matrix mapped(n, n), residual(n, n), back(n, n);
  double flow_term = 0.0;
  for (const Matrix& f : st.flows) {
    mapped.noalias() = f * st.c;
    Matrix fitted;
    localize_into(p, mapped, fitted);
    residual = fitted - f;
    flow_term += residual.squaredNorm();
    ev.fitted.push_back(std::move(fitted));
    if (!gradients) continue;
    back.setZero();
    for (Eigen::Index a = 0; a < n; ++a) {
      const double* r = residual.col(a).data();
      const double* m = mapped.col(a).data();
      double* b = back.col(a).data();
      for (std::size_t q = 0; q < p.size(); ++q) {
        b[p[q].j] += p[q].hw * r[p[q].i];
        acc[q] += r[p[q].i] * m[p[q].j];
      }
    }
    ev.gc.noalias() += f.transpose() * back;
  }
  double view_term = 0.0;
  if (g.active()) {
    for (std::size_t v = 0; v < g.views.size(); ++v) {
      const Matrix vr = st.c * g.localized[v] - g.views[v];
      view_term += vr.squaredNorm();
      if (gradients) ev.gc.noalias() += g.lambda * (vr * g.localized[v].transpose());
    }
  }
  ev.loss = 0.5 * flow_term + 0.5 * g.lambda * view_term;
  if (gradients) {
    ev.gw = Matrix::Zero(n, n);
    for (std::size_t q = 0; q < p.size(); ++q) ev.gw(p[q].i, p[q].j) = h(p[q].i, p[q].j) * acc[q];
  }
  return ev;
}

void check_shapes(const ModelState& st, const Matrix& h) {
  const Eigen::Index n = h.rows();
  if (h.cols() != n || st.c.rows() != n || st.c.cols() != n || st.w.rows() != n ||
      st.w.cols() != n)
    throw InvalidInput("solver state and indicator matrix shapes disagree");
  for (const Matrix& f : st.flows)
    if (f.rows() != n || f.cols() != n) throw InvalidInput("working flow matrix has wrong shape");
}

void fill_from(ModelState& st, const std::vector<Matrix>& fitted, const ObservationMask& mask) {
  for (std::size_t d = 0; d < st.flows.size(); ++d) {
    Matrix& f = st.flows[d];
    f = (mask.y.array() != 0.0).select(f, fitted[d]);
  }
}

double relative_change(double prev, double cur) {
  if (prev == 0.0) return cur == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(prev - cur) / prev;
}

Matrix masked(const Matrix& f, const ObservationMask& mask) {
  return (mask.y.array() != 0.0).select(f, Matrix::Zero(f.rows(), f.cols()));
}

}  // namespace

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::MaxIter: return "max-iter";
    case StopReason::ZeroGradient: return "zero-gradient";
  }
  return "unknown";
}

Guidance Guidance::make(const ViewSet& views, const Matrix& h, double lambda) {
  Guidance g;
  g.lambda = lambda;
  for (const auto& v : views.views) {
    if (v.x.rows() != h.rows()) throw InvalidInput("view '" + v.name + "' row count mismatch");
    g.views.push_back(v.x);
    g.localized.push_back(h * v.x);
  }
  return g;
}

double loss(const ModelState& state, const Matrix& h, const Guidance& guidance) {
  check_shapes(state, h);
  const double l = evaluate(state, h, guidance, false).loss;
  if (!std::isfinite(l)) throw DivergenceError("loss is not finite", state.iteration);
  return l;
}

Matrix grad_c(const ModelState& state, const Matrix& h, const Guidance& guidance) {
  check_shapes(state, h);
  const Matrix gc = evaluate(state, h, guidance, true).gc;
  if (!gc.allFinite()) throw DivergenceError("gradient in C is not finite", state.iteration);
  return gc;
}

Matrix grad_w(const ModelState& state, const Matrix& h) {
  check_shapes(state, h);
  Matrix gw = evaluate(state, h, Guidance{}, true).gw;
  if (!gw.allFinite()) throw DivergenceError("gradient in W is not finite", state.iteration);
  return gw;
}

StepOutcome step(ModelState& state, const Matrix& gc, const Matrix& gw, double alpha) {
  StepOutcome out;
  const double nc = gc.norm();
  const double nw = gw.norm();
  if (nc > 0.0) {
    state.c -= (alpha / nc) * gc;
    out.c_updated = true;
  }
  if (nw > 0.0) {
    state.w -= (alpha / nw) * gw;
    out.w_updated = true;
  }
  return out;
}

void fill_unobserved(ModelState& state, const Matrix& h, const ObservationMask& mask) {
  check_shapes(state, h);
  const Evaluation ev = evaluate(state, h, Guidance{}, false);
  fill_from(state, ev.fitted, mask);
}

Matrix pseudo_inverse(const Matrix& a, double rcond) {
  if (a.size() == 0) return Matrix(a.cols(), a.rows());
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw Error("SVD failed while computing pseudo-inverse");
  const Vector& sv = svd.singularValues();
  const double cutoff = rcond * (sv.size() > 0 ? sv(0) : 0.0);
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix init_c(const Matrix& flows_last, const Matrix& h, const Matrix& w,
              const ObservationMask& mask, double rcond) {
  const Matrix a = masked(localize(h, w, flows_last), mask);
  const Matrix b = masked(flows_last, mask);
  return pseudo_inverse(a, rcond) * b;
}

FitResult fit(const FlowTensor& flows, const SimilarityModel& sim, const NeighborModel& nbr,
              const ViewSet& views, const ObservationMask& mask, const SolverConfig& cfg) {
  if (flows.days.empty()) throw InvalidInput("fit needs at least one day of flows");
  const Matrix& h = nbr.h;
  const Eigen::Index n = h.rows();
  if (mask.y.rows() != n || mask.y.cols() != n) throw InvalidInput("mask shape mismatch");
  if (cfg.max_iter < 1) throw InvalidInput("max_iter must be >= 1");
  if (!(cfg.alpha > 0.0)) throw InvalidInput("alpha must be > 0");

  const Guidance guidance = Guidance::make(views, h, cfg.lambda);

  FitResult res;
  ModelState& st = res.state;
  FitReport& rep = res.report;
  st.w = init_weight(sim, nbr);
  st.flows.reserve(flows.days.size());
  for (const Matrix& f : flows.days) {
    if (f.rows() != n || f.cols() != n) throw InvalidInput("flow matrix shape mismatch");
    st.flows.push_back(masked(f, mask));
  }
  st.c = init_c(st.flows.back(), h, st.w, mask, cfg.rcond);

  Evaluation ev = evaluate(st, h, guidance, true);
  if (!std::isfinite(ev.loss)) throw DivergenceError("initial loss is not finite", 0);
  rep.losses.push_back(ev.loss);

  // No loss change exists before the first update; count it as a full
  // relative change so only epsilon >= 1 stops before iterating.
  double rel = 1.0;
  bool stopped = false;
  for (int t = 1; t <= cfg.max_iter; ++t) {
    if (rel < cfg.epsilon) {
      rep.stop = StopReason::Converged;
      stopped = true;
      break;
    }
    const Matrix& gc = ev.gc;
    const Matrix& gw = ev.gw;
    if (!gc.allFinite() || !gw.allFinite()) throw DivergenceError("non-finite gradient", t);
    if (gc.norm() == 0.0 && gw.norm() == 0.0) {
      rep.stop = StopReason::ZeroGradient;
      stopped = true;
      break;
    }

    // The fill uses the parameters from before this update.
    fill_from(st, ev.fitted, mask);
    const StepOutcome moved = step(st, gc, gw, cfg.alpha);
    rep.zero_grad_c += moved.c_updated ? 0 : 1;
    rep.zero_grad_w += moved.w_updated ? 0 : 1;
    st.iteration = t;
    rep.iterations = t;

    const double prev = ev.loss;
    ev = evaluate(st, h, guidance, true);
    if (!std::isfinite(ev.loss)) throw DivergenceError("loss diverged; reduce alpha", t);
    rep.losses.push_back(ev.loss);
    rel = relative_change(prev, ev.loss);
  }
  if (!stopped) rep.stop = rel < cfg.epsilon ? StopReason::Converged : StopReason::MaxIter;

  rep.final_loss = rep.losses.back();
  st.loss_history = rep.losses;
  return res;
}

Matrix predict(const ModelState& state, const Matrix& h, const ObservationMask& mask,
               const Matrix& flows_last) {
  const Matrix z = localize(h, state.w, flows_last) * state.c;
  return (mask.y.array() != 0.0).select(Matrix::Zero(z.rows(), z.cols()), z.cwiseMax(0.0));
}

Matrix merge_predictions(const Matrix& observed, const Matrix& row_side, const Matrix& col_side,
                         const ObservationMask& mask) {
  const Eigen::Index n = mask.y.rows();
  Matrix out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const bool known_j = mask.y(j, j) != 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool known_i = mask.y(i, i) != 0.0;
      if (mask.y(i, j) != 0.0) {
        out(i, j) = observed(i, j);
      } else if (!known_i && known_j) {
        out(i, j) = row_side(i, j);
      } else if (known_i && !known_j) {
        out(i, j) = col_side(i, j);
      } else {
        out(i, j) = 0.5 * (row_side(i, j) + col_side(i, j));
      }
    }
  }
  return out;
}

FlowTensor transposed(const FlowTensor& flows) {
  FlowTensor out;
  out.period = flows.period;
  out.days.reserve(flows.days.size());
  for (const Matrix& f : flows.days) out.days.push_back(f.transpose());
  return out;
}

BidirectionalFit fit_bidirectional(const FlowTensor& flows, const SimilarityModel& sim,
                                   const NeighborModel& nbr, const ViewSet& views,
                                   const ObservationMask& mask, const SolverConfig& cfg) {
  BidirectionalFit out;
  const ObservationMask mask_t{mask.y.transpose()};
  out.departures = fit(flows, sim, nbr, views, mask, cfg);
  out.arrivals = fit(transposed(flows), sim, nbr, views, mask_t, cfg);

  const Matrix& dep_last = out.departures.state.flows.back();
  const Matrix& arr_last = out.arrivals.state.flows.back();
  const Matrix row_side = predict(out.departures.state, nbr.h, mask, dep_last);
  const Matrix col_side = predict(out.arrivals.state, nbr.h, mask_t, arr_last).transpose();
  out.completed = merge_predictions(masked(flows.last(), mask), row_side, col_side, mask);
  return out;
}

}  // namespace ppf
