#include "ppf/baselines.hpp"

#include <cmath>
#include <random>

#include "ppf/error.hpp"
#include "random_fill.hpp"

namespace ppf {

BaselinePrediction ls_knn_predict(const Matrix& flows_last, const SimilarityModel& sim,
                                  const AreaCatalog& catalog, int k) {
  const auto n = static_cast<Eigen::Index>(catalog.size());
  if (flows_last.rows() != n || flows_last.cols() != n)
    throw InvalidInput("LS-KNN: flow matrix does not match catalog");
  if (k < 1 || static_cast<std::size_t>(k) > catalog.known_count()) {
    throw InvalidInput("LS-KNN: need at least k = " + std::to_string(k) + " known areas, have " +
                       std::to_string(catalog.known_count()));
  }

  // A target is never a known area, so k == |known| is allowed here even
  // though build_indicator would reject it for known rows.
  const std::vector<int> known = catalog.known_indices();
  std::vector<std::vector<int>> nbrs(static_cast<std::size_t>(n));
  for (int t : catalog.target_indices()) {
    std::vector<int> cand = known;
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end(), [&](int a, int b) {
      const double sa = sim.s(t, a), sb = sim.s(t, b);
      return sa > sb || (sa == sb && a < b);
    });
    nbrs[static_cast<std::size_t>(t)].assign(cand.begin(), cand.begin() + k);
  }

  BaselinePrediction out{"lsknn", Matrix::Zero(n, n)};
  const double inv_k = 1.0 / k;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool ki = catalog.known[i], kj = catalog.known[j];
      if (ki && kj) continue;
      double acc = 0.0;
      if (!ki && kj) {
        for (int a : nbrs[i]) acc += flows_last(a, j);
        out.predicted(i, j) = acc * inv_k;
      } else if (ki && !kj) {
        for (int b : nbrs[j]) acc += flows_last(i, b);
        out.predicted(i, j) = acc * inv_k;
      } else {
        for (int a : nbrs[i])
          for (int b : nbrs[j]) acc += flows_last(a, b);
        out.predicted(i, j) = acc * inv_k * inv_k;
      }
    }
  }
  out.predicted = out.predicted.cwiseMax(0.0);
  return out;
}

namespace {

double masked_error(const Matrix& m, const Matrix& weight, const Matrix& u, const Matrix& vt) {
  return (weight.array() * (m - u * vt).array().square()).sum();
}

}  // namespace

NmfResult masked_nmf(const Matrix& m, const Matrix& weight, const NmfOptions& opt) {
  if (opt.rank < 1) throw InvalidInput("NMF rank must be >= 1");
  if (weight.rows() != m.rows() || weight.cols() != m.cols())
    throw InvalidInput("NMF weight shape mismatch");
  if ((m.array() < 0.0).any()) throw InvalidInput("NMF input must be non-negative");

  const Matrix wm = weight.cwiseProduct(m);
  const double observed = weight.sum();
  const double mean = observed > 0.0 ? wm.sum() / observed : 1.0;
  const double scale = std::sqrt(std::max(mean, opt.eps) / opt.rank);

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  NmfResult res;
  res.u = detail::random_matrix(m.rows(), opt.rank, [&] { return scale * unif(rng); });
  res.vt = detail::random_matrix(opt.rank, m.cols(), [&] { return scale * unif(rng); });

  res.objective.reserve(static_cast<std::size_t>(opt.iterations));
  for (int it = 0; it < opt.iterations; ++it) {
    Matrix approx = weight.cwiseProduct(res.u * res.vt);
    res.u.array() *= (wm * res.vt.transpose()).array() /
                     ((approx * res.vt.transpose()).array() + opt.eps);
    approx = weight.cwiseProduct(res.u * res.vt);
    res.vt.array() *= (res.u.transpose() * wm).array() /
                      ((res.u.transpose() * approx).array() + opt.eps);
    res.objective.push_back(masked_error(m, weight, res.u, res.vt));
  }
  return res;
}

BaselinePrediction nmf_predict(const Matrix& flows_last, const ViewSet& views,
                               const ObservationMask& mask, const NmfOptions& opt,
                               NmfResult* details) {
  const Eigen::Index n = flows_last.rows();
  if (mask.y.rows() != n || mask.y.cols() != n) throw InvalidInput("NMF: mask shape mismatch");

  const Eigen::Index cols = n + views.total_columns();
  Matrix m(n, cols);
  Matrix weight = Matrix::Ones(n, cols);
  m.leftCols(n) = (mask.y.array() != 0.0).select(flows_last, 0.0);
  weight.leftCols(n) = mask.y;

  std::vector<double> offsets;
  Eigen::Index c = n;
  for (const auto& v : views.views) {
    if (v.x.rows() != n) throw InvalidInput("NMF: view '" + v.name + "' row count mismatch");
    for (Eigen::Index j = 0; j < v.x.cols(); ++j, ++c) {
      const double lo = v.x.col(j).minCoeff();
      const double shift = lo < 0.0 ? -lo : 0.0;
      offsets.push_back(shift);
      m.col(c) = v.x.col(j).array() + shift;
    }
  }

  NmfResult res = masked_nmf(m, weight, opt);
  res.column_offsets = std::move(offsets);

  const Matrix recon = res.u * res.vt.leftCols(n);
  BaselinePrediction out{"nmf", (mask.y.array() != 0.0).select(0.0, recon.cwiseMax(0.0))};
  if (details) *details = std::move(res);
  return out;
}

}  // namespace ppf
