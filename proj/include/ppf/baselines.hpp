#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppf/core.hpp"
#include "ppf/neighborhood.hpp"

namespace ppf {

struct BaselinePrediction {
  std::string method;
  Matrix predicted;  // non-zero only on unobserved positions
};

// Latent-similarity k-NN. A target row is the mean of its k most similar
// known areas' observed rows; a target column is the mean of their observed
// columns. Target x target entries average the row and column estimates,
// each taken over the neighbor block.
BaselinePrediction ls_knn_predict(const Matrix& flows_last, const SimilarityModel& sim,
                                  const AreaCatalog& catalog, int k = 4);

struct NmfOptions {
  int rank = 20;
  int iterations = 500;
  std::uint64_t seed = 0;
  double eps = 1e-12;
};

struct NmfResult {
  Matrix u;                           // n x r
  Matrix vt;                          // r x (n + sum m_v)
  std::vector<double> column_offsets; // shift applied to each view column
  std::vector<double> objective;      // masked squared error after each update
};

// Weighted multiplicative updates minimizing ||Mask.(M - U Vt)||_F^2 with
// U, Vt >= 0. `weight` has the shape of `m`; zero marks a missing entry.
NmfResult masked_nmf(const Matrix& m, const Matrix& weight, const NmfOptions& opt);

// NMF on [F_D | X_1 | ... | X_V]. Unobserved flow entries are missing, view
// columns with negative entries are shifted to start at zero.
BaselinePrediction nmf_predict(const Matrix& flows_last, const ViewSet& views,
                               const ObservationMask& mask, const NmfOptions& opt,
                               NmfResult* details = nullptr);

}  // namespace ppf
