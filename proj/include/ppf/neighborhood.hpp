#pragma once

#include <vector>

#include "ppf/core.hpp"

namespace ppf {

inline constexpr double kEarthRadiusKm = 6371.0;

// Great-circle distance in kilometres.
double haversine_km(GeoPoint a, GeoPoint b);

// Pairwise haversine distances between all areas.
Matrix geo_distances(const AreaCatalog& catalog);

// Per-column z-score over rows (population standard deviation). Constant
// columns become zero.
Matrix standardize_columns(const Matrix& x);

// Euclidean distance between every pair of rows.
Matrix pairwise_distances(const Matrix& rows);

// Pairwise Euclidean distances between areas after concatenating every view
// and z-scoring each column over all areas. Constant columns are dropped.
// Requires at least one view.
Matrix feature_distances(const ViewSet& views);

struct SimilarityModel {
  Matrix geo_dist;
  Matrix feat_dist;  // empty when no views were supplied
  Matrix s;          // row-normalized similarity, not symmetric in general

  bool geo_only() const { return feat_dist.size() == 0; }
};

// s_ij = 2 - (geo_ij / max_l geo_il + feat_ij / max_l feat_il).
// With an empty `feat` the feature term is dropped: s_ij = 1 - geo_ij / max_l geo_il.
// Throws InvalidInput if any row of either metric is all zero.
SimilarityModel similarity(const Matrix& geo, const Matrix& feat);

// geo_distances + feature_distances (when views exist) + similarity.
SimilarityModel build_similarity(const AreaCatalog& catalog, const ViewSet& views);

struct NeighborModel {
  int k = 0;
  Matrix h;                                // n x n, {0,1}
  std::vector<std::vector<int>> neighbors; // per area, by descending similarity
};

// Row i of H marks the k known areas (never i itself) with the largest s_ij.
// Ties go to the lower index. Throws InvalidInput unless 1 <= k < |known|.
NeighborModel build_indicator(const SimilarityModel& sim, const AreaCatalog& catalog, int k);

// W0 = S. Only H (.) W0 is used downstream.
Matrix init_weight(const SimilarityModel& sim, const NeighborModel& nbr);

}  // namespace ppf
