#include "ppf/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ppf/error.hpp"

namespace ppf {

double haversine_km(GeoPoint a, GeoPoint b) {
  constexpr double kRad = std::numbers::pi / 180.0;
  const double lat1 = a.lat_deg * kRad;
  const double lat2 = b.lat_deg * kRad;
  const double sdlat = std::sin(0.5 * (lat2 - lat1));
  const double sdlon = std::sin(0.5 * (b.lon_deg - a.lon_deg) * kRad);
  const double h = sdlat * sdlat + std::cos(lat1) * std::cos(lat2) * sdlon * sdlon;
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::min(1.0, h)));
}

Matrix geo_distances(const AreaCatalog& catalog) {
  const auto n = static_cast<Eigen::Index>(catalog.size());
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = haversine_km(catalog.coords[i], catalog.coords[j]);
    }
  }
  return d;
}

Matrix standardize_columns(const Matrix& x) {
  Matrix z = x;
  const auto n = static_cast<double>(x.rows());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    z.col(c).array() -= z.col(c).mean();
    const double sd = std::sqrt(z.col(c).squaredNorm() / n);
    if (sd > 0.0) {
      z.col(c) /= sd;
    } else {
      z.col(c).setZero();
    }
  }
  return z;
}

Matrix pairwise_distances(const Matrix& rows) {
  const Eigen::Index n = rows.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = (rows.row(i) - rows.row(j)).norm();
    }
  }
  return d;
}

Matrix feature_distances(const ViewSet& views) {
  if (views.empty()) throw InvalidInput("feature_distances needs at least one view");
  const Eigen::Index n = views.views.front().x.rows();

  Matrix z(n, views.total_columns());
  Eigen::Index col = 0;
  for (const auto& v : views.views) {
    if (v.x.rows() != n) throw InvalidInput("view '" + v.name + "' has mismatched row count");
    z.middleCols(col, v.x.cols()) = v.x;
    col += v.x.cols();
  }

  return pairwise_distances(standardize_columns(z));
}

namespace {

Matrix row_normalized(const Matrix& m, const char* what) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    if (!(mx > 0.0)) {
      throw InvalidInput(std::string(what) + " distance row " + std::to_string(i) +
                         " is all zero; similarity is undefined");
    }
    out.row(i) = m.row(i) / mx;
  }
  return out;
}

}  // namespace

SimilarityModel similarity(const Matrix& geo, const Matrix& feat) {
  if (geo.rows() != geo.cols()) throw InvalidInput("geographic distance matrix must be square");
  SimilarityModel model{geo, feat, {}};
  if (feat.size() == 0) {
    model.s = (1.0 - row_normalized(geo, "geographic").array()).matrix();
    return model;
  }
  if (feat.rows() != geo.rows() || feat.cols() != geo.cols())
    throw InvalidInput("feature and geographic distance matrices differ in shape");
  model.s = (2.0 - (row_normalized(geo, "geographic") + row_normalized(feat, "feature")).array())
                .matrix();
  return model;
}

SimilarityModel build_similarity(const AreaCatalog& catalog, const ViewSet& views) {
  Matrix geo = geo_distances(catalog);
  if (views.empty()) return similarity(geo, Matrix());
  return similarity(geo, feature_distances(views));
}

NeighborModel build_indicator(const SimilarityModel& sim, const AreaCatalog& catalog, int k) {
  const Eigen::Index n = sim.s.rows();
  if (static_cast<std::size_t>(n) != catalog.size())
    throw InvalidInput("similarity matrix and catalog disagree on the number of areas");
  const std::vector<int> known = catalog.known_indices();
  if (k < 1 || static_cast<std::size_t>(k) >= known.size()) {
    throw InvalidInput("neighborhood size k = " + std::to_string(k) + " needs 1 <= k < " +
                       std::to_string(known.size()) + " known areas");
  }

  NeighborModel model;
  model.k = k;
  model.h = Matrix::Zero(n, n);
  model.neighbors.resize(static_cast<std::size_t>(n));

  std::vector<int> cand;
  cand.reserve(known.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    cand.clear();
    for (int j : known)
      if (j != i) cand.push_back(j);
    // `known` is ascending, so a stable partial order on s gives the
    // lower-index tie-break.
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end(), [&](int a, int b) {
      const double sa = sim.s(i, a), sb = sim.s(i, b);
      return sa > sb || (sa == sb && a < b);
    });
    auto& row = model.neighbors[static_cast<std::size_t>(i)];
    row.assign(cand.begin(), cand.begin() + k);
    for (int j : row) model.h(i, j) = 1.0;
  }
  return model;
}

Matrix init_weight(const SimilarityModel& sim, const NeighborModel& nbr) {
  if (sim.s.rows() != nbr.h.rows()) throw InvalidInput("similarity and indicator shapes differ");
  return sim.s;
}

}  // namespace ppf
