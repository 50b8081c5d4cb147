#include "ppf/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ppf/error.hpp"
#include "random_fill.hpp"

namespace ppf {

const FlowTensor& SyntheticCity::period(Period p) const {
  for (const auto& f : flows)
    if (f.period == p) return f;
  throw InvalidInput("synthetic city has no flows for period " + std::string(to_string(p)));
}

double origin_mass(int region, Period p) {
  switch (p) {
    case Period::MorningRush:
      return region == kResidential ? 1.0 : region == kBusiness ? 0.15 : 0.5;
    case Period::AfternoonRush:
      return region == kResidential ? 0.15 : region == kBusiness ? 1.0 : 0.5;
    case Period::NonRush:
      return region == kBusiness ? 0.6 : 0.4;
  }
  return 0.0;
}

double destination_mass(int region, Period p) {
  switch (p) {
    case Period::MorningRush:
      return region == kResidential ? 0.15 : region == kBusiness ? 1.0 : 0.5;
    case Period::AfternoonRush:
      return region == kResidential ? 1.0 : region == kBusiness ? 0.15 : 0.5;
    case Period::NonRush:
      return region == kBusiness ? 0.6 : 0.4;
  }
  return 0.0;
}

namespace {

double period_volume(Period p) {
  switch (p) {
    case Period::MorningRush: return 1.0;
    case Period::AfternoonRush: return 0.9;
    case Period::NonRush: return 0.45;
  }
  return 0.0;
}

}  // namespace

Matrix expected_flows(const SyntheticCity& city, const Matrix& geo, Period p,
                      const SyntheticSpec& spec) {
  const auto n = static_cast<Eigen::Index>(city.catalog.size());
  // Areas are zones, not points: a trip that starts and ends in area i
  // travels about half the way to i's nearest neighbor.
  Matrix dist = geo;
  for (Eigen::Index i = 0; i < n; ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) nearest = std::min(nearest, geo(i, j));
    dist(i, i) = n > 1 ? 0.5 * nearest : 0.0;
  }
  // Distances in units of the mean inter-area distance, so the decay does
  // not depend on the size of the bounding box.
  if (n > 1) {
    const double mean_geo = (geo.sum() - geo.trace()) / static_cast<double>(n * (n - 1));
    if (mean_geo > 0.0) dist /= mean_geo;
  }
  Matrix m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double dest = city.activity[j] * destination_mass(city.region[j], p);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double orig = city.activity[i] * origin_mass(city.region[i], p);
      m(i, j) = orig * dest / std::pow(1.0 + dist(i, j), spec.gamma);
    }
  }
  return m * (spec.trips_per_day * period_volume(p) / m.sum());
}

SyntheticCity generate(const SyntheticSpec& spec) {
  if (spec.n < 4) throw InvalidInput("synthetic city needs n >= 4");
  if (spec.regions < 2) throw InvalidInput("synthetic city needs at least 2 region types");
  if (!(spec.noise >= 0.0) || !(spec.view_noise >= 0.0))
    throw InvalidInput("noise levels must be >= 0");
  if (spec.days < 1) throw InvalidInput("synthetic city needs at least one day");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  SyntheticCity city;
  const int n = spec.n;
  auto& cat = city.catalog;
  for (int i = 0; i < n; ++i) {
    cat.ids.push_back("A" + std::to_string(i + 1));
    cat.coords.push_back({spec.lat_min + (spec.lat_max - spec.lat_min) * unif(rng),
                          spec.lon_min + (spec.lon_max - spec.lon_min) * unif(rng)});
  }
  cat.known.assign(static_cast<std::size_t>(n), true);

  // Spatially coherent land use: a few anchors per region type, each area
  // takes the type of its nearest anchor.
  constexpr int kAnchorsPerRegion = 3;
  std::vector<GeoPoint> anchors;
  std::vector<int> anchor_region;
  for (int r = 0; r < spec.regions; ++r) {
    for (int a = 0; a < kAnchorsPerRegion; ++a) {
      anchors.push_back({spec.lat_min + (spec.lat_max - spec.lat_min) * unif(rng),
                         spec.lon_min + (spec.lon_max - spec.lon_min) * unif(rng)});
      anchor_region.push_back(r);
    }
  }
  city.region.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < anchors.size(); ++a) {
      const double d = haversine_km(cat.coords[i], anchors[a]);
      if (d < best) {
        best = d;
        city.region[i] = anchor_region[a];
      }
    }
  }

  std::lognormal_distribution<double> size_dist(0.0, 0.5);
  for (int i = 0; i < n; ++i) city.activity.push_back(size_dist(rng));

  // Views: one unit-scale prototype per (view, region type) plus noise.
  const char* kViewNames[] = {"economy", "family", "income", "population"};
  for (std::size_t v = 0; v < spec.view_dims.size(); ++v) {
    const int m = spec.view_dims[v];
    Matrix proto = detail::random_matrix(spec.regions, m, [&] { return normal(rng); });
    Matrix x(n, m);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < m; ++c)
        x(i, c) = proto(city.region[i], c) + spec.view_noise * normal(rng);
    const std::string name = v < 4 ? kViewNames[v] : "view" + std::to_string(v + 1);
    city.views.views.push_back({name, std::move(x)});
  }

  const Matrix geo = geo_distances(cat);
  for (Period p : kAllPeriods) {
    const Matrix mean = expected_flows(city, geo, p, spec);
    FlowTensor ft;
    ft.period = p;
    for (int d = 0; d < spec.days; ++d) {
      Matrix f(n, n);
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
          const double lam = mean(i, j);
          double v = lam;
          if (spec.noise > 0.0) {
            std::poisson_distribution<long> pois(lam);
            v = lam + spec.noise * (static_cast<double>(pois(rng)) - lam);
          }
          f(i, j) = std::max(0.0, v);
        }
      }
      ft.days.push_back(std::move(f));
    }
    city.flows.push_back(std::move(ft));
  }
  return city;
}

PlantedInstance planted_instance(int n, int k, std::uint64_t seed) {
  if (n < 4 || n > 12) throw InvalidInput("planted instance supports 4 <= n <= 12");
  if (k < 1) throw InvalidInput("planted instance needs k >= 1");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  PlantedInstance p;
  auto& cat = p.catalog;
  for (int i = 0; i < n; ++i) {
    cat.ids.push_back("P" + std::to_string(i + 1));
    cat.coords.push_back({-33.9 + 0.1 * unif(rng), 151.1 + 0.1 * unif(rng)});
  }
  const int targets = std::max(1, n / 5);
  if (k >= n - targets) throw InvalidInput("planted instance: k too large for the known set");
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  cat.known.assign(static_cast<std::size_t>(n), true);
  for (int i = 0; i < targets; ++i) cat.known[order[i]] = false;

  p.sim = build_similarity(cat, p.views);
  p.nbr = build_indicator(p.sim, cat, k);
  p.w_star = init_weight(p.sim, p.nbr);
  const Matrix m = p.nbr.h.cwiseProduct(p.w_star);

  // Perron vector of the non-negative localization operator. Iterating on
  // M + I gives the same eigenvector and converges even when the neighbor
  // graph is periodic.
  Vector u = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  for (int it = 0; it < 100000; ++it) {
    Vector next = m * u + u;
    next /= next.norm();
    const double change = (next - u).norm();
    u = next;
    if (change < 1e-15) break;
  }
  const double mu = u.dot(m * u);
  if (!(mu > 0.0) || (u.array() <= 1e-9).any() || (m * u - mu * u).norm() > 1e-12)
    throw InvalidInput("planted instance: localization operator has no positive eigenvector");

  p.c_star = Matrix::Identity(n, n) / mu;
  const int days = 2;
  p.truth.period = Period::MorningRush;
  p.observed.period = Period::MorningRush;
  const Matrix y = build_mask(cat).y;
  for (int d = 0; d < days; ++d) {
    Vector v = detail::random_matrix(n, 1, [&] { return 0.5 + unif(rng); });
    Matrix f = (u / u.mean()) * (50.0 * v).transpose();
    p.truth.days.push_back(f);
    p.observed.days.push_back(y.cwiseProduct(f));
  }
  return p;
}

}  // namespace ppf
