#pragma once

#include <cstdint>
#include <vector>

#include "ppf/core.hpp"
#include "ppf/neighborhood.hpp"

namespace ppf {

// Region types. Values >= kMixed are mixed-use.
enum RegionType : int { kResidential = 0, kBusiness = 1, kMixed = 2 };

struct SyntheticSpec {
  int n = 117;
  int regions = 3;
  double lat_min = -34.05, lat_max = -33.70;
  double lon_min = 150.85, lon_max = 151.30;
  int days = 14;
  double noise = 1.0;       // 0 = deterministic days, 1 = Poisson counts
  double gamma = 2.0;       // gravity distance decay exponent
  double view_noise = 0.1;  // relative to the unit-scale region prototypes
  double trips_per_day = 150000.0;  // expected total trips, morning rush
  std::vector<int> view_dims{43, 44, 50, 97};
  std::uint64_t seed = 0;
};

struct SyntheticCity {
  AreaCatalog catalog;             // every area known: this is ground truth
  std::vector<FlowTensor> flows;   // one per Period, in kAllPeriods order
  ViewSet views;
  std::vector<int> region;         // region type per area
  std::vector<double> activity;    // per-area size factor

  const FlowTensor& period(Period p) const;
};

// Relative origin / destination attraction of a region type in a period.
double origin_mass(int region, Period p);
double destination_mass(int region, Period p);

// Expected (noise-free) flow matrix of a period for a generated city.
Matrix expected_flows(const SyntheticCity& city, const Matrix& geo, Period p,
                      const SyntheticSpec& spec);

// Throws InvalidInput unless n >= 4, regions >= 2, noise >= 0.
SyntheticCity generate(const SyntheticSpec& spec);

// A dataset whose flows satisfy F_d = (H.W*) F_d C* exactly.
struct PlantedInstance {
  AreaCatalog catalog;  // mixes known and target areas
  FlowTensor truth;     // complete flows for every area
  FlowTensor observed;  // truth with unobserved entries zeroed
  ViewSet views;        // empty
  SimilarityModel sim;
  NeighborModel nbr;
  Matrix c_star;
  Matrix w_star;
};

PlantedInstance planted_instance(int n, int k, std::uint64_t seed);

}  // namespace ppf
