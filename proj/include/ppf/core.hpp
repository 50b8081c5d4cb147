#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ppf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Period { MorningRush, AfternoonRush, NonRush };

inline constexpr Period kAllPeriods[] = {Period::MorningRush, Period::AfternoonRush,
                                         Period::NonRush};

std::string_view to_string(Period p);
std::optional<Period> parse_period(std::string_view name);

struct GeoPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
};

// The set of areas. `known[i]` is true when area i has a station (its flows
// are observed); every other area is a target whose flows are predicted.
struct AreaCatalog {
  std::vector<std::string> ids;
  std::vector<GeoPoint> coords;
  std::vector<bool> known;

  std::size_t size() const { return ids.size(); }
  std::vector<int> known_indices() const;
  std::vector<int> target_indices() const;
  std::size_t known_count() const;
};

// Daily OD matrices for one time period. Row = origin, column = destination.
struct FlowTensor {
  Period period = Period::MorningRush;
  std::vector<Matrix> days;

  std::size_t day_count() const { return days.size(); }
  Eigen::Index n() const { return days.empty() ? 0 : days.front().rows(); }
  const Matrix& last() const { return days.back(); }
};

// Y(i,j) = 1 iff both i and j are known.
struct ObservationMask {
  Matrix y;

  bool observed(Eigen::Index i, Eigen::Index j) const { return y(i, j) != 0.0; }
};

struct View {
  std::string name;
  Matrix x;  // n x m_v, one row per area
};

struct ViewSet {
  std::vector<View> views;

  std::size_t size() const { return views.size(); }
  bool empty() const { return views.empty(); }
  Eigen::Index total_columns() const;
};

// Areas, flows for one or more periods, and views. In experiments every
// area is known and the flows are ground truth.
struct Dataset {
  AreaCatalog catalog;
  std::vector<FlowTensor> flows;
  ViewSet views;

  const FlowTensor& period(Period p) const;
  bool has_period(Period p) const;
};

struct SolverConfig {
  int k = 2;
  double lambda = 1e-1;
  double alpha = 1e-2;
  int max_iter = 5000;
  double epsilon = 1e-4;
  double rcond = 1e-10;  // pseudo-inverse cutoff for the initial C
  std::uint64_t seed = 0;
};

struct Violation {
  enum class Kind {
    Dimension,
    NegativeFlow,
    NonFinite,
    DuplicateId,
    NoKnownArea,
    TooFewAreas,
    NeighborhoodTooLarge,
    BadConfig,
  };
  Kind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::size_t count(Violation::Kind kind) const;
  std::string summary() const;
};

// Lists every violated invariant. Pure: never throws on bad data.
ValidationReport validate(const AreaCatalog& catalog, const FlowTensor& flows,
                          const ViewSet& views,
                          const std::optional<SolverConfig>& config = std::nullopt);

ObservationMask build_mask(const AreaCatalog& catalog);

// Copy of `catalog` with the listed areas marked as targets and every other
// area marked known.
AreaCatalog with_targets(const AreaCatalog& catalog, const std::vector<int>& targets);

}  // namespace ppf
