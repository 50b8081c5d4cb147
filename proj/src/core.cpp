#include "ppf/core.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "ppf/error.hpp"

namespace ppf {

std::string_view to_string(Period p) {
  switch (p) {
    case Period::MorningRush: return "morning";
    case Period::AfternoonRush: return "afternoon";
    case Period::NonRush: return "nonrush";
  }
  return "unknown";
}

std::optional<Period> parse_period(std::string_view name) {
  for (Period p : kAllPeriods) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

std::vector<int> AreaCatalog::known_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < known.size(); ++i)
    if (known[i]) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> AreaCatalog::target_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < known.size(); ++i)
    if (!known[i]) out.push_back(static_cast<int>(i));
  return out;
}

std::size_t AreaCatalog::known_count() const {
  std::size_t c = 0;
  for (bool k : known) c += k ? 1 : 0;
  return c;
}

Eigen::Index ViewSet::total_columns() const {
  Eigen::Index m = 0;
  for (const auto& v : views) m += v.x.cols();
  return m;
}

const FlowTensor& Dataset::period(Period p) const {
  for (const auto& f : flows)
    if (f.period == p) return f;
  throw InvalidInput("dataset has no flows for period " + std::string(to_string(p)));
}

bool Dataset::has_period(Period p) const {
  for (const auto& f : flows)
    if (f.period == p) return true;
  return false;
}

std::size_t ValidationReport::count(Violation::Kind kind) const {
  std::size_t c = 0;
  for (const auto& v : violations) c += v.kind == kind ? 1 : 0;
  return c;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& v : violations) os << "  - " << v.message << '\n';
  return os.str();
}

ValidationReport validate(const AreaCatalog& catalog, const FlowTensor& flows,
                          const ViewSet& views, const std::optional<SolverConfig>& config) {
  ValidationReport report;
  auto add = [&](Violation::Kind kind, std::string msg) {
    report.violations.push_back({kind, std::move(msg)});
  };
  using K = Violation::Kind;

  const auto n = static_cast<Eigen::Index>(catalog.size());
  if (n < 2) add(K::TooFewAreas, "catalog has " + std::to_string(n) + " areas, need at least 2");
  if (catalog.coords.size() != catalog.ids.size() || catalog.known.size() != catalog.ids.size())
    add(K::Dimension, "catalog field lengths differ (ids/coords/known)");

  std::unordered_set<std::string> seen;
  for (const auto& id : catalog.ids) {
    if (!seen.insert(id).second) add(K::DuplicateId, "duplicate area id '" + id + "'");
  }
  for (std::size_t i = 0; i < catalog.coords.size(); ++i) {
    const auto& c = catalog.coords[i];
    if (!std::isfinite(c.lat_deg) || !std::isfinite(c.lon_deg))
      add(K::NonFinite, "non-finite coordinates for area " + std::to_string(i));
  }
  const std::size_t known = catalog.known_count();
  if (known == 0) add(K::NoKnownArea, "no known area in catalog");

  for (std::size_t d = 0; d < flows.days.size(); ++d) {
    const Matrix& f = flows.days[d];
    if (f.rows() != n || f.cols() != n) {
      add(K::Dimension, "flow matrix for day " + std::to_string(d + 1) + " is " +
                            std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                            ", expected " + std::to_string(n) + "x" + std::to_string(n));
      continue;
    }
    for (Eigen::Index j = 0; j < f.cols(); ++j) {
      for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const double v = f(i, j);
        if (!std::isfinite(v)) {
          add(K::NonFinite, "non-finite flow at day " + std::to_string(d + 1) + " (" +
                                std::to_string(i) + "," + std::to_string(j) + ")");
        } else if (v < 0.0) {
          add(K::NegativeFlow, "negative flow " + std::to_string(v) + " at day " +
                                   std::to_string(d + 1) + " (" + std::to_string(i) + "," +
                                   std::to_string(j) + ")");
        }
      }
    }
  }

  for (const auto& v : views.views) {
    if (v.x.rows() != n) {
      add(K::Dimension, "view '" + v.name + "' has " + std::to_string(v.x.rows()) +
                            " rows, expected " + std::to_string(n));
    }
    if (!v.x.allFinite()) add(K::NonFinite, "view '" + v.name + "' has non-finite entries");
  }

  if (config) {
    const auto& c = *config;
    if (c.k < 1 || static_cast<std::size_t>(c.k) >= known)
      add(K::NeighborhoodTooLarge, "k = " + std::to_string(c.k) + " must satisfy 1 <= k < " +
                                       std::to_string(known) + " (known areas)");
    if (!std::isfinite(c.lambda) || c.lambda < 0.0) add(K::BadConfig, "lambda must be >= 0");
    if (!std::isfinite(c.alpha) || c.alpha <= 0.0) add(K::BadConfig, "alpha must be > 0");
    if (c.max_iter < 1) add(K::BadConfig, "max_iter must be >= 1");
    if (std::isnan(c.epsilon) || c.epsilon <= 0.0) add(K::BadConfig, "epsilon must be > 0");
    if (!(c.rcond >= 0.0 && c.rcond < 1.0)) add(K::BadConfig, "rcond must be in [0, 1)");
  }
  return report;
}

ObservationMask build_mask(const AreaCatalog& catalog) {
  const auto n = static_cast<Eigen::Index>(catalog.size());
  Vector ind(n);
  for (Eigen::Index i = 0; i < n; ++i) ind(i) = catalog.known[i] ? 1.0 : 0.0;
  return {ind * ind.transpose()};
}

AreaCatalog with_targets(const AreaCatalog& catalog, const std::vector<int>& targets) {
  AreaCatalog out = catalog;
  out.known.assign(catalog.size(), true);
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= catalog.size())
      throw InvalidInput("target index " + std::to_string(t) + " out of range");
    out.known[static_cast<std::size_t>(t)] = false;
  }
  return out;
}

}  // namespace ppf
