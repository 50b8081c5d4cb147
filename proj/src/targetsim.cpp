#include "ppf/targetsim.hpp"

#include <algorithm>
#include <limits>

#include "ppf/error.hpp"

namespace ppf {

int ReassignmentPlan::receiver_of(int target) const {
  const auto it = std::find(targets.begin(), targets.end(), target);
  if (it == targets.end()) return -1;
  return receivers[static_cast<std::size_t>(it - targets.begin())];
}

ReassignmentPlan plan_reassignment(const AreaCatalog& catalog, const Matrix& geo) {
  const std::vector<int> known = catalog.known_indices();
  if (known.empty()) throw InvalidInput("reassignment needs at least one known area");
  if (geo.rows() != static_cast<Eigen::Index>(catalog.size()) || geo.cols() != geo.rows())
    throw InvalidInput("distance matrix does not match catalog size");

  ReassignmentPlan plan;
  plan.targets = catalog.target_indices();
  for (int t : plan.targets) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c : known) {
      if (geo(t, c) < best_d) {
        best_d = geo(t, c);
        best = c;
      }
    }
    plan.receivers.push_back(best);
    plan.merged_into[best].push_back(t);
  }
  return plan;
}

FlowTensor apply_reassignment(const FlowTensor& flows, const ReassignmentPlan& plan) {
  FlowTensor out = flows;
  for (Matrix& f : out.days) {
    for (std::size_t i = 0; i < plan.targets.size(); ++i) {
      const int t = plan.targets[i], c = plan.receivers[i];
      f.row(c) += f.row(t);
      f.row(t).setZero();
    }
    for (std::size_t i = 0; i < plan.targets.size(); ++i) {
      const int t = plan.targets[i], c = plan.receivers[i];
      f.col(c) += f.col(t);
      f.col(t).setZero();
    }
  }
  return out;
}

std::pair<FlowTensor, ReassignmentPlan> reassign(const FlowTensor& flows,
                                                 const AreaCatalog& catalog, const Matrix& geo) {
  ReassignmentPlan plan = plan_reassignment(catalog, geo);
  FlowTensor moved = apply_reassignment(flows, plan);
  return {std::move(moved), std::move(plan)};
}

}  // namespace ppf
