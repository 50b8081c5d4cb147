#pragma once

#include <map>
#include <utility>
#include <vector>

#include "ppf/core.hpp"

namespace ppf {

// Where each target area's flows were moved to when simulating the network
// without stations in those areas.
struct ReassignmentPlan {
  std::vector<int> targets;
  std::vector<int> receivers;                  // receivers[i] serves targets[i]
  std::map<int, std::vector<int>> merged_into; // receiver -> targets merged into it

  int receiver_of(int target) const;
};

// Closest known area (geographic distance, lower index on ties) for every
// target in `catalog`.
ReassignmentPlan plan_reassignment(const AreaCatalog& catalog, const Matrix& geo);

// Applies `plan` to every day: each target row is added onto its receiver's
// row and zeroed, then the same is done for columns. Total mass is preserved.
FlowTensor apply_reassignment(const FlowTensor& flows, const ReassignmentPlan& plan);

std::pair<FlowTensor, ReassignmentPlan> reassign(const FlowTensor& flows,
                                                 const AreaCatalog& catalog, const Matrix& geo);

}  // namespace ppf
