#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ppf/core.hpp"
#include "ppf/solver.hpp"

namespace ppf {

// Everything needed to predict without refitting. Layout on disk is
// described in docs/checkpoint-format.md.
struct Checkpoint {
  struct Side {
    Matrix c;
    Matrix w;
    Matrix flows_last;  // working F_D after the fit, in this side's orientation
    FitReport report;
  };

  Period period = Period::MorningRush;
  SolverConfig config;
  std::vector<std::string> ids;
  std::vector<bool> known;
  Matrix h;
  Side departures;
  Side arrivals;  // fitted on transposed flows
};

Checkpoint make_checkpoint(const AreaCatalog& catalog, Period period, const SolverConfig& cfg,
                           const NeighborModel& nbr, const BidirectionalFit& fit);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// Throws IoError for unreadable, truncated or malformed archives.
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Day-D matrix with observed entries from `observed_last` and every other
// entry predicted from both sides of the checkpoint. The catalog must list
// the same ids and known flags as the checkpoint.
Matrix complete_from_checkpoint(const Checkpoint& ckpt, const AreaCatalog& catalog,
                                const Matrix& observed_last);

}  // namespace ppf
