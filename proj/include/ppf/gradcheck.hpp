#pragma once

#include <cstdint>

#include "ppf/core.hpp"

namespace ppf {

struct GradCheckInstance {
  int n = 5;
  int days = 2;
  int views = 1;
  double lambda = 0.1;
  int k = 2;  // clamped to the number of known areas minus one
};

struct GradCheckResult {
  double max_rel_error_c = 0.0;
  double max_rel_error_w = 0.0;  // over the support of H only
  double max_abs_off_support_w = 0.0;  // should be exactly zero

  double max_rel_error() const {
    return max_rel_error_c > max_rel_error_w ? max_rel_error_c : max_rel_error_w;
  }
};

// Compares grad_c and grad_w with central differences of loss on a random
// instance drawn from `seed`. Each entry is perturbed by 1e-6 (1 + |x|).
// The error of an entry is |analytic - numeric| divided by the largest of
// |analytic|, |numeric| and 1e-3 times the largest analytic entry of that
// gradient.
GradCheckResult gradient_check(const GradCheckInstance& inst, std::uint64_t seed);

}  // namespace ppf
