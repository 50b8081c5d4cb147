#pragma once

#include "ppf/core.hpp"

namespace ppf::detail {

// Draws entries in row-major order so seeded output does not depend on how
// Eigen evaluates expressions.
template <class Draw>
Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Draw&& draw) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = draw();
  return m;
}

}  // namespace ppf::detail
