#include "ppf/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ppf/error.hpp"
#include "ppf/neighborhood.hpp"
#include "ppf/solver.hpp"
#include "random_fill.hpp"

namespace ppf {

namespace {

double max_error(const Matrix& analytic, const Matrix& numeric, const Matrix* support) {
  const double floor = 1e-3 * analytic.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i)
    for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
      if (support && (*support)(i, j) == 0.0) continue;
      const double a = analytic(i, j), f = numeric(i, j);
      const double scale = std::max({std::abs(a), std::abs(f), floor});
      if (scale > 0.0) worst = std::max(worst, std::abs(a - f) / scale);
    }
  return worst;
}

Matrix central_difference(ModelState& st, Matrix& x, const Matrix& h, const Guidance& g,
                          const Matrix* support) {
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (support && (*support)(i, j) == 0.0) continue;
      const double orig = x(i, j);
      const double step = 1e-6 * (1.0 + std::abs(orig));
      x(i, j) = orig + step;
      const double up = loss(st, h, g);
      x(i, j) = orig - step;
      const double down = loss(st, h, g);
      x(i, j) = orig;
      out(i, j) = (up - down) / (2.0 * step);
    }
  return out;
}

}  // namespace

GradCheckResult gradient_check(const GradCheckInstance& inst, std::uint64_t seed) {
  if (inst.n < 3) throw InvalidInput("gradient check needs n >= 3");
  if (inst.days < 1 || inst.views < 0) throw InvalidInput("gradient check needs days >= 1 and views >= 0");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = inst.n;

  AreaCatalog cat;
  for (int i = 0; i < n; ++i) {
    cat.ids.push_back("G" + std::to_string(i + 1));
    cat.coords.push_back({-33.9 + 0.2 * unif(rng), 151.0 + 0.2 * unif(rng)});
    cat.known.push_back(unif(rng) > 0.3);
  }
  // Keep at least two known areas so k = 1 is always valid.
  for (int i = 0; cat.known_count() < 2; ++i) cat.known[static_cast<std::size_t>(i)] = true;

  ViewSet views;
  for (int v = 0; v < inst.views; ++v) {
    const int m = 1 + static_cast<int>(unif(rng) * 4.0);
    views.views.push_back({"v" + std::to_string(v + 1),
                           detail::random_matrix(n, m, [&] { return normal(rng); })});
  }
  const int k = std::clamp(inst.k, 1, static_cast<int>(cat.known_count()) - 1);
  const SimilarityModel sim = build_similarity(cat, views);
  const NeighborModel nbr = build_indicator(sim, cat, k);

  ModelState st;
  st.c = detail::random_matrix(n, n, [&] { return 0.5 * normal(rng); });
  st.w = detail::random_matrix(n, n, [&] { return normal(rng); });
  for (int d = 0; d < inst.days; ++d)
    st.flows.push_back(detail::random_matrix(n, n, [&] { return 5.0 * unif(rng); }));
  const Guidance g = Guidance::make(views, nbr.h, inst.lambda);

  const Matrix gc = grad_c(st, nbr.h, g);
  const Matrix gw = grad_w(st, nbr.h);
  const Matrix nc = central_difference(st, st.c, nbr.h, g, nullptr);
  const Matrix nw = central_difference(st, st.w, nbr.h, g, &nbr.h);

  GradCheckResult r;
  r.max_rel_error_c = max_error(gc, nc, nullptr);
  r.max_rel_error_w = max_error(gw, nw, &nbr.h);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (nbr.h(i, j) == 0.0) r.max_abs_off_support_w = std::max(r.max_abs_off_support_w, std::abs(gw(i, j)));
  return r;
}

}  // namespace ppf
