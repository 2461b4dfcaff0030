#include "poslab/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace poslab {

Vector central_difference(const std::function<double(std::span<const double>)>& f, std::span<const double> theta,
                          double h) {
  Vector x(theta.begin(), theta.end());
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double max_rel_error(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) throw Error(Errc::DimensionMismatch, "max_rel_error: length mismatch");
  double scale_ref = 0.0;
  for (double x : numeric) scale_ref = std::max(scale_ref, std::abs(x));
  const double floor = 1e-3 * scale_ref + 1e-12;
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

}  // namespace poslab
