#pragma once

#include <functional>

#include "poslab/linalg.hpp"

namespace poslab {

/// Central differences of f at theta with step h.
Vector central_difference(const std::function<double(std::span<const double>)>& f, std::span<const double> theta,
                          double h = 1e-6);

/// max_i |a_i − n_i| / max(|a_i|, |n_i|, floor) with floor = 1e-3·max|n| + 1e-12,
/// so entries that are zero up to rounding do not dominate.
double max_rel_error(std::span<const double> analytic, std::span<const double> numeric);

}  // namespace poslab
