#pragma once

#include <functional>

#include "metaload/autodiff/param_set.hpp"

namespace metaload::ad {

/// Central-difference gradient (f(p + h e_i) - f(p - h e_i)) / 2h for every
/// coordinate of `at`. Used as the reference when checking grad().
ParamSet finite_diff_gradient(const std::function<double(const ParamSet&)>& f, const ParamSet& at, double h = 1e-5);

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace metaload::ad
