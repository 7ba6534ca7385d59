#include "metaload/autodiff/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "metaload/error.hpp"

namespace metaload::ad {

ParamSet finite_diff_gradient(const std::function<double(const ParamSet&)>& f, const ParamSet& at, double h) {
  if (!(h > 0.0)) throw DomainError("finite_diff_gradient: step must be positive");
  std::vector<double> x = at.flatten();
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(at.unflatten(x));
    x[i] = orig - h;
    const double down = f(at.unflatten(x));
    x[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return at.unflatten(g);
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("relative_error: size mismatch");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

}  // namespace metaload::ad
