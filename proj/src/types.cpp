#include "spintomo/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spintomo {

double NumberDistribution::sum() const { return std::accumulate(rho.begin(), rho.end(), 0.0); }

double NumberDistribution::odd_mass() const {
  double s = 0.0;
  for (std::size_t m = 1; m < rho.size(); m += 2) s += rho[m];
  return s;
}

void NumberDistribution::validate(double tol) const {
  if (rho.empty()) throw std::invalid_argument("number distribution is empty");
  for (double r : rho)
    if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("number distribution has a negative or non-finite entry");
  if (std::abs(sum() - 1.0) > tol) throw std::invalid_argument("number distribution does not sum to one");
}

NumberDistribution NumberDistribution::point_mass(int m, int K) {
  if (m < 0 || m > K) throw cutoff_error("point mass index exceeds cutoff");
  std::vector<double> r(static_cast<std::size_t>(K) + 1, 0.0);
  r[m] = 1.0;
  return NumberDistribution(std::move(r));
}

NumberDistribution NumberDistribution::uniform(int K) {
  if (K < 0) throw std::invalid_argument("negative cutoff");
  return NumberDistribution(std::vector<double>(static_cast<std::size_t>(K) + 1, 1.0 / (K + 1)));
}

double total_variation(const NumberDistribution& a, const NumberDistribution& b) {
  const std::size_t n = std::max(a.size(), b.size());
  double s = 0.0;
  for (std::size_t m = 0; m < n; ++m) s += std::abs(a[m] - b[m]);
  return 0.5 * s;
}

}  // namespace spintomo
