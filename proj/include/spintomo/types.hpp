#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace spintomo {

/// Diagonal Dicke-basis populations rho_MM for M = 0..K.
struct NumberDistribution {
  std::vector<double> rho;

  NumberDistribution() = default;
  explicit NumberDistribution(std::vector<double> weights) : rho(std::move(weights)) {}

  int cutoff() const { return static_cast<int>(rho.size()) - 1; }
  std::size_t size() const { return rho.size(); }
  double operator[](std::size_t m) const { return m < rho.size() ? rho[m] : 0.0; }

  double sum() const;
  double odd_mass() const;

  /// Throws std::invalid_argument unless entries are >= 0 and sum to 1 within tol.
  void validate(double tol = 1e-12) const;

  static NumberDistribution point_mass(int m, int K);
  static NumberDistribution uniform(int K);
};

/// Sum of |a_M - b_M| / 2, padding the shorter distribution with zeros.
double total_variation(const NumberDistribution& a, const NumberDistribution& b);

/// Raised when a requested cutoff cannot hold the state (e.g. Dicke M > K).
class cutoff_error : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

enum class Exec { serial, parallel };

}  // namespace spintomo
