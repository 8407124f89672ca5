#pragma once

#include <span>
#include <vector>

#include "spintomo/types.hpp"

namespace spintomo {

inline constexpr int kMaxHermiteOrder = 512;
inline constexpr int kMaxFockOrder = 256;

/// Physicists' Hermite polynomial H_m(q) by the three-term recurrence.
/// Throws std::out_of_range for m > kMaxHermiteOrder.
double hermite(int m, double q);

/// H_m(q)^2 exp(-q^2) / (sqrt(pi) 2^m m!), the Fock-m quadrature density.
/// Evaluated through the normalized Hermite functions so it stays finite for
/// every m <= kMaxFockOrder.
double fock_quad_density(int m, double q);

/// Fills out[m] = fock_quad_density(m, q) for m = 0..out.size()-1.
void fock_quad_densities(double q, std::span<double> out);

/// C(M, m) eta^m (1-eta)^(M-m) for m = 0..M, computed in log space.
std::vector<double> binomial_loss_weights(int M, double eta);

/// Loss-smeared, phase-averaged kernel of the M-excitation Dicke state.
double kernel_A(int M, double eta, double Q);

/// kernel_A for every M = 0..out.size()-1 at one point, sharing the Fock
/// densities across M.
void kernel_A_all(double eta, double Q, std::span<double> out);

/// Uniform bin grid over [-q_range, q_range].
struct BinGeometry {
  int bin_count = 100;
  double q_range = 6.0;

  double width() const { return 2.0 * q_range / bin_count; }
  double lower(int bin) const { return -q_range + bin * width(); }
  double center(int bin) const { return -q_range + (bin + 0.5) * width(); }
  void validate() const;
  bool operator==(const BinGeometry&) const = default;
};

enum class BinRule {
  gauss_legendre,  ///< 16-node Gauss-Legendre per bin
  midpoint,        ///< A(Q_center) * dQ
};

/// Bin-integrated kernels a[bin][M] for M = 0..K.
class KernelMatrix {
 public:
  KernelMatrix(int K, double eta, BinGeometry geometry, std::vector<double> entries,
               std::vector<double> tail_mass);

  int cutoff() const { return K_; }
  double eta() const { return eta_; }
  const BinGeometry& geometry() const { return geometry_; }
  int bins() const { return geometry_.bin_count; }
  int columns() const { return K_ + 1; }

  double operator()(int bin, int M) const { return entries_[static_cast<std::size_t>(bin) * columns() + M]; }
  std::span<const double> row(int bin) const {
    return {entries_.data() + static_cast<std::size_t>(bin) * columns(), static_cast<std::size_t>(columns())};
  }

  /// Kernel mass outside [-q_range, q_range] for column M.
  double tail_mass(int M) const { return tail_mass_[M]; }
  /// Sum over bins of column M.
  double column_sum(int M) const;

 private:
  int K_;
  double eta_;
  BinGeometry geometry_;
  std::vector<double> entries_;  // row-major, bins x (K+1)
  std::vector<double> tail_mass_;
};

KernelMatrix build_kernel_matrix(int K, double eta, const BinGeometry& geometry,
                                 BinRule rule = BinRule::gauss_legendre, Exec exec = Exec::parallel);

/// Sum_M rho_MM kernel_A(M, eta, Q).
double phase_averaged_density(const NumberDistribution& rho, double eta, double Q);

}  // namespace spintomo
