#pragma once

#include <vector>

namespace spintomo {

inline constexpr int kMaxSpinProjectionAtoms = 4096;

/// d^{N/2}_{m, -N/2+M}(pi/2) for m = -N/2..N/2; entry i holds m = i - N/2.
std::vector<double> wigner_d_column(int N, int M);

/// Distribution of J_z for the Dicke state with M excitations out of N atoms.
struct SpinProjection {
  int N = 0;
  int M = 0;
  std::vector<double> probs;  ///< probs[i] = P_z(i - N/2)

  double m_at(int i) const { return i - 0.5 * N; }
  double mean() const;
  double variance() const;
};

SpinProjection pz_distribution(int N, int M);

/// Large-N Gaussian form of P_z(m) for M = 0 and M = 1.
double gaussian_limit(int N, int M, double m);

/// max_m | sqrt(N/2) P_z(m) - fock_quad_density(M, m / sqrt(N/2)) |.
double folded_compare(int N, int M);

}  // namespace spintomo
