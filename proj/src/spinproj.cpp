#include "spintomo/spinproj.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spintomo/kernels.hpp"

namespace spintomo {

namespace {

void check_args(int N, int M) {
  if (N < 1 || N > kMaxSpinProjectionAtoms) throw std::out_of_range("atom number out of range");
  if (M < 0 || M > N) throw std::out_of_range("excitation number out of range");
}

}  // namespace

std::vector<double> wigner_d_column(int N, int M) {
  check_args(N, M);
  // The column is the J_x eigenvector with eigenvalue k = M - N/2, so its
  // entries obey a three-term recurrence in m. Run from m = -N/2 it is stable
  // up to the middle (it never enters the decaying tail on the far side); the
  // other half comes from the reflection m -> -m, a factor (-1)^(N-M).
  const double lambda = M - 0.5 * N;
  const auto c = [N](int i) { return std::sqrt(static_cast<double>(i + 1) * (N - i)); };
  const int half = N / 2;
  const double sign = (N - M) % 2 == 0 ? 1.0 : -1.0;

  // First entry |d| = sqrt(C(N, M)) 2^{-N/2}, positive; stored values are
  // rescaled as they grow and carried with a separate log factor.
  double log_scale =
      0.5 * (std::lgamma(N + 1.0) - std::lgamma(M + 1.0) - std::lgamma(N - M + 1.0)) - 0.5 * N * std::numbers::ln2;
  constexpr double kRescale = 1e150;
  std::vector<double> v(static_cast<std::size_t>(N) + 1, 0.0);
  v[0] = 1.0;
  for (int i = 0; i < half; ++i) {
    const double prev = i > 0 ? c(i - 1) * v[i - 1] : 0.0;
    v[i + 1] = (2.0 * lambda * v[i] - prev) / c(i);
    if (std::abs(v[i + 1]) > kRescale) {
      for (int k = 0; k <= i + 1; ++k) v[k] /= kRescale;
      log_scale += std::log(kRescale);
    }
  }
  const double factor = std::exp(log_scale);
  for (int i = 0; i <= half; ++i) v[i] *= factor;
  for (int i = 0; i < N - half; ++i) v[N - i] = sign * v[i];
  if (N % 2 == 0 && sign < 0) v[half] = 0.0;
  return v;
}

double SpinProjection::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) s += m_at(static_cast<int>(i)) * probs[i];
  return s;
}

double SpinProjection::variance() const {
  const double mu = mean();
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double d = m_at(static_cast<int>(i)) - mu;
    s += d * d * probs[i];
  }
  return s;
}

SpinProjection pz_distribution(int N, int M) {
  SpinProjection p;
  p.N = N;
  p.M = M;
  p.probs = wigner_d_column(N, M);
  for (auto& x : p.probs) x *= x;
  return p;
}

double gaussian_limit(int N, int M, double m) {
  if (N < 2) throw std::invalid_argument("gaussian limit needs N >= 2");
  if (M < 0 || M > 1) throw std::invalid_argument("gaussian limit is available for M = 0 and M = 1 only");
  const double h = 0.5 * N;
  const double g = std::exp(-m * m / h) / std::sqrt(std::numbers::pi * h);
  return M == 0 ? g : 2.0 * m * m / h * g;
}

double folded_compare(int N, int M) {
  if (N < 10 || N % 2 != 0) throw std::invalid_argument("folded comparison needs even N >= 10");
  const auto p = pz_distribution(N, M);
  const double scale = std::sqrt(0.5 * N);
  double worst = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double m = p.m_at(i);
    worst = std::max(worst, std::abs(scale * p.probs[i] - fock_quad_density(M, m / scale)));
  }
  return worst;
}

}  // namespace spintomo
