#include "spintomo/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

namespace spintomo {

namespace {

struct Node {
  double x;
  double w;
};

// 16-point Gauss-Legendre rule on [-1, 1].
const std::array<Node, 16>& gl16() {
  static const std::array<Node, 16> nodes = [] {
    using rule = boost::math::quadrature::gauss<double, 16>;
    const auto& xs = rule::abscissa();
    const auto& ws = rule::weights();
    std::array<Node, 16> out{};
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out[2 * i] = {-xs[i], ws[i]};
      out[2 * i + 1] = {xs[i], ws[i]};
    }
    return out;
  }();
  return nodes;
}

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

void check_eta(double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in (0, 1]");
}

}  // namespace

double hermite(int m, double q) {
  if (m < 0 || m > kMaxHermiteOrder) throw std::out_of_range("hermite order out of range: " + std::to_string(m));
  if (m == 0) return 1.0;
  double prev = 1.0;
  double cur = 2.0 * q;
  for (int k = 1; k < m; ++k) {
    const double next = 2.0 * q * cur - 2.0 * k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

void fock_quad_densities(double q, std::span<double> out) {
  if (out.empty()) return;
  if (out.size() > static_cast<std::size_t>(kMaxFockOrder) + 1) throw std::out_of_range("Fock order out of range");
  // h_m(q) = H_m(q) exp(-q^2/2) / sqrt(2^m m! sqrt(pi)), squared.
  double prev = 0.0;
  double cur = std::exp(-0.5 * q * q) / std::sqrt(std::sqrt(std::numbers::pi));
  out[0] = cur * cur;
  for (std::size_t m = 0; m + 1 < out.size(); ++m) {
    const double next = std::sqrt(2.0 / (m + 1.0)) * q * cur - std::sqrt(m / (m + 1.0)) * prev;
    prev = cur;
    cur = next;
    out[m + 1] = cur * cur;
  }
}

double fock_quad_density(int m, double q) {
  if (m < 0 || m > kMaxFockOrder) throw std::out_of_range("Fock order out of range: " + std::to_string(m));
  std::array<double, kMaxFockOrder + 1> buf{};
  fock_quad_densities(q, std::span<double>(buf.data(), static_cast<std::size_t>(m) + 1));
  return buf[m];
}

std::vector<double> binomial_loss_weights(int M, double eta) {
  if (M < 0 || M > kMaxFockOrder) throw std::out_of_range("kernel order out of range: " + std::to_string(M));
  check_eta(eta);
  std::vector<double> w(static_cast<std::size_t>(M) + 1, 0.0);
  if (eta == 1.0) {
    w[M] = 1.0;
    return w;
  }
  const double le = std::log(eta);
  const double l1 = std::log1p(-eta);
  for (int m = 0; m <= M; ++m) w[m] = std::exp(log_choose(M, m) + m * le + (M - m) * l1);
  return w;
}

void kernel_A_all(double eta, double Q, std::span<double> out) {
  if (out.empty()) return;
  const int K = static_cast<int>(out.size()) - 1;
  std::array<double, kMaxFockOrder + 1> fock{};
  fock_quad_densities(Q, std::span<double>(fock.data(), out.size()));
  for (int M = 0; M <= K; ++M) {
    const auto w = binomial_loss_weights(M, eta);
    double s = 0.0;
    for (int m = 0; m <= M; ++m) s += w[m] * fock[m];
    out[M] = s;
  }
}

double kernel_A(int M, double eta, double Q) {
  if (M < 0 || M > kMaxFockOrder) throw std::out_of_range("kernel order out of range: " + std::to_string(M));
  std::vector<double> out(static_cast<std::size_t>(M) + 1);
  kernel_A_all(eta, Q, out);
  return out[M];
}

double phase_averaged_density(const NumberDistribution& rho, double eta, double Q) {
  std::vector<double> a(rho.size());
  kernel_A_all(eta, Q, a);
  double s = 0.0;
  for (std::size_t M = 0; M < a.size(); ++M) s += rho.rho[M] * a[M];
  return s;
}

void BinGeometry::validate() const {
  if (bin_count < 2) throw std::invalid_argument("bin_count must be >= 2");
  if (!(q_range > 0.0) || !std::isfinite(q_range)) throw std::invalid_argument("q_range must be positive");
}

KernelMatrix::KernelMatrix(int K, double eta, BinGeometry geometry, std::vector<double> entries,
                           std::vector<double> tail_mass)
    : K_(K), eta_(eta), geometry_(geometry), entries_(std::move(entries)), tail_mass_(std::move(tail_mass)) {
  if (entries_.size() != static_cast<std::size_t>(geometry_.bin_count) * columns() ||
      tail_mass_.size() != static_cast<std::size_t>(columns()))
    throw std::invalid_argument("kernel matrix shape mismatch");
}

double KernelMatrix::column_sum(int M) const {
  double s = 0.0;
  for (int b = 0; b < bins(); ++b) s += (*this)(b, M);
  return s;
}

namespace {

// Integrates all K+1 kernels over [a, b] with one 16-node panel.
void integrate_panel(double eta, double a, double b, std::span<double> acc, std::span<double> scratch) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (const auto& n : gl16()) {
    kernel_A_all(eta, mid + half * n.x, scratch);
    for (std::size_t M = 0; M < acc.size(); ++M) acc[M] += half * n.w * scratch[M];
  }
}

}  // namespace

KernelMatrix build_kernel_matrix(int K, double eta, const BinGeometry& geometry, BinRule rule, Exec exec) {
  if (K < 0 || K > kMaxFockOrder) throw std::out_of_range("cutoff exceeds kernel order limit: " + std::to_string(K));
  check_eta(eta);
  geometry.validate();

  const int cols = K + 1;
  const int bins = geometry.bin_count;
  std::vector<double> entries(static_cast<std::size_t>(bins) * cols, 0.0);

  auto fill_bin = [&](int b) {
    std::vector<double> scratch(cols);
    std::span<double> row(entries.data() + static_cast<std::size_t>(b) * cols, cols);
    if (rule == BinRule::midpoint) {
      kernel_A_all(eta, geometry.center(b), row);
      for (auto& v : row) v *= geometry.width();
    } else {
      integrate_panel(eta, geometry.lower(b), geometry.lower(b) + geometry.width(), row, scratch);
    }
  };

  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int b = 0; b < bins; ++b) fill_bin(b);
  } else {
    for (int b = 0; b < bins; ++b) fill_bin(b);
  }

  // Mass beyond the grid: by symmetry twice the integral over [q_range, outer].
  std::vector<double> tail(cols, 0.0);
  std::vector<double> scratch(cols);
  const double outer = std::max(geometry.q_range, 2.0 * std::sqrt(2.0 * K + 1.0)) + 14.0;
  const int panels = static_cast<int>(std::ceil((outer - geometry.q_range) / 0.25));
  const double step = (outer - geometry.q_range) / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = geometry.q_range + p * step;
    integrate_panel(eta, a, a + step, tail, scratch);
  }
  for (auto& t : tail) t *= 2.0;

  return KernelMatrix(K, eta, geometry, std::move(entries), std::move(tail));
}

}  // namespace spintomo
