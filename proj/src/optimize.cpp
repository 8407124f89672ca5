#include "spintomo/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spintomo/rng.hpp"

namespace spintomo {

namespace {

struct Simplex {
  std::vector<std::vector<double>> x;
  std::vector<double> f;
};

double diameter(const Simplex& s) {
  double d = 0.0;
  for (std::size_t i = 1; i < s.x.size(); ++i)
    for (std::size_t k = 0; k < s.x[0].size(); ++k) d = std::max(d, std::abs(s.x[i][k] - s.x[0][k]));
  return d;
}

std::vector<std::vector<double>> identity_axes(std::size_t n) {
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) a[i][i] = 1.0;
  return a;
}

// Random orthonormal basis: Gram-Schmidt on Gaussian vectors.
std::vector<std::vector<double>> random_axes(std::size_t n, CounterRng& rng) {
  std::vector<std::vector<double>> a(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (;;) {
      for (auto& v : a[i]) v = rng.normal();
      for (std::size_t j = 0; j < i; ++j) {
        double d = 0.0;
        for (std::size_t k = 0; k < n; ++k) d += a[i][k] * a[j][k];
        for (std::size_t k = 0; k < n; ++k) a[i][k] -= d * a[j][k];
      }
      double norm = 0.0;
      for (double v : a[i]) norm += v * v;
      norm = std::sqrt(norm);
      if (norm < 1e-6) continue;
      for (auto& v : a[i]) v /= norm;
      break;
    }
  }
  return a;
}

}  // namespace

SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                          const SimplexOptions& opts) {
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("nelder_mead needs at least one dimension");

  const double dn = static_cast<double>(n);
  const double alpha = 1.0;
  const double beta = 1.0 + 2.0 / dn;
  const double gamma = 0.75 - 0.5 / dn;
  const double delta = 1.0 - 1.0 / dn;

  SimplexResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    return f(x);
  };

  std::vector<double> best = std::move(x0);
  double best_f = eval(best);

  // Rebuilt simplices use randomly rotated axes and cycle through step sizes;
  // a fixed axis-aligned simplex stalls in narrow curved valleys.
  CounterRng rng(opts.seed);
  int stalls = 0;
  for (int rebuild = 0; rebuild <= opts.max_rebuilds; ++rebuild) {
    Simplex s;
    s.x.assign(n + 1, best);
    s.f.assign(n + 1, best_f);
    constexpr double kStepCycle[] = {1.0, 0.1, 0.01};
    const double step = opts.initial_step * kStepCycle[rebuild % 3];
    const auto axes = rebuild == 0 ? identity_axes(n) : random_axes(n, rng);
    double scale = 0.0;
    for (double v : best) scale = std::max(scale, std::abs(v));
    scale = std::max(scale, 0.05);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) s.x[i + 1][k] += step * scale * axes[i][k];
      s.f[i + 1] = eval(s.x[i + 1]);
    }

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    while (res.evaluations < opts.max_evaluations) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.f[a] < s.f[b]; });
      const std::size_t lo = order.front();
      const std::size_t hi = order.back();
      const std::size_t second = order[n - 1];

      if (std::abs(s.f[hi] - s.f[lo]) <= opts.f_tolerance * (1.0 + std::abs(s.f[lo])) ||
          diameter(s) <= opts.x_tolerance)
        break;

      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t i = 0; i <= n; ++i)
        if (i != hi)
          for (std::size_t k = 0; k < n; ++k) centroid[k] += s.x[i][k] / dn;

      for (std::size_t k = 0; k < n; ++k) xr[k] = centroid[k] + alpha * (centroid[k] - s.x[hi][k]);
      const double fr = eval(xr);
      if (fr < s.f[lo]) {
        for (std::size_t k = 0; k < n; ++k) xe[k] = centroid[k] + beta * (xr[k] - centroid[k]);
        const double fe = eval(xe);
        if (fe < fr) {
          s.x[hi] = xe;
          s.f[hi] = fe;
        } else {
          s.x[hi] = xr;
          s.f[hi] = fr;
        }
        continue;
      }
      if (fr < s.f[second]) {
        s.x[hi] = xr;
        s.f[hi] = fr;
        continue;
      }
      const bool outside = fr < s.f[hi];
      for (std::size_t k = 0; k < n; ++k)
        xc[k] = outside ? centroid[k] + gamma * (xr[k] - centroid[k]) : centroid[k] - gamma * (centroid[k] - s.x[hi][k]);
      const double fc = eval(xc);
      if (fc < (outside ? fr : s.f[hi])) {
        s.x[hi] = xc;
        s.f[hi] = fc;
        continue;
      }
      // Shrink toward the best vertex.
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == lo) continue;
        for (std::size_t k = 0; k < n; ++k) s.x[i][k] = s.x[lo][k] + delta * (s.x[i][k] - s.x[lo][k]);
        s.f[i] = eval(s.x[i]);
      }
    }

    const auto lo = static_cast<std::size_t>(std::min_element(s.f.begin(), s.f.end()) - s.f.begin());
    const double gain = best_f - s.f[lo];
    if (s.f[lo] <= best_f) {
      best = s.x[lo];
      best_f = s.f[lo];
    }
    res.rebuilds = rebuild;
    if (res.evaluations >= opts.max_evaluations) break;
    stalls = gain <= opts.f_tolerance * (1.0 + std::abs(best_f)) ? stalls + 1 : 0;
    if (rebuild > 0 && stalls >= opts.stall_rebuilds) {
      res.converged = true;
      break;
    }
  }

  res.x = std::move(best);
  res.value = best_f;
  return res;
}

}  // namespace spintomo
