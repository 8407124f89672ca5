#include "spintomo/spinstate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "spintomo/kernels.hpp"

namespace spintomo {

namespace {

double squeezed_variance(double xi, double theta) {
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  return 0.5 * (std::exp(-2.0 * xi) * s * s + std::exp(2.0 * xi) * c * c);
}

double gaussian(double q, double variance) {
  return std::exp(-0.5 * q * q / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

}  // namespace

SpinState SpinState::css() { return SpinState{}; }

SpinState SpinState::dicke(int M) {
  if (M < 0 || M > kMaxFockOrder) throw std::invalid_argument("Dicke excitation out of range");
  SpinState s;
  s.kind_ = Kind::dicke;
  s.M_ = M;
  return s;
}

SpinState SpinState::squeezed_vacuum(double xi) {
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw std::invalid_argument("squeeze parameter must be finite and >= 0");
  SpinState s;
  s.kind_ = Kind::squeezed_vacuum;
  s.xi_ = xi;
  return s;
}

SpinState SpinState::number_mixture(std::vector<double> weights) {
  if (weights.size() > static_cast<std::size_t>(kMaxFockOrder) + 1)
    throw std::invalid_argument("mixture has more components than the Fock order limit");
  NumberDistribution(weights).validate(1e-12);
  SpinState s;
  s.kind_ = Kind::number_mixture;
  s.weights_ = std::move(weights);
  return s;
}

std::string SpinState::tag() const {
  switch (kind_) {
    case Kind::css: return "css";
    case Kind::dicke: return "dicke";
    case Kind::squeezed_vacuum: return "sss";
    case Kind::number_mixture: return "mixture";
  }
  return "unknown";
}

double quad_density(const SpinState& state, double theta, double q) {
  if (!std::isfinite(q) || !std::isfinite(theta)) throw std::invalid_argument("quadrature arguments must be finite");
  switch (state.kind()) {
    case SpinState::Kind::css:
      return std::exp(-q * q) / std::sqrt(std::numbers::pi);
    case SpinState::Kind::dicke:
      return fock_quad_density(state.excitation(), q);
    case SpinState::Kind::squeezed_vacuum:
      return gaussian(q, squeezed_variance(state.xi(), theta));
    case SpinState::Kind::number_mixture: {
      const auto& w = state.weights();
      std::vector<double> fock(w.size());
      fock_quad_densities(q, fock);
      double s = 0.0;
      for (std::size_t m = 0; m < w.size(); ++m) s += w[m] * fock[m];
      return s;
    }
  }
  return 0.0;
}

TruncatedDistribution number_distribution(const SpinState& state, int K) {
  if (K < 0) throw std::invalid_argument("cutoff must be >= 0");
  TruncatedDistribution out;
  out.rho.rho.assign(static_cast<std::size_t>(K) + 1, 0.0);
  auto& r = out.rho.rho;
  switch (state.kind()) {
    case SpinState::Kind::css:
      r[0] = 1.0;
      break;
    case SpinState::Kind::dicke:
      if (state.excitation() > K) throw cutoff_error("Dicke excitation exceeds cutoff");
      r[state.excitation()] = 1.0;
      break;
    case SpinState::Kind::squeezed_vacuum: {
      const double xi = state.xi();
      if (xi == 0.0) {
        r[0] = 1.0;
        break;
      }
      // rho_{2m} = (2m)! / (4^m (m!)^2) tanh^{2m}(xi) / cosh(xi)
      const double lt = std::log(std::tanh(xi));
      const double lc = std::log(std::cosh(xi));
      for (int n = 0; n <= K; n += 2) {
        const int m = n / 2;
        r[n] = std::exp(std::lgamma(n + 1.0) - 2.0 * std::lgamma(m + 1.0) - n * std::numbers::ln2 + n * lt - lc);
      }
      break;
    }
    case SpinState::Kind::number_mixture: {
      const auto& w = state.weights();
      for (std::size_t m = K + 1; m < w.size(); ++m)
        if (w[m] > 0.0) throw cutoff_error("mixture has weight above the cutoff");
      std::copy_n(w.begin(), std::min(w.size(), r.size()), r.begin());
      break;
    }
  }
  out.tail_mass = std::max(0.0, 1.0 - out.rho.sum());
  return out;
}

double QuadratureSampler::InverseCdf::draw(double u) const {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  std::size_t i = static_cast<std::size_t>(it - cdf.begin());
  i = std::clamp<std::size_t>(i, 1, cdf.size() - 1) - 1;
  const double span = cdf[i + 1] - cdf[i];
  const double t = span > 0.0 ? (u - cdf[i]) / span : 0.5;
  return lo + (static_cast<double>(i) + t) * step;
}

QuadratureSampler::InverseCdf QuadratureSampler::tabulate(int M) {
  using rule = boost::math::quadrature::gauss<double, 16>;
  const double half_width = 2.0 * std::sqrt(2.0 * M + 1.0) + 4.0;
  InverseCdf t;
  t.lo = -half_width;
  t.step = 2.0 * half_width / (kGridPoints - 1);
  t.cdf.assign(kGridPoints, 0.0);
  for (int i = 1; i < kGridPoints; ++i) {
    const double a = t.lo + (i - 1) * t.step;
    t.cdf[i] = t.cdf[i - 1] + rule::integrate([M](double q) { return fock_quad_density(M, q); }, a, a + t.step);
  }
  const double total = t.cdf.back();
  for (auto& c : t.cdf) c /= total;
  t.cdf.back() = 1.0;
  return t;
}

QuadratureSampler::QuadratureSampler(const SpinState& state) : state_(state) {
  auto need_table = [](int M) {
    if (M > kMaxDickeExcitation) throw std::out_of_range("Dicke sampling supports M <= 64");
  };
  switch (state.kind()) {
    case SpinState::Kind::dicke:
      need_table(state.excitation());
      fock_tables_.resize(static_cast<std::size_t>(state.excitation()) + 1);
      fock_tables_[state.excitation()] = tabulate(state.excitation());
      break;
    case SpinState::Kind::number_mixture: {
      const auto& w = state.weights();
      fock_tables_.resize(w.size());
      double acc = 0.0;
      for (std::size_t m = 0; m < w.size(); ++m) {
        acc += w[m];
        mixture_cdf_.push_back(acc);
        if (w[m] > 0.0) {
          need_table(static_cast<int>(m));
          fock_tables_[m] = tabulate(static_cast<int>(m));
        }
      }
      break;
    }
    default:
      break;
  }
}

double QuadratureSampler::sample(double theta, CounterRng& rng) const {
  switch (state_.kind()) {
    case SpinState::Kind::css:
      return rng.normal() * std::sqrt(0.5);
    case SpinState::Kind::squeezed_vacuum:
      return rng.normal() * std::sqrt(squeezed_variance(state_.xi(), theta));
    case SpinState::Kind::dicke:
      return fock_tables_[state_.excitation()].draw(rng.uniform());
    case SpinState::Kind::number_mixture: {
      const double u = rng.uniform() * mixture_cdf_.back();
      auto it = std::upper_bound(mixture_cdf_.begin(), mixture_cdf_.end(), u);
      auto m = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - mixture_cdf_.begin(),
                                                                  static_cast<std::ptrdiff_t>(mixture_cdf_.size()) - 1));
      // Skip zero-weight components that upper_bound can land on at ties.
      while (fock_tables_[m].cdf.empty()) --m;
      return fock_tables_[m].draw(rng.uniform());
    }
  }
  return 0.0;
}

double sample_quadrature(const SpinState& state, double theta, CounterRng& rng) {
  return QuadratureSampler(state).sample(theta, rng);
}

}  // namespace spintomo
