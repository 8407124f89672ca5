#pragma once

#include <string>
#include <vector>

#include "spintomo/rng.hpp"
#include "spintomo/types.hpp"

namespace spintomo {

/// State of the spin-up (signal) mode.
class SpinState {
 public:
  enum class Kind { css, dicke, squeezed_vacuum, number_mixture };

  static SpinState css();
  static SpinState dicke(int M);
  /// Squeezed vacuum S(xi)|0>, squeezing axis fixed at angle 0.
  static SpinState squeezed_vacuum(double xi);
  /// Incoherent mixture of Dicke states with populations `weights`.
  static SpinState number_mixture(std::vector<double> weights);

  Kind kind() const { return kind_; }
  int excitation() const { return M_; }
  double xi() const { return xi_; }
  const std::vector<double>& weights() const { return weights_; }

  /// Short tag used on the command line: css, dicke, sss, mixture.
  std::string tag() const;

 private:
  SpinState() = default;
  Kind kind_ = Kind::css;
  int M_ = 0;
  double xi_ = 0.0;
  std::vector<double> weights_;
};

/// Density of the rotated quadrature sin(theta) q + cos(theta) p. Vacuum is
/// exp(-q^2)/sqrt(pi).
double quad_density(const SpinState& state, double theta, double q);

/// Exact populations truncated at K, not renormalized; tail_mass holds what
/// was cut off.
struct TruncatedDistribution {
  NumberDistribution rho;
  double tail_mass = 0.0;
};

/// Throws cutoff_error if a Dicke or mixture state does not fit in K.
TruncatedDistribution number_distribution(const SpinState& state, int K);

/// Exact sampler for quad_density. Dicke components draw from a 4096-point
/// tabulated inverse CDF; Gaussian states sample directly.
class QuadratureSampler {
 public:
  static constexpr int kGridPoints = 4096;
  static constexpr int kMaxDickeExcitation = 64;

  explicit QuadratureSampler(const SpinState& state);

  double sample(double theta, CounterRng& rng) const;
  const SpinState& state() const { return state_; }

 private:
  struct InverseCdf {
    double lo = 0.0;
    double step = 0.0;
    std::vector<double> cdf;  // cdf[i] at lo + i * step, cdf.back() == 1
    double draw(double u) const;
  };
  static InverseCdf tabulate(int M);

  SpinState state_;
  std::vector<double> mixture_cdf_;      // cumulative weights over M
  std::vector<InverseCdf> fock_tables_;  // indexed by M
};

/// Convenience wrapper that builds a sampler for one draw.
double sample_quadrature(const SpinState& state, double theta, CounterRng& rng);

}  // namespace spintomo
