#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spintomo/kernels.hpp"
#include "spintomo/rng.hpp"
#include "spintomo/spinstate.hpp"
#include "spintomo/types.hpp"

namespace spintomo {

enum class PhaseMode { random_uniform, stratified_grid };

struct MeasurementConfig {
  double eta = 0.5;
  long long shots = 20000;
  BinGeometry geometry{};
  std::uint64_t seed = 1;
  PhaseMode phase_mode = PhaseMode::random_uniform;

  void validate() const;
};

/// Probe/ensemble parameters of the dispersive coupling.
struct PhysicalParams {
  double g = 0.0;    ///< field-atom coupling
  double tau = 0.0;  ///< interaction time
  double n = 0.0;    ///< probe photon number
  double N = 0.0;    ///< atom number

  void validate() const;
  /// g tau n sqrt(N/2): amplitude multiplying the spin quadrature.
  double signal_amplitude() const;
  /// sqrt(2n): amplitude multiplying the probe vacuum quadrature.
  double noise_amplitude() const;
};

struct QuadratureHistogram {
  BinGeometry geometry{};
  std::vector<long long> counts;
  long long underflow = 0;
  long long overflow = 0;

  explicit QuadratureHistogram(BinGeometry g = {});

  long long in_range() const;
  long long total() const { return in_range() + underflow + overflow; }
  std::vector<double> edges() const;
  void add(double Q);
  void merge(const QuadratureHistogram& other);
  bool operator==(const QuadratureHistogram&) const = default;
};

double eta_from_physical(const PhysicalParams& p);

/// One balanced-polarimeter outcome Q = sqrt(eta) q_s + sqrt(1-eta) q_v.
double simulate_shot(const QuadratureSampler& sampler, double eta, double theta, CounterRng& rng);
double simulate_shot(const SpinState& state, double eta, double theta, CounterRng& rng);

/// R shots with a fresh angle each; shot i draws only from CounterRng(seed, i),
/// so the serial and parallel paths produce identical histograms.
QuadratureHistogram simulate_histogram(const SpinState& state, const MeasurementConfig& cfg,
                                       Exec exec = Exec::parallel);

/// Density of Q at fixed angle: the signal density convolved with the probe
/// vacuum noise, by adaptive quadrature. eta == 1 returns quad_density.
double smeared_density(const SpinState& state, double theta, double eta, double Q);

/// Relative error of the linearized Stokes rotation for J_z eigenvalue m.
double linearization_error(const PhysicalParams& p, double m);

/// CSV with header `bin_center,count`.
void write_histogram_csv(std::ostream& os, const QuadratureHistogram& h);
/// JSON sidecar text for a histogram produced from `state` under `cfg`.
std::string histogram_sidecar_json(const QuadratureHistogram& h, const SpinState& state, const MeasurementConfig& cfg);

}  // namespace spintomo
