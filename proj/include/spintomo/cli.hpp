#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spintomo/mle.hpp"
#include "spintomo/quadrature_sim.hpp"
#include "spintomo/spinstate.hpp"

namespace spintomo::cli {

/// Raised for any unusable configuration; the front end maps it to exit 2.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EmitFlags {
  bool histogram_csv = true;
  bool result_json = true;
  bool density_curves_csv = true;
};

struct RunConfig {
  std::string state = "css";
  double xi = 1.0;
  int m = 1;
  std::string mixture_file;
  /// Either eta or all four physical parameters.
  std::optional<double> eta;
  std::optional<double> g, tau, n, atoms;
  long long shots = 20000;
  int bins = 100;
  double range = 6.0;
  int kmax = kDefaultKMax;
  std::uint64_t seed = 1;
  std::string phase_mode = "random";
  std::string out = "out";
  EmitFlags emit;
};

/// Overlays the members present in a JSON config document onto `base`.
/// Unknown keys and mistyped values raise config_error.
RunConfig apply_config_json(const std::string& text, RunConfig base);

/// Mixture weights from a text file of numbers separated by whitespace or
/// commas; `#` starts a comment.
std::vector<double> read_mixture_file(const std::filesystem::path& path);

SpinState make_state(const RunConfig& cfg);
double resolve_eta(const RunConfig& cfg);
MeasurementConfig make_measurement(const RunConfig& cfg);

struct PipelineOutput {
  QuadratureHistogram histogram;
  ReconstructionResult result;
};

/// Simulate, reconstruct and write the enabled artifacts into cfg.out.
PipelineOutput run_pipeline(const RunConfig& cfg, std::ostream& log);

/// Density-curve rows (q, fitted density, true density) at `points` uniform
/// positions over [-range, range].
std::string density_curves_csv(const SpinState& truth, const NumberDistribution& fit, double eta, double range,
                               int points = 400);

/// Oracle suites; each prints a table and returns true when every check passes.
bool oracle_dmatrix(std::ostream& os);
bool oracle_folded(std::ostream& os);
bool oracle_kernels(std::ostream& os);

/// Full command line. Returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spintomo::cli
