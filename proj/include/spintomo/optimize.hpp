#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace spintomo {

struct SimplexOptions {
  double initial_step = 0.1;
  /// Stop once the spread of objective values across vertices is below this.
  double f_tolerance = 1e-13;
  /// ... and the simplex diameter is below this.
  double x_tolerance = 1e-9;
  int max_evaluations = 400000;
  /// Rebuild the simplex around the best vertex at most this many times.
  int max_rebuilds = 60;
  /// Stop after this many consecutive rebuilds without improvement.
  int stall_rebuilds = 3;
  /// Seeds the orientation of rebuilt simplices.
  std::uint64_t seed = 0;
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  int rebuilds = 0;
  bool converged = false;
};

/// Nelder-Mead minimization with adaptive coefficients (Gao & Han) and
/// restart-on-collapse.
SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                          const SimplexOptions& opts = {});

}  // namespace spintomo
