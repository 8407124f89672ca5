#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spintomo/kernels.hpp"
#include "spintomo/quadrature_sim.hpp"
#include "spintomo/types.hpp"

namespace spintomo {

/// Multinomial log-likelihood of the in-range counts. Bin probabilities are
/// renormalized by the in-range kernel mass, so under/overflow never enters.
struct LogLikelihood {
  double value = 0.0;
  /// Set when some occupied bin has zero model probability; value is -inf.
  bool impossible = false;
};

LogLikelihood log_likelihood(const QuadratureHistogram& hist, const NumberDistribution& rho, const KernelMatrix& km);

/// One expectation-maximization update. Zero entries stay zero.
NumberDistribution em_step(const NumberDistribution& rho, const QuadratureHistogram& hist, const KernelMatrix& km);

/// rho_M = theta_M^2 / sum theta^2.
NumberDistribution rho_from_theta(std::span<const double> theta);

double aic(double loglik, int K);

struct FitOptions {
  /// EM stops once the log-likelihood gained over the last `em_window`
  /// iterations falls below this. A per-step test quits early along the
  /// flat directions of the likelihood.
  double em_tolerance = 1e-10;
  int em_window = 100;
  int em_max_iterations = 100000;
  /// Squared-extrapolation acceleration of the EM map. Each iteration is then
  /// one extrapolation cycle (three EM updates); plain EM crawls here because
  /// the kernels are nearly collinear at eta ~ 1/2.
  bool accelerate = true;
  int simplex_restarts = 4;
  std::uint64_t simplex_seed = 0x5eed;
  bool run_simplex = true;
  /// Record logL after every EM iteration (for monotonicity checks).
  bool trace_em = false;
};

struct FitResult {
  int K = 0;
  NumberDistribution rho;
  double loglik = 0.0;

  NumberDistribution em_rho;
  double em_loglik = 0.0;
  int em_iterations = 0;
  bool em_converged = false;
  std::vector<double> em_trace;

  NumberDistribution simplex_rho;
  double simplex_loglik = 0.0;
  int simplex_evaluations = 0;
  int simplex_restarts = 0;
  bool simplex_converged = false;

  /// |logL_EM - logL_simplex| and max_M |rho_EM - rho_simplex|.
  double loglik_gap = 0.0;
  double rho_gap = 0.0;
  bool converged() const { return em_converged || simplex_converged; }
  std::string winner;  ///< "em" or "simplex"
};

/// Fit rho_00..rho_KK with EM from a uniform start and with the
/// theta-parametrized simplex search; keep the higher likelihood.
FitResult fit_fixed_K(const QuadratureHistogram& hist, const KernelMatrix& km, int K, const FitOptions& opts = {});
FitResult fit_fixed_K(const QuadratureHistogram& hist, double eta, int K, const FitOptions& opts = {});

struct ModelRecord {
  int K = 0;
  double loglik = 0.0;
  double aic = 0.0;
};

struct ReconstructionResult {
  double eta = 0.0;
  long long R = 0;
  std::vector<ModelRecord> per_k;
  int best_K = 0;
  NumberDistribution best_rho;
  std::vector<FitResult> fits;  ///< one per K, same order as per_k

  const FitResult& best_fit() const { return fits[static_cast<std::size_t>(best_K)]; }
  /// JSON document {eta, R, per_k, best_k, rho, diagnostics}.
  std::string to_json() const;
};

inline constexpr int kDefaultKMax = 16;

/// Fits every K in 0..K_max and keeps the AIC minimizer; ties go to the
/// smaller K.
ReconstructionResult select_model(const QuadratureHistogram& hist, double eta, int K_max = kDefaultKMax,
                                  const FitOptions& opts = {}, Exec exec = Exec::parallel);

}  // namespace spintomo
