#include "spintomo/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "spintomo/optimize.hpp"
#include "spintomo/rng.hpp"

namespace spintomo {

namespace {

constexpr double kNegligibleWeight = 1e-200;

// Counts, kernel columns 0..K and the cached multinomial constant.
class Objective {
 public:
  Objective(const QuadratureHistogram& hist, const KernelMatrix& km, int K) : km_(km), K_(K) {
    if (!(hist.geometry == km.geometry())) throw std::invalid_argument("kernel matrix built for a different bin grid");
    if (K < 0 || K > km.cutoff()) throw std::invalid_argument("kernel matrix cutoff is below the model cutoff");
    counts_.assign(hist.counts.begin(), hist.counts.end());
    constant_ = 0.0;
    for (auto k : counts_) {
      n_ += k;
      constant_ -= std::lgamma(static_cast<double>(k) + 1.0);
    }
    constant_ += std::lgamma(static_cast<double>(n_) + 1.0);
    mass_.resize(static_cast<std::size_t>(K) + 1);
    for (int M = 0; M <= K; ++M) mass_[M] = km.column_sum(M);
  }

  long long total() const { return n_; }

  LogLikelihood operator()(std::span<const double> rho) const {
    double z = 0.0;
    for (int M = 0; M <= K_; ++M) z += mass_[M] * rho[M];
    double s = 0.0;
    for (int b = 0; b < km_.bins(); ++b) {
      const auto k = counts_[static_cast<std::size_t>(b)];
      if (k == 0) continue;
      const double p = mixture(b, rho);
      if (!(p > 0.0)) return {-std::numeric_limits<double>::infinity(), true};
      s += static_cast<double>(k) * std::log(p / z);
    }
    return {s + constant_, false};
  }

  // logL(to) - logL(from) in difference form, accurate relative to the change
  // itself rather than to logL.
  double change(std::span<const double> from, std::span<const double> to) const {
    double dz = 0.0, z = 0.0;
    for (int M = 0; M <= K_; ++M) {
      z += mass_[M] * from[M];
      dz += mass_[M] * (to[M] - from[M]);
    }
    double s = 0.0;
    for (int b = 0; b < km_.bins(); ++b) {
      const auto k = counts_[static_cast<std::size_t>(b)];
      if (k == 0) continue;
      const auto row = km_.row(b);
      double p = 0.0, dp = 0.0;
      for (int M = 0; M <= K_; ++M) {
        p += row[M] * from[M];
        dp += row[M] * (to[M] - from[M]);
      }
      if (!(p + dp > 0.0)) return -std::numeric_limits<double>::infinity();
      if (!(p > 0.0)) return std::numeric_limits<double>::infinity();
      s += static_cast<double>(k) * std::log1p(dp / p);
    }
    return s - static_cast<double>(n_) * std::log1p(dz / z);
  }

  std::vector<double> em_update(std::span<const double> rho) const {
    std::vector<double> next(rho.size(), 0.0);
    if (n_ == 0) return {rho.begin(), rho.end()};
    for (int b = 0; b < km_.bins(); ++b) {
      const auto k = counts_[static_cast<std::size_t>(b)];
      if (k == 0) continue;
      const double p = mixture(b, rho);
      if (!(p > 0.0)) continue;
      const double w = static_cast<double>(k) / static_cast<double>(n_) / p;
      const auto row = km_.row(b);
      for (int M = 0; M <= K_; ++M) next[M] += w * row[M];
    }
    double s = 0.0;
    for (int M = 0; M <= K_; ++M) {
      next[M] *= rho[M] / mass_[M];
      s += next[M];
    }
    // Flush vanishing weights to zero; subnormal arithmetic stalls the loop.
    for (auto& v : next) v = v / s < kNegligibleWeight ? 0.0 : v / s;
    return next;
  }

 private:
  double mixture(int bin, std::span<const double> rho) const {
    const auto row = km_.row(bin);
    double p = 0.0;
    for (int M = 0; M <= K_; ++M) p += row[M] * rho[M];
    return p;
  }

  const KernelMatrix& km_;
  int K_;
  std::vector<long long> counts_;
  std::vector<double> mass_;
  long long n_ = 0;
  double constant_ = 0.0;
};

// One squared-extrapolation cycle (SQUAREM, Varadhan & Roland 2008) over the
// EM map F. Steps are shortened until the extrapolated point is feasible and
// F of it beats F(F(x)), so the accepted likelihood never drops below what
// two plain EM steps reach.
std::vector<double> squarem_cycle(const Objective& obj, const std::vector<double>& x0) {
  const auto x1 = obj.em_update(x0);
  auto x2 = obj.em_update(x1);

  const std::size_t n = x0.size();
  std::vector<double> r(n), v(n), x(n);
  double rr = 0.0;
  double vv = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    r[m] = x1[m] - x0[m];
    v[m] = x2[m] - x1[m] - r[m];
    rr += r[m] * r[m];
    vv += v[m] * v[m];
  }
  if (!(vv > 0.0)) return x2;
  double alpha = std::min(-std::sqrt(rr / vv), -1.0);
  for (int attempt = 0; attempt < 30 && alpha < -1.0 - 1e-9; ++attempt) {
    double s = 0.0;
    bool feasible = true;
    for (std::size_t m = 0; m < n; ++m) {
      x[m] = x0[m] - 2.0 * alpha * r[m] + alpha * alpha * v[m];
      feasible = feasible && (x[m] > 0.0 || x0[m] == 0.0);
      s += x[m];
    }
    if (feasible) {
      for (auto& y : x) y = std::max(y, 0.0) / s;
      auto candidate = obj.em_update(x);
      if (obj.change(x2, candidate) >= 0.0) return candidate;
    }
    alpha = 0.5 * (alpha - 1.0);
  }
  return x2;
}

double max_abs_diff(const NumberDistribution& a, const NumberDistribution& b) {
  double d = 0.0;
  for (std::size_t m = 0; m < std::max(a.size(), b.size()); ++m) d = std::max(d, std::abs(a[m] - b[m]));
  return d;
}

}  // namespace

LogLikelihood log_likelihood(const QuadratureHistogram& hist, const NumberDistribution& rho, const KernelMatrix& km) {
  const Objective obj(hist, km, rho.cutoff());
  return obj(rho.rho);
}

NumberDistribution em_step(const NumberDistribution& rho, const QuadratureHistogram& hist, const KernelMatrix& km) {
  const Objective obj(hist, km, rho.cutoff());
  return NumberDistribution(obj.em_update(rho.rho));
}

NumberDistribution rho_from_theta(std::span<const double> theta) {
  if (theta.empty()) throw std::invalid_argument("empty theta vector");
  double norm = 0.0;
  for (double t : theta) norm += t * t;
  std::vector<double> rho(theta.size());
  if (!(norm > 0.0)) {
    std::fill(rho.begin(), rho.end(), 1.0 / static_cast<double>(rho.size()));
    return NumberDistribution(std::move(rho));
  }
  for (std::size_t m = 0; m < theta.size(); ++m) rho[m] = theta[m] * theta[m] / norm;
  return NumberDistribution(std::move(rho));
}

double aic(double loglik, int K) { return -2.0 * loglik + 2.0 * K; }

FitResult fit_fixed_K(const QuadratureHistogram& hist, const KernelMatrix& km, int K, const FitOptions& opts) {
  if (K < 0) throw std::invalid_argument("cutoff must be >= 0");
  const Objective obj(hist, km, K);
  FitResult fit;
  fit.K = K;

  // Expectation-maximization from the uniform distribution.
  {
    auto rho = NumberDistribution::uniform(K);
    const double ll0 = obj(rho.rho).value;
    if (opts.trace_em) fit.em_trace.push_back(ll0);
    // Likelihood gained since the start, summed from accurate per-cycle changes.
    double progress = 0.0;
    const auto window = static_cast<std::size_t>(std::max(opts.em_window, 1));
    std::vector<double> history(window, 0.0);
    int it = 0;
    bool converged = K == 0;
    while (!converged && it < opts.em_max_iterations) {
      auto next = opts.accelerate ? squarem_cycle(obj, rho.rho) : obj.em_update(rho.rho);
      double gain_step = obj.change(rho.rho, next);
      if (gain_step < 0.0 && opts.accelerate) {
        next = obj.em_update(rho.rho);
        gain_step = obj.change(rho.rho, next);
      }
      // A plain EM step cannot lose likelihood; a negative change is rounding at the optimum.
      if (gain_step < 0.0) {
        converged = true;
        break;
      }
      progress += gain_step;
      if (opts.trace_em) fit.em_trace.push_back(ll0 + progress);
      auto& oldest = history[static_cast<std::size_t>(it) % window];
      ++it;
      const double gain = progress - (it >= static_cast<int>(window) ? oldest : -std::numeric_limits<double>::infinity());
      oldest = progress;
      rho.rho = std::move(next);
      if (gain < opts.em_tolerance) converged = true;
    }
    fit.em_rho = rho;
    fit.em_loglik = obj(rho.rho).value;
    fit.em_iterations = it;
    fit.em_converged = converged;
  }

  // Derivative-free search over theta, rho_M = theta_M^2 / sum theta^2.
  if (opts.run_simplex && K > 0) {
    auto objective = [&](std::span<const double> theta) {
      const auto r = obj(rho_from_theta(theta).rho);
      return r.impossible ? std::numeric_limits<double>::max() : -r.value;
    };
    SimplexResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (int r = 0; r < opts.simplex_restarts; ++r) {
      // Uniform on the positive orthant of the unit sphere.
      CounterRng rng(opts.simplex_seed, static_cast<std::uint64_t>(K) * 64 + static_cast<std::uint64_t>(r));
      std::vector<double> theta0(static_cast<std::size_t>(K) + 1);
      double norm = 0.0;
      for (auto& t : theta0) {
        t = std::abs(rng.normal());
        norm += t * t;
      }
      for (auto& t : theta0) t /= std::sqrt(norm);
      auto res = nelder_mead(objective, std::move(theta0));
      fit.simplex_evaluations += res.evaluations;
      fit.simplex_converged = fit.simplex_converged || res.converged;
      if (res.value < best.value) best = std::move(res);
    }
    fit.simplex_restarts = opts.simplex_restarts;
    fit.simplex_rho = rho_from_theta(best.x);
    fit.simplex_loglik = -best.value;
  } else {
    fit.simplex_rho = fit.em_rho;
    fit.simplex_loglik = fit.em_loglik;
    fit.simplex_converged = fit.em_converged;
  }

  fit.loglik_gap = std::abs(fit.em_loglik - fit.simplex_loglik);
  fit.rho_gap = max_abs_diff(fit.em_rho, fit.simplex_rho);
  if (fit.simplex_loglik > fit.em_loglik) {
    fit.rho = fit.simplex_rho;
    fit.loglik = fit.simplex_loglik;
    fit.winner = "simplex";
  } else {
    fit.rho = fit.em_rho;
    fit.loglik = fit.em_loglik;
    fit.winner = "em";
  }
  return fit;
}

FitResult fit_fixed_K(const QuadratureHistogram& hist, double eta, int K, const FitOptions& opts) {
  const auto km = build_kernel_matrix(K, eta, hist.geometry);
  return fit_fixed_K(hist, km, K, opts);
}

ReconstructionResult select_model(const QuadratureHistogram& hist, double eta, int K_max, const FitOptions& opts,
                                  Exec exec) {
  if (K_max < 0) throw std::invalid_argument("K_max must be >= 0");
  const auto km = build_kernel_matrix(K_max, eta, hist.geometry, BinRule::gauss_legendre, exec);

  ReconstructionResult out;
  out.eta = eta;
  out.R = hist.total();
  out.fits.resize(static_cast<std::size_t>(K_max) + 1);

  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int K = K_max; K >= 0; --K) out.fits[static_cast<std::size_t>(K)] = fit_fixed_K(hist, km, K, opts);
  } else {
    for (int K = 0; K <= K_max; ++K) out.fits[static_cast<std::size_t>(K)] = fit_fixed_K(hist, km, K, opts);
  }

  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : out.fits) {
    const ModelRecord rec{f.K, f.loglik, aic(f.loglik, f.K)};
    out.per_k.push_back(rec);
    if (rec.aic < best) {
      best = rec.aic;
      out.best_K = f.K;
    }
  }
  out.best_rho = out.best_fit().rho;
  return out;
}

std::string ReconstructionResult::to_json() const {
  nlohmann::ordered_json j;
  j["eta"] = eta;
  j["R"] = R;
  auto per = nlohmann::ordered_json::array();
  for (const auto& r : per_k) per.push_back({{"k", r.K}, {"loglik", r.loglik}, {"aic", r.aic}});
  j["per_k"] = per;
  j["best_k"] = best_K;
  j["rho"] = best_rho.rho;

  const auto& f = best_fit();
  nlohmann::ordered_json d;
  d["converged"] = f.converged();
  d["winner"] = f.winner;
  d["em_iterations"] = f.em_iterations;
  d["em_converged"] = f.em_converged;
  d["em_loglik"] = f.em_loglik;
  d["simplex_evaluations"] = f.simplex_evaluations;
  d["simplex_restarts"] = f.simplex_restarts;
  d["simplex_converged"] = f.simplex_converged;
  d["simplex_loglik"] = f.simplex_loglik;
  d["loglik_gap"] = f.loglik_gap;
  d["rho_gap"] = f.rho_gap;
  bool all_converged = true;
  for (const auto& fit : fits) all_converged = all_converged && fit.converged();
  d["all_fits_converged"] = all_converged;
  d["warning"] = all_converged ? "" : "one or more fits did not converge";
  j["diagnostics"] = d;
  return j.dump(2) + "\n";
}

}  // namespace spintomo
