// One PASS/FAIL line per acceptance criterion. Tolerances are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "oracles.hpp"
#include "spintomo/cli.hpp"
#include "spintomo/kernels.hpp"
#include "spintomo/mle.hpp"
#include "spintomo/spinproj.hpp"

namespace fs = std::filesystem;
using namespace spintomo;

namespace {

constexpr int kSeeds = 5;
constexpr double kMaxRunSeconds = 30.0;
constexpr double kCssRho00 = 0.95;
constexpr int kSmallK = 2;
constexpr double kOddMass = 0.05;
constexpr double kSssBand = 0.05;
constexpr int kSssKLo = 6, kSssKHi = 12;
constexpr double kDickeRho11 = 0.90;
constexpr double kNormTol = 1e-8;
constexpr double kConvTol = 1e-6;
constexpr double kLoglikGap = 1e-6;
constexpr double kRhoGap = 1e-3;
constexpr double kBruteTol = 1e-10;
constexpr double kFolded400 = 0.02;
constexpr double kTvFinal = 0.03;
constexpr double kTvSeconds = 600.0;

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const fs::path& work_dir() {
  static const fs::path d = [] {
    auto p = fs::temp_directory_path() / "spintomo_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

struct Run {
  cli::PipelineOutput out;
  double seconds;
};

cli::RunConfig scenario(const std::string& state, std::uint64_t seed) {
  cli::RunConfig c;
  c.state = state;
  c.xi = 1.0;
  c.m = 1;
  c.eta = 0.5;
  c.shots = 20000;
  c.seed = seed;
  c.out = (work_dir() / (state + "_" + std::to_string(seed))).string();
  return c;
}

std::vector<Run> run_scenario(const std::string& state) {
  std::vector<Run> runs;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    std::ostringstream log;
    const auto t0 = std::chrono::steady_clock::now();
    auto out = cli::run_pipeline(scenario(state, seed), log);
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    runs.push_back({std::move(out), sec});
  }
  return runs;
}

std::string per_seed(const std::vector<Run>& runs, int M) {
  std::string s;
  for (const auto& r : runs) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%sK=%d,rho%d%d=%.3f", s.empty() ? "" : " ", r.out.result.best_K, M, M,
                  r.out.result.best_rho[M]);
    s += buf;
  }
  return s;
}

void criterion_css(const std::vector<Run>& runs) {
  int good = 0;
  double slowest = 0.0;
  for (const auto& r : runs) {
    good += r.out.result.best_rho[0] >= kCssRho00 && r.out.result.best_K <= kSmallK;
    slowest = std::max(slowest, r.seconds);
  }
  report(1, good >= 4 && slowest < kMaxRunSeconds, "CSS reconstruction",
         std::to_string(good) + "/5 seeds with rho00>=0.95 and K<=2; slowest run " + fmt("%.2f s", slowest) + "; " +
             per_seed(runs, 0));
}

void criterion_sss(const std::vector<Run>& runs) {
  const auto truth = number_distribution(SpinState::squeezed_vacuum(1.0), 4).rho;
  int good = 0;
  std::string detail;
  for (const auto& r : runs) {
    const auto& rho = r.out.result.best_rho;
    const bool ok = rho.odd_mass() <= kOddMass && std::abs(rho[0] - truth[0]) <= kSssBand &&
                    std::abs(rho[2] - truth[2]) <= kSssBand && r.out.result.best_K >= kSssKLo &&
                    r.out.result.best_K <= kSssKHi;
    good += ok;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%sK=%d,odd=%.3f,rho00=%.3f,rho22=%.3f", detail.empty() ? "" : " ", r.out.result.best_K,
                  rho.odd_mass(), rho[0], rho[2]);
    detail += buf;
  }
  report(2, good == kSeeds, "squeezed-vacuum reconstruction", std::to_string(good) + "/5 seeds meet all bounds; " + detail);
}

void criterion_dicke(const std::vector<Run>& runs) {
  int good = 0;
  for (const auto& r : runs) good += r.out.result.best_rho[1] >= kDickeRho11 && r.out.result.best_K <= kSmallK;
  report(3, good >= 4, "Dicke-1 reconstruction", std::to_string(good) + "/5 seeds with rho11>=0.90 and K<=2; " + per_seed(runs, 1));
}

void criterion_kernels() {
  double norm = 0.0;
  for (double eta : {0.1, 0.3, 0.5, 0.9, 1.0})
    for (int M = 0; M <= 20; ++M)
      norm = std::max(norm, std::abs(oracle::simpson([&](double q) { return kernel_A(M, eta, q); }, -16.0, 16.0, 32000) - 1.0));
  double conv = 0.0;
  for (const auto& s : {SpinState::css(), SpinState::dicke(1), SpinState::dicke(2), SpinState::squeezed_vacuum(1.0)}) {
    const auto rho = number_distribution(s, 120).rho;
    for (double eta : {0.3, 0.5, 0.9})
      for (int i = 0; i < 200; ++i) {
        const double Q = -6.0 + 12.0 * (i + 0.5) / 200;
        const double avg = oracle::phase_average([&](double th) { return smeared_density(s, th, eta, Q); }, 128);
        conv = std::max(conv, std::abs(avg - phase_averaged_density(rho, eta, Q)));
      }
  }
  report(4, norm <= kNormTol && conv <= kConvTol, "kernel correctness",
         "max|mass-1|=" + fmt("%.2e", norm) + " (tol 1e-8), max convolution gap=" + fmt("%.2e", conv) + " (tol 1e-6)");
}

void criterion_optimizers(const std::vector<std::vector<Run>*>& scenarios) {
  double ll_gap = 0.0, rho_gap = 0.0;
  bool monotone = true;
  for (const auto* runs : scenarios)
    for (const auto& r : *runs) {
      const auto& f = r.out.result.best_fit();
      ll_gap = std::max(ll_gap, f.loglik_gap);
      rho_gap = std::max(rho_gap, f.rho_gap);
      FitOptions opts;
      opts.trace_em = true;
      opts.run_simplex = false;
      const auto traced = fit_fixed_K(r.out.histogram, r.out.result.eta, f.K, opts);
      for (std::size_t i = 1; i < traced.em_trace.size(); ++i) monotone = monotone && traced.em_trace[i] >= traced.em_trace[i - 1];
    }
  report(5, ll_gap <= kLoglikGap && rho_gap <= kRhoGap && monotone, "EM vs simplex at the selected K",
         "max|dlogL|=" + fmt("%.2e", ll_gap) + " (tol 1e-6), max|drho|=" + fmt("%.2e", rho_gap) +
             " (tol 1e-3), EM monotone per iteration: " + (monotone ? "yes" : "no"));
}

void criterion_rotation() {
  double brute = 0.0;
  for (int N = 1; N <= 12; ++N) {
    const double j = 0.5 * N;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N + 1, N + 1);
    for (int i = 0; i < N; ++i) {
      const double m = i - j;
      const double c = std::sqrt((j - m) * (j + m + 1.0));
      A(i + 1, i) = -0.25 * std::numbers::pi * c;
      A(i, i + 1) = 0.25 * std::numbers::pi * c;
    }
    const Eigen::MatrixXd D = A.exp();
    for (int M = 0; M <= N; ++M) {
      const auto v = wigner_d_column(N, M);
      for (int i = 0; i <= N; ++i) brute = std::max(brute, std::abs(v[i] - D(i, M)));
    }
  }
  bool monotone = true;
  std::string table;
  for (int M : {0, 1, 2}) {
    double prev = std::numeric_limits<double>::infinity();
    for (int N : {50, 100, 200, 400}) {
      const double d = folded_compare(N, M);
      monotone = monotone && d < prev;
      prev = d;
    }
    table += (table.empty() ? "" : ", ") + std::string("M=") + std::to_string(M) + " N=400 " + fmt("%.2e", prev);
  }
  const double d400 = folded_compare(400, 0);
  report(6, brute <= kBruteTol && monotone && d400 <= kFolded400, "rotation-matrix and folded-distribution oracles",
         "brute-force gap=" + fmt("%.2e", brute) + " (tol 1e-10), folded strictly decreasing: " + (monotone ? "yes" : "no") +
             ", " + table + " (bound 0.02 at M=0)");
}

void criterion_convergence() {
  const auto s = SpinState::squeezed_vacuum(1.0);
  const auto truth = number_distribution(s, 120).rho;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> tv;
  std::string detail;
  for (long long R : {10000LL, 100000LL, 1000000LL}) {
    MeasurementConfig cfg;
    cfg.shots = R;
    cfg.seed = 1;
    const auto h = simulate_histogram(s, cfg);
    const auto res = select_model(h, 0.5);
    tv.push_back(total_variation(res.best_rho, truth));
    char buf[96];
    std::snprintf(buf, sizeof buf, "%sR=%lld K=%d TV=%.4f", detail.empty() ? "" : ", ", R, res.best_K, tv.back());
    detail += buf;
  }
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = tv[1] <= tv[0] && tv[2] <= tv[1] && tv[2] <= kTvFinal && sec < kTvSeconds;
  report(7, pass, "statistical convergence", detail + "; " + fmt("%.1f s", sec) + " (needs non-increasing, <= 0.03 at 1e6)");
}

void criterion_determinism() {
  std::vector<fs::path> dirs;
  for (int k = 0; k < 2; ++k) {
    auto c = scenario("sss", 3);
    c.out = (work_dir() / ("determinism_" + std::to_string(k))).string();
    std::ostringstream log;
    cli::run_pipeline(c, log);
    dirs.emplace_back(c.out);
  }
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  bool same = true;
  for (const char* f : {"histogram.csv", "result.json"}) same = same && !slurp(dirs[0] / f).empty() && slurp(dirs[0] / f) == slurp(dirs[1] / f);
  report(8, same, "determinism", same ? "histogram.csv and result.json byte-identical across two runs" : "outputs differ");
}

}  // namespace

int main() {
  auto css = run_scenario("css");
  criterion_css(css);
  auto sss = run_scenario("sss");
  criterion_sss(sss);
  auto dicke = run_scenario("dicke");
  criterion_dicke(dicke);
  criterion_kernels();
  criterion_optimizers({&css, &sss, &dicke});
  criterion_rotation();
  criterion_convergence();
  criterion_determinism();
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
