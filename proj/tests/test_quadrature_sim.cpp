#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "spintomo/quadrature_sim.hpp"

using namespace spintomo;

namespace {

double shot_variance(const SpinState& s, double eta, double theta, int n, std::uint64_t seed) {
  const QuadratureSampler sampler(s);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    const double q = simulate_shot(sampler, eta, theta, rng);
    sum += q;
    sq += q * q;
  }
  const double mean = sum / n;
  return sq / n - mean * mean;
}

}  // namespace

TEST_CASE("eta_from_physical") {
  // s = g tau n sqrt(N/2) = 0.5 * 2 * 2 = 2 = sqrt(2n).
  CHECK(eta_from_physical({0.5, 1.0, 2.0, 8.0}) == doctest::Approx(0.5).epsilon(1e-15));
  const PhysicalParams lo{1e-7, 1.0, 1e8, 1e12};
  CHECK(lo.signal_amplitude() == doctest::Approx(7.0710678e6).epsilon(1e-7));
  CHECK(lo.noise_amplitude() == doctest::Approx(1.4142136e4).epsilon(1e-7));
  CHECK(eta_from_physical(lo) == doctest::Approx(0.999996).epsilon(1e-6));
  CHECK(eta_from_physical({1e-12, 1.0, 1.0, 2.0}) < 1e-20);
  CHECK_THROWS_AS(eta_from_physical({0.0, 1.0, 1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(eta_from_physical({1.0, -1.0, 1.0, 1.0}), std::invalid_argument);

  double prev_g = 0.0, prev_tau = 0.0, prev_N = 0.0;
  for (double x = 0.1; x < 10.0; x *= 1.5) {
    const double eg = eta_from_physical({x, 1.0, 2.0, 8.0});
    const double et = eta_from_physical({0.5, x, 2.0, 8.0});
    const double eN = eta_from_physical({0.5, 1.0, 2.0, 8.0 * x});
    for (double e : {eg, et, eN}) {
      CHECK(e > 0.0);
      CHECK(e < 1.0);
    }
    CHECK(eg > prev_g);
    CHECK(et > prev_tau);
    CHECK(eN > prev_N);
    prev_g = eg;
    prev_tau = et;
    prev_N = eN;
  }
}

TEST_CASE("linearization_error") {
  CHECK(linearization_error({1.0, 1.0, 5.0, 10.0}, 0.0) == 0.0);
  CHECK(linearization_error({0.1, 1.0, 5.0, 10.0}, 1.0) == doctest::Approx(std::abs(std::sin(0.1) - 0.1) / 0.1).epsilon(1e-12));
  CHECK(linearization_error({0.1, 1.0, 5.0, 10.0}, 1.0) == doctest::Approx(1.666e-3).epsilon(1e-3));
  CHECK(linearization_error({0.5, 2.0, 5.0, 10.0}, -1.0) == doctest::Approx(0.1585).epsilon(1e-3));
}

TEST_CASE("measurement config validation") {
  MeasurementConfig c;
  CHECK_NOTHROW(c.validate());
  c.eta = 0.0;
  CHECK_THROWS(c.validate());
  c.eta = 1.0;
  CHECK_NOTHROW(c.validate());
  c.shots = 0;
  CHECK_THROWS(c.validate());
  c.shots = 1;
  c.geometry.bin_count = 1;
  CHECK_THROWS(c.validate());
  c.geometry = {10, -1.0};
  CHECK_THROWS(c.validate());
}

TEST_CASE("shot variances") {
  CHECK(std::abs(shot_variance(SpinState::css(), 0.5, 0.4, 1000000, 1) - 0.5) <= 0.01);
  CHECK(std::abs(shot_variance(SpinState::dicke(1), 1.0, 2.0, 1000000, 2) - 1.5) <= 0.02);
  CHECK(std::abs(shot_variance(SpinState::dicke(1), 0.5, 5.1, 1000000, 3) - 1.0) <= 0.02);
  // The oracle for the lossy case: second moment of the convolved density.
  const double m2 = oracle::simpson([](double Q) { return Q * Q * smeared_density(SpinState::dicke(1), 0.0, 0.5, Q); }, -10, 10, 2000);
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("CSS histogram is a variance-1/2 Gaussian") {
  MeasurementConfig cfg;
  cfg.seed = 42;
  const auto h = simulate_histogram(SpinState::css(), cfg);
  CHECK(h.total() == 20000);
  // Pool bins with expectation below 5 into the outer cells.
  double chi2 = 0.0, pooled_obs = 0.0, pooled_exp = 0.0;
  int cells = 0;
  for (int b = 0; b < cfg.geometry.bin_count; ++b) {
    const double lo = cfg.geometry.lower(b);
    const double p = 0.5 * (std::erf(lo + cfg.geometry.width()) - std::erf(lo));
    const double e = p * cfg.shots;
    const double o = static_cast<double>(h.counts[b]);
    if (e < 5.0) {
      pooled_obs += o;
      pooled_exp += e;
      continue;
    }
    chi2 += (o - e) * (o - e) / e;
    ++cells;
  }
  pooled_obs += static_cast<double>(h.underflow + h.overflow);
  pooled_exp += std::erfc(6.0) * cfg.shots;
  chi2 += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
  ++cells;
  const boost::math::chi_squared dist(cells - 1);
  CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.01);
}

TEST_CASE("Dicke 1 at unit efficiency has a central dip") {
  MeasurementConfig cfg;
  cfg.eta = 1.0;
  cfg.shots = 200000;
  const auto h = simulate_histogram(SpinState::dicke(1), cfg);
  const double center = static_cast<double>(h.counts[49] + h.counts[50]) / 2.0;
  const int peak_bin = 50 + static_cast<int>(std::round(1.0 / cfg.geometry.width()));
  CHECK(center < 0.02 * static_cast<double>(h.counts[peak_bin]));
}

TEST_CASE("histogram bookkeeping") {
  MeasurementConfig cfg;
  cfg.shots = 1;
  CHECK(simulate_histogram(SpinState::squeezed_vacuum(1.0), cfg).total() == 1);

  QuadratureHistogram h(BinGeometry{4, 2.0});
  h.add(-3.0);
  h.add(2.0);
  h.add(-2.0);
  h.add(0.1);
  CHECK(h.underflow == 1);
  CHECK(h.overflow == 1);
  CHECK(h.counts == std::vector<long long>{1, 0, 1, 0});
  CHECK(h.total() == 4);
  CHECK(h.edges() == std::vector<double>{-2, -1, 0, 1, 2});

  cfg.shots = 5000;
  cfg.geometry = {10, 0.5};
  const auto narrow = simulate_histogram(SpinState::css(), cfg);
  CHECK(narrow.underflow > 0);
  CHECK(narrow.overflow > 0);
  CHECK(narrow.total() == 5000);
}

TEST_CASE("simulation is deterministic and thread independent") {
  MeasurementConfig cfg;
  cfg.seed = 99;
  for (const auto& s : {SpinState::dicke(2), SpinState::squeezed_vacuum(1.0)})
    for (auto mode : {PhaseMode::random_uniform, PhaseMode::stratified_grid}) {
      cfg.phase_mode = mode;
      const auto a = simulate_histogram(s, cfg, Exec::serial);
      CHECK(a == simulate_histogram(s, cfg, Exec::serial));
      CHECK(a == simulate_histogram(s, cfg, Exec::parallel));
    }
  MeasurementConfig other = cfg;
  other.seed = 100;
  CHECK_FALSE(simulate_histogram(SpinState::css(), cfg) == simulate_histogram(SpinState::css(), other));
}

TEST_CASE("smeared_density examples") {
  for (double eta : {0.2, 0.5, 0.8})
    for (double Q : {-1.5, 0.0, 0.9, 3.0})
      CHECK(std::abs(smeared_density(SpinState::css(), 1.2, eta, Q) - std::exp(-Q * Q) / std::sqrt(std::numbers::pi)) <= 1e-9);
  CHECK(std::abs(smeared_density(SpinState::dicke(1), 0.0, 0.5, 0.0) - kernel_A(1, 0.5, 0.0)) <= 1e-8);
  for (const auto& s : {SpinState::dicke(3), SpinState::squeezed_vacuum(1.0)})
    for (double Q : {-1.0, 0.0, 0.45, 2.0}) {
      CHECK(smeared_density(s, 0.8, 1.0, Q) == quad_density(s, 0.8, Q));
      CHECK(std::abs(smeared_density(s, 0.8, 1.0 - 1e-6, Q) - quad_density(s, 0.8, Q)) <= 1e-6);
    }
  CHECK_THROWS(smeared_density(SpinState::css(), 0.0, 0.0, 0.0));
}

TEST_CASE("smeared densities are normalized") {
  for (const auto& s : {SpinState::dicke(2), SpinState::squeezed_vacuum(1.0)})
    for (double eta : {0.3, 0.7}) {
      const double mass = oracle::simpson([&](double Q) { return smeared_density(s, 0.6, eta, Q); }, -14, 14, 2800);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("angle-averaged convolution equals the kernel sum") {
  for (const auto& s : {SpinState::css(), SpinState::dicke(1), SpinState::dicke(2), SpinState::squeezed_vacuum(1.0)}) {
    const auto rho = number_distribution(s, 120).rho;
    for (double eta : {0.3, 0.5, 0.9}) {
      double worst = 0.0;
      for (int i = 0; i < 200; ++i) {
        const double Q = -6.0 + 12.0 * (i + 0.5) / 200;
        const double avg = oracle::phase_average([&](double th) { return smeared_density(s, th, eta, Q); }, 128);
        worst = std::max(worst, std::abs(avg - phase_averaged_density(rho, eta, Q)));
      }
      CAPTURE(s.tag());
      CAPTURE(eta);
      CHECK(worst <= 1e-6);
    }
  }
}

TEST_CASE("histograms converge to the kernel density at the sampling rate") {
  const BinGeometry geom{};
  const auto km = build_kernel_matrix(80, 0.5, geom);
  for (const auto& s : {SpinState::css(), SpinState::dicke(1), SpinState::dicke(2), SpinState::squeezed_vacuum(1.0)}) {
    const auto rho = number_distribution(s, 80).rho;
    for (long long R : {10000LL, 100000LL}) {
      double mean_tv = 0.0;
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        MeasurementConfig cfg;
        cfg.shots = R;
        cfg.seed = seed;
        const auto h = simulate_histogram(s, cfg);
        double tv = 0.0, inside = 0.0;
        for (int b = 0; b < geom.bin_count; ++b) {
          double p = 0.0;
          for (int M = 0; M <= 80; ++M) p += km(b, M) * rho[M];
          inside += p;
          tv += std::abs(static_cast<double>(h.counts[b]) / R - p);
        }
        tv += std::abs(static_cast<double>(h.underflow + h.overflow) / R - (1.0 - inside));
        mean_tv += 0.5 * tv / 5.0;
      }
      CAPTURE(s.tag());
      CAPTURE(R);
      CHECK(mean_tv <= 3.0 / std::sqrt(static_cast<double>(R)));
    }
  }
}

TEST_CASE("histogram CSV and sidecar") {
  MeasurementConfig cfg;
  cfg.shots = 300;
  cfg.seed = 3;
  cfg.geometry = {4, 2.0};
  const auto s = SpinState::dicke(2);
  const auto h = simulate_histogram(s, cfg);
  std::ostringstream os;
  write_histogram_csv(os, h);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "bin_center,count");
  long long sum = 0;
  int rows = 0;
  while (std::getline(is, line)) {
    const auto comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    CHECK(std::stod(line.substr(0, comma)) == doctest::Approx(cfg.geometry.center(rows)));
    sum += std::stoll(line.substr(comma + 1));
    ++rows;
  }
  CHECK(rows == 4);
  CHECK(sum == h.in_range());

  const auto j = nlohmann::json::parse(histogram_sidecar_json(h, s, cfg));
  CHECK(j["eta"] == 0.5);
  CHECK(j["R"] == 300);
  CHECK(j["bin_count"] == 4);
  CHECK(j["q_range"] == 2.0);
  CHECK(j["seed"] == 3);
  CHECK(j["underflow"] == h.underflow);
  CHECK(j["overflow"] == h.overflow);
  CHECK(j["state"]["kind"] == "dicke");
  CHECK(j["state"]["m"] == 2);
}
