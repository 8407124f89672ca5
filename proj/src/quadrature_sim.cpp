#include "spintomo/quadrature_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include "json.hpp"

namespace spintomo {

void MeasurementConfig::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in (0, 1]");
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  geometry.validate();
}

void PhysicalParams::validate() const {
  for (double v : {g, tau, n, N})
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("physical parameters must be finite and > 0");
}

double PhysicalParams::signal_amplitude() const { return g * tau * n * std::sqrt(N / 2.0); }
double PhysicalParams::noise_amplitude() const { return std::sqrt(2.0 * n); }

double eta_from_physical(const PhysicalParams& p) {
  p.validate();
  const double s = p.signal_amplitude();
  const double v = p.noise_amplitude();
  // s^2 / (s^2 + v^2), written so huge s does not round to exactly 1 early.
  const double r = v / s;
  return 1.0 / (1.0 + r * r);
}

double linearization_error(const PhysicalParams& p, double m) {
  p.validate();
  const double x = p.g * p.tau * m;
  if (x == 0.0) return 0.0;
  // Exact rotation of (S_x, S_y) = (-n, 0) gives S_y = -n sin x; linearized is -n x.
  const double exact = std::sin(x) * (-p.n);
  const double linear = -x * p.n;
  return std::abs(exact - linear) / (p.n * std::abs(x));
}

QuadratureHistogram::QuadratureHistogram(BinGeometry g) : geometry(g), counts(static_cast<std::size_t>(g.bin_count), 0) {}

long long QuadratureHistogram::in_range() const {
  long long s = 0;
  for (auto c : counts) s += c;
  return s;
}

std::vector<double> QuadratureHistogram::edges() const {
  std::vector<double> e(counts.size() + 1);
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = geometry.lower(static_cast<int>(i));
  e.back() = geometry.q_range;
  return e;
}

void QuadratureHistogram::add(double Q) {
  if (Q < -geometry.q_range) {
    ++underflow;
    return;
  }
  const auto bin = static_cast<long long>(std::floor((Q + geometry.q_range) / geometry.width()));
  if (bin >= geometry.bin_count) {
    ++overflow;
    return;
  }
  ++counts[static_cast<std::size_t>(bin)];
}

void QuadratureHistogram::merge(const QuadratureHistogram& other) {
  if (!(other.geometry == geometry)) throw std::invalid_argument("histogram geometry mismatch");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  underflow += other.underflow;
  overflow += other.overflow;
}

double simulate_shot(const QuadratureSampler& sampler, double eta, double theta, CounterRng& rng) {
  const double signal = sampler.sample(theta, rng);
  if (eta == 1.0) return signal;
  const double vacuum = rng.normal() * std::sqrt(0.5);
  return std::sqrt(eta) * signal + std::sqrt(1.0 - eta) * vacuum;
}

double simulate_shot(const SpinState& state, double eta, double theta, CounterRng& rng) {
  return simulate_shot(QuadratureSampler(state), eta, theta, rng);
}

namespace {

double shot_value(const QuadratureSampler& sampler, const MeasurementConfig& cfg, long long i) {
  CounterRng rng(cfg.seed, static_cast<std::uint64_t>(i));
  const double theta = cfg.phase_mode == PhaseMode::random_uniform
                           ? 2.0 * std::numbers::pi * rng.uniform()
                           : 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(cfg.shots);
  return simulate_shot(sampler, cfg.eta, theta, rng);
}

}  // namespace

QuadratureHistogram simulate_histogram(const SpinState& state, const MeasurementConfig& cfg, Exec exec) {
  cfg.validate();
  const QuadratureSampler sampler(state);
  QuadratureHistogram hist(cfg.geometry);

  if (exec == Exec::serial) {
    for (long long i = 0; i < cfg.shots; ++i) hist.add(shot_value(sampler, cfg, i));
    return hist;
  }

#pragma omp parallel
  {
    QuadratureHistogram local(cfg.geometry);
#pragma omp for schedule(static)
    for (long long i = 0; i < cfg.shots; ++i) local.add(shot_value(sampler, cfg, i));
#pragma omp critical
    hist.merge(local);
  }
  return hist;
}

namespace {

double probe_density(double u) { return std::exp(-u * u) / std::sqrt(std::numbers::pi); }

// Half-width beyond which the signal density is negligible.
double signal_support(const SpinState& state) {
  switch (state.kind()) {
    case SpinState::Kind::css: return 10.0;
    case SpinState::Kind::dicke: return 2.0 * std::sqrt(2.0 * state.excitation() + 1.0) + 10.0;
    case SpinState::Kind::squeezed_vacuum: return 14.0 * std::sqrt(0.5 * std::exp(2.0 * state.xi()));
    case SpinState::Kind::number_mixture:
      return 2.0 * std::sqrt(2.0 * static_cast<double>(state.weights().size()) - 1.0) + 10.0;
  }
  return 10.0;
}

template <class F>
double integrate_panels(F&& f, double a, double b, double panel_width) {
  // The integrand is smooth on the unit scale, so a fixed rule per panel suffices.
  using rule = boost::math::quadrature::gauss<double, 15>;
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / panel_width)));
  const double h = (b - a) / panels;
  double s = 0.0;
  for (int p = 0; p < panels; ++p) s += rule::integrate(f, a + p * h, a + (p + 1) * h);
  return s;
}

}  // namespace

double smeared_density(const SpinState& state, double theta, double eta, double Q) {
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in (0, 1]");
  if (eta == 1.0) return quad_density(state, theta, Q);
  const double se = std::sqrt(eta);
  const double sn = std::sqrt(1.0 - eta);
  if (eta >= 0.5) {
    // Substitute u = (Q - sqrt(eta) q') / sqrt(1-eta): the probe factor keeps unit width.
    auto f = [&](double u) { return probe_density(u) * quad_density(state, theta, (Q - sn * u) / se); };
    return integrate_panels(f, -9.5, 9.5, 0.5) / se;
  }
  const double L = signal_support(state);
  auto f = [&](double q) { return quad_density(state, theta, q) * probe_density((Q - se * q) / sn) / sn; };
  return integrate_panels(f, -L, L, 0.5);
}

void write_histogram_csv(std::ostream& os, const QuadratureHistogram& h) {
  os << "bin_center,count\n";
  char buf[64];
  for (int b = 0; b < h.geometry.bin_count; ++b) {
    std::snprintf(buf, sizeof buf, "%.12g,%lld\n", h.geometry.center(b), h.counts[static_cast<std::size_t>(b)]);
    os << buf;
  }
}

std::string histogram_sidecar_json(const QuadratureHistogram& h, const SpinState& state, const MeasurementConfig& cfg) {
  nlohmann::ordered_json state_json;
  state_json["kind"] = state.tag();
  if (state.kind() == SpinState::Kind::dicke) state_json["m"] = state.excitation();
  if (state.kind() == SpinState::Kind::squeezed_vacuum) state_json["xi"] = state.xi();
  if (state.kind() == SpinState::Kind::number_mixture) state_json["weights"] = state.weights();

  nlohmann::ordered_json j;
  j["eta"] = cfg.eta;
  j["R"] = h.total();
  j["bin_count"] = h.geometry.bin_count;
  j["q_range"] = h.geometry.q_range;
  j["seed"] = cfg.seed;
  j["phase_mode"] = cfg.phase_mode == PhaseMode::random_uniform ? "random" : "grid";
  j["underflow"] = h.underflow;
  j["overflow"] = h.overflow;
  j["state"] = state_json;
  return j.dump(2) + "\n";
}

}  // namespace spintomo
