#include "spintomo/cli.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "spintomo/kernels.hpp"
#include "spintomo/spinproj.hpp"

namespace spintomo::cli {

namespace {

using nlohmann::json;

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write " + path.string());
  out << text;
  if (!out) throw config_error("write failed for " + path.string());
}

template <class T>
T get_as(const json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw config_error(std::string("config key '") + key + "' has the wrong type");
  }
}

// Smallest cutoff holding the state to within 1e-12 of its mass.
int truth_cutoff(const SpinState& s) {
  switch (s.kind()) {
    case SpinState::Kind::css: return 0;
    case SpinState::Kind::dicke: return s.excitation();
    case SpinState::Kind::number_mixture: return static_cast<int>(s.weights().size()) - 1;
    case SpinState::Kind::squeezed_vacuum:
      for (int K = 0; K < kMaxFockOrder; K += 2)
        if (number_distribution(s, K).tail_mass < 1e-12) return K;
      return kMaxFockOrder;
  }
  return 0;
}

std::string format_rho(const NumberDistribution& rho) {
  std::string s = "[";
  char buf[32];
  for (std::size_t m = 0; m < rho.size(); ++m) {
    std::snprintf(buf, sizeof buf, "%s%.6f", m ? ", " : "", rho[m]);
    s += buf;
  }
  return s + "]";
}

}  // namespace

RunConfig apply_config_json(const std::string& text, RunConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw config_error("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    const char* k = key.c_str();
    if (key == "state") c.state = get_as<std::string>(v, k);
    else if (key == "xi") c.xi = get_as<double>(v, k);
    else if (key == "m") c.m = get_as<int>(v, k);
    else if (key == "mixture_file") c.mixture_file = get_as<std::string>(v, k);
    else if (key == "eta") c.eta = get_as<double>(v, k);
    else if (key == "g") c.g = get_as<double>(v, k);
    else if (key == "tau") c.tau = get_as<double>(v, k);
    else if (key == "n") c.n = get_as<double>(v, k);
    else if (key == "atoms") c.atoms = get_as<double>(v, k);
    else if (key == "shots") c.shots = get_as<long long>(v, k);
    else if (key == "bins") c.bins = get_as<int>(v, k);
    else if (key == "range") c.range = get_as<double>(v, k);
    else if (key == "kmax") c.kmax = get_as<int>(v, k);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, k);
    else if (key == "phase_mode") c.phase_mode = get_as<std::string>(v, k);
    else if (key == "out") c.out = get_as<std::string>(v, k);
    else if (key == "emit") {
      if (!v.is_object()) throw config_error("config key 'emit' must be an object");
      for (const auto& [ek, ev] : v.items()) {
        if (ek == "histogram_csv") c.emit.histogram_csv = get_as<bool>(ev, "emit.histogram_csv");
        else if (ek == "result_json") c.emit.result_json = get_as<bool>(ev, "emit.result_json");
        else if (ek == "density_curves_csv") c.emit.density_curves_csv = get_as<bool>(ev, "emit.density_curves_csv");
        else throw config_error("unknown emit key '" + ek + "'");
      }
    } else {
      throw config_error("unknown config key '" + key + "'");
    }
  }
  return c;
}

std::vector<double> read_mixture_file(const std::filesystem::path& path) {
  std::istringstream in(slurp(path));
  std::vector<double> w;
  std::string line;
  while (std::getline(in, line)) {
    line = line.substr(0, line.find('#'));
    for (auto& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream fields(line);
    std::string tok;
    while (fields >> tok) {
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw config_error("mixture file has a non-numeric entry '" + tok + "'");
      w.push_back(x);
    }
  }
  if (w.empty()) throw config_error("mixture file holds no weights");
  return w;
}

SpinState make_state(const RunConfig& c) {
  try {
    if (c.state == "css") return SpinState::css();
    if (c.state == "dicke") {
      if (c.m > QuadratureSampler::kMaxDickeExcitation) throw config_error("--m must be <= 64");
      return SpinState::dicke(c.m);
    }
    if (c.state == "sss") return SpinState::squeezed_vacuum(c.xi);
    if (c.state == "mixture") {
      if (c.mixture_file.empty()) throw config_error("state 'mixture' needs a mixture file");
      auto w = read_mixture_file(c.mixture_file);
      if (w.size() > static_cast<std::size_t>(QuadratureSampler::kMaxDickeExcitation) + 1)
        throw config_error("mixture has weights beyond M = 64");
      return SpinState::number_mixture(std::move(w));
    }
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  } catch (const std::out_of_range& e) {
    throw config_error(e.what());
  }
  throw config_error("unknown state '" + c.state + "'");
}

double resolve_eta(const RunConfig& c) {
  const bool any_phys = c.g || c.tau || c.n || c.atoms;
  const bool all_phys = c.g && c.tau && c.n && c.atoms;
  if (c.eta && any_phys) throw config_error("give either eta or the physical parameters, not both");
  if (c.eta) {
    if (!(*c.eta > 0.0 && *c.eta <= 1.0)) throw config_error("eta must lie in (0, 1]");
    return *c.eta;
  }
  if (!any_phys) throw config_error("eta is required (or g, tau, n and atoms)");
  if (!all_phys) throw config_error("physical parameters need all of g, tau, n and atoms");
  try {
    return eta_from_physical({*c.g, *c.tau, *c.n, *c.atoms});
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
}

MeasurementConfig make_measurement(const RunConfig& c) {
  MeasurementConfig m;
  m.eta = resolve_eta(c);
  m.shots = c.shots;
  m.geometry = {c.bins, c.range};
  m.seed = c.seed;
  if (c.phase_mode == "random") m.phase_mode = PhaseMode::random_uniform;
  else if (c.phase_mode == "grid") m.phase_mode = PhaseMode::stratified_grid;
  else throw config_error("phase mode must be 'random' or 'grid'");
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  return m;
}

std::string density_curves_csv(const SpinState& truth, const NumberDistribution& fit, double eta, double range,
                               int points) {
  const auto exact = number_distribution(truth, truth_cutoff(truth)).rho;
  std::string s = "q,fit,true\n";
  char buf[96];
  for (int i = 0; i < points; ++i) {
    const double q = points == 1 ? 0.0 : -range + 2.0 * range * i / (points - 1);
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", q, phase_averaged_density(fit, eta, q),
                  phase_averaged_density(exact, eta, q));
    s += buf;
  }
  return s;
}

PipelineOutput run_pipeline(const RunConfig& c, std::ostream& log) {
  const auto state = make_state(c);
  const auto meas = make_measurement(c);
  if (c.kmax < 0 || c.kmax > kMaxFockOrder) throw config_error("kmax must lie in [0, 256]");

  const std::filesystem::path dir(c.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw config_error("cannot create output directory " + dir.string() + ": " + ec.message());

  PipelineOutput out{simulate_histogram(state, meas), {}};
  out.result = select_model(out.histogram, meas.eta, c.kmax);

  if (c.emit.histogram_csv) {
    std::ostringstream csv;
    write_histogram_csv(csv, out.histogram);
    write_file(dir / "histogram.csv", csv.str());
    write_file(dir / "histogram.json", histogram_sidecar_json(out.histogram, state, meas));
  }
  if (c.emit.result_json) write_file(dir / "result.json", out.result.to_json());
  if (c.emit.density_curves_csv)
    write_file(dir / "curves.csv", density_curves_csv(state, out.result.best_rho, meas.eta, c.range));

  log << "eta = " << meas.eta << "\n";
  log << "selected K = " << out.result.best_K << "\n";
  log << "rho = " << format_rho(out.result.best_rho) << "\n";
  return out;
}

bool oracle_dmatrix(std::ostream& os) {
  constexpr double tol = 1e-10;
  bool ok = true;
  char buf[160];
  os << "     N   max|norm-1|   max|<a,b>|   max|asym|  status\n";
  for (int N : {1, 2, 3, 4, 5, 8, 12, 16, 32, 64, 128, 256, 512, 1024}) {
    std::vector<std::vector<double>> cols;
    for (int M = 0; M <= N; ++M) cols.push_back(wigner_d_column(N, M));
    double norm = 0.0, ortho = 0.0, asym = 0.0;
    for (int a = 0; a <= N; ++a) {
      double s = 0.0;
      for (double x : cols[a]) s += x * x;
      norm = std::max(norm, std::abs(s - 1.0));
      for (int i = 0; i <= N; ++i) asym = std::max(asym, std::abs(std::abs(cols[a][i]) - std::abs(cols[a][N - i])));
      for (int b = a + 1; b <= N; ++b) {
        double d = 0.0;
        for (int i = 0; i <= N; ++i) d += cols[a][i] * cols[b][i];
        ortho = std::max(ortho, std::abs(d));
      }
    }
    const bool pass = norm <= tol && ortho <= tol && asym <= tol;
    ok = ok && pass;
    std::snprintf(buf, sizeof buf, "%6d   %10.3e   %10.3e   %10.3e  %s\n", N, norm, ortho, asym, pass ? "pass" : "FAIL");
    os << buf;
  }
  return ok;
}

bool oracle_folded(std::ostream& os) {
  bool ok = true;
  char buf[160];
  os << "  M        N=10       N=50      N=100      N=200      N=400  monotone\n";
  for (int M : {0, 1, 2}) {
    std::snprintf(buf, sizeof buf, "%3d", M);
    os << buf;
    double prev = std::numeric_limits<double>::infinity();
    bool mono = true;
    for (int N : {10, 50, 100, 200, 400}) {
      const double d = folded_compare(N, M);
      if (N >= 50) {
        mono = mono && d < prev;
        prev = d;
      }
      std::snprintf(buf, sizeof buf, " %10.3e", d);
      os << buf;
    }
    os << (mono ? "  pass\n" : "  FAIL\n");
    ok = ok && mono;
  }
  const double d400 = folded_compare(400, 0);
  const bool bound = d400 <= 0.02;
  std::snprintf(buf, sizeof buf, "N=400, M=0: %.3e <= 0.02  %s\n", d400, bound ? "pass" : "FAIL");
  os << buf;
  return ok && bound;
}

bool oracle_kernels(std::ostream& os) {
  constexpr int kMaxM = 20;
  constexpr int panels = 32000;
  constexpr double lo = -16.0, hi = 16.0, tol = 1e-8;
  bool ok = true;
  char buf[160];
  os << "   eta   max_M |mass-1|  worst M  status\n";
  for (double eta : {0.1, 0.3, 0.5, 0.9, 1.0}) {
    // Composite Simpson over [-16, 16].
    std::vector<double> mass(kMaxM + 1, 0.0), a(kMaxM + 1);
    const double h = (hi - lo) / panels;
    for (int i = 0; i <= panels; ++i) {
      kernel_A_all(eta, lo + i * h, a);
      const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      for (int M = 0; M <= kMaxM; ++M) mass[M] += w * a[M] * h / 3.0;
    }
    double worst = 0.0;
    int arg = 0;
    for (int M = 0; M <= kMaxM; ++M)
      if (std::abs(mass[M] - 1.0) > worst) {
        worst = std::abs(mass[M] - 1.0);
        arg = M;
      }
    const bool pass = worst <= tol;
    ok = ok && pass;
    std::snprintf(buf, sizeof buf, "%6.2f   %12.3e  %7d  %s\n", eta, worst, arg, pass ? "pass" : "FAIL");
    os << buf;
  }
  return ok;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulate collective-spin quadrature measurements and reconstruct the excitation-number distribution"};
  app.option_defaults()->always_capture_default();

  RunConfig flags;
  double eta = 0.0, g = 0.0, tau = 0.0, n = 0.0, atoms = 0.0;
  std::string config_path;

  auto* o_state = app.add_option("--state", flags.state, "css | sss | dicke | mixture")
                      ->check(CLI::IsMember({"css", "sss", "dicke", "mixture"}));
  auto* o_xi = app.add_option("--xi", flags.xi, "squeeze parameter for sss");
  auto* o_m = app.add_option("--m", flags.m, "excitation number for dicke");
  auto* o_mix = app.add_option("--mixture-file", flags.mixture_file, "mixture weights, one list of numbers");
  auto* o_eta = app.add_option("--eta", eta, "detection efficiency in (0, 1]");
  auto* o_g = app.add_option("--g", g, "coupling constant");
  auto* o_tau = app.add_option("--tau", tau, "interaction time");
  auto* o_n = app.add_option("--n", n, "probe photon number");
  auto* o_atoms = app.add_option("--atoms", atoms, "atom number");
  for (auto* o : {o_g, o_tau, o_n, o_atoms}) o_eta->excludes(o);
  auto* o_shots = app.add_option("--shots", flags.shots, "number of shots R");
  auto* o_bins = app.add_option("--bins", flags.bins, "histogram bin count");
  auto* o_range = app.add_option("--range", flags.range, "histogram half-width");
  auto* o_kmax = app.add_option("--kmax", flags.kmax, "largest cutoff K tried");
  auto* o_seed = app.add_option("--seed", flags.seed, "random seed");
  auto* o_phase = app.add_option("--phase-mode", flags.phase_mode, "random | grid")->check(CLI::IsMember({"random", "grid"}));
  auto* o_out = app.add_option("--out", flags.out, "output directory");
  app.add_option("--config", config_path, "JSON config file; flags override it")->check(CLI::ExistingFile);

  auto* oracle = app.add_subcommand("oracle", "run a validation suite");
  oracle->require_subcommand(1);
  auto* dmatrix = oracle->add_subcommand("dmatrix", "rotation-matrix unitarity and orthogonality");
  auto* folded = oracle->add_subcommand("folded", "finite-N projection vs quadrature densities");
  auto* kernels = oracle->add_subcommand("kernels", "kernel normalization");

  auto* eta_cmd = app.add_subcommand("eta", "efficiency from physical parameters");
  PhysicalParams phys;
  eta_cmd->add_option("--g", phys.g, "coupling constant")->required();
  eta_cmd->add_option("--tau", phys.tau, "interaction time")->required();
  eta_cmd->add_option("--n", phys.n, "probe photon number")->required();
  eta_cmd->add_option("--atoms", phys.N, "atom number")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*oracle) {
      bool ok = false;
      if (*dmatrix) ok = oracle_dmatrix(out);
      else if (*folded) ok = oracle_folded(out);
      else if (*kernels) ok = oracle_kernels(out);
      out << (ok ? "all checks passed\n" : "some checks FAILED\n");
      return ok ? 0 : 1;
    }
    if (*eta_cmd) {
      try {
        const double e = eta_from_physical(phys);
        char buf[200];
        std::snprintf(buf, sizeof buf, "eta = %.9g\nsignal amplitude g*tau*n*sqrt(N/2) = %.9g\nnoise amplitude sqrt(2n) = %.9g\n", e,
                      phys.signal_amplitude(), phys.noise_amplitude());
        out << buf;
        return 0;
      } catch (const std::invalid_argument& e) {
        throw config_error(e.what());
      }
    }

    RunConfig cfg;
    if (!config_path.empty()) cfg = apply_config_json(slurp(config_path), cfg);
    if (o_state->count()) cfg.state = flags.state;
    if (o_xi->count()) cfg.xi = flags.xi;
    if (o_m->count()) cfg.m = flags.m;
    if (o_mix->count()) cfg.mixture_file = flags.mixture_file;
    if (o_eta->count()) {
      cfg.eta = eta;
      cfg.g = cfg.tau = cfg.n = cfg.atoms = std::nullopt;
    }
    if (o_g->count() || o_tau->count() || o_n->count() || o_atoms->count()) cfg.eta = std::nullopt;
    if (o_g->count()) cfg.g = g;
    if (o_tau->count()) cfg.tau = tau;
    if (o_n->count()) cfg.n = n;
    if (o_atoms->count()) cfg.atoms = atoms;
    if (o_shots->count()) cfg.shots = flags.shots;
    if (o_bins->count()) cfg.bins = flags.bins;
    if (o_range->count()) cfg.range = flags.range;
    if (o_kmax->count()) cfg.kmax = flags.kmax;
    if (o_seed->count()) cfg.seed = flags.seed;
    if (o_phase->count()) cfg.phase_mode = flags.phase_mode;
    if (o_out->count()) cfg.out = flags.out;

    const auto result = run_pipeline(cfg, out);
    bool converged = true;
    for (const auto& f : result.result.fits) converged = converged && f.converged();
    if (!converged) err << "warning: one or more fits did not converge (see diagnostics in result.json)\n";
    return 0;
  } catch (const config_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace spintomo::cli
