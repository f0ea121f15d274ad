// chaoswave: verification suite, simulations and reports for the 1-d wave
// equation driven by multiplicative space-time homogeneous Gaussian noise.
//
// Subcommands: verify, moments, noise-check, simulate, density, delta-scan,
// constants.  Every run echoes its effective configuration into the output
// artifacts, which are named <command>-<config-hash>.{json,csv}.
//
// Exit codes: 0 success, 1 failed check, 2 configuration error, 3 numeric
// budget exhaustion.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <chaoswave/common.hpp>
#include <chaoswave/hilbert.hpp>
#include <chaoswave/kernels.hpp>
#include <chaoswave/model.hpp>
#include <chaoswave/noise.hpp>
#include <chaoswave/quadrature.hpp>
#include <chaoswave/rng.hpp>
#include <chaoswave/solver.hpp>
#include <chaoswave/spectral.hpp>
#include <chaoswave/stats.hpp>

namespace cw = chaoswave;
using json = nlohmann::ordered_json;

namespace {

struct RunConfig {
  double hurst = 0.75;
  double alpha = 0.5;
  std::string spatial_mode = "riesz";
  double T = 1.0;
  double L = 1.5;
  int nt = 16;
  int nx = 16;
  double t = 1.0;
  double x = 0.0;
  int truncation = 2;
  std::uint64_t seed = 20219;
  int threads = 0;
  long samples_simulate = 2000;
  long samples_density = 100000;
  long samples_noise_check = 100000;
  long samples_delta_scan = 10000;
  long samples_modulus = 4000;
  std::vector<double> delta_grid = {0.4, 0.2, 0.1, 0.05};
  int omega_m = 10;
  int m_ladder_max = 10;
  double density_bandwidth = 0.02;
  double atom_width = 0.001;
  bool dump_noise = false;
  std::string output_dir = "out";

  json to_json() const {
    json j;
    j["model"] = {{"hurst", hurst},
                  {"alpha", alpha},
                  {"spatial_mode", spatial_mode}};
    j["grid"] = {{"T", T}, {"L", L}, {"nt", nt}, {"nx", nx}};
    j["target"] = {{"t", t}, {"x", x}};
    j["truncation"] = truncation;
    j["seed"] = seed;
    j["threads"] = threads;
    j["samples"] = {{"simulate", samples_simulate},
                    {"density", samples_density},
                    {"noise_check", samples_noise_check},
                    {"delta_scan", samples_delta_scan},
                    {"modulus", samples_modulus}};
    j["delta_grid"] = delta_grid;
    j["omega_m"] = omega_m;
    j["m_ladder_max"] = m_ladder_max;
    j["density_bandwidth"] = density_bandwidth;
    j["atom_width"] = atom_width;
    j["dump_noise"] = dump_noise;
    j["output_dir"] = output_dir;
    return j;
  }

  void merge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    json j = json::parse(in);
    if (j.contains("model")) {
      const auto& m = j["model"];
      if (m.contains("hurst")) hurst = m["hurst"];
      if (m.contains("alpha")) alpha = m["alpha"];
      if (m.contains("spatial_mode")) spatial_mode = m["spatial_mode"];
    }
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      if (g.contains("T")) T = g["T"];
      if (g.contains("L")) L = g["L"];
      if (g.contains("nt")) nt = g["nt"];
      if (g.contains("nx")) nx = g["nx"];
    }
    if (j.contains("target")) {
      const auto& g = j["target"];
      if (g.contains("t")) t = g["t"];
      if (g.contains("x")) x = g["x"];
    }
    if (j.contains("truncation")) truncation = j["truncation"];
    if (j.contains("seed")) seed = j["seed"];
    if (j.contains("threads")) threads = j["threads"];
    if (j.contains("samples")) {
      const auto& s = j["samples"];
      if (s.contains("simulate")) samples_simulate = s["simulate"];
      if (s.contains("density")) samples_density = s["density"];
      if (s.contains("noise_check")) samples_noise_check = s["noise_check"];
      if (s.contains("delta_scan")) samples_delta_scan = s["delta_scan"];
      if (s.contains("modulus")) samples_modulus = s["modulus"];
    }
    if (j.contains("delta_grid"))
      delta_grid = j["delta_grid"].get<std::vector<double>>();
    if (j.contains("omega_m")) omega_m = j["omega_m"];
    if (j.contains("m_ladder_max")) m_ladder_max = j["m_ladder_max"];
    if (j.contains("density_bandwidth"))
      density_bandwidth = j["density_bandwidth"];
    if (j.contains("atom_width")) atom_width = j["atom_width"];
    if (j.contains("dump_noise")) dump_noise = j["dump_noise"];
    if (j.contains("output_dir")) output_dir = j["output_dir"];
  }
};

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(cfg.to_json().dump())));
  return buf;
}

cw::CovarianceModel make_model(const RunConfig& cfg) {
  if (cfg.spatial_mode == "riesz")
    return cw::CovarianceModel::riesz(cfg.hurst, cfg.alpha);
  if (cfg.spatial_mode == "white")
    return cw::CovarianceModel::white(cfg.hurst);
  throw std::invalid_argument("spatial_mode must be riesz or white");
}

cw::GridSpec make_grid(const RunConfig& cfg) {
  cw::GridSpec g{cfg.T, cfg.L, cfg.nt, cfg.nx};
  g.validate();
  return g;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require_finite(double v, const std::string& where) {
  if (!std::isfinite(v))
    throw std::runtime_error("non-finite value in " + where);
}

struct ArtifactWriter {
  std::string dir, command, hash;
  json summary;
  std::string csv;

  ArtifactWriter(const RunConfig& cfg, const std::string& cmd)
      : dir(cfg.output_dir), command(cmd), hash(config_hash(cfg)) {
    summary["command"] = cmd;
    summary["config"] = cfg.to_json();
  }

  void csv_row(const std::string& row) {
    csv += row;
    csv += '\n';
  }

  std::string base() const { return dir + "/" + command + "-" + hash; }

  void flush() {
    std::filesystem::create_directories(dir);
    {
      std::ofstream out(base() + ".json", std::ios::binary);
      out << summary.dump(2) << "\n";
    }
    if (!csv.empty()) {
      std::ofstream out(base() + ".csv", std::ios::binary);
      out << csv;
    }
    std::printf("wrote %s.json\n", base().c_str());
  }
};

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct Check {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  double gap = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::string method = "quadrature";
};

Check make_check(const std::string& name, double value, double reference,
                 double tol, bool relative, const std::string& method) {
  Check c;
  c.name = name;
  c.value = value;
  c.reference = reference;
  c.gap = std::abs(value - reference);
  c.tol = relative ? tol * (std::abs(reference) + 1e-300) : tol;
  c.pass = c.gap <= c.tol;
  c.method = method;
  return c;
}

Check make_bound_check(const std::string& name, double value, double bound) {
  Check c;
  c.name = name;
  c.value = value;
  c.reference = bound;
  c.gap = value - bound;
  c.tol = 0.0;
  c.pass = value <= bound;
  c.method = "inequality";
  return c;
}

std::vector<Check> run_verify_suite(const cw::CovarianceModel& model) {
  std::vector<Check> checks;
  const bool white = model.is_white();

  for (double t : {0.5, 1.0, 2.0})
    checks.push_back(make_check("psi_grid t=" + fmt(t), cw::psi_grid(t, 128),
                                cw::psi_exact(t), 1e-12, false, "grid"));

  for (double s : {0.3, 1.0, 2.0})
    checks.push_back(make_check("plancherel_FG s=" + fmt(s),
                                cw::l2_norm_FG_quadrature(s), cw::l2_norm_FG(s),
                                1e-5, false, "quadrature"));

  for (double beta : {0.5, 1.0, 2.0, 4.0, 8.0})
    for (double xi : {0.0, 0.5, 1.0, 3.2, 10.0}) {
      const double horizon = 46.0 / beta;  // e^(-beta u) below 1e-20
      const double quad =
          cw::integrate_adaptive(
              [beta, xi](double u) {
                const double fg = cw::WaveKernel::FG(u, xi);
                return std::exp(-beta * u) * fg * fg;
              },
              0.0, horizon, {1e-12, 1e-10, 400000})
              .value;
      checks.push_back(make_check("I_beta_w beta=" + fmt(beta) +
                                      " xi=" + fmt(xi),
                                  quad, cw::I_beta_w(beta, xi), 1e-8, false,
                                  "quadrature"));
    }

  // Parseval suite.
  using TF = cw::TestFunction;
  const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * cw::kPi);
  struct PairCase {
    std::string name;
    TF a, b;
    bool conj;
  };
  std::vector<PairCase> pairs;
  pairs.push_back({"gauss_std", TF::gaussian(0.0, 1.0, inv_sqrt2pi),
                   TF::gaussian(0.0, 1.0, inv_sqrt2pi), false});
  pairs.push_back(
      {"gauss_shifted", TF::gaussian(0.0, 1.0), TF::gaussian(1.5, 0.7), false});
  pairs.push_back({"gauss_scaled", TF::gaussian(0.5, 2.0, 3.0),
                   TF::gaussian(0.5, 2.0, 3.0), false});
  pairs.push_back({"gauss_mixture",
                   TF::gaussian(-1.0, 0.8).plus(TF::gaussian(1.2, 1.1, -0.5)),
                   TF::gaussian(0.3, 0.9), false});
  pairs.push_back(
      {"indicator_unit", TF::indicator(0.0, 1.0), TF::indicator(0.0, 1.0), false});
  pairs.push_back({"indicator_sym", TF::indicator(-0.8, 0.8, 1.25),
                   TF::indicator(-0.8, 0.8, 1.25), false});
  pairs.push_back({"cone_t1", TF::cone(1.0), TF::cone(1.0), false});
  pairs.push_back({"modulated_cone_eta1", TF::cone(1.0).modulated(1.0),
                   TF::cone(1.0).modulated(1.0), true});
  pairs.push_back({"modulated_cone_eta2", TF::cone(0.5).modulated(2.0),
                   TF::cone(0.5).modulated(2.0), true});
  pairs.push_back({"modulated_gauss", TF::gaussian(0.0, 1.0).modulated(1.5),
                   TF::gaussian(0.0, 1.0).modulated(1.5), true});
  pairs.push_back({"indicator_vs_gauss", TF::indicator(-1.0, 1.0),
                   TF::gaussian(0.2, 0.8), false});
  for (const auto& pc : pairs) {
    const cw::EnergyReport r = cw::energy_pair(model, pc.a, pc.b, pc.conj);
    checks.push_back(make_check("parseval_" + pc.name, r.direct_value,
                                r.spectral_value, 1e-5, true, "dual"));
  }
  {
    cw::SpaceTimeProduct f1{TF::gaussian(0.5, 0.6), TF::gaussian(0.0, 1.0)};
    cw::SpaceTimeProduct f2{TF::gaussian(0.8, 0.5), TF::gaussian(0.4, 0.9)};
    const cw::EnergyReport r11 = cw::inner_H(model, f1, f1);
    const cw::EnergyReport r12 = cw::inner_H(model, f1, f2);
    checks.push_back(make_check("parseval_spacetime_diag", r11.direct_value,
                                r11.spectral_value, 1e-5, true, "dual"));
    checks.push_back(make_check("parseval_spacetime_pair", r12.direct_value,
                                r12.spectral_value, 1e-5, true, "dual"));
  }

  // Max principle.
  for (double t : {0.5, 1.0}) {
    const std::vector<double> etas = {0.0, 0.5, 1.0, 2.0, 5.0};
    const std::vector<double> mvals = cw::max_principle_scan(model, t, etas);
    for (std::size_t i = 1; i < etas.size(); ++i)
      checks.push_back(make_bound_check(
          "max_principle t=" + fmt(t) + " eta=" + fmt(etas[i]), mvals[i],
          mvals[0] * (1.0 + 1e-7)));
  }

  // psi_0 <= c_0 t on (0,1) and phi <= Gamma_t psi_0.
  const double c0 = model.c0();
  for (int k = 1; k <= 9; ++k) {
    const double t = 0.1 * k;
    const double p0 = cw::psi0(model, t);
    Check c1 = make_bound_check("psi0_le_c0t t=" + fmt(t), p0, c0 * t);
    if (white) c1.method = "closed-form";
    checks.push_back(c1);
    checks.push_back(make_bound_check("phi_le_gamma_psi0 t=" + fmt(t),
                                      cw::phi(model, t),
                                      model.big_gamma(t) * p0));
  }

  checks.push_back(make_check("phi_eq_alpha1 t=1", cw::phi(model, 1.0),
                              cw::alpha1(model, 1.0), 1e-6, true, "dual"));

  // Bound chain for n <= 2 (the deterministic part of the alpha ladder).
  const std::vector<double> Ms = {2.0, 5.0, 10.0, 20.0};
  for (double t : {0.5, 1.0})
    for (int n = 1; n <= 2; ++n) {
      const cw::AlphaReport rep = cw::alpha_bound_check(model, n, t, Ms);
      for (std::size_t mi = 0; mi < Ms.size(); ++mi)
        checks.push_back(make_bound_check(
            "alpha_bound n=" + std::to_string(n) + " t=" + fmt(t) +
                " M=" + fmt(Ms[mi]),
            rep.alpha[static_cast<std::size_t>(n)], rep.bound[n - 1][mi]));
    }

  // Hermitian symmetry of the DFT on a fixed pseudo-random grid.
  {
    Eigen::MatrixXd grid(32, 32);
    std::uint64_t state = 0x9d2c5680ULL;
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j)
        grid(i, j) =
            static_cast<double>(cw::splitmix64(state) >> 11) * 0x1.0p-53 - 0.5;
    checks.push_back(make_bound_check("hermiticity_32x32",
                                      cw::hermiticity_check(grid), 1e-10));
  }
  return checks;
}

int cmd_verify(const RunConfig& cfg) {
  const cw::CovarianceModel model = make_model(cfg);
  ArtifactWriter art(cfg, "verify");
  const std::vector<Check> checks = run_verify_suite(model);
  bool all = true;
  json arr = json::array();
  art.csv_row("name,value,reference,gap,tol,pass,method");
  for (const Check& c : checks) {
    all = all && c.pass;
    arr.push_back({{"name", c.name},
                   {"value", c.value},
                   {"reference", c.reference},
                   {"gap", c.gap},
                   {"tol", c.tol},
                   {"pass", c.pass},
                   {"method", c.method}});
    require_finite(c.value, c.name);
    art.csv_row(c.name + "," + fmt(c.value) + "," + fmt(c.reference) + "," +
                fmt(c.gap) + "," + fmt(c.tol) + "," + (c.pass ? "1" : "0") +
                "," + c.method);
    if (!c.pass)
      std::fprintf(stderr, "verify FAILED: %s (value %.12g, ref %.12g)\n",
                   c.name.c_str(), c.value, c.reference);
  }
  art.summary["checks"] = arr;
  art.summary["all_pass"] = all;
  art.flush();
  return all ? 0 : 1;
}

// ---------------------------------------------------------------------------
// constants / moments
// ---------------------------------------------------------------------------

int cmd_constants(const RunConfig& cfg) {
  const cw::CovarianceModel model = make_model(cfg);
  ArtifactWriter art(cfg, "constants");
  const cw::ConstantsTable table = cw::make_constants(model, cfg.T);
  const cw::MalliavinBoundReport d1 = cw::d_norm_constant(model, cfg.T);
  const cw::MalliavinBoundReport d2 = cw::d2_norm_constant(model, cfg.T);

  json jt;
  jt["T"] = table.T;
  jt["big_gamma_T"] = table.big_gamma_T;
  jt["c0"] = table.c0;
  jt["dalang_integral"] = model.dalang_integral();
  jt["M_T"] = table.M_T;
  jt["C_T"] = table.C_T;
  jt["M_T_prime"] = table.M_T_prime;
  jt["C_T_prime"] = table.C_T_prime;
  jt["C_T_dprime"] = table.C_T_dprime;
  jt["selection_ratio"] = d1.ratio;
  jt["selection_ratio_at_half_M"] = d1.ratio_at_half_M;
  jt["H_values"] = d1.H_values;
  jt["H_bounds"] = d1.H_bounds;
  jt["d2_selection_ratio"] = d2.ratio;
  art.summary["constants"] = jt;

  art.csv_row("key,value");
  art.csv_row("big_gamma_T," + fmt(table.big_gamma_T));
  art.csv_row("c0," + fmt(table.c0));
  art.csv_row("M_T," + fmt(table.M_T));
  art.csv_row("C_T," + fmt(table.C_T));
  art.csv_row("M_T_prime," + fmt(table.M_T_prime));
  art.csv_row("C_T_prime," + fmt(table.C_T_prime));
  art.csv_row("C_T_dprime," + fmt(table.C_T_dprime));
  json km = json::array();
  for (double M = 2.0; M <= 2.0 * std::max(table.M_T, table.M_T_prime);
       M *= 2.0) {
    const double k = model.KM(M);
    require_finite(k, "K_M");
    km.push_back({{"M", M}, {"K_M", k}});
    art.csv_row("K_M M=" + fmt(M) + "," + fmt(k));
  }
  art.summary["K_M_table"] = km;
  art.flush();
  return 0;
}

int cmd_moments(const RunConfig& cfg) {
  const cw::CovarianceModel model = make_model(cfg);
  ArtifactWriter art(cfg, "moments");
  const int N = std::min(cfg.truncation, 3);
  const std::vector<double> Ms = {2.0, 5.0, 10.0, 20.0};
  const cw::AlphaReport bounds = cw::alpha_bound_check(model, N, cfg.t, Ms);
  const cw::AlphaReport series = cw::second_moment_series(model, cfg.t, N);

  json j;
  j["t"] = cfg.t;
  j["N"] = N;
  j["alpha"] = series.alpha;
  j["alpha3_std_error"] = series.alpha3_std_error;
  j["partial_sum"] = series.partial_sum;
  j["tail_bound"] = series.tail_bound;
  j["tail_M"] = series.tail_M;
  j["M_scan"] = bounds.M_scan;
  j["bounds"] = bounds.bound;
  j["bounds_hold"] = bounds.bounds_hold;
  art.summary["moments"] = j;

  art.csv_row("n,alpha,alpha_over_nfact");
  double fact = 1.0;
  for (int n = 0; n <= N; ++n) {
    if (n > 0) fact *= n;
    require_finite(series.alpha[static_cast<std::size_t>(n)], "alpha_n");
    art.csv_row(std::to_string(n) + "," +
                fmt(series.alpha[static_cast<std::size_t>(n)]) + "," +
                fmt(series.alpha[static_cast<std::size_t>(n)] / fact));
  }
  art.flush();
  return bounds.bounds_hold ? 0 : 1;
}

// ---------------------------------------------------------------------------
// noise-check / simulate / density / delta-scan
// ---------------------------------------------------------------------------

int cmd_noise_check(const RunConfig& cfg) {
  const cw::CovarianceModel model = make_model(cfg);
  ArtifactWriter art(cfg, "noise-check");
  cw::GridSpec grid{cfg.T, cfg.L, std::min(cfg.nt, 8), std::min(cfg.nx, 8)};
  grid.validate();
  cw::CellCovariance cov = cw::build_covariance(model, grid);
  cw::factorize(cov);
  cw::NoiseGenerator gen(cov, cfg.seed);

  const int m = grid.cells();
  Eigen::MatrixXd exact(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      exact(a, b) = cov.C_time(a / grid.nx, b / grid.nx) *
                    cov.C_space(a % grid.nx, b % grid.nx);

  const long n = cfg.samples_noise_check;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(m, m);
  std::vector<double> functional(static_cast<std::size_t>(n));
  Eigen::VectorXd v(m);
  for (long i = 0; i < n; ++i) {
    const cw::NoiseSample s = gen.sample(static_cast<std::uint64_t>(i));
    for (int it = 0; it < grid.nt; ++it)
      for (int ix = 0; ix < grid.nx; ++ix)
        v(it * grid.nx + ix) = s.increments(it, ix);
    sum.noalias() += v * v.transpose();
    functional[static_cast<std::size_t>(i)] = v.sum();
  }
  const Eigen::MatrixXd emp = sum / static_cast<double>(n);
  double worst_dev_se = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const double se = std::sqrt(
          (exact(a, a) * exact(b, b) + exact(a, b) * exact(a, b)) / n);
      worst_dev_se =
          std::max(worst_dev_se, std::abs(emp(a, b) - exact(a, b)) / se);
    }
  const cw::Moments fm = cw::compute_moments(functional);
  const double skew_se = std::sqrt(6.0 / static_cast<double>(n));

  json j;
  j["nsamples"] = n;
  j["grid"] = {{"nt", grid.nt}, {"nx", grid.nx}};
  j["worst_entry_deviation_in_se"] = worst_dev_se;
  j["psd_slack_time"] = cov.F_time.psd_slack;
  j["psd_slack_space"] = cov.F_space.psd_slack;
  j["cholesky_time"] = cov.F_time.cholesky;
  j["cholesky_space"] = cov.F_space.cholesky;
  j["functional_skewness"] = fm.skewness;
  j["functional_skewness_se"] = skew_se;
  const bool pass =
      worst_dev_se <= 4.0 && std::abs(fm.skewness) <= 4.0 * skew_se;
  j["pass"] = pass;
  art.summary["noise_check"] = j;
  art.csv_row("key,value");
  art.csv_row("worst_entry_deviation_in_se," + fmt(worst_dev_se));
  art.csv_row("functional_skewness," + fmt(fm.skewness));

  if (cfg.dump_noise)
    cw::write_noise_dump(art.base() + ".cwns", gen,
                         static_cast<std::uint64_t>(std::min<long>(n, 1000)));
  art.flush();
  return pass ? 0 : 1;
}

int cmd_simulate(const RunConfig& cfg) {
  const cw::CovarianceModel model = make_model(cfg);
  ArtifactWriter art(cfg, "simulate");
  const long n = cfg.samples_simulate;
  json j;
  j["nsamples"] = n;
  if (n == 0) {  // no-op success
    art.summary["simulate"] = j;
    art.flush();
    return 0;
  }
  const cw::GridSpec grid = make_grid(cfg);
  cw::CellCovariance cov = cw::build_covariance(model, grid);
  cw::factorize(cov);
  const cw::ChaosCoefficients co =
      cw::project_kernels(model, cov, cfg.t, cfg.x, cfg.truncation);
  cw::NoiseGenerator gen(cov, cfg.seed);

  art.csv_row("index,u,I1,I2,I3,Q");
  std::vector<double> us(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd zeta = gen.normals(static_cast<std::uint64_t>(i));
    const cw::SolutionSample s = cw::sample_solution(co, zeta);
    const cw::MalliavinSample ms = cw::malliavin_sample(co, cov, zeta);
    us[static_cast<std::size_t>(i)] = s.value;
    require_finite(s.value, "simulate");
    require_finite(ms.Q, "simulate Q");
    art.csv_row(std::to_string(i) + "," + fmt(s.value) + "," + fmt(s.chaos[1]) +
                "," + fmt(s.chaos[2]) + "," + fmt(s.chaos[3]) + "," +
                fmt(ms.Q));
  }
  const cw::Moments mo = cw::compute_moments(us);
  j["mean"] = mo.mean;
  j["variance"] = mo.variance;
  double disc = 0.0;
  for (int k = 1; k <= co.N; ++k) disc += co.tensor_norm2(k);
  j["discrete_variance"] = disc;
  for (int k = 1; k <= co.N; ++k)
    j["tensor_norm2_" + std::to_string(k)] = co.tensor_norm2(k);
  art.summary["simulate"] = j;
  if (cfg.dump_noise)
    cw::write_noise_dump(art.base() + ".cwns", gen,
                         static_cast<std::uint64_t>(std::min<long>(n, 1000)));
  art.flush();
  return 0;
}

int cmd_density(const RunConfig& cfg) {
  const cw::CovarianceModel model = make_model(cfg);
  ArtifactWriter art(cfg, "density");
  const cw::GridSpec grid = make_grid(cfg);
  cw::CellCovariance cov = cw::build_covariance(model, grid);
  cw::factorize(cov);
  const cw::ChaosCoefficients co =
      cw::project_kernels(model, cov, cfg.t, cfg.x, cfg.truncation);
  cw::NoiseGenerator gen(cov, cfg.seed);

  const long n = cfg.samples_density;
  std::vector<double> us(static_cast<std::size_t>(n));
  {
    const long block = 512;
    for (long start = 0; start < n; start += block) {
      const long B = std::min(block, n - start);
      for (long b = 0; b < B; ++b) {
        const Eigen::VectorXd zeta =
            gen.normals(static_cast<std::uint64_t>(start + b));
        us[static_cast<std::size_t>(start + b)] =
            cw::sample_solution(co, zeta).value;
      }
    }
  }
  const double exact_sigma =
      cfg.truncation == 1 ? std::sqrt(cw::alpha1(model, cfg.t)) : -1.0;
  const cw::DensityReport rep =
      cw::density_report(us, cfg.density_bandwidth, cfg.m_ladder_max,
                         cfg.atom_width, exact_sigma);

  json j;
  j["nsamples"] = rep.nsamples;
  j["bandwidth"] = rep.bandwidth;
  j["atom_width"] = rep.atom_width;
  j["atom_mass_max"] = rep.atom_mass_max;
  j["truncation_mass"] = rep.truncation_mass;
  j["ks_vs_gaussian"] = rep.ks_vs_gaussian;
  j["ks_critical_5pct"] = rep.ks_critical_5pct;
  if (exact_sigma > 0.0) j["exact_sigma"] = exact_sigma;
  art.summary["density"] = j;
  art.csv_row("x,density");
  for (std::size_t i = 0; i < rep.kde_x.size(); ++i) {
    require_finite(rep.kde_density[i], "kde");
    art.csv_row(fmt(rep.kde_x[i]) + "," + fmt(rep.kde_density[i]));
  }
  art.flush();
  if (exact_sigma > 0.0 && rep.ks_vs_gaussian > rep.ks_critical_5pct) return 1;
  return 0;
}

int cmd_delta_scan(const RunConfig& cfg) {
  const cw::CovarianceModel model = make_model(cfg);
  ArtifactWriter art(cfg, "delta-scan");
  const cw::GridSpec grid = make_grid(cfg);
  cw::CellCovariance cov = cw::build_covariance(model, grid);
  cw::factorize(cov);
  const cw::SixReport rep =
      cw::delta_scan(model, cov, cfg.t, cfg.x, cfg.truncation, cfg.omega_m,
                     cfg.delta_grid, cfg.samples_delta_scan, cfg.seed);
  json j;
  j["t"] = rep.t;
  j["x"] = rep.x;
  j["omega_m"] = rep.m_level;
  j["eps"] = rep.eps;
  j["nsamples"] = rep.nsamples;
  j["delta_grid"] = rep.delta_grid;
  j["big_gamma_delta"] = rep.big_gamma_delta;
  j["g_estimate"] = rep.g_estimate;
  j["rhs"] = rep.rhs;
  j["p_hat"] = rep.p_hat;
  j["C_T"] = rep.constants.C_T;
  j["C_T_dprime"] = rep.constants.C_T_dprime;
  j["C_T_star"] = rep.constants.C_T_star;
  j["c0"] = rep.constants.c0;
  art.summary["delta_scan"] = j;
  art.csv_row("delta,big_gamma,g_estimate,rhs");
  bool decreasing = true;
  for (std::size_t i = 0; i < rep.delta_grid.size(); ++i) {
    require_finite(rep.rhs[i], "rhs");
    if (i > 0) decreasing = decreasing && rep.rhs[i] < rep.rhs[i - 1];
    art.csv_row(fmt(rep.delta_grid[i]) + "," + fmt(rep.big_gamma_delta[i]) +
                "," + fmt(rep.g_estimate[i]) + "," + fmt(rep.rhs[i]));
  }
  art.summary["rhs_decreasing"] = decreasing;
  art.flush();
  return (decreasing && rep.p_hat == 0.0) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Numerical toolkit for the stochastic wave equation with space-time "
      "homogeneous Gaussian noise"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  std::string config_path;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--hurst", cfg.hurst, "temporal parameter H");
  app.add_option("--alpha", cfg.alpha, "spatial Riesz parameter");
  app.add_option("--mode", cfg.spatial_mode, "riesz | white");
  app.add_option("--T", cfg.T, "time horizon");
  app.add_option("--L", cfg.L, "spatial half-width");
  app.add_option("--nt", cfg.nt, "time cells");
  app.add_option("--nx", cfg.nx, "space cells");
  app.add_option("--t", cfg.t, "target time");
  app.add_option("--x", cfg.x, "target position");
  app.add_option("--N", cfg.truncation, "chaos truncation (<= 3)");
  app.add_option("--seed", cfg.seed, "RNG seed");
  app.add_option("--threads", cfg.threads, "worker cap (0 = hardware)");
  app.add_option("--count", cfg.samples_simulate, "simulate sample count");
  app.add_option("--output-dir", cfg.output_dir, "artifact directory");
  app.add_flag("--dump-noise", cfg.dump_noise, "write a binary noise dump");

  auto* verify = app.add_subcommand("verify", "deterministic identity suite");
  auto* moments = app.add_subcommand("moments", "alpha ladder and bounds");
  auto* noise = app.add_subcommand("noise-check", "noise law diagnostics");
  auto* simulate =
      app.add_subcommand("simulate", "sample the truncated solution");
  auto* density = app.add_subcommand("density", "law-of-solution report");
  auto* dscan = app.add_subcommand("delta-scan", "density-argument experiment");
  auto* constants = app.add_subcommand("constants", "derived constants table");

  // Merge the config file before flag parsing so that flags win.
  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config") {
      try {
        cfg.merge_file(args[i + 1]);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
      }
    }

  CLI11_PARSE(app, argc, argv);

  if (const char* env = std::getenv("CHAOSWAVE_SEED"))
    cfg.seed = std::strtoull(env, nullptr, 10);
  cw::set_max_threads(cfg.threads);

  try {
    if (verify->parsed()) return cmd_verify(cfg);
    if (moments->parsed()) return cmd_moments(cfg);
    if (noise->parsed()) return cmd_noise_check(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (density->parsed()) return cmd_density(cfg);
    if (dscan->parsed()) return cmd_delta_scan(cfg);
    if (constants->parsed()) return cmd_constants(cfg);
  } catch (const cw::QuadratureError& e) {
    std::fprintf(stderr, "budget exhaustion: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
