#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "modeuler/cloud.hpp"
#include "modeuler/config.hpp"
#include "modeuler/constants.hpp"
#include "modeuler/coupling.hpp"
#include "modeuler/experiments.hpp"
#include "modeuler/measure.hpp"
#include "modeuler/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace modeuler;

namespace {

struct Common {
  std::string config_path;
  std::string out_override;
  int threads = 0;
  double sigma_override = std::numeric_limits<double>::quiet_NaN();
  double delta_override = std::numeric_limits<double>::quiet_NaN();
  int d_override = 0;
  long seed_override = -1;
};

void add_common(CLI::App* cmd, Common& c, bool config_required = true) {
  auto* opt = cmd->add_option("--config", c.config_path, "experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--threads", c.threads, "worker thread bound");
  cmd->add_option("--out", c.out_override, "output directory override");
  cmd->add_option("--sigma", c.sigma_override, "noise intensity override");
  cmd->add_option("--delta", c.delta_override, "step size override");
  cmd->add_option("--d", c.d_override, "dimension override");
  cmd->add_option("--seed", c.seed_override, "seed override");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig config = load_config(c.config_path);
  if (!std::isnan(c.sigma_override)) {
    config.scheme.sigma = c.sigma_override;
    config.raw["scheme"]["sigma"] = c.sigma_override;
  }
  if (!std::isnan(c.delta_override)) {
    config.scheme.delta = c.delta_override;
    config.raw["scheme"]["delta"] = c.delta_override;
  }
  if (c.d_override > 0) {
    config.d = c.d_override;
    config.raw["d"] = c.d_override;
    if (config.x0.size() != c.d_override) config.x0 = StateVec::Zero(c.d_override);
  }
  if (c.seed_override >= 0) {
    config.seed = static_cast<std::uint64_t>(c.seed_override);
    config.raw["seed"] = config.seed;
  }
  if (!c.out_override.empty()) config.output_dir = c.out_override;
  else if (const char* env = std::getenv("MODEULER_OUT"); env && config.raw.value("output_dir", "") == "")
    config.output_dir = env;
  if (c.threads > 0) set_default_threads(c.threads);
  fs::create_directories(config.output_dir);
  return config;
}

std::string config_comment(const ExperimentConfig& config) {
  return "config=" + config.raw.dump() + " seed=" + std::to_string(config.seed);
}

void write_json(const ExperimentConfig& config, const std::string& name, json payload) {
  payload["config"] = config.raw;
  payload["seed"] = config.seed;
  std::ofstream out(fs::path(config.output_dir) / name);
  out << payload.dump(2) << "\n";
}

std::ofstream open_csv(const ExperimentConfig& config, const std::string& name,
                       const std::string& columns) {
  std::ofstream out(fs::path(config.output_dir) / name);
  out << "# " << config_comment(config) << "\n";
  out << columns << "\n";
  return out;
}

// Constants derivation shared by several subcommands. Returns nullopt for
// schemes without (H1)-type constants (tem_sqrt).
struct DerivedConstants {
  AssumptionCertificate cert;
  std::optional<SchemeConstants> sc;
  std::optional<ContractionConstants> cc;
};

DerivedConstants derive_all(const ExperimentConfig& config) {
  DerivedConstants out;
  out.cert = build_certificate(config, RngStream{config.seed});
  if (config.scheme.kind == SchemeKind::em || config.scheme.kind == SchemeKind::tem_gamma ||
      config.scheme.kind == SchemeKind::pem) {
    out.sc = derive_scheme_constants(out.cert, config.scheme.kind, config.scheme.gamma,
                                     config.model.ell0);
    out.cc = contraction_constants(*out.sc, config.d, config.scheme.sigma);
  }
  return out;
}

json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

int cmd_constants(const Common& c) {
  ExperimentConfig config = load(c);
  DerivedConstants der = derive_all(config);
  json flat;
  RateConstants rc = rate_exponents(config.scheme.kind, config.scheme.gamma, config.model.ell0,
                                    config.model.ell0_star, &der.cert,
                                    der.sc ? &*der.sc : nullptr, der.cc ? &*der.cc : nullptr);
  if (der.cc) {
    const ContractionConstants& cc = *der.cc;
    flat["alpha0"] = cc.alpha0;
    flat["beta0"] = cc.beta0;
    flat["R0"] = cc.R0;
    flat["lambda1"] = cc.lambda1;
    flat["lambda2"] = cc.lambda2;
    flat["C0"] = cc.C0;
    flat["sigma0"] = cc.sigma0;
    flat["delta1_star"] = number_or_null(cc.delta1_star);
    flat["V_sup"] = cc.V_sup;
    flat["R"] = cc.R;
    flat["C_R"] = der.sc->C_R;
    flat["K_R"] = der.sc->K_R;
    flat["K_R_star"] = der.sc->K_R_star;
    flat["theta"] = der.sc->theta;
    flat["delta_R"] = der.sc->delta_R;
    flat["regime_reachable"] = cc.regime_reachable;
    flat["sigma_certified"] = cc.sigma_certified;
  } else {
    for (const char* k : {"alpha0", "beta0", "R0", "lambda1", "lambda2", "C0", "sigma0",
                          "delta1_star", "V_sup"})
      flat[k] = nullptr;
    flat["regime_reachable"] = false;
  }
  flat["delta2_star_star"] = number_or_null(rc.delta2_star_star);
  flat["delta3_star"] = number_or_null(rc.delta3_star);
  flat["p_star"] = number_or_null(rc.p_star);
  flat["ell_star_star"] = number_or_null(rc.ell_star_star);
  flat["gamma_star"] = number_or_null(rc.gamma_star);
  flat["ell_star"] = number_or_null(rc.ell_star);
  std::cout << flat.dump() << "\n";
  write_json(config, "constants.json", json{{"constants", flat}});
  return 0;
}

int cmd_check(const Common& c, long pairs_flag, double radius_flag) {
  ExperimentConfig config = load(c);
  if (pairs_flag > 0) config.certificate.pairs = pairs_flag;
  if (radius_flag > 0) config.certificate.radius = radius_flag;
  if (config.certificate.mode == "analytic") config.certificate.mode = "estimate";
  AssumptionCertificate cert = build_certificate(config, RngStream{config.seed});
  json report;
  auto prov = [](Provenance p) {
    return p == Provenance::analytic ? "analytic" : p == Provenance::estimated ? "estimated" : "unset";
  };
  report["certificate"] = {
      {"L0", cert.L0},       {"L0_provenance", prov(cert.prov_L0)},
      {"L1", cert.L1},       {"L1_provenance", prov(cert.prov_L1)},
      {"L2", cert.L2},       {"L2_provenance", prov(cert.prov_L2)},
      {"L3", cert.L3},       {"L3_provenance", prov(cert.prov_L3)},
      {"L4", cert.L4},       {"L4_provenance", prov(cert.prov_L4)},
      {"L5", cert.L5},       {"L5_provenance", prov(cert.prov_L5)},
      {"L6", cert.L6},       {"L6_provenance", prov(cert.prov_L6)},
      {"R_star", cert.R_star}, {"ell0", cert.ell0}, {"ell0_star", cert.ell0_star},
      {"pairs", cert.pair_count}, {"radius", cert.sampling_radius}};
  int exit_code = 0;
  if (cert.prov_L2 != Provenance::unset && cert.prov_L3 != Provenance::unset &&
      cert.prov_L4 != Provenance::unset) {
    const auto violations =
        check_A3(config.model, config.d, cert.R_star, cert.L2, cert.L3, cert.L4,
                 config.certificate.pairs, config.certificate.radius,
                 RngStream{config.seed}.substream("check-A3"));
    report["a3_checked_pairs"] = config.certificate.pairs;
    report["a3_violations"] = violations.size();
    double worst = 0.0;
    for (const auto& v : violations) worst = std::min(worst, v.slack);
    report["a3_worst_slack"] = worst;
    if (!violations.empty()) exit_code = 1;
  }
  std::cout << report.dump() << "\n";
  write_json(config, "check.json", std::move(report));
  std::cout << "check: " << (exit_code == 0 ? "pass" : "FAIL") << "\n";
  return exit_code;
}

int cmd_simulate(const Common& c) {
  ExperimentConfig config = load(c);
  json sec = command_section(config, "simulate");
  check_keys(sec, {"steps", "thinning"}, "simulate");
  const long steps = sec.value("steps", 1000L);
  const long thinning = sec.value("thinning", 1L);
  const auto states = simulate(config.scheme, config.x0, steps,
                               RngStream{config.seed}.substream("simulate"), 0, thinning);
  SampleCloud cloud;
  cloud.samples.resize(static_cast<long>(states.size()), config.d);
  for (std::size_t i = 0; i < states.size(); ++i)
    cloud.samples.row(static_cast<long>(i)) = states[i].transpose();
  cloud.meta = CloudMeta{to_string(config.scheme.kind), config.scheme.delta,
                         config.scheme.sigma, 0, thinning, config.seed};
  write_cloud_csv((fs::path(config.output_dir) / "trajectory.csv").string(), cloud,
                  config_comment(config));
  std::cout << "simulate: " << states.size() << " states written\n";
  return 0;
}

int cmd_couple(const Common& c) {
  ExperimentConfig config = load(c);
  json sec = command_section(config, "couple");
  check_keys(sec, {"steps", "pairs", "y0"}, "couple");
  const long steps = sec.value("steps", 1000L);
  const long pairs = sec.value("pairs", 1000L);
  StateVec y0 = StateVec::Ones(config.d);
  if (sec.contains("y0")) {
    const auto v = sec.at("y0").get<std::vector<double>>();
    if (static_cast<int>(v.size()) != config.d) throw UsageError("couple.y0 length != d");
    y0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
  }
  std::optional<ContractionConstants> cc;
  try {
    cc = derive_all(config).cc;
  } catch (const std::exception&) {
  }
  const CouplingTrace tr = run_coupling(config.scheme, config.x0, y0, steps, pairs,
                                        RngStream{config.seed}.substream("couple"),
                                        cc ? &*cc : nullptr);
  auto out = open_csv(config, "couple.csv",
                      "n,t,mean_sq_dist,se_sq_dist,mean_rho,se_rho,envelope");
  for (long k = 0; k < tr.length(); ++k) {
    out << k << "," << format_full(k * tr.delta) << ","
        << format_full(tr.mean_sq_dist[static_cast<std::size_t>(k)]) << ","
        << format_full(tr.se_sq_dist[static_cast<std::size_t>(k)]) << ","
        << format_full(tr.mean_rho[static_cast<std::size_t>(k)]) << ","
        << format_full(tr.se_rho[static_cast<std::size_t>(k)]) << ","
        << format_full(tr.envelope[static_cast<std::size_t>(k)]) << "\n";
  }
  std::cout << "couple: " << pairs << " pairs, " << steps
            << " steps, divergence fraction " << tr.divergence_fraction << "\n";
  return 0;
}

int cmd_verify(const Common& c, long pairs_flag) {
  ExperimentConfig config = load(c);
  json sec = config.raw.contains("verify") ? config.raw.at("verify") : json::object();
  check_keys(sec, {"pairs", "grid_states", "nodes", "certified"}, "verify");
  const long pairs = pairs_flag > 0 ? pairs_flag : sec.value("pairs", 10000L);
  const long grid_states = sec.value("grid_states", 200L);
  const int nodes = sec.value("nodes", 64);
  const bool certified = sec.value("certified", true);

  DerivedConstants der = derive_all(config);
  if (!der.sc || !der.cc) throw UsageError("verify: scheme has no (H1) constants");
  SchemeSpec spec = config.scheme;
  if (certified) {
    spec.sigma = der.cc->sigma0;
    *der.cc = contraction_constants(*der.sc, config.d, spec.sigma);
    if (!std::isfinite(der.cc->delta1_star))
      throw std::runtime_error("verify: delta1_star undefined at sigma0");
    spec.delta = der.cc->delta1_star;
  }
  const SchemeConstants& sc = *der.sc;
  const ContractionConstants& cc = *der.cc;

  json failures = json::array();
  long checks_run = 0;
  double max_violation = 0.0;
  auto record = [&](const char* kind, const CheckResult& r, const json& where) {
    ++checks_run;
    if (!r.pass) {
      failures.push_back(json{{"check", kind}, {"slack", r.slack}, {"at", where}});
      max_violation = std::min(max_violation, r.slack);
    }
  };
  const RngStream s = RngStream{config.seed}.substream("verify");
  const double box = cc.R0 + 1.0;
  auto sample_state = [&](std::uint64_t idx, std::uint64_t which) {
    StateVec z(config.d);
    for (int i = 0; i < config.d; ++i) {
      const double u = s.uniform(idx, which, static_cast<std::uint64_t>(i));
      z[i] = box * (2.0 * u - 1.0);
    }
    // 10% of pairs straddle the |.| = R sphere, where the regime changes
    if (sc.R > 0.0 && s.uniform(idx, which, 1000) < 0.1) {
      const double u = s.uniform(idx, which, 1001);
      const double target = sc.R * (0.9 + 0.2 * u);
      if (z.norm() > 0.0) z *= target / z.norm();
    }
    return z;
  };
  for (long i = 0; i < pairs; ++i) {
    const StateVec z1 = sample_state(static_cast<std::uint64_t>(i), 0);
    const StateVec z2 = sample_state(static_cast<std::uint64_t>(i), 1);
    record("lambda_bound", lambda_bound_check(sc, spec, z1, z2),
           json{{"pair", i}});
    record("gamma_bound", gamma_bound_check(spec, sc, cc, z1, z2), json{{"pair", i}});
  }
  if (config.d <= 2) {
    for (long g = 0; g < grid_states; ++g) {
      StateVec x = StateVec::Zero(config.d);
      x[0] = -cc.R0 + 2.0 * cc.R0 * static_cast<double>(g) /
                          static_cast<double>(grid_states - 1);
      record("lyapunov_drift", lyapunov_drift_check(spec, sc, cc, x, nodes),
             json{{"state", g}});
    }
  }
  json report{{"checks_run", checks_run},
              {"failures", failures},
              {"max_violation_slack", max_violation},
              {"sigma", spec.sigma},
              {"delta", spec.delta}};
  std::cout << report.dump() << "\n";
  write_json(config, "verify.json", std::move(report));
  const bool ok = failures.empty();
  std::cout << "verify: " << checks_run << " checks, "
            << (ok ? "zero failures" : "FAILURES") << "\n";
  return ok ? 0 : 1;
}

int cmd_invariant(const Common& c) {
  ExperimentConfig config = load(c);
  json sec = command_section(config, "invariant");
  check_keys(sec, {"burn_in", "n_samples", "thinning"}, "invariant");
  const long burn_in = sec.value("burn_in", 1000L);
  const long n_samples = sec.value("n_samples", 100000L);
  const long thinning = sec.value("thinning", 1L);
  const SampleCloud cloud =
      sample_invariant(config.scheme, config.x0, burn_in, n_samples, thinning,
                       RngStream{config.seed}.substream("invariant"));
  write_cloud_csv((fs::path(config.output_dir) / "invariant.csv").string(), cloud,
                  config_comment(config));
  std::cout << "invariant: n=" << n_samples
            << " second_moment=" << cloud_moment(cloud, 2.0) << "\n";
  return 0;
}

int cmd_w2(const std::string& a_path, const std::string& b_path, const std::string& method,
           int slices, long seed) {
  const SampleCloud a = read_cloud_csv(a_path);
  const SampleCloud b = read_cloud_csv(b_path);
  W2Result r;
  if (method == "sorted") r = w2_sorted_1d(a, b);
  else if (method == "assignment") r = w2_assignment(a, b);
  else if (method == "sliced")
    r = w2_sliced(a, b, slices, RngStream{static_cast<std::uint64_t>(seed)}.substream("slices"));
  else throw UsageError("w2: method must be sorted, assignment or sliced");
  json line{{"value", r.value}, {"method", r.method}, {"n", r.n}, {"d", r.d}};
  if (r.method == "sliced") line["slices"] = r.slices;
  std::cout << line.dump() << "\n";
  return 0;
}

int cmd_rate_scan(const Common& c) {
  ExperimentConfig config = load(c);
  json sec = command_section(config, "rate_scan");
  check_keys(sec,
             {"delta_grid", "delta_ref", "n_samples", "thin_time", "ref_thin_time",
              "bootstrap", "burn_time", "tolerance"},
             "rate_scan");
  RateScanParams params;
  params.delta_grid = sec.at("delta_grid").get<std::vector<double>>();
  params.delta_ref = sec.at("delta_ref").get<double>();
  params.n_samples = sec.value("n_samples", 200000L);
  params.thin_time = sec.value("thin_time", 0.05);
  params.ref_thin_time = sec.value("ref_thin_time", 0.25);
  params.bootstrap = sec.value("bootstrap", 32L);
  params.burn_time = sec.value("burn_time", 0.0);
  params.slope_tolerance = sec.value("tolerance", 0.3);
  const RateScanResult r =
      rate_scan_invariant(config.scheme, params, RngStream{config.seed}.substream("rate-scan"));
  // scans at desk-scale noise run below the certified threshold; say so
  std::string regime = "empirical, outside certified regime";
  try {
    const DerivedConstants der = derive_all(config);
    if (der.cc && der.cc->sigma_certified) regime = "certified";
  } catch (const std::exception&) {
  }
  auto out = open_csv(config, "rate_scan.csv", "delta,w2,se,excluded");
  for (const auto& pt : r.points)
    out << format_full(pt.delta) << "," << format_full(pt.w2) << "," << format_full(pt.se)
        << "," << (pt.excluded ? 1 : 0) << "\n";
  json summary{{"slope", r.slope},
               {"expected_slope", r.expected_slope},
               {"ci", r.slope_halfwidth},
               {"pass", r.pass},
               {"burn_time", r.burn_time},
               {"delta_ref", r.delta_ref},
               {"regime", regime}};
  std::cout << summary.dump() << "\n";
  write_json(config, "rate_scan.json", std::move(summary));
  return r.pass ? 0 : 1;
}

int cmd_strong_error(const Common& c) {
  ExperimentConfig config = load(c);
  json sec = command_section(config, "strong_error");
  check_keys(sec, {"T", "delta_grid", "delta_ref", "paths", "tolerance"}, "strong_error");
  const double T = sec.value("T", 1.0);
  const auto grid = sec.at("delta_grid").get<std::vector<double>>();
  const double delta_ref = sec.at("delta_ref").get<double>();
  const long paths = sec.value("paths", 10000L);
  const double tol = sec.value("tolerance", 0.3);
  const StrongErrorResult r = strong_error_finite_horizon(
      config.scheme, T, grid, delta_ref, paths, RngStream{config.seed}.substream("strong-error"),
      tol);
  auto out = open_csv(config, "strong_error.csv", "delta,mse,se,excluded");
  for (const auto& pt : r.points)
    out << format_full(pt.delta) << "," << format_full(pt.mse) << "," << format_full(pt.se)
        << "," << (pt.excluded ? 1 : 0) << "\n";
  json summary{{"slope", r.slope},
               {"expected_slope", r.expected_slope},
               {"ci", r.slope_halfwidth},
               {"pass", r.pass}};
  std::cout << summary.dump() << "\n";
  write_json(config, "strong_error.json", std::move(summary));
  return r.pass ? 0 : 1;
}

Observable parse_observable(const json& j) {
  check_keys(j, {"kind", "index", "power", "coeffs", "rho_f"}, "lln.observable");
  Observable f;
  const std::string kind = j.value("kind", std::string("radial_power"));
  if (kind == "coordinate") f.kind = ObservableKind::coordinate;
  else if (kind == "radial_power") f.kind = ObservableKind::radial_power;
  else if (kind == "polynomial") f.kind = ObservableKind::polynomial;
  else throw UsageError("lln: unknown observable kind " + kind);
  f.index = j.value("index", 0);
  f.power = j.value("power", 2.0);
  if (j.contains("coeffs")) f.coeffs = j.at("coeffs").get<std::vector<double>>();
  f.growth_exponent = j.value("rho_f", 1.0);
  return f;
}

int cmd_lln(const Common& c) {
  ExperimentConfig config = load(c);
  json sec = command_section(config, "lln");
  check_keys(sec, {"observable", "n", "reference", "replicates", "envelope_C", "envelope_eps"},
             "lln");
  const Observable f = parse_observable(sec.at("observable"));
  const long n = sec.at("n").get<long>();
  const double reference = sec.at("reference").get<double>();
  const long replicates = sec.value("replicates", 8L);
  const double envC = sec.value("envelope_C", 1.0);
  const double envE = sec.value("envelope_eps", 0.1);
  auto out = open_csv(config, "lln.csv", "replicate,k,average,error,envelope");
  std::vector<LlnResult> results(static_cast<std::size_t>(replicates));
  const RngStream s = RngStream{config.seed}.substream("lln");
  parallel_for(static_cast<std::size_t>(replicates), [&](std::size_t r) {
    results[r] = lln_run(config.scheme, f, config.x0, n, reference, envC, envE, s,
                         static_cast<std::uint64_t>(r));
  });
  double final_err_sum = 0.0;
  for (long r = 0; r < replicates; ++r) {
    for (const auto& cp : results[static_cast<std::size_t>(r)].checkpoints)
      out << r << "," << cp.k << "," << format_full(cp.average) << ","
          << format_full(cp.error) << "," << format_full(cp.envelope) << "\n";
    final_err_sum += results[static_cast<std::size_t>(r)].checkpoints.back().error;
  }
  json summary{{"replicates", replicates},
               {"n", n},
               {"reference", reference},
               {"mean_final_error", final_err_sum / static_cast<double>(replicates)}};
  std::cout << summary.dump() << "\n";
  write_json(config, "lln.json", std::move(summary));
  return 0;
}

int cmd_moment_audit(const Common& c) {
  ExperimentConfig config = load(c);
  json sec = command_section(config, "moment_audit");
  check_keys(sec, {"horizon_steps", "paths", "c_star", "c_upper", "checkpoint_every"},
             "moment_audit");
  const long horizon = sec.value("horizon_steps", 500L);
  const long paths = sec.value("paths", 10000L);
  const long every = sec.value("checkpoint_every", 25L);
  double c_star, c_upper;
  if (sec.contains("c_star") && sec.contains("c_upper")) {
    c_star = sec.at("c_star").get<double>();
    c_upper = sec.at("c_upper").get<double>();
  } else {
    DerivedConstants der = derive_all(config);
    if (!der.sc) throw UsageError("moment_audit: supply c_star/c_upper for this scheme");
    std::tie(c_star, c_upper) = derive_h0_constants(*der.sc);
  }
  const MomentAuditResult r =
      moment_audit(config.scheme, config.x0, horizon, paths, c_star, c_upper, every,
                   RngStream{config.seed}.substream("moment-audit"));
  auto out = open_csv(config, "moment_audit.csv", "n,t,m2,se2,m4,se4,bound2,margin,pass");
  for (const auto& cp : r.checkpoints)
    out << cp.n << "," << format_full(cp.t) << "," << format_full(cp.m2) << ","
        << format_full(cp.se2) << "," << format_full(cp.m4) << "," << format_full(cp.se4)
        << "," << format_full(cp.bound2) << "," << format_full(cp.margin) << ","
        << (cp.pass ? 1 : 0) << "\n";
  json summary{{"all_pass", r.all_pass},
               {"diverged", r.diverged},
               {"diverged_step", r.diverged_step},
               {"c_star", c_star},
               {"c_upper", c_upper}};
  std::cout << summary.dump() << "\n";
  write_json(config, "moment_audit.json", std::move(summary));
  return r.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"modified Euler schemes: constants, contraction checks and experiments"};
  app.require_subcommand(1);

  Common c;
  long check_pairs = 0;
  double check_radius = 0;
  std::string w2_a, w2_b, w2_method = "sorted";
  int w2_slices = 32;
  long w2_seed = 1;

  auto* constants_cmd = app.add_subcommand("constants", "derive every explicit constant");
  add_common(constants_cmd, c);
  auto* check_cmd = app.add_subcommand("check", "estimate/validate assumption certificates");
  add_common(check_cmd, c);
  check_cmd->add_option("--pairs", check_pairs, "sampled pairs");
  check_cmd->add_option("--radius", check_radius, "sampling radius");
  auto* simulate_cmd = app.add_subcommand("simulate", "run one trajectory");
  add_common(simulate_cmd, c);
  auto* couple_cmd = app.add_subcommand("couple", "synchronous coupling trace");
  add_common(couple_cmd, c);
  long verify_pairs = 0;
  auto* verify_cmd = app.add_subcommand("verify", "deterministic inequality checks");
  add_common(verify_cmd, c);
  verify_cmd->add_option("--pairs", verify_pairs, "sampled pairs per pairwise check");
  auto* invariant_cmd = app.add_subcommand("invariant", "long-run sampling");
  add_common(invariant_cmd, c);
  auto* w2_cmd = app.add_subcommand("w2", "empirical Wasserstein-2 distance");
  w2_cmd->add_option("--a", w2_a, "first cloud CSV")->required();
  w2_cmd->add_option("--b", w2_b, "second cloud CSV")->required();
  w2_cmd->add_option("--method", w2_method, "sorted | assignment | sliced");
  w2_cmd->add_option("--slices", w2_slices, "projection count for sliced");
  w2_cmd->add_option("--seed", w2_seed, "seed for sliced directions");
  auto* rate_cmd = app.add_subcommand("rate-scan", "invariant-measure step-size scan");
  add_common(rate_cmd, c);
  auto* strong_cmd = app.add_subcommand("strong-error", "finite-horizon strong error");
  add_common(strong_cmd, c);
  auto* lln_cmd = app.add_subcommand("lln", "law-of-large-numbers study");
  add_common(lln_cmd, c);
  auto* audit_cmd = app.add_subcommand("moment-audit", "moment-bound audit");
  add_common(audit_cmd, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (constants_cmd->parsed()) return cmd_constants(c);
    if (check_cmd->parsed()) return cmd_check(c, check_pairs, check_radius);
    if (simulate_cmd->parsed()) return cmd_simulate(c);
    if (couple_cmd->parsed()) return cmd_couple(c);
    if (verify_cmd->parsed()) return cmd_verify(c, verify_pairs);
    if (invariant_cmd->parsed()) return cmd_invariant(c);
    if (w2_cmd->parsed()) return cmd_w2(w2_a, w2_b, w2_method, w2_slices, w2_seed);
    if (rate_cmd->parsed()) return cmd_rate_scan(c);
    if (strong_cmd->parsed()) return cmd_strong_error(c);
    if (lln_cmd->parsed()) return cmd_lln(c);
    if (audit_cmd->parsed()) return cmd_moment_audit(c);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
