#include "modeuler/config.hpp"

#include <fstream>

namespace modeuler {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw UsageError("config: " + where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) throw UsageError("config: unknown key '" + it.key() + "' in " + where);
  }
}

namespace {

DriftModel parse_model(const json& j) {
  check_keys(j, {"kind", "kappa", "coeffs", "ell0", "ell0_star"}, "model");
  if (!j.contains("kind")) throw UsageError("config: model.kind is required");
  const DriftKind kind = drift_kind_from_string(j.at("kind").get<std::string>());
  DriftModel m;
  switch (kind) {
    case DriftKind::ou:
      m = make_ou(j.value("kappa", 1.0));
      break;
    case DriftKind::double_well:
      m = make_double_well();
      break;
    case DriftKind::radial_polynomial: {
      if (!j.contains("coeffs"))
        throw UsageError("config: radial_polynomial model needs coeffs");
      m = make_radial_polynomial(j.at("coeffs").get<std::vector<double>>());
      break;
    }
  }
  if (j.contains("ell0")) m.ell0 = j.at("ell0").get<double>();
  if (j.contains("ell0_star")) m.ell0_star = j.at("ell0_star").get<double>();
  return m;
}

SchemeSpec parse_scheme(const json& j, const DriftModel& model) {
  check_keys(j, {"kind", "delta", "gamma", "sigma"}, "scheme");
  if (!j.contains("kind")) throw UsageError("config: scheme.kind is required");
  SchemeSpec spec;
  spec.kind = scheme_kind_from_string(j.at("kind").get<std::string>());
  if (spec.kind == SchemeKind::custom)
    throw UsageError("config: custom schemes are not expressible in config files");
  spec.delta = j.value("delta", 0.01);
  spec.gamma = j.value("gamma", 0.25);
  spec.sigma = j.value("sigma", 1.0);
  spec.model = model;
  validate(spec);
  return spec;
}

CertificateConfig parse_certificate(const json& j) {
  check_keys(j,
             {"mode", "pairs", "radius", "fd_step", "L0", "L1", "L2", "L3", "L4", "L5", "L6",
              "R_star", "ell0_star"},
             "certificate");
  CertificateConfig c;
  c.mode = j.value("mode", std::string("analytic"));
  if (c.mode != "analytic" && c.mode != "estimate" && c.mode != "explicit")
    throw UsageError("config: certificate.mode must be analytic, estimate or explicit");
  c.pairs = j.value("pairs", 100000L);
  c.radius = j.value("radius", 6.0);
  c.fd_step = j.value("fd_step", 1e-5);
  for (const char* k : {"L0", "L1", "L2", "L3", "L4", "L5", "L6", "R_star", "ell0_star"})
    if (j.contains(k)) c.explicit_constants[k] = j.at(k);
  return c;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  check_keys(j,
             {"model", "scheme", "certificate", "seed", "output_dir", "d", "x0", "constants",
              "couple", "verify", "invariant", "w2", "rate_scan", "strong_error", "lln",
              "moment_audit", "simulate", "check"},
             "top level");
  if (!j.contains("model") || !j.contains("scheme"))
    throw UsageError("config: model and scheme are required");
  if (!j.contains("seed")) throw UsageError("config: seed is required");
  ExperimentConfig config;
  config.model = parse_model(j.at("model"));
  config.scheme = parse_scheme(j.at("scheme"), config.model);
  if (j.contains("certificate")) config.certificate = parse_certificate(j.at("certificate"));
  config.seed = j.at("seed").get<std::uint64_t>();
  config.output_dir = j.value("output_dir", std::string("out"));
  config.d = j.value("d", 1);
  if (config.d < 1) throw UsageError("config: d must be >= 1");
  if (j.contains("x0")) {
    const auto v = j.at("x0").get<std::vector<double>>();
    if (static_cast<int>(v.size()) != config.d)
      throw UsageError("config: x0 length must equal d");
    config.x0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
  } else {
    config.x0 = StateVec::Zero(config.d);
  }
  config.raw = j;
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

json emit_config(const ExperimentConfig& config) { return config.raw; }

AssumptionCertificate build_certificate(const ExperimentConfig& config,
                                        const RngStream& stream) {
  AssumptionCertificate cert = analytic_certificate(config.model);
  const CertificateConfig& cc = config.certificate;
  if (cc.mode == "estimate") {
    const RngStream s = stream.substream("certificate");
    cert.pair_count = cc.pairs;
    cert.sampling_radius = cc.radius;
    if (cert.prov_L0 == Provenance::unset) {
      cert.L0 = estimate_A0(config.model, config.d, cc.pairs, cc.radius, s.substream("A0"));
      cert.prov_L0 = Provenance::estimated;
    }
    if (cert.prov_L1 == Provenance::unset) {
      cert.L1 = estimate_A2(config.model, config.d, cc.pairs, cc.radius, s.substream("A2"));
      cert.prov_L1 = Provenance::estimated;
    }
    if (cert.prov_L5 == Provenance::unset) {
      cert.L5 = estimate_A4_L5(config.model, config.d, cert.R_star, cc.pairs, cc.radius,
                               s.substream("A4"));
      cert.prov_L5 = Provenance::estimated;
    }
    if (cert.prov_L6 == Provenance::unset) {
      cert.L6 = estimate_A5_L6(config.model, config.d, cert.ell0_star, cc.pairs, cc.radius,
                               cc.fd_step, s.substream("A5"));
      cert.prov_L6 = Provenance::estimated;
    }
  }
  if (!cc.explicit_constants.empty()) {
    const json& e = cc.explicit_constants;
    auto set = [&](const char* k, double& field, Provenance& prov) {
      if (e.contains(k)) {
        field = e.at(k).get<double>();
        prov = Provenance::analytic;
      }
    };
    set("L0", cert.L0, cert.prov_L0);
    set("L1", cert.L1, cert.prov_L1);
    set("L2", cert.L2, cert.prov_L2);
    set("L3", cert.L3, cert.prov_L3);
    set("L4", cert.L4, cert.prov_L4);
    set("L5", cert.L5, cert.prov_L5);
    set("L6", cert.L6, cert.prov_L6);
    if (e.contains("R_star")) cert.R_star = e.at("R_star").get<double>();
    if (e.contains("ell0_star")) cert.ell0_star = e.at("ell0_star").get<double>();
  }
  return cert;
}

json command_section(const ExperimentConfig& config, const std::string& name) {
  if (!config.raw.contains(name))
    throw UsageError("config: missing '" + name + "' section for this subcommand");
  return config.raw.at(name);
}

}  // namespace modeuler
