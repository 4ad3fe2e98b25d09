#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "modeuler/constants.hpp"
#include "modeuler/experiments.hpp"
#include "modeuler/scheme.hpp"

namespace modeuler {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// How the assumption certificate is obtained: pre-registered analytic values,
/// sampled estimation, or explicit user-supplied constants (merged over the
/// analytic ones).
struct CertificateConfig {
  std::string mode = "analytic";  // analytic | estimate | explicit
  long pairs = 100000;
  double radius = 6.0;
  double fd_step = 1e-5;
  nlohmann::json explicit_constants;  // subset of L0..L6, R_star, ell0_star
};

struct ExperimentConfig {
  DriftModel model;
  SchemeSpec scheme;  // scheme.model mirrors model
  CertificateConfig certificate;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  int d = 1;
  StateVec x0;  // defaults to the origin in dimension d

  nlohmann::json raw;  // exact parsed config, echoed into every artifact
};

/// Parse with strict key checking: unknown keys are errors, not warnings.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON emission; parse(emit(c)) == c.
nlohmann::json emit_config(const ExperimentConfig& config);

/// Assemble the certificate per the config (analytic built-ins, estimation
/// fill-in, explicit overrides).
AssumptionCertificate build_certificate(const ExperimentConfig& config, const RngStream& stream);

/// Fetch a required sub-object for a subcommand, validating its keys.
nlohmann::json command_section(const ExperimentConfig& config, const std::string& name);

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& where);

}  // namespace modeuler
