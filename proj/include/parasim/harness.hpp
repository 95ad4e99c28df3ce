#pragma once

// Batch experiments: config ingest with preset pinning, run orchestration,
// artifact directories with checksummed manifests, and replay.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "parasim/model.hpp"
#include "parasim/spinal.hpp"

namespace parasim {

enum class Experiment {
  regime_subcritical,
  regime_supercritical,
  regime_explosive,
  no_reservoir_extinction,
  no_reservoir_explosive,
  coming_down,
  many_to_one_suite,
  martingale_suite,
  criteria_scan,
};
std::string_view to_string(Experiment e);
std::optional<Experiment> experiment_from(std::string_view name);

/// Config rejected: invalid model clause or violated experiment hypothesis.
class ValidationError : public SpecError {
 public:
  using SpecError::SpecError;
};

class VersionMismatch : public std::runtime_error {
 public:
  VersionMismatch(std::string manifest_version, std::string tool_version);
  std::string manifest_version, tool_version;
};

struct ExperimentConfig {
  ModelSpec model;
  NumericsSpec numerics;
  Experiment experiment = Experiment::criteria_scan;
  std::vector<double> K_list;
  std::vector<double> t_list;
  std::string output_dir;
  double a = 0.5;
  double eta = 0.5;
  bool a_given = false;
  double corridor_lo = 1e-3, corridor_hi = 1e3;
  std::vector<Functional> functionals;
  double grid_lo = 1.0, grid_hi = 1e12;
  std::size_t grid_n = 49;
  std::size_t mean_field_points = 40;
  nlohmann::json source;  ///< the document as given
};

/// Parses and fills per-experiment defaults. Throws SpecError on malformed
/// input or unknown keys.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Violated hypotheses of the chosen experiment, in words (empty if none).
std::vector<std::string> pinning_violations(const ExperimentConfig& cfg);

/// Model clauses and experiment hypotheses; throws ValidationError.
void validate_config(const ExperimentConfig& cfg);

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> master_seed;
  bool quiet = true;
};

struct RunResult {
  std::filesystem::path dir;
  bool cap_flagged = false;
  nlohmann::json manifest;
  nlohmann::json stats;
};

RunResult run_experiment(ExperimentConfig cfg, const RunOptions& opts = {});

struct ReplayResult {
  RunResult run;
  bool identical = false;
  std::vector<std::string> mismatched;  ///< files whose checksum differs
};

/// Re-runs the config recorded in a manifest (with the manifest's seed).
/// Throws VersionMismatch when the recorded tool version differs.
ReplayResult replay(const std::filesystem::path& manifest_path, const RunOptions& opts = {});

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

inline constexpr const char* kToolVersion = PARASIM_VERSION;

}  // namespace parasim
