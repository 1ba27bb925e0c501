#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kdvlab/averaging.hpp"
#include "kdvlab/error.hpp"
#include "kdvlab/io.hpp"
#include "kdvlab/stochastic.hpp"

namespace kdvlab {

/// Config rejected; `errors` lists every violated constraint.
class ValidationError : public InvalidArgument {
 public:
  explicit ValidationError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const noexcept { return errors_; }

 private:
  std::vector<std::string> errors_;
};

enum class ExperimentKind { spectrum, actions, evolve, perturb, ensemble, resonance, scaling, measure };
std::string to_string(ExperimentKind k);

struct InitialData {
  std::string kind = "zero";  ///< zero | modes | gaussian | file
  std::vector<std::pair<int, double>> modes;  ///< signed index, value
  double h1_norm = 0.0;  ///< gaussian: rescale to this ||u||_1 when > 0
  std::string path;      ///< file: a field JSON
};

struct Tolerances {
  double percival = 1e-4;
  double conservation = 1e-6;
  double action_rtol = 1e-8;
  double hill_rtol = 1e-11;
};

/// Every key of the config file, with defaults. T is fast time for evolve,
/// resonance and scaling; T_slow is slow time for perturb and ensemble.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::spectrum;
  int K = 16;
  int N = 64;
  int n_max = 5;
  double epsilon = 0.0;
  double T = 1.0;
  double T_slow = 0.5;
  double dt = 1e-4;
  std::uint64_t seed = 0;
  std::string output;
  PerturbationSpec perturbation;
  std::optional<NoiseSpec> noise;
  std::optional<GaussianMeasureSpec> measure;
  ResonanceQuery resonance;
  InitialData initial;
  Tolerances tolerances;

  double z = 0.0;
  int sample_every = 100;
  int samples = 20;
  int realizations = 8;
  int angle_every = 0;
  std::vector<int> angle_modes = {1};
  unsigned threads = 0;
  std::vector<double> lambdas = {1.0, 2.0, 4.0};
  double sobolev_k = 4.0;
  std::vector<int> K_list;
  int probe_modes = 0;
  std::string frequencies = "model";  ///< model | empirical
  AveragedCurveOptions averaging;

  Json raw;  ///< the parsed file, verbatim
};

/// Strict parse: unknown keys, wrong types and cross-field violations are all
/// collected and thrown together as a ValidationError.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);

/// Cross-field checks on an assembled config (empty when valid).
std::vector<std::string> validate(const ExperimentConfig& c);

/// The initial field of a config (gaussian data use split_seed(seed, 0)).
FourierField initial_field(const ExperimentConfig& c);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunResult {
  int status = 0;  ///< 0 all checks pass, 1 a check failed, 2 invalid config, 3 runtime abort
  std::vector<CheckResult> checks;
  std::vector<std::string> artifacts;
  std::vector<std::string> errors;
  Json summary;
};

/// Runs one experiment and writes its artifacts into out_dir:
///   <kind>*.csv   numeric tables, first line "# config: ..."
///   <kind>.json   config, summary and checks
///   run_info.json wall-clock data (the only non-reproducible file)
///   ABORTED       present after a runtime abort
RunResult run_experiment(const ExperimentConfig& c, const std::string& out_dir);

}  // namespace kdvlab
