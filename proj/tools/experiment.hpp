// Experiment configs for qdsim: parsing, execution and the run / sweep /
// validate commands. The config grammar is described in docs/config.md.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdgeo/gates.hpp"

namespace qdgeo::cli {

namespace fs = std::filesystem;

/// Malformed or incomplete config, bad command line values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// section -> key -> raw value text.
using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;

ConfigMap parse_config(std::istream& in);
ConfigMap read_config(const fs::path& path);

/// Replaces an existing "section.key" entry. Throws ConfigError when the key
/// is not present.
void set_value(ConfigMap& config, const std::string& dotted, const std::string& value);

/// Decimal number or a multiple of pi: "0.02", "-1e-3", "pi/8", "3*pi/4".
double parse_number(const std::string& text);

struct ModelSpec {
  std::string kind;
  double omega0 = 0.0;
  double delta = 0.0;
  double rabi = 0.0;
  double rabi_plus = 0.0;
  double rabi_minus = 0.0;
  double detuning = 0.0;  // Raman Delta, resolved from detuning_ratio if given
};

struct SegmentSpec {
  double rabi, phase, detuning, duration;
};

struct TargetSpec {
  std::string kind;  // identity | gate1 | gate2
  double angle = 0.0;
};

struct SequenceSpec {
  std::string kind;
  std::optional<double> rabi, detuning, gamma, phi0, gamma_tilde, duration, gamma_loop, two_photon_detuning;
  double base_phase = 0.0;
  double phase = 0.0;
  unsigned repeats = 1;
  std::vector<SegmentSpec> segments;
  std::optional<TargetSpec> target;
};

struct OutputSpec {
  std::string trajectory = "trajectory.csv";
  std::string report = "report.json";
  std::string manifest = "manifest.json";
};

struct Experiment {
  ConfigMap config;
  ModelSpec model;
  SequenceSpec sequence;
  sim::RunSettings settings;
  std::size_t initial_state = 0;
  OutputSpec output;
};

/// Schema check and typed view of a config. Throws ConfigError.
Experiment load_experiment(const ConfigMap& config);

/// Ratio report and regime warnings without running anything. Throws
/// ModelError for forbidden parameter values.
struct Validation {
  std::vector<std::string> lines;
  std::vector<std::string> warnings;
};
Validation validate_experiment(const Experiment& ex);

gates::GateReport execute(const Experiment& ex);

/// t_fs, pop_0.., [nx, ny, nz,] energy_exp, dyn_phase_accum.
std::string trajectory_csv(const geometry::Trajectory& traj);
nlohmann::ordered_json report_json(const gates::GateReport& report, const std::string& trajectory_file);

std::string sha256_file(const fs::path& path);

/// 0 ok, 2 config, 3 model, 4 numerical, 1 anything else.
int exit_code_for(const std::exception& e);

std::string version();

struct RunRequest {
  fs::path config;
  fs::path out_dir = "out";
  std::optional<double> dt;
  bool quiet = false;
};

struct SweepRequest {
  RunRequest run;
  std::string parameter;            // section.key
  std::optional<std::string> range;  // "a:b"
  std::size_t points = 5;
  std::vector<std::string> values;  // used instead of range when non-empty
  std::size_t jobs = 1;
};

int cmd_run(const RunRequest& req, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepRequest& req, std::ostream& out, std::ostream& err);
int cmd_validate(const RunRequest& req, std::ostream& out, std::ostream& err);

}  // namespace qdgeo::cli
