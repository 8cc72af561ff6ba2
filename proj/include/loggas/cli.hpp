#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "loggas/dynamics.hpp"
#include "loggas/kernel.hpp"
#include "loggas/measure.hpp"

namespace loggas::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_fail = 2;
inline constexpr int exit_inconclusive = 3;
inline constexpr int exit_usage = 64;
inline constexpr int exit_no_input = 66;
inline constexpr int exit_software = 70;

/// Strict-schema violation; line and column are 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0, int column = 0);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_, column_;
};

using IntList = std::vector<std::int64_t>;
using RealList = std::vector<double>;
using PairList = std::vector<std::array<std::int64_t, 2>>;
using Value = std::variant<bool, std::int64_t, double, std::string, IntList, RealList, PairList>;

struct KernelSpec {
  std::string family = "torus-log";
  std::string domain = "torus";  // zero family only: torus | free_space
  int dim = 1;
  int cutoff = 0;
  double radius = 1.0;
  bool operator==(const KernelSpec&) const = default;
};

struct MeasureSpec {
  std::string kind = "uniform";  // uniform | grid | single-mode | two-bump | atomic
  int cells = 32;
  double amplitude = 0.3;
  double width = 0.08;
  std::vector<double> density;             // grid: cells^d values
  std::vector<std::vector<double>> atoms;  // atomic: d coordinates each
  std::vector<double> weights;
  bool operator==(const MeasureSpec&) const = default;
};

struct PotentialSpec {
  std::string kind = "zero";  // zero | cosine | quadratic
  double amplitude = 0.0;
  std::vector<std::int64_t> mode{1, 0, 0};
  double stiffness = 0.0;
  bool operator==(const PotentialSpec&) const = default;
};

struct ExperimentConfig {
  std::string kind;
  std::uint64_t seed = 12345;
  int workers = 1;
  std::string output;
  KernelSpec kernel;
  MeasureSpec measure;
  PotentialSpec potential;
  std::map<std::string, Value> params;  // every schema key, defaults filled in

  bool operator==(const ExperimentConfig&) const = default;

  bool flag(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  double real(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  const IntList& integers(const std::string& key) const;
  const RealList& reals(const std::string& key) const;
  const PairList& pairs(const std::string& key) const;

  Kernel make_kernel() const;
  BaseMeasure make_measure() const;
  Potential make_potential() const;
};

const std::vector<std::string>& experiment_kinds();

ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Resolved config with every key; parse_config(to_yaml(c)) == c.
std::string to_yaml(const ExperimentConfig& config);

/// Hex SHA-256 of the resolved config, and of the kernel block alone.
std::string config_hash(const ExperimentConfig& config);
std::string kernel_hash(const ExperimentConfig& config);

std::string version_string();

enum class Verdict { pass, fail, inconclusive };
std::string to_string(Verdict v);

struct Check {
  std::string name;
  Verdict verdict = Verdict::pass;
  std::string detail;
};

struct ExperimentRecord {
  std::string kind;
  std::string config_hash;
  std::string kernel_hash;
  std::string version;
  double wall_seconds = 0.0;
  std::vector<Check> checks;
  std::vector<std::string> data_files;  // relative to the output directory
  std::filesystem::path directory;
};

int exit_code(const std::vector<Check>& checks);

struct RunOptions {
  bool dump = false;  // write trajectory snapshots where the experiment has them
};

/// Runs the experiment, writing config.yaml, data CSVs, summary.json, summary.txt and
/// record.json into `out`. Library errors propagate.
ExperimentRecord run_experiment(const ExperimentConfig& config, const std::filesystem::path& out,
                                const RunOptions& opts = {});

struct ReportResult {
  int exit = exit_ok;
  std::size_t records = 0;
  std::vector<std::string> warnings;
  std::filesystem::path summary;
};

/// Merges every record.json under `dir` into report.json and writes plot-ready x,y,ci files
/// under report/ for the slope-fit experiments.
ReportResult report(const std::filesystem::path& dir);

/// Full command line entry point; returns the process exit code.
int main_entry(int argc, char** argv);

}  // namespace loggas::cli
