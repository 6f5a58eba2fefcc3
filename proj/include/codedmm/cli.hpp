#pragma once

#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "codedmm/schemes.hpp"
#include "codedmm/sysparams.hpp"

namespace codedmm::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Command { evaluate, solve, design_lt, deadline };
enum class Format { csv, json };
enum class SweepAxis { none, T, K, n, epsilon_min, pf_target, omega, t };

std::string_view to_string(Command c);
std::string_view to_string(SweepAxis a);

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_config = 2,
  exit_budget = 3,
  exit_infeasible = 4,
};

struct Sampling {
  std::int64_t g_trials = 10'000;
  std::int64_t decode_runs = 5;
  std::optional<std::uint64_t> load_samples;
  std::uint64_t subset_budget = 1'000'000;
  std::uint64_t deadline_trials = 100'000;
  std::uint64_t node_budget = 50'000'000;
};

struct SolveConfig {
  std::int64_t T = 1;
  SolverKind solver = SolverKind::heuristic;
  std::optional<std::string> trace_path;
};

struct DesignConfig {
  std::optional<std::int64_t> m; ///< defaults to params.m
  double epsilon_min = 0.3;
  double pf_target = 0.1;
};

struct ExperimentConfig {
  nlohmann::json source;
  RawParams params;
  std::vector<SchemeSpec> schemes;
  SweepAxis axis = SweepAxis::none;
  std::vector<double> values;
  std::vector<double> deadlines;
  Sampling sampling;
  SolveConfig solve;
  DesignConfig design;
  std::uint64_t seed = 0;
  std::optional<std::string> output_path;
  /// CSV for tables, JSON for the LT design when unset.
  std::optional<Format> format;
};

/// Parses a configuration document. Throws ConfigError naming the field.
ExperimentConfig parse_config(const nlohmann::json &j);
ExperimentConfig load_config(const std::string &path);

/// Flags that override the configuration file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<Format> format;
  unsigned threads = 1;
  /// Monte Carlo sample count for deadline trials and g simulation.
  std::optional<std::uint64_t> sample_budget;
};

void apply_overrides(ExperimentConfig &cfg, const Overrides &o);

/// Checks every sweep point against the parameter rules before anything
/// runs. Throws ConfigError.
void validate(const ExperimentConfig &cfg, Command cmd);

/// FNV-1a over the canonical configuration text and the effective seed and
/// sampling budgets.
std::string config_hash(const ExperimentConfig &cfg);

/// One sweep point: parameters and scheme list after applying the swept value.
struct SweepPoint {
  std::optional<double> value;
  RawParams params;
  std::vector<SchemeSpec> schemes;
  std::optional<double> omega;
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig &cfg);

struct EvalRow {
  std::optional<double> sweep_value;
  SchemeMetrics metrics;
  double load_norm = 0;
  double delay_norm = 0;
};

/// Rows ordered by sweep index, then scheme order. Sweep points run on
/// `threads` workers; the result does not depend on the thread count.
std::vector<EvalRow> evaluate_rows(const ExperimentConfig &cfg, unsigned threads = 1);

struct DeadlineRow {
  std::optional<double> sweep_value;
  std::string scheme;
  DeadlinePoint point;
  std::uint64_t trials = 0;
};

std::vector<DeadlineRow> deadline_rows(const ExperimentConfig &cfg, unsigned threads = 1);

inline constexpr std::string_view kEvaluateColumns =
    "sweep_axis,sweep_value,scheme,kind,T,L,D_encode,D_map,D_reduce,D,g_mean,L_norm,D_norm";
inline constexpr std::string_view kDeadlineColumns =
    "sweep_axis,sweep_value,scheme,t,miss,ci_lower,ci_upper,gamma_extrapolation,trials";

void cmd_evaluate(const ExperimentConfig &cfg, unsigned threads, std::ostream &out);
void cmd_deadline(const ExperimentConfig &cfg, unsigned threads, std::ostream &out);
/// Writes the assignment to `out` and a JSON summary to `summary`.
void cmd_solve(const ExperimentConfig &cfg, std::ostream &out, std::ostream &summary);
void cmd_design_lt(const ExperimentConfig &cfg, std::ostream &out);

/// Maps an exception to the exit status.
int exit_code(const std::exception &e) noexcept;

/// Loads the configuration, validates, runs `cmd` and writes the result to
/// the configured output (or `out`). Errors go to `err`; returns the exit
/// status.
int run(Command cmd, const std::string &config_path, const Overrides &o, std::ostream &out,
        std::ostream &err);

} // namespace codedmm::cli
