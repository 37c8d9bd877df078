#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "fcm/estimator.hpp"
#include "fcm/identifiability.hpp"

namespace fcm::cli {

enum class Command { simulate, fit, diagnose, downsample, reproduce };

enum ExitCode : int {
  exit_ok = 0,
  exit_io = 1,
  exit_validation = 2,
  exit_near_singular = 3,
  /// reproduce ran to completion but a check was violated.
  exit_check_failed = 4,
};

struct RunConfig {
  Command command = Command::reproduce;
  std::filesystem::path spec;
  std::filesystem::path design;
  std::filesystem::path out;
  std::filesystem::path truth;
  std::filesystem::path spectrum_csv;
  std::filesystem::path residual_csv;
  std::filesystem::path fit_out;

  Solver solver = Solver::direct;
  double lambda = 0.0;
  double pivot_tol = default_pivot_tol;
  double svd_tol = default_svd_rel_tol;
  bool allow_rank_deficient = false;

  double tol = default_spectrum_tol;
  double residual_tol = default_rank_tol;
  double cluster_tol = default_cluster_tol;
  std::size_t stride = 1;

  std::optional<std::uint64_t> seed;
  double U = 0.0;
  std::string name;
  bool list = false;
};

/// Throws Error(invalid_argument) on out-of-range numbers or clashing paths.
void validate(const RunConfig& config);

/// Executes one command. Errors become a JSON object on `err` and an exit code.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses flags (and an optional --config JSON file whose values the flags
/// override), then runs. Returns the process exit code.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fcm::cli
