#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace fcm {

/// One measured quantity compared against its threshold.
struct Check {
  std::string id;
  std::string description;
  double measured = 0.0;
  double threshold = 0.0;
  /// "<", "<=", ">", ">=" or "==".
  std::string relation;
  bool passed = false;
};

struct ExperimentResult {
  std::string name;
  int criterion = 0;
  std::uint64_t seed = 0;
  std::vector<Check> checks;
  nlohmann::json details = nlohmann::json::object();

  bool passed() const;
  nlohmann::json to_json() const;
};

struct Experiment {
  std::string name;
  int criterion;
  std::string summary;
  std::uint64_t default_seed;
  std::function<ExperimentResult(std::uint64_t seed)> run;
};

/// Named acceptance experiments in criterion order.
const std::vector<Experiment>& experiments();
const Experiment& find_experiment(const std::string& name);

/// Runs the experiment with its embedded seed unless one is given.
ExperimentResult run_experiment(const std::string& name, std::optional<std::uint64_t> seed = std::nullopt);

/// "PASS <criterion> <name>" or "FAIL ..." followed by one indented line per check.
std::string format_result(const ExperimentResult& result);

}  // namespace fcm
