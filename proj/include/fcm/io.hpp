#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fcm/designs.hpp"
#include "fcm/downsample.hpp"
#include "fcm/estimator.hpp"
#include "fcm/identifiability.hpp"

namespace fcm::io {

using nlohmann::json;

inline constexpr int format_version = 1;

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// `t,value` CSV. Times must increase with uniform spacing to relative 1e-9
/// of the step.
GridFunction parse_grid_csv(std::string_view text, const std::string& source);
GridFunction read_grid_csv(const std::filesystem::path& path);
std::string grid_csv(const GridFunction& f);

std::string read_text(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, std::string_view text);
/// Pretty-printed JSON with a trailing newline.
std::string dump(const json& j);

json coefficients_json(const CoefficientSet& coef);
CoefficientSet coefficients_from_json(const json& j, const std::string& source);

/// Manifest: {"format_version", "step", "lags", "observations": [{"y", "x", "z"}]}
/// with curve paths relative to the manifest directory.
Design read_manifest(const std::filesystem::path& path);
/// Writes one CSV per curve plus manifest.json into dir; returns the manifest path.
std::filesystem::path write_design(const Design& design, const std::filesystem::path& dir);

/// Everything needed to rerun a simulation.
struct SimulationSpec {
  std::vector<GeneratorSpec> covariates;
  std::vector<KernelSpec> kernels;
  std::vector<double> lags;
  std::vector<double> beta0{0.0};
  NoiseSpec noise;
  std::size_t n = 1;
  std::uint64_t seed = 0;
  std::vector<double> domain_lengths;
};

SimulationSpec parse_simulation_spec(const json& j, const std::string& source);
json simulation_spec_json(const SimulationSpec& spec);
SimulatedDesign simulate(const SimulationSpec& spec);

json fit_json(const FitResult& result);
json spectrum_json(const SpectrumReport& spectrum);
json diagnosis_json(const Diagnosis& diagnosis);
/// `index,sigma` rows, descending.
std::string spectrum_csv(const std::vector<double>& values);
/// `observation,covariate,K,residual` rows.
std::string residual_csv(const Diagnosis& diagnosis);
/// `row,observation,l,t,y,z1..zd,x<j>_<q>...`.
std::string flm_csv(const FlmDataset& data);

}  // namespace fcm::io
