#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fcm/model.hpp"

namespace fcm {

enum class CovariateKind { sinusoid_rich, orthogonal_counterexample, self_similar, filtered_noise };

std::string_view to_string(CovariateKind kind);
CovariateKind parse_covariate_kind(std::string_view name);

/// c t^m e^{a t} sin(b t + d).
struct SelfSimilarTerm {
  double c = 1.0;
  unsigned m = 0;
  double a = 0.0;
  double b = 0.0;
  double d = 0.0;
};

/// Band-limited noise realized as a random Fourier series: frequencies drawn
/// from a first-order low-pass spectrum 1 / (1 + (f / corner)^2) on
/// [0, cutoff] (cycles per time unit), Gaussian amplitudes, uniform phases.
/// Unset corner/cutoff default to 1/2 and 15/16 of the grid Nyquist frequency.
struct FilterParams {
  std::optional<double> corner;
  std::optional<double> cutoff;
  std::size_t components = 400;
};

struct GeneratorSpec {
  CovariateKind kind = CovariateKind::filtered_noise;
  /// Number of sinusoids for sinusoid_rich and orthogonal_counterexample.
  std::size_t K = 8;
  std::vector<SelfSimilarTerm> terms;
  FilterParams filter;
  double T = 1.0;
  double step = 1.0 / 128.0;
  std::uint64_t seed = 0;
};

/// The covariate as a function of continuous time. Deterministic given spec.
std::function<double(double)> covariate_function(const GeneratorSpec& spec);

/// Samples covariate_function on [0, T] with the spec step.
GridFunction gen_covariate(const GeneratorSpec& spec);

enum class NoiseKind { white, ar1 };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view name);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::white;
  double sd = 0.0;
  double ar_coefficient = 0.0;
};

/// Stationary noise path of `count` grid samples: white N(0, sd^2), or AR(1)
/// started from its stationary law with marginal sd.
std::vector<double> gen_noise(const NoiseSpec& noise, std::size_t count, std::uint64_t seed);

struct SimulatedDesign {
  Design design;
  CoefficientSet truth;
};

/// Simulates n observations y_i = predict_i + eps_i on [alpha*, T_i]. Before
/// alpha* the response holds the scalar part plus noise. Covariate j of
/// observation i uses seed cov_specs[j].seed + i; scalar covariates are
/// standard normal. Lags come from the kernel grids of beta_true.
/// domain_lengths, when non-empty, overrides the spec T per observation.
SimulatedDesign gen_design(std::span<const GeneratorSpec> cov_specs, const CoefficientSet& beta_true,
                           const NoiseSpec& noise, std::size_t n, std::uint64_t seed,
                           std::span<const double> domain_lengths = {});

enum class CenterMode {
  /// Keep scalar covariates untouched.
  keep_scalars,
  /// Drop scalar covariates, as in the intercept-free form of the model.
  report,
};

/// Subtracts from each y_i its trapezoid time average over [alpha*, T_i] and
/// from each covariate the across-observation mean curve at every grid time.
Design center(const Design& design, CenterMode mode = CenterMode::keep_scalars);

/// Lag-kernel families used by the simulator and the experiments.
enum class KernelKind { bump, sine, exp_cos, values };

struct KernelSpec {
  KernelKind kind = KernelKind::bump;
  double amplitude = 1.0;
  /// bump: amplitude * sin^power(pi u / alpha) * (1 + slope u).
  unsigned power = 4;
  double slope = 1.0;
  /// sine: amplitude * sin(2 pi frequency u); exp_cos: amplitude * e^{-rate u} cos(frequency u).
  double frequency = 1.0;
  double rate = 1.0;
  std::vector<double> values;
};

std::string_view to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view name);

std::function<double(double)> kernel_function(const KernelSpec& spec, double alpha);
GridFunction sample_kernel(const KernelSpec& spec, double alpha, double step);

}  // namespace fcm
