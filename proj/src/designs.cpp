#include "fcm/designs.hpp"

#include <cmath>
#include <random>
#include <string>

#include "fcm/error.hpp"

namespace fcm {

namespace {

constexpr double kPi = 3.14159265358979323846;

// SplitMix64 finalizer; decorrelates per-observation seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::function<double(double)> filtered_noise(const GeneratorSpec& spec) {
  const double nyquist = 0.5 / spec.step;
  const double corner = spec.filter.corner.value_or(0.5 * nyquist);
  const double cutoff = spec.filter.cutoff.value_or(0.9375 * nyquist);
  if (!(corner > 0.0) || !(cutoff > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "filter corner and cutoff must be positive");
  }
  if (spec.filter.components == 0) {
    throw Error(ErrorCode::invalid_argument, "filtered noise needs at least one component");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = spec.filter.components;
  const double span = std::atan(cutoff / corner);
  const double scale = std::sqrt(2.0 / static_cast<double>(n));
  std::vector<double> omega(n), phase(n), amp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // Inverse CDF of the density proportional to 1 / (1 + (f / corner)^2).
    omega[k] = 2.0 * kPi * corner * std::tan(unit(rng) * span);
    phase[k] = 2.0 * kPi * unit(rng);
    amp[k] = scale * normal(rng);
  }
  return [omega = std::move(omega), phase = std::move(phase), amp = std::move(amp)](double t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < omega.size(); ++k) acc += amp[k] * std::cos(omega[k] * t + phase[k]);
    return acc;
  };
}

}  // namespace

std::string_view to_string(CovariateKind kind) {
  switch (kind) {
    case CovariateKind::sinusoid_rich: return "sinusoid_rich";
    case CovariateKind::orthogonal_counterexample: return "orthogonal_counterexample";
    case CovariateKind::self_similar: return "self_similar";
    case CovariateKind::filtered_noise: return "filtered_noise";
  }
  return "filtered_noise";
}

CovariateKind parse_covariate_kind(std::string_view name) {
  if (name == "sinusoid_rich") return CovariateKind::sinusoid_rich;
  if (name == "orthogonal_counterexample") return CovariateKind::orthogonal_counterexample;
  if (name == "self_similar") return CovariateKind::self_similar;
  if (name == "filtered_noise") return CovariateKind::filtered_noise;
  throw Error(ErrorCode::invalid_argument, "unknown covariate kind '" + std::string(name) + "'");
}

std::function<double(double)> covariate_function(const GeneratorSpec& spec) {
  if (!(spec.step > 0.0)) throw Error(ErrorCode::invalid_argument, "generator step must be positive");
  switch (spec.kind) {
    case CovariateKind::sinusoid_rich: {
      const std::size_t K = spec.K;
      return [K](double t) {
        double acc = 0.0;
        for (std::size_t k = 1; k <= K; ++k) {
          acc += std::ldexp(1.0, -static_cast<int>(k)) * std::sin(2.0 * kPi * static_cast<double>(k) * t);
        }
        return acc;
      };
    }
    case CovariateKind::orthogonal_counterexample: {
      if (std::abs(spec.T - std::round(spec.T)) > 1e-9 * std::max(1.0, spec.T)) {
        throw Error(ErrorCode::domain, "the orthogonal counterexample needs an integer-length domain");
      }
      const std::size_t K = spec.K;
      return [K](double t) {
        double acc = 0.0;
        for (std::size_t k = 1; k <= K; ++k) {
          acc += std::ldexp(1.0, -4 * static_cast<int>(k)) * std::sin(4.0 * kPi * static_cast<double>(k) * t);
        }
        return acc;
      };
    }
    case CovariateKind::self_similar: {
      if (spec.terms.empty()) throw Error(ErrorCode::invalid_argument, "self-similar covariate needs terms");
      return [terms = spec.terms](double t) {
        double acc = 0.0;
        for (const auto& s : terms) {
          acc += s.c * std::pow(t, static_cast<double>(s.m)) * std::exp(s.a * t) * std::sin(s.b * t + s.d);
        }
        return acc;
      };
    }
    case CovariateKind::filtered_noise:
      return filtered_noise(spec);
  }
  throw Error(ErrorCode::invalid_argument, "unknown covariate kind");
}

GridFunction gen_covariate(const GeneratorSpec& spec) {
  const std::size_t steps = steps_in(spec.T, spec.step);
  return GridFunction::sample(0.0, spec.step, steps + 1, covariate_function(spec));
}

std::string_view to_string(NoiseKind kind) { return kind == NoiseKind::ar1 ? "ar1" : "white"; }

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "white") return NoiseKind::white;
  if (name == "ar1") return NoiseKind::ar1;
  throw Error(ErrorCode::invalid_argument, "unknown noise kind '" + std::string(name) + "'");
}

std::vector<double> gen_noise(const NoiseSpec& noise, std::size_t count, std::uint64_t seed) {
  if (!(noise.sd >= 0.0)) throw Error(ErrorCode::invalid_argument, "noise sd must be non-negative");
  if (!(std::abs(noise.ar_coefficient) < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "AR(1) coefficient must lie in (-1, 1)");
  }
  std::vector<double> e(count, 0.0);
  if (noise.sd == 0.0 || count == 0) return e;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  if (noise.kind == NoiseKind::white) {
    for (auto& v : e) v = noise.sd * normal(rng);
    return e;
  }
  const double phi = noise.ar_coefficient;
  const double innovation = noise.sd * std::sqrt(1.0 - phi * phi);
  e[0] = noise.sd * normal(rng);
  for (std::size_t m = 1; m < count; ++m) e[m] = phi * e[m - 1] + innovation * normal(rng);
  return e;
}

SimulatedDesign gen_design(std::span<const GeneratorSpec> cov_specs, const CoefficientSet& beta_true,
                           const NoiseSpec& noise, std::size_t n, std::uint64_t seed,
                           std::span<const double> domain_lengths) {
  if (n == 0) throw Error(ErrorCode::invalid_argument, "need at least one observation");
  if (cov_specs.empty() || cov_specs.size() != beta_true.betas.size()) {
    throw Error(ErrorCode::shape, "one generator spec per coefficient function is required");
  }
  if (beta_true.beta0.empty()) throw Error(ErrorCode::shape, "coefficients need an intercept");
  if (!domain_lengths.empty() && domain_lengths.size() != n) {
    throw Error(ErrorCode::shape, "domain_lengths must have one entry per observation");
  }
  const double step = cov_specs.front().step;
  std::vector<double> lags;
  for (std::size_t j = 0; j < cov_specs.size(); ++j) {
    if (cov_specs[j].step != step) throw Error(ErrorCode::grid_mismatch, "generator specs use different steps");
    if (cov_specs[j].T != cov_specs.front().T) throw Error(ErrorCode::shape, "generator specs use different T");
    const auto& b = beta_true.betas[j];
    if (b.start() != 0.0 || b.step() != step) {
      throw Error(ErrorCode::grid_mismatch, "true kernel " + std::to_string(j) + " is not on the generator grid");
    }
    lags.push_back(b.length());
  }
  const std::size_t d = beta_true.beta0.size() - 1;

  std::vector<Observation> obs;
  obs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double T = domain_lengths.empty() ? cov_specs.front().T : domain_lengths[i];
    std::vector<GridFunction> x;
    for (const auto& spec : cov_specs) {
      GeneratorSpec s = spec;
      s.T = T;
      s.seed = spec.seed + i;
      x.push_back(gen_covariate(s));
    }
    std::vector<double> z(d);
    std::mt19937_64 zrng(mix_seed(seed, 2 * i + 1));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : z) v = normal(zrng);
    GridFunction y(0.0, step, std::vector<double>(x.front().size(), 0.0));
    obs.push_back({std::move(y), std::move(x), std::move(z)});
  }

  Design skeleton(std::move(obs), lags, step);
  check_conformal(skeleton, beta_true);
  std::vector<Observation> filled;
  filled.reserve(n);
  const std::size_t first = skeleton.first_index();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& o = skeleton.observation(i);
    const auto pred = predict(skeleton, beta_true, i);
    const auto eps = gen_noise(noise, o.y.size(), mix_seed(seed, 2 * i));
    double scalar = beta_true.beta0[0];
    for (std::size_t k = 0; k < d; ++k) scalar += beta_true.beta0[k + 1] * o.z[k];
    std::vector<double> y(o.y.size());
    for (std::size_t m = 0; m < y.size(); ++m) y[m] = (m < first ? scalar : pred[m - first]) + eps[m];
    filled.push_back({GridFunction(0.0, step, std::move(y)), o.x, o.z});
  }
  return {Design(std::move(filled), std::move(lags), step), beta_true};
}

Design center(const Design& design, CenterMode mode) {
  const std::size_t p = design.p();
  std::size_t longest = 0;
  for (const auto& o : design.observations()) longest = std::max(longest, o.y.size());

  // Across-observation mean of each covariate at every grid time, averaging
  // over the observations whose domain reaches that time.
  std::vector<std::vector<double>> mean(p, std::vector<double>(longest, 0.0));
  std::vector<double> count(longest, 0.0);
  for (const auto& o : design.observations()) {
    for (std::size_t m = 0; m < o.y.size(); ++m) count[m] += 1.0;
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t m = 0; m < o.y.size(); ++m) mean[j][m] += o.x[j][m];
  }
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t m = 0; m < longest; ++m) mean[j][m] /= count[m];

  const std::size_t first = design.first_index();
  std::vector<Observation> out;
  out.reserve(design.n());
  for (const auto& o : design.observations()) {
    const auto tail = o.y.slice(first, o.y.size() - first);
    const double level = tail.size() > 1 ? trapezoid_integral(tail) / tail.length() : tail[0];
    std::vector<double> y(o.y.values().begin(), o.y.values().end());
    for (auto& v : y) v -= level;
    std::vector<GridFunction> x;
    for (std::size_t j = 0; j < p; ++j) {
      std::vector<double> v(o.x[j].values().begin(), o.x[j].values().end());
      for (std::size_t m = 0; m < v.size(); ++m) v[m] -= mean[j][m];
      x.emplace_back(0.0, design.step(), std::move(v));
    }
    out.push_back({GridFunction(0.0, design.step(), std::move(y)), std::move(x),
                   mode == CenterMode::report ? std::vector<double>{} : o.z});
  }
  return Design(std::move(out), design.lags(), design.step());
}

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::bump: return "bump";
    case KernelKind::sine: return "sine";
    case KernelKind::exp_cos: return "exp_cos";
    case KernelKind::values: return "values";
  }
  return "bump";
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "bump") return KernelKind::bump;
  if (name == "sine") return KernelKind::sine;
  if (name == "exp_cos") return KernelKind::exp_cos;
  if (name == "values") return KernelKind::values;
  throw Error(ErrorCode::invalid_argument, "unknown kernel kind '" + std::string(name) + "'");
}

std::function<double(double)> kernel_function(const KernelSpec& spec, double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::invalid_argument, "kernel lag must be positive");
  switch (spec.kind) {
    case KernelKind::bump:
      return [spec, alpha](double u) {
        return spec.amplitude * std::pow(std::sin(kPi * u / alpha), static_cast<double>(spec.power)) *
               (1.0 + spec.slope * u);
      };
    case KernelKind::sine:
      return [spec](double u) { return spec.amplitude * std::sin(2.0 * kPi * spec.frequency * u); };
    case KernelKind::exp_cos:
      return [spec](double u) {
        return spec.amplitude * std::exp(-spec.rate * u) * std::cos(spec.frequency * u);
      };
    case KernelKind::values: {
      if (spec.values.size() < 2) throw Error(ErrorCode::invalid_argument, "kernel needs at least two values");
      GridFunction g(0.0, alpha / static_cast<double>(spec.values.size() - 1), spec.values);
      return [g = std::move(g), s = spec.amplitude](double u) {
        return s * resample(g, u, g.step(), 1)[0];
      };
    }
  }
  throw Error(ErrorCode::invalid_argument, "unknown kernel kind");
}

GridFunction sample_kernel(const KernelSpec& spec, double alpha, double step) {
  const std::size_t steps = steps_in(alpha, step);
  if (spec.kind == KernelKind::values) {
    if (spec.values.size() != steps + 1) {
      throw Error(ErrorCode::shape, "kernel values must have alpha / step + 1 entries");
    }
    std::vector<double> v = spec.values;
    for (auto& x : v) x *= spec.amplitude;
    return GridFunction(0.0, step, std::move(v));
  }
  return GridFunction::sample(0.0, step, steps + 1, kernel_function(spec, alpha));
}

}  // namespace fcm
