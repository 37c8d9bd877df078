#include "fcm/model.hpp"

#include <algorithm>
#include <string>

#include "fcm/error.hpp"

namespace fcm {

namespace {

[[noreturn]] void shape_error(const std::string& what) { throw Error(ErrorCode::shape, what); }

}  // namespace

Design::Design(std::vector<Observation> observations, std::vector<double> lags, double step)
    : observations_(std::move(observations)), lags_(std::move(lags)), step_(step) {
  if (!(step_ > 0.0)) throw Error(ErrorCode::invalid_argument, "design step must be positive");
  if (observations_.empty()) throw Error(ErrorCode::invalid_argument, "design has no observations");
  if (lags_.empty()) throw Error(ErrorCode::invalid_argument, "design needs at least one covariate lag");

  lag_points_.reserve(lags_.size());
  for (std::size_t j = 0; j < lags_.size(); ++j) {
    if (!(lags_[j] > 0.0)) {
      throw Error(ErrorCode::invalid_argument, "lag " + std::to_string(j) + " must be positive");
    }
    lag_points_.push_back(steps_in(lags_[j], step_));
  }
  first_index_ = *std::max_element(lag_points_.begin(), lag_points_.end());
  d_ = observations_.front().z.size();

  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const auto& obs = observations_[i];
    const std::string where = "observation " + std::to_string(i);
    if (obs.x.size() != lags_.size()) {
      shape_error(where + " has " + std::to_string(obs.x.size()) + " covariates, expected " +
                  std::to_string(lags_.size()));
    }
    if (obs.z.size() != d_) shape_error(where + " has a different number of scalar covariates");
    if (obs.y.start() != 0.0 || obs.y.step() != step_) {
      throw Error(ErrorCode::grid_mismatch, where + " response must start at 0 with the design step");
    }
    for (const auto& x : obs.x) {
      if (!x.combinable_with(obs.y)) {
        throw Error(ErrorCode::grid_mismatch, where + " covariate grid differs from its response grid");
      }
    }
    if (obs.y.size() - 1 < first_index_) {
      throw Error(ErrorCode::domain, where + " domain is shorter than the largest lag");
    }
  }
}

const Observation& Design::observation(std::size_t i) const {
  if (i >= observations_.size()) {
    throw Error(ErrorCode::invalid_argument, "observation index " + std::to_string(i) + " out of range");
  }
  return observations_[i];
}

CoefficientSet CoefficientSet::zeros(const Design& design) {
  CoefficientSet c;
  c.beta0.assign(design.d() + 1, 0.0);
  c.betas.reserve(design.p());
  for (std::size_t j = 0; j < design.p(); ++j) {
    c.betas.emplace_back(0.0, design.step(), std::vector<double>(design.lag_points(j) + 1, 0.0));
  }
  return c;
}

void check_conformal(const Design& design, const CoefficientSet& coef) {
  if (coef.beta0.size() != design.d() + 1) {
    shape_error("expected " + std::to_string(design.d() + 1) + " scalar coefficients, got " +
                std::to_string(coef.beta0.size()));
  }
  if (coef.betas.size() != design.p()) {
    shape_error("expected " + std::to_string(design.p()) + " coefficient functions, got " +
                std::to_string(coef.betas.size()));
  }
  for (std::size_t j = 0; j < design.p(); ++j) {
    const auto& b = coef.betas[j];
    if (b.start() != 0.0 || b.step() != design.step() || b.size() != design.lag_points(j) + 1) {
      throw Error(ErrorCode::grid_mismatch,
                  "coefficient function " + std::to_string(j) + " is not on [0, alpha_j] with the design step");
    }
  }
}

GridFunction lag_convolve(const GridFunction& x, const GridFunction& beta, double alpha,
                          double t_start) {
  const double h = x.step();
  const std::size_t lag = steps_in(alpha, h);
  if (beta.start() != 0.0 || beta.step() != h || beta.size() != lag + 1) {
    throw Error(ErrorCode::grid_mismatch, "kernel must be sampled on [0, alpha] with the covariate step");
  }
  if (x.size() < lag + 1) throw Error(ErrorCode::domain, "covariate is shorter than the lag");
  if (t_start < x.start()) throw Error(ErrorCode::domain, "convolution start precedes the covariate");
  const std::size_t first = steps_in(t_start - x.start(), h);
  if (first < lag) throw Error(ErrorCode::domain, "convolution window would reach before the covariate start");
  if (first >= x.size()) throw Error(ErrorCode::domain, "convolution start lies past the covariate end");

  const auto w = trapezoid_weights(lag + 1, h);
  const auto xv = x.values();
  std::vector<double> out(x.size() - first);
  for (std::size_t m = first; m < x.size(); ++m) {
    double acc = 0.0;
    for (std::size_t q = 0; q <= lag; ++q) acc += w[q] * beta[q] * xv[m - q];
    out[m - first] = acc;
  }
  return GridFunction(x.t(first), h, std::move(out));
}

GridFunction lag_convolve(const GridFunction& x, const GridFunction& beta, double alpha) {
  return lag_convolve(x, beta, alpha, x.start() + alpha);
}

GridFunction predict(const Design& design, const CoefficientSet& coef, std::size_t i) {
  check_conformal(design, coef);
  const auto& obs = design.observation(i);
  const std::size_t first = design.first_index();
  const std::size_t count = obs.y.size() - first;

  double scalar = coef.beta0[0];
  for (std::size_t k = 0; k < design.d(); ++k) scalar += coef.beta0[k + 1] * obs.z[k];

  std::vector<double> out(count, scalar);
  const double t_start = obs.y.t(first);
  for (std::size_t j = 0; j < design.p(); ++j) {
    const auto c = lag_convolve(obs.x[j], coef.betas[j], design.lags()[j], t_start);
    for (std::size_t m = 0; m < count; ++m) out[m] += c[m];
  }
  return GridFunction(t_start, design.step(), std::move(out));
}

double sse(const Design& design, const CoefficientSet& coef) {
  check_conformal(design, coef);
  const std::size_t first = design.first_index();
  double total = 0.0;
  for (std::size_t i = 0; i < design.n(); ++i) {
    const auto& y = design.observation(i).y;
    const auto fit = predict(design, coef, i);
    const auto w = trapezoid_weights(fit.size(), design.step());
    double acc = 0.0;
    for (std::size_t m = 0; m < fit.size(); ++m) {
      const double r = y[first + m] - fit[m];
      acc += w[m] * (r * r);
    }
    total += acc;
  }
  return total;
}

}  // namespace fcm
