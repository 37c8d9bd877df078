#include "fcm/grid_function.hpp"

#include <cmath>
#include <string>

#include "fcm/error.hpp"

namespace fcm {

namespace {

void require_combinable(const GridFunction& f, const GridFunction& g) {
  if (!f.combinable_with(g)) {
    throw Error(ErrorCode::grid_mismatch,
                "grid functions differ in start, step or length (" +
                    std::to_string(f.size()) + " vs " + std::to_string(g.size()) +
                    " samples)");
  }
}

// Snaps a fractional grid position to the nearest node when it is within
// roundoff of it, so coinciding grids reproduce samples exactly.
double snap(double s) {
  const double r = std::round(s);
  return std::abs(s - r) <= 1e-9 * std::max(1.0, std::abs(r)) ? r : s;
}

}  // namespace

GridFunction::GridFunction(double start, double step, std::vector<double> values)
    : start_(start), step_(step), values_(std::move(values)) {
  if (!(step_ > 0.0) || !std::isfinite(step_)) {
    throw Error(ErrorCode::invalid_argument, "grid step must be positive and finite");
  }
  if (!std::isfinite(start_)) {
    throw Error(ErrorCode::invalid_argument, "grid start must be finite");
  }
  if (values_.empty()) {
    throw Error(ErrorCode::degenerate_domain, "grid function needs at least one sample");
  }
}

bool GridFunction::combinable_with(const GridFunction& other) const noexcept {
  return start_ == other.start_ && step_ == other.step_ && values_.size() == other.values_.size();
}

GridFunction GridFunction::slice(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > values_.size()) {
    throw Error(ErrorCode::domain, "slice [" + std::to_string(first) + ", " +
                                       std::to_string(first + count) + ") outside " +
                                       std::to_string(values_.size()) + " samples");
  }
  return GridFunction(t(first), step_,
                      std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(first),
                                          values_.begin() +
                                              static_cast<std::ptrdiff_t>(first + count)));
}

GridFunction operator+(const GridFunction& f, const GridFunction& g) {
  require_combinable(f, g);
  std::vector<double> v(f.size());
  for (std::size_t m = 0; m < v.size(); ++m) v[m] = f[m] + g[m];
  return GridFunction(f.start(), f.step(), std::move(v));
}

GridFunction operator-(const GridFunction& f, const GridFunction& g) {
  require_combinable(f, g);
  std::vector<double> v(f.size());
  for (std::size_t m = 0; m < v.size(); ++m) v[m] = f[m] - g[m];
  return GridFunction(f.start(), f.step(), std::move(v));
}

GridFunction operator*(double s, const GridFunction& f) {
  std::vector<double> v(f.size());
  for (std::size_t m = 0; m < v.size(); ++m) v[m] = s * f[m];
  return GridFunction(f.start(), f.step(), std::move(v));
}

std::size_t steps_in(double length, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::invalid_argument, "step must be positive");
  if (!(length >= 0.0) || !std::isfinite(length)) {
    throw Error(ErrorCode::invalid_argument, "length must be finite and non-negative");
  }
  const double ratio = length / step;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, n)) {
    throw Error(ErrorCode::invalid_argument,
                "length " + std::to_string(length) + " is not a multiple of step " +
                    std::to_string(step));
  }
  return static_cast<std::size_t>(n);
}

std::vector<double> trapezoid_weights(std::size_t count, double step) {
  if (count == 0) return {};
  if (count == 1) return {0.0};
  std::vector<double> w(count, step);
  w.front() = 0.5 * step;
  w.back() = 0.5 * step;
  return w;
}

double trapezoid_integral(const GridFunction& f) {
  if (f.size() < 2) {
    throw Error(ErrorCode::degenerate_domain, "trapezoid rule needs at least two samples");
  }
  const auto w = trapezoid_weights(f.size(), f.step());
  double acc = 0.0;
  for (std::size_t m = 0; m < f.size(); ++m) acc += w[m] * f[m];
  return acc;
}

double inner_product(const GridFunction& f, const GridFunction& g) {
  require_combinable(f, g);
  if (f.size() < 2) {
    throw Error(ErrorCode::degenerate_domain, "inner product needs at least two samples");
  }
  const auto w = trapezoid_weights(f.size(), f.step());
  double acc = 0.0;
  for (std::size_t m = 0; m < f.size(); ++m) acc += w[m] * (f[m] * g[m]);
  return acc;
}

double l2_norm(const GridFunction& f) { return std::sqrt(inner_product(f, f)); }

GridFunction resample(const GridFunction& f, double new_step) {
  if (!(new_step > 0.0)) throw Error(ErrorCode::invalid_argument, "new step must be positive");
  const double span = f.length() / new_step;
  const auto steps = static_cast<std::size_t>(std::floor(snap(span)));
  return resample(f, f.start(), new_step, steps + 1);
}

GridFunction resample(const GridFunction& f, double new_start, double new_step,
                      std::size_t count) {
  if (!(new_step > 0.0)) throw Error(ErrorCode::invalid_argument, "new step must be positive");
  if (count == 0) throw Error(ErrorCode::degenerate_domain, "resample to an empty grid");
  const double offset = (new_start - f.start()) / f.step();
  const double ratio = new_step / f.step();
  const double last = static_cast<double>(f.size() - 1);
  std::vector<double> v(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double s = snap(offset + static_cast<double>(k) * ratio);
    if (s < 0.0 || s > last) {
      throw Error(ErrorCode::domain, "resample point " +
                                         std::to_string(new_start + static_cast<double>(k) * new_step) +
                                         " lies outside the source domain");
    }
    const auto i = static_cast<std::size_t>(std::floor(s));
    const double frac = s - static_cast<double>(i);
    v[k] = frac == 0.0 ? f[i] : (1.0 - frac) * f[i] + frac * f[i + 1];
  }
  return GridFunction(new_start, new_step, std::move(v));
}

GridFunction finite_diff(const GridFunction& f) {
  const std::size_t n = f.size();
  if (n < 3) throw Error(ErrorCode::degenerate_domain, "finite differences need three samples");
  const double h2 = 2.0 * f.step();
  std::vector<double> d(n);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / h2;
  for (std::size_t m = 1; m + 1 < n; ++m) d[m] = (f[m + 1] - f[m - 1]) / h2;
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / h2;
  return GridFunction(f.start(), f.step(), std::move(d));
}

}  // namespace fcm
