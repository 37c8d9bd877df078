#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fcm {

/// A real function sampled on the uniform grid start + m * step.
///
/// Immutable after construction. Two grid functions are combinable only when
/// start, step and sample count match exactly; no operation interpolates
/// silently to make grids agree.
class GridFunction {
 public:
  GridFunction(double start, double step, std::vector<double> values);

  template <class F>
  static GridFunction sample(double start, double step, std::size_t count, F&& f) {
    std::vector<double> v(count);
    for (std::size_t m = 0; m < count; ++m) v[m] = f(start + static_cast<double>(m) * step);
    return GridFunction(start, step, std::move(v));
  }

  double start() const noexcept { return start_; }
  double step() const noexcept { return step_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t m) const noexcept { return values_[m]; }

  /// Abscissa of sample m.
  double t(std::size_t m) const noexcept { return start_ + static_cast<double>(m) * step_; }
  /// Domain length (size - 1) * step.
  double length() const noexcept { return static_cast<double>(values_.size() - 1) * step_; }

  bool combinable_with(const GridFunction& other) const noexcept;

  /// Samples [first, first + count) as a new grid function.
  GridFunction slice(std::size_t first, std::size_t count) const;

 private:
  double start_;
  double step_;
  std::vector<double> values_;
};

GridFunction operator+(const GridFunction& f, const GridFunction& g);
GridFunction operator-(const GridFunction& f, const GridFunction& g);
GridFunction operator*(double s, const GridFunction& f);

/// Number of grid steps in `length`; throws unless length is an integer
/// multiple of step to relative tolerance 1e-9.
std::size_t steps_in(double length, double step);

/// Composite trapezoid weights: step/2 at both ends, step inside. A single
/// sample spans a zero-measure domain and gets weight 0.
std::vector<double> trapezoid_weights(std::size_t count, double step);

double trapezoid_integral(const GridFunction& f);

/// Trapezoid L2 inner product. Symmetric bit-for-bit.
double inner_product(const GridFunction& f, const GridFunction& g);

double l2_norm(const GridFunction& f);

/// Linear interpolation onto start, start + new_step, ... up to the last point
/// that stays inside f's domain.
GridFunction resample(const GridFunction& f, double new_step);

/// Linear interpolation onto new_start + k * new_step, k < count. Throws a
/// domain error if any point falls outside f's domain.
GridFunction resample(const GridFunction& f, double new_start, double new_step,
                      std::size_t count);

/// Central differences inside, second-order one-sided at both ends.
GridFunction finite_diff(const GridFunction& f);

}  // namespace fcm
