#pragma once

#include <cstddef>
#include <vector>

#include "fcm/grid_function.hpp"

namespace fcm {

/// One functional observation: response y_i, covariates x_i1..x_ip on the
/// shared grid over [0, T_i], and scalar covariates z_i1..z_id.
struct Observation {
  GridFunction y;
  std::vector<GridFunction> x;
  std::vector<double> z;
};

/// A validated set of observations with global lags alpha_1..alpha_p.
///
/// Every curve starts at 0 and uses exactly `step`; every lag and every
/// domain length is an integer number of steps; alpha* = max lag <= min T_i.
class Design {
 public:
  Design(std::vector<Observation> observations, std::vector<double> lags, double step);

  std::size_t n() const noexcept { return observations_.size(); }
  std::size_t p() const noexcept { return lags_.size(); }
  std::size_t d() const noexcept { return d_; }
  double step() const noexcept { return step_; }

  const std::vector<Observation>& observations() const noexcept { return observations_; }
  const Observation& observation(std::size_t i) const;
  const std::vector<double>& lags() const noexcept { return lags_; }

  /// alpha_j / step.
  std::size_t lag_points(std::size_t j) const { return lag_points_.at(j); }
  const std::vector<std::size_t>& all_lag_points() const noexcept { return lag_points_; }
  /// alpha* / step: index of the first grid point where every window is complete.
  std::size_t first_index() const noexcept { return first_index_; }
  double alpha_star() const noexcept { return static_cast<double>(first_index_) * step_; }

 private:
  std::vector<Observation> observations_;
  std::vector<double> lags_;
  std::vector<std::size_t> lag_points_;
  std::size_t first_index_ = 0;
  std::size_t d_ = 0;
  double step_;
};

/// Intercept, scalar coefficients and lag kernels beta_j on [0, alpha_j].
struct CoefficientSet {
  std::vector<double> beta0;
  std::vector<GridFunction> betas;

  static CoefficientSet zeros(const Design& design);
};

/// Throws unless coef has d+1 scalar entries and p kernels on [0, alpha_j]
/// with the design step.
void check_conformal(const Design& design, const CoefficientSet& coef);

/// c(t) = int_0^alpha beta(u) x(t - u) du by trapezoid quadrature in u
/// (endpoint weights halved), at the grid points of x from t_start on.
GridFunction lag_convolve(const GridFunction& x, const GridFunction& beta, double alpha,
                          double t_start);
GridFunction lag_convolve(const GridFunction& x, const GridFunction& beta, double alpha);

/// Model prediction for observation i on the grid points of [alpha*, T_i].
GridFunction predict(const Design& design, const CoefficientSet& coef, std::size_t i);

/// Sum over observations of the trapezoid integral over [alpha*, T_i] of the
/// squared residual.
double sse(const Design& design, const CoefficientSet& coef);

}  // namespace fcm
