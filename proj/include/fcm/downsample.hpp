#pragma once

#include <cstddef>
#include <vector>

#include "fcm/estimator.hpp"
#include "fcm/model.hpp"

namespace fcm {

/// One scalar-response row of the down-sampled model: y_i at t = alpha* + l U
/// and the reversed windows x_ij(t - u), u on the lag grid of beta_j.
struct FlmRow {
  std::size_t observation = 0;
  std::size_t l = 0;
  double t = 0.0;
  double y = 0.0;
  std::vector<double> z;
  std::vector<GridFunction> windows;
};

struct FlmDataset {
  std::vector<FlmRow> rows;
  double U = 0.0;
  double step = 0.0;
  std::vector<double> lags;
  std::size_t d = 0;
  /// Rows per observation: floor((T_i - alpha*) / U) + 1.
  std::vector<std::size_t> counts;

  CoefficientLayout layout() const;
};

/// Observes every response only at alpha* + l U. U must be a positive
/// integer multiple of the design step.
FlmDataset to_flm(const Design& design, double U);

/// Predicted row response sum_k beta_0k z_k + sum_j sum_q w_q beta_j(u_q) window_j(u_q).
double flm_predict(const FlmDataset& data, const FlmRow& row, const CoefficientSet& coef);

/// Normal equations of the unweighted row sum of squares, with the lag
/// trapezoid weights inside each row.
GramSystem flm_system(const FlmDataset& data);

/// Least squares over the rows, optionally with the second-difference
/// penalty. Throws NearSingular for an underdetermined unpenalized fit.
CoefficientSet fit_flm(const FlmDataset& data, double lambda = 0.0,
                       double pivot_tol = default_pivot_tol);

}  // namespace fcm
