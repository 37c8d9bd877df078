#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "fcm/model.hpp"

namespace fcm {

enum class Block { intercept, scalar, covariate };

/// Row k of the unknown vector: which block it belongs to, the scalar or
/// covariate index inside that block, and the lag grid index (0 for scalars).
struct IndexEntry {
  Block block;
  std::size_t which;
  std::size_t grid_index;
};

/// Packing of a CoefficientSet into one vector:
/// [beta_00, beta_01..beta_0d, beta_1(u_0..u_L1), ..., beta_p(u_0..u_Lp)].
///
/// weights() holds 1 for the scalar rows and the lag-direction trapezoid
/// weights for covariate rows; c^T diag(weights) c is the discrete L2 norm.
class CoefficientLayout {
 public:
  CoefficientLayout(double step, std::size_t d, std::vector<std::size_t> lag_points);
  static CoefficientLayout of(const Design& design);

  std::size_t size() const noexcept { return index_map_.size(); }
  std::size_t scalar_count() const noexcept { return d_ + 1; }
  std::size_t d() const noexcept { return d_; }
  std::size_t p() const noexcept { return lag_points_.size(); }
  double step() const noexcept { return step_; }
  const std::vector<std::size_t>& lag_points() const noexcept { return lag_points_; }

  std::size_t covariate_offset(std::size_t j) const { return offsets_.at(j); }
  std::size_t covariate_size(std::size_t j) const { return lag_points_.at(j) + 1; }
  /// Rows [scalar_count(), size()) hold the covariate blocks.
  std::size_t covariate_rows() const noexcept { return size() - scalar_count(); }

  const std::vector<IndexEntry>& index_map() const noexcept { return index_map_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }

  Eigen::VectorXd pack(const CoefficientSet& coef) const;
  CoefficientSet unpack(const Eigen::Ref<const Eigen::VectorXd>& c) const;
  /// Covariate rows only; the scalar part of the result is zero.
  CoefficientSet unpack_covariates(const Eigen::Ref<const Eigen::VectorXd>& cov) const;

 private:
  double step_;
  std::size_t d_;
  std::vector<std::size_t> lag_points_;
  std::vector<std::size_t> offsets_;
  std::vector<IndexEntry> index_map_;
  Eigen::VectorXd weights_;
};

/// Discretized normal equations G c = F of the OLS criterion. SSE(c) equals
/// c^T G c - 2 c^T F + response_energy exactly in exact arithmetic.
struct GramSystem {
  CoefficientLayout layout;
  Eigen::MatrixXd G;
  Eigen::VectorXd F;
  double response_energy = 0.0;

  /// W^{-1/2} G W^{-1/2}: the operator in the quadrature-weighted inner product.
  Eigen::MatrixXd weighted_gram() const;
  /// Same transform restricted to the covariate blocks.
  Eigen::MatrixXd weighted_covariate_block() const;
  /// 2 (G c - F).
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& c) const;
  /// c^T G c - 2 c^T F + response_energy.
  double quadratic_sse(const Eigen::Ref<const Eigen::VectorXd>& c) const;
};

/// Regression rows for observation i at grid indices first, first + stride,
/// ... : entry (l, k) is the coefficient of unknown k in the prediction at
/// that time (1, z_ik, or w_q x_ij(t - u_q)).
Eigen::MatrixXd regression_rows(const Design& design, const CoefficientLayout& layout,
                                std::size_t i, std::size_t first, std::size_t stride);

/// Adds rows^T diag(row_weights) rows to G and rows^T diag(row_weights) y to F.
void accumulate(GramSystem& sys, const Eigen::Ref<const Eigen::MatrixXd>& rows,
                const Eigen::Ref<const Eigen::VectorXd>& row_weights,
                const Eigen::Ref<const Eigen::VectorXd>& y);

GramSystem empty_system(const CoefficientLayout& layout);

/// Assembles G and F with trapezoid weights in t over [alpha*, T_i] and in u
/// over [0, alpha_j]. Observations are summed in index order.
GramSystem assemble(const Design& design);

inline constexpr double default_pivot_tol = 1e-12;
inline constexpr double default_svd_rel_tol = 1e-10;

/// Symmetric factorization of G c = F. Throws NearSingular when the smallest
/// eigenvalue of the weighted Gram is <= pivot_tol times the largest.
CoefficientSet solve_direct(const GramSystem& sys, double pivot_tol = default_pivot_tol);

struct TruncatedSolution {
  CoefficientSet coef;
  std::size_t rank;
};

/// Pseudo-inverse solution keeping eigenvalues >= rel_tol * largest. Among
/// all minimizers it has the smallest quadrature-weighted norm.
TruncatedSolution solve_truncated_svd(const GramSystem& sys, double rel_tol = default_svd_rel_tol);

/// Plain second-difference penalty D^T D on every covariate block; the scalar
/// rows are not penalized.
Eigen::MatrixXd second_difference_penalty(const CoefficientLayout& layout);

/// Solves (G + lambda D^T D) c = F. lambda = 0 reduces to solve_direct.
CoefficientSet solve_penalized(const GramSystem& sys, double lambda,
                               double pivot_tol = default_pivot_tol);

enum class Solver { direct, truncated_svd, ridge };

std::string_view to_string(Solver s);
Solver parse_solver(std::string_view name);

struct FitOptions {
  Solver solver = Solver::direct;
  double lambda = 0.0;
  double pivot_tol = default_pivot_tol;
  double svd_rel_tol = default_svd_rel_tol;
  /// Fall back to the truncated solve when the direct solve is near singular.
  bool allow_rank_deficient = false;
};

struct FitResult {
  CoefficientSet coef;
  double sse_value = 0.0;
  double gram_min_eigenvalue = 0.0;
  double gram_condition = 0.0;
  Solver solver_used = Solver::direct;
  std::optional<std::size_t> truncation_rank;
  double lambda = 0.0;
};

FitResult fit(const Design& design, const FitOptions& options = {});

/// Relative discrete L2 distance between the coefficient functions of two
/// conformal coefficient sets (scalars excluded).
double relative_l2_error(const CoefficientSet& estimate, const CoefficientSet& truth);

}  // namespace fcm
