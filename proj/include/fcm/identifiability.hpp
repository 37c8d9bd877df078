#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "fcm/estimator.hpp"
#include "fcm/model.hpp"

namespace fcm {

/// <beta, G[beta]> computed from the forward model: sum over observations of
/// the integral over [alpha*, T_i] of (sum_j int beta_j(u) x_ij(t-u) du)^2.
/// Scalar coefficients are ignored. Independent of assemble().
double quadratic_form(const Design& design, const CoefficientSet& beta);

/// Discrete L2 norm of the coefficient functions (scalars ignored).
double coefficient_norm(const CoefficientSet& beta);

/// Count of leading entries >= tol * values.front() in a descending sequence.
std::size_t numerical_rank(std::span<const double> descending, double tol);

inline constexpr double default_spectrum_tol = 1e-10;
inline constexpr double default_rank_tol = 1e-8;

struct SpectrumReport {
  /// Eigenvalues of the weighted covariate block, descending.
  std::vector<double> eigenvalues;
  std::size_t numerical_rank = 0;
  std::size_t block_size = 0;
  /// Directions with eigenvalue < tol * largest, orthonormal in the discrete
  /// L2 inner product. Scalar coefficients are zero.
  std::vector<CoefficientSet> null_basis;
  /// Eigenvector for the largest eigenvalue, same normalization.
  CoefficientSet leading_direction;
  double tol = default_spectrum_tol;

  bool full_rank() const noexcept { return numerical_rank == block_size; }
};

SpectrumReport gram_spectrum(const GramSystem& sys, double tol = default_spectrum_tol);

/// True iff the unit-normalized gamma has quadratic_form > tol, i.e. gamma is
/// not a non-identifiable direction. Throws on a zero direction.
bool certify_direction(const Design& design, const CoefficientSet& gamma, double tol);

/// Delay embedding H(l, m) = x(t_l - u_m): rows at grid times from row_start
/// to the end of x stepped by `stride`, columns at u_m = m * step in [0, alpha].
Eigen::MatrixXd delay_embed(const GridFunction& x, double alpha, std::size_t stride,
                            double row_start);
/// Rows start at t = x.start() + alpha.
Eigen::MatrixXd delay_embed(const GridFunction& x, double alpha, std::size_t stride = 1);

/// Singular values, descending.
std::vector<double> singular_values(const Eigen::Ref<const Eigen::MatrixXd>& m);

/// r[K] = sqrt(sum_{k>K} s_k^2) / sqrt(sum_k s_k^2) for K = 0..s.size().
std::vector<double> residual_curve(std::span<const double> singular_values);

/// Relative L2 misfit of the best order-K shift-invariant approximation of x
/// over windows of length alpha.
double self_similarity_residual(const GridFunction& x, double alpha, std::size_t K);

struct RecurrenceFit {
  /// c_1..c_K with x(t) ~ sum_k c_k x(t - k step).
  std::vector<double> coeffs;
  /// ||prediction error|| / ||x|| over the fitted samples.
  double residual = 0.0;
  std::size_t rank = 0;
  /// x satisfies a recurrence of lower order than K.
  bool rank_deficient = false;
};

RecurrenceFit fit_recurrence(const GridFunction& x, std::size_t K);

/// Continuous-time mode t^(multiplicity-1) e^{a t} {sin, cos}(b t). A mode with
/// b > 0 stands for a conjugate root pair.
struct Mode {
  double a = 0.0;
  double b = 0.0;
  std::size_t multiplicity = 1;
};

inline constexpr double default_cluster_tol = 1e-3;

/// Roots of z^K - c_1 z^{K-1} - ... - c_K mapped to a = ln|z| / step,
/// b = arg(z) / step, with roots closer than cluster_tol * max(1, |z|)
/// merged into one mode of higher multiplicity.
std::vector<Mode> recurrence_modes(std::span<const double> coeffs, double step,
                                   double cluster_tol = default_cluster_tol);

struct SelfSimilarityReport {
  std::size_t observation = 0;
  std::size_t covariate = 0;
  std::vector<double> singular_values;
  /// residual_curve of the singular values.
  std::vector<double> residuals;
  std::size_t estimated_order = 0;
  bool finite_dimensional = false;
  std::vector<double> recurrence_coeffs;
  std::vector<Mode> modes;
  double residual = 0.0;
};

/// Embeds x over windows of length alpha (rows from row_start), picks the
/// smallest K with residual < tol, and fits the order-K recurrence when the
/// covariate is finite dimensional: K < min(rows, columns) of the embedding.
SelfSimilarityReport self_similarity_report(const GridFunction& x, double alpha, double row_start,
                                            std::size_t stride = 1, double tol = default_rank_tol,
                                            double cluster_tol = default_cluster_tol);

struct DiagnoseOptions {
  double spectrum_tol = default_spectrum_tol;
  double residual_tol = default_rank_tol;
  double cluster_tol = default_cluster_tol;
  std::size_t stride = 1;
};

struct Diagnosis {
  SpectrumReport spectrum;
  /// One per (observation, covariate), observation-major.
  std::vector<SelfSimilarityReport> reports;
  /// Covariate j is finite dimensional in every observation.
  std::vector<bool> finite_dimensional;
  bool identifiable = false;
  DiagnoseOptions options;
};

Diagnosis diagnose(const Design& design, const DiagnoseOptions& options = {});
Diagnosis diagnose(const Design& design, const GramSystem& sys, const DiagnoseOptions& options);

/// Norm of the projection of gamma (normalized) onto span(null_basis) in the
/// discrete L2 inner product; 1 means gamma lies in the numerical null space.
double null_space_projection(const SpectrumReport& spectrum, const CoefficientSet& gamma);

}  // namespace fcm
