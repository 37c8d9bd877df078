#include "fcm/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fcm/error.hpp"
#include "fcm/parallel.hpp"

namespace fcm {

CoefficientLayout::CoefficientLayout(double step, std::size_t d, std::vector<std::size_t> lag_points)
    : step_(step), d_(d), lag_points_(std::move(lag_points)) {
  if (!(step_ > 0.0)) throw Error(ErrorCode::invalid_argument, "layout step must be positive");
  std::size_t m = d_ + 1;
  for (std::size_t len : lag_points_) {
    offsets_.push_back(m);
    m += len + 1;
  }
  index_map_.reserve(m);
  weights_.resize(static_cast<Eigen::Index>(m));
  index_map_.push_back({Block::intercept, 0, 0});
  weights_[0] = 1.0;
  for (std::size_t k = 0; k < d_; ++k) {
    index_map_.push_back({Block::scalar, k, 0});
    weights_[static_cast<Eigen::Index>(k + 1)] = 1.0;
  }
  for (std::size_t j = 0; j < lag_points_.size(); ++j) {
    const auto w = trapezoid_weights(lag_points_[j] + 1, step_);
    for (std::size_t q = 0; q <= lag_points_[j]; ++q) {
      weights_[static_cast<Eigen::Index>(index_map_.size())] = w[q];
      index_map_.push_back({Block::covariate, j, q});
    }
  }
}

CoefficientLayout CoefficientLayout::of(const Design& design) {
  return CoefficientLayout(design.step(), design.d(), design.all_lag_points());
}

Eigen::VectorXd CoefficientLayout::pack(const CoefficientSet& coef) const {
  if (coef.beta0.size() != d_ + 1 || coef.betas.size() != lag_points_.size()) {
    throw Error(ErrorCode::shape, "coefficient set does not match the layout");
  }
  Eigen::VectorXd c(static_cast<Eigen::Index>(size()));
  for (std::size_t k = 0; k <= d_; ++k) c[static_cast<Eigen::Index>(k)] = coef.beta0[k];
  for (std::size_t j = 0; j < lag_points_.size(); ++j) {
    const auto& b = coef.betas[j];
    if (b.size() != lag_points_[j] + 1 || b.step() != step_) {
      throw Error(ErrorCode::grid_mismatch, "coefficient function " + std::to_string(j) +
                                                " does not match the layout grid");
    }
    for (std::size_t q = 0; q < b.size(); ++q) c[static_cast<Eigen::Index>(offsets_[j] + q)] = b[q];
  }
  return c;
}

CoefficientSet CoefficientLayout::unpack(const Eigen::Ref<const Eigen::VectorXd>& c) const {
  if (static_cast<std::size_t>(c.size()) != size()) {
    throw Error(ErrorCode::shape, "vector length does not match the layout");
  }
  CoefficientSet out;
  out.beta0.assign(c.data(), c.data() + d_ + 1);
  for (std::size_t j = 0; j < lag_points_.size(); ++j) {
    const double* first = c.data() + offsets_[j];
    out.betas.emplace_back(0.0, step_, std::vector<double>(first, first + lag_points_[j] + 1));
  }
  return out;
}

CoefficientSet CoefficientLayout::unpack_covariates(const Eigen::Ref<const Eigen::VectorXd>& cov) const {
  if (static_cast<std::size_t>(cov.size()) != covariate_rows()) {
    throw Error(ErrorCode::shape, "covariate vector length does not match the layout");
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  c.tail(cov.size()) = cov;
  return unpack(c);
}

Eigen::MatrixXd GramSystem::weighted_gram() const {
  const Eigen::VectorXd s = layout.weights().cwiseSqrt().cwiseInverse();
  return s.asDiagonal() * G * s.asDiagonal();
}

Eigen::MatrixXd GramSystem::weighted_covariate_block() const {
  const auto first = static_cast<Eigen::Index>(layout.scalar_count());
  const auto n = static_cast<Eigen::Index>(layout.covariate_rows());
  const Eigen::VectorXd s = layout.weights().tail(n).cwiseSqrt().cwiseInverse();
  return s.asDiagonal() * G.block(first, first, n, n) * s.asDiagonal();
}

Eigen::VectorXd GramSystem::gradient(const Eigen::Ref<const Eigen::VectorXd>& c) const {
  return 2.0 * (G * c - F);
}

double GramSystem::quadratic_sse(const Eigen::Ref<const Eigen::VectorXd>& c) const {
  return c.dot(G * c) - 2.0 * c.dot(F) + response_energy;
}

Eigen::MatrixXd regression_rows(const Design& design, const CoefficientLayout& layout,
                                std::size_t i, std::size_t first, std::size_t stride) {
  const auto& obs = design.observation(i);
  if (stride == 0) throw Error(ErrorCode::invalid_argument, "row stride must be positive");
  if (first < design.first_index() || first >= obs.y.size()) {
    throw Error(ErrorCode::domain, "first row lies outside [alpha*, T_i]");
  }
  const std::size_t rows = (obs.y.size() - 1 - first) / stride + 1;
  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(layout.size()));
  A.col(0).setOnes();
  for (std::size_t k = 0; k < design.d(); ++k) A.col(static_cast<Eigen::Index>(k + 1)).setConstant(obs.z[k]);
  for (std::size_t j = 0; j < design.p(); ++j) {
    const std::size_t lag = design.lag_points(j);
    const auto w = trapezoid_weights(lag + 1, design.step());
    const auto x = obs.x[j].values();
    const std::size_t off = layout.covariate_offset(j);
    for (std::size_t l = 0; l < rows; ++l) {
      const std::size_t m = first + l * stride;
      for (std::size_t q = 0; q <= lag; ++q) {
        A(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(off + q)) = w[q] * x[m - q];
      }
    }
  }
  return A;
}

GramSystem empty_system(const CoefficientLayout& layout) {
  const auto m = static_cast<Eigen::Index>(layout.size());
  return GramSystem{layout, Eigen::MatrixXd::Zero(m, m), Eigen::VectorXd::Zero(m), 0.0};
}

void accumulate(GramSystem& sys, const Eigen::Ref<const Eigen::MatrixXd>& rows,
                const Eigen::Ref<const Eigen::VectorXd>& row_weights,
                const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (rows.cols() != sys.G.cols() || rows.rows() != row_weights.size() || rows.rows() != y.size()) {
    throw Error(ErrorCode::shape, "row block does not match the system");
  }
  const Eigen::MatrixXd scaled = row_weights.cwiseSqrt().asDiagonal() * rows;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(sys.G.rows(), sys.G.cols());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  sys.G += gram.selfadjointView<Eigen::Lower>();
  const Eigen::VectorXd wy = row_weights.cwiseProduct(y);
  sys.F += rows.transpose() * wy;
  sys.response_energy += y.dot(wy);
}

GramSystem assemble(const Design& design) {
  const auto layout = CoefficientLayout::of(design);
  const std::size_t first = design.first_index();

  struct Contribution {
    Eigen::MatrixXd G;
    Eigen::VectorXd F;
    double energy = 0.0;
  };
  std::vector<Contribution> parts(design.n());
  parallel_for(design.n(), [&](std::size_t i) {
    const auto& y = design.observation(i).y;
    const Eigen::MatrixXd A = regression_rows(design, layout, i, first, 1);
    const auto w = trapezoid_weights(static_cast<std::size_t>(A.rows()), design.step());
    GramSystem part = empty_system(layout);
    accumulate(part, A, Eigen::Map<const Eigen::VectorXd>(w.data(), A.rows()),
               Eigen::Map<const Eigen::VectorXd>(y.values().data() + first, A.rows()));
    parts[i] = {std::move(part.G), std::move(part.F), part.response_energy};
  });

  GramSystem sys = empty_system(layout);
  for (auto& part : parts) {
    sys.G += part.G;
    sys.F += part.F;
    sys.response_energy += part.energy;
  }
  return sys;
}

namespace {

Eigen::VectorXd inv_sqrt_weights(const CoefficientLayout& layout) {
  return layout.weights().cwiseSqrt().cwiseInverse();
}

void check_spectrum(const Eigen::MatrixXd& weighted, double pivot_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(weighted, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || !(lo > pivot_tol * hi)) throw NearSingular(lo, hi);
}

// Solves weighted * e = W^{-1/2} F and maps back to c = W^{-1/2} e.
CoefficientSet solve_weighted(const GramSystem& sys, const Eigen::MatrixXd& weighted) {
  const Eigen::VectorXd s = inv_sqrt_weights(sys.layout);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(weighted);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(weighted, Eigen::EigenvaluesOnly);
    throw NearSingular(eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff());
  }
  const Eigen::VectorXd e = ldlt.solve(s.cwiseProduct(sys.F));
  if (!e.allFinite()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(weighted, Eigen::EigenvaluesOnly);
    throw NearSingular(eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff());
  }
  return sys.layout.unpack(s.cwiseProduct(e));
}

}  // namespace

CoefficientSet solve_direct(const GramSystem& sys, double pivot_tol) {
  const Eigen::MatrixXd weighted = sys.weighted_gram();
  check_spectrum(weighted, pivot_tol);
  return solve_weighted(sys, weighted);
}

TruncatedSolution solve_truncated_svd(const GramSystem& sys, double rel_tol) {
  if (!(rel_tol > 0.0) || rel_tol > 1.0) {
    throw Error(ErrorCode::invalid_argument, "truncation tolerance must lie in (0, 1]");
  }
  const Eigen::VectorXd s = inv_sqrt_weights(sys.layout);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sys.weighted_gram());
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const Eigen::MatrixXd& V = eig.eigenvectors();
  const double top = lambda.cwiseAbs().maxCoeff();
  const Eigen::VectorXd rhs = V.transpose() * s.cwiseProduct(sys.F);

  Eigen::VectorXd e = Eigen::VectorXd::Zero(lambda.size());
  std::size_t rank = 0;
  // Largest eigenvalues last in Eigen's ordering; accumulate from the top down.
  for (Eigen::Index k = lambda.size() - 1; k >= 0; --k) {
    if (top > 0.0 && std::abs(lambda[k]) >= rel_tol * top) {
      e += (rhs[k] / lambda[k]) * V.col(k);
      ++rank;
    }
  }
  return {sys.layout.unpack(s.cwiseProduct(e)), rank};
}

Eigen::MatrixXd second_difference_penalty(const CoefficientLayout& layout) {
  const auto m = static_cast<Eigen::Index>(layout.size());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t j = 0; j < layout.p(); ++j) {
    const std::size_t len = layout.covariate_size(j);
    const auto off = static_cast<Eigen::Index>(layout.covariate_offset(j));
    for (std::size_t r = 1; r + 1 < len; ++r) {
      // Row of D: (1, -2, 1) at lag indices r-1, r, r+1.
      const Eigen::Index idx[3] = {off + static_cast<Eigen::Index>(r) - 1,
                                   off + static_cast<Eigen::Index>(r),
                                   off + static_cast<Eigen::Index>(r) + 1};
      const double coeff[3] = {1.0, -2.0, 1.0};
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) P(idx[a], idx[b]) += coeff[a] * coeff[b];
    }
  }
  return P;
}

CoefficientSet solve_penalized(const GramSystem& sys, double lambda, double pivot_tol) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::invalid_argument, "penalty weight must be finite and non-negative");
  }
  if (lambda == 0.0) return solve_direct(sys, pivot_tol);
  const Eigen::VectorXd s = inv_sqrt_weights(sys.layout);
  const Eigen::MatrixXd penalty = s.asDiagonal() * second_difference_penalty(sys.layout) * s.asDiagonal();
  return solve_weighted(sys, sys.weighted_gram() + lambda * penalty);
}

std::string_view to_string(Solver s) {
  switch (s) {
    case Solver::direct: return "direct";
    case Solver::truncated_svd: return "truncated_svd";
    case Solver::ridge: return "ridge";
  }
  return "direct";
}

Solver parse_solver(std::string_view name) {
  if (name == "direct") return Solver::direct;
  if (name == "svd" || name == "truncated_svd") return Solver::truncated_svd;
  if (name == "ridge") return Solver::ridge;
  throw Error(ErrorCode::invalid_argument, "unknown solver '" + std::string(name) + "'");
}

FitResult fit(const Design& design, const FitOptions& options) {
  const GramSystem sys = assemble(design);
  FitResult result;
  result.lambda = options.lambda;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sys.weighted_gram(), Eigen::EigenvaluesOnly);
  result.gram_min_eigenvalue = eig.eigenvalues().minCoeff();
  const double top = eig.eigenvalues().maxCoeff();
  result.gram_condition = result.gram_min_eigenvalue > 0.0
                              ? top / result.gram_min_eigenvalue
                              : std::numeric_limits<double>::infinity();

  auto truncated = [&] {
    auto t = solve_truncated_svd(sys, options.svd_rel_tol);
    result.coef = std::move(t.coef);
    result.truncation_rank = t.rank;
    result.solver_used = Solver::truncated_svd;
  };

  switch (options.solver) {
    case Solver::direct:
      try {
        result.coef = solve_direct(sys, options.pivot_tol);
        result.solver_used = Solver::direct;
      } catch (const NearSingular&) {
        if (!options.allow_rank_deficient) throw;
        truncated();
      }
      break;
    case Solver::truncated_svd:
      truncated();
      break;
    case Solver::ridge:
      result.coef = solve_penalized(sys, options.lambda, options.pivot_tol);
      result.solver_used = Solver::ridge;
      break;
  }
  result.sse_value = sse(design, result.coef);
  return result;
}

double relative_l2_error(const CoefficientSet& estimate, const CoefficientSet& truth) {
  if (estimate.betas.size() != truth.betas.size()) {
    throw Error(ErrorCode::shape, "coefficient sets have different numbers of functions");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < truth.betas.size(); ++j) {
    const auto diff = estimate.betas[j] - truth.betas[j];
    num += inner_product(diff, diff);
    den += inner_product(truth.betas[j], truth.betas[j]);
  }
  if (!(den > 0.0)) return std::sqrt(num);
  return std::sqrt(num / den);
}

}  // namespace fcm
