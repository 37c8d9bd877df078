#include "fcm/identifiability.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>

#include "fcm/error.hpp"
#include "fcm/parallel.hpp"

namespace fcm {

double quadratic_form(const Design& design, const CoefficientSet& beta) {
  check_conformal(design, beta);
  const std::size_t first = design.first_index();
  double total = 0.0;
  for (std::size_t i = 0; i < design.n(); ++i) {
    const auto& obs = design.observation(i);
    const double t_start = obs.y.t(first);
    std::vector<double> s(obs.y.size() - first, 0.0);
    for (std::size_t j = 0; j < design.p(); ++j) {
      const auto c = lag_convolve(obs.x[j], beta.betas[j], design.lags()[j], t_start);
      for (std::size_t m = 0; m < s.size(); ++m) s[m] += c[m];
    }
    const auto w = trapezoid_weights(s.size(), design.step());
    double acc = 0.0;
    for (std::size_t m = 0; m < s.size(); ++m) acc += w[m] * (s[m] * s[m]);
    total += acc;
  }
  return total;
}

double coefficient_norm(const CoefficientSet& beta) {
  double acc = 0.0;
  for (const auto& b : beta.betas) acc += inner_product(b, b);
  return std::sqrt(acc);
}

std::size_t numerical_rank(std::span<const double> descending, double tol) {
  if (descending.empty() || !(descending.front() > 0.0)) return 0;
  const double cut = tol * descending.front();
  return static_cast<std::size_t>(std::count_if(descending.begin(), descending.end(),
                                                [cut](double v) { return v >= cut; }));
}

SpectrumReport gram_spectrum(const GramSystem& sys, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "spectrum tolerance must lie in (0, 1)");
  }
  const auto& layout = sys.layout;
  const auto n = static_cast<Eigen::Index>(layout.covariate_rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sys.weighted_covariate_block());
  const Eigen::VectorXd s = layout.weights().tail(n).cwiseSqrt().cwiseInverse();

  SpectrumReport report;
  report.tol = tol;
  report.block_size = static_cast<std::size_t>(n);
  report.eigenvalues.resize(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) report.eigenvalues[static_cast<std::size_t>(k)] = eig.eigenvalues()[n - 1 - k];
  report.numerical_rank = numerical_rank(report.eigenvalues, tol);

  report.leading_direction = layout.unpack_covariates(s.cwiseProduct(eig.eigenvectors().col(n - 1)));
  const double cut = tol * report.eigenvalues.front();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (report.eigenvalues.front() > 0.0 && eig.eigenvalues()[k] >= cut) break;
    report.null_basis.push_back(layout.unpack_covariates(s.cwiseProduct(eig.eigenvectors().col(k))));
  }
  return report;
}

bool certify_direction(const Design& design, const CoefficientSet& gamma, double tol) {
  const double norm = coefficient_norm(gamma);
  if (!(norm > 0.0)) throw Error(ErrorCode::invalid_argument, "direction must be non-zero");
  return quadratic_form(design, gamma) / (norm * norm) > tol;
}

Eigen::MatrixXd delay_embed(const GridFunction& x, double alpha, std::size_t stride, double row_start) {
  if (stride == 0) throw Error(ErrorCode::invalid_argument, "embedding stride must be positive");
  const std::size_t cols = steps_in(alpha, x.step()) + 1;
  if (row_start < x.start()) throw Error(ErrorCode::domain, "embedding rows start before the covariate");
  const std::size_t first = steps_in(row_start - x.start(), x.step());
  if (first + 1 < cols || first >= x.size()) {
    throw Error(ErrorCode::domain, "covariate domain too short for a delay embedding of this lag");
  }
  const std::size_t rows = (x.size() - 1 - first) / stride + 1;
  Eigen::MatrixXd H(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t l = 0; l < rows; ++l) {
    const std::size_t m = first + l * stride;
    for (std::size_t q = 0; q < cols; ++q) {
      H(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(q)) = x[m - q];
    }
  }
  return H;
}

Eigen::MatrixXd delay_embed(const GridFunction& x, double alpha, std::size_t stride) {
  return delay_embed(x, alpha, stride, x.start() + alpha);
}

std::vector<double> singular_values(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  return std::vector<double>(s.data(), s.data() + s.size());
}

std::vector<double> residual_curve(std::span<const double> sv) {
  std::vector<double> tail(sv.size() + 1, 0.0);
  // Sum from the smallest value up so tiny tails keep their precision.
  for (std::size_t k = sv.size(); k-- > 0;) tail[k] = tail[k + 1] + sv[k] * sv[k];
  const double total = tail.front();
  std::vector<double> r(sv.size() + 1, 0.0);
  if (!(total > 0.0)) return r;
  for (std::size_t k = 0; k <= sv.size(); ++k) r[k] = std::sqrt(tail[k] / total);
  return r;
}

double self_similarity_residual(const GridFunction& x, double alpha, std::size_t K) {
  if (K == 0) throw Error(ErrorCode::invalid_argument, "order must be at least 1");
  const Eigen::MatrixXd H = delay_embed(x, alpha);
  if (K > static_cast<std::size_t>(H.cols())) {
    throw Error(ErrorCode::invalid_argument, "order " + std::to_string(K) + " exceeds the " +
                                                 std::to_string(H.cols()) + " embedding columns");
  }
  return residual_curve(singular_values(H))[K];
}

RecurrenceFit fit_recurrence(const GridFunction& x, std::size_t K) {
  if (K == 0) throw Error(ErrorCode::invalid_argument, "recurrence order must be at least 1");
  if (x.size() < 3 * K) {
    throw Error(ErrorCode::degenerate_domain, "recurrence of order " + std::to_string(K) +
                                                  " needs at least " + std::to_string(3 * K) + " samples");
  }
  const std::size_t rows = x.size() - K;
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(K));
  Eigen::VectorXd target(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t m = r + K;
    target[static_cast<Eigen::Index>(r)] = x[m];
    for (std::size_t k = 1; k <= K; ++k) X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k - 1)) = x[m - k];
  }

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-13);
  cod.compute(X);
  const Eigen::VectorXd c = cod.solve(target);

  RecurrenceFit fit;
  fit.coeffs.assign(c.data(), c.data() + c.size());
  fit.rank = static_cast<std::size_t>(cod.rank());
  fit.rank_deficient = fit.rank < K;
  const double norm = target.norm();
  fit.residual = norm > 0.0 ? (target - X * c).norm() / norm : 0.0;
  return fit;
}

std::vector<Mode> recurrence_modes(std::span<const double> coeffs, double step, double cluster_tol) {
  const auto K = static_cast<Eigen::Index>(coeffs.size());
  if (K == 0) return {};
  if (!(step > 0.0)) throw Error(ErrorCode::invalid_argument, "step must be positive");

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(K, K);
  for (Eigen::Index k = 0; k < K; ++k) companion(0, k) = coeffs[static_cast<std::size_t>(k)];
  for (Eigen::Index k = 1; k < K; ++k) companion(k, k - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, false);
  std::vector<std::complex<double>> roots(eig.eigenvalues().data(),
                                          eig.eigenvalues().data() + K);

  // Single-linkage clustering: a multiple root of the recurrence splits
  // under perturbation, and the cluster mean recovers it.
  std::vector<std::size_t> label(roots.size());
  std::iota(label.begin(), label.end(), 0);
  auto find = [&](std::size_t a) {
    while (label[a] != a) a = label[a] = label[label[a]];
    return a;
  };
  for (std::size_t a = 0; a < roots.size(); ++a) {
    for (std::size_t b = a + 1; b < roots.size(); ++b) {
      const double scale = std::max(1.0, std::max(std::abs(roots[a]), std::abs(roots[b])));
      if (std::abs(roots[a] - roots[b]) <= cluster_tol * scale) label[find(b)] = find(a);
    }
  }

  std::vector<Mode> modes;
  std::vector<bool> seen(roots.size(), false);
  for (std::size_t a = 0; a < roots.size(); ++a) {
    const std::size_t root = find(a);
    if (seen[root]) continue;
    seen[root] = true;
    std::complex<double> sum = 0.0;
    std::size_t count = 0;
    for (std::size_t b = 0; b < roots.size(); ++b) {
      if (find(b) == root) {
        sum += roots[b];
        ++count;
      }
    }
    const std::complex<double> centre = sum / static_cast<double>(count);
    const double mag = std::abs(centre);
    if (!(mag > 0.0)) continue;
    const bool real = std::abs(centre.imag()) <= cluster_tol * std::max(1.0, mag);
    if (!real && centre.imag() < 0.0) continue;  // conjugate of a kept mode
    Mode mode;
    mode.a = std::log(mag) / step;
    mode.b = real ? (centre.real() < 0.0 ? M_PI / step : 0.0) : std::arg(centre) / step;
    mode.multiplicity = count;
    modes.push_back(mode);
  }
  std::sort(modes.begin(), modes.end(), [](const Mode& l, const Mode& r) {
    return l.b != r.b ? l.b < r.b : l.a < r.a;
  });
  return modes;
}

SelfSimilarityReport self_similarity_report(const GridFunction& x, double alpha, double row_start,
                                            std::size_t stride, double tol, double cluster_tol) {
  const Eigen::MatrixXd H = delay_embed(x, alpha, stride, row_start);
  SelfSimilarityReport report;
  report.singular_values = singular_values(H);
  report.residuals = residual_curve(report.singular_values);
  std::size_t order = 0;
  while (order < report.singular_values.size() && !(report.residuals[order] < tol)) ++order;
  report.estimated_order = order;
  report.residual = report.residuals[order];
  const auto resolvable = static_cast<std::size_t>(std::min(H.rows(), H.cols()));
  report.finite_dimensional = order < resolvable;
  if (report.finite_dimensional && order >= 1 && x.size() >= 3 * order) {
    const auto rec = fit_recurrence(x, order);
    report.recurrence_coeffs = rec.coeffs;
    report.modes = recurrence_modes(rec.coeffs, x.step(), cluster_tol);
  }
  return report;
}

Diagnosis diagnose(const Design& design, const DiagnoseOptions& options) {
  return diagnose(design, assemble(design), options);
}

Diagnosis diagnose(const Design& design, const GramSystem& sys, const DiagnoseOptions& options) {
  Diagnosis out;
  out.options = options;
  out.spectrum = gram_spectrum(sys, options.spectrum_tol);

  const std::size_t p = design.p();
  out.reports.resize(design.n() * p);
  parallel_for(out.reports.size(), [&](std::size_t k) {
    const std::size_t i = k / p;
    const std::size_t j = k % p;
    const auto& x = design.observation(i).x[j];
    auto report = self_similarity_report(x, design.lags()[j], design.alpha_star(), options.stride,
                                         options.residual_tol, options.cluster_tol);
    report.observation = i;
    report.covariate = j;
    out.reports[k] = std::move(report);
  });

  out.finite_dimensional.assign(p, true);
  for (const auto& r : out.reports) {
    if (!r.finite_dimensional) out.finite_dimensional[r.covariate] = false;
  }
  out.identifiable = out.spectrum.full_rank();
  return out;
}

double null_space_projection(const SpectrumReport& spectrum, const CoefficientSet& gamma) {
  const double norm = coefficient_norm(gamma);
  if (!(norm > 0.0)) throw Error(ErrorCode::invalid_argument, "direction must be non-zero");
  double acc = 0.0;
  for (const auto& v : spectrum.null_basis) {
    if (v.betas.size() != gamma.betas.size()) throw Error(ErrorCode::shape, "direction does not match the spectrum");
    double c = 0.0;
    for (std::size_t j = 0; j < v.betas.size(); ++j) c += inner_product(v.betas[j], gamma.betas[j]);
    acc += c * c;
  }
  return std::sqrt(acc) / norm;
}

}  // namespace fcm
