#include <random>

#include "fcm/designs.hpp"
#include "fcm/estimator.hpp"
#include "fcm/identifiability.hpp"
#include "support.hpp"

namespace fcm {
namespace {

using test::grid;
using test::pi;
using test::throws_code;

GeneratorSpec noise(std::uint64_t seed, double T, double step) {
  GeneratorSpec g;
  g.T = T;
  g.step = step;
  g.seed = seed;
  return g;
}

SimulatedDesign rich(double step, double sd, std::uint64_t seed, std::size_t n = 4) {
  const CoefficientSet truth{{0.3, 0.9}, {sample_kernel(KernelSpec{}, 0.5, step)}};
  return gen_design(std::vector<GeneratorSpec>{noise(seed, 2.0, step)}, truth, {NoiseKind::white, sd, 0.0}, n, seed);
}

SimulatedDesign self_similar(double sd, std::uint64_t seed) {
  GeneratorSpec g;
  g.kind = CovariateKind::self_similar;
  g.terms = {{1.0, 0, 0.0, 2 * pi, 0.0}, {0.5, 0, 0.3, 0.0, pi / 2}};
  g.T = 2.0;
  g.step = 1.0 / 64;
  const CoefficientSet truth{{0.2}, {sample_kernel(KernelSpec{}, 0.5, g.step)}};
  return gen_design(std::vector<GeneratorSpec>{g}, truth, {NoiseKind::white, sd, 0.0}, 2, seed);
}

double rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

TEST(Assemble, ZeroCovariateGivesZeroBlock) {
  const double h = 1.0 / 32;
  const auto zero = grid(0.0, h, 65, [](double) { return 0.0; });
  const auto y = grid(0.0, h, 65, [](double t) { return std::cos(t); });
  const Design d({{y, {zero}, {}}}, {0.5}, h);
  const auto sys = assemble(d);
  const auto s = static_cast<Eigen::Index>(sys.layout.scalar_count());
  EXPECT_EQ(sys.G.bottomRightCorner(sys.G.rows() - s, sys.G.cols() - s).norm(), 0.0);
  EXPECT_EQ(sys.F.tail(sys.F.size() - s).norm(), 0.0);
}

TEST(Assemble, ConstantCovariateGivesRankOneBlock) {
  const double h = 1.0 / 32;
  const double T = 3.0;
  const double alpha = 0.5;
  const auto one = grid(0.0, h, 97, [](double) { return 1.0; });
  const Design d({{one, {one}, {}}}, {alpha}, h);
  const auto sys = assemble(d);
  const auto w = trapezoid_weights(17, h);
  for (std::size_t u = 0; u < 17; ++u)
    for (std::size_t v = 0; v < 17; ++v)
      EXPECT_NEAR(sys.G(static_cast<Eigen::Index>(1 + u), static_cast<Eigen::Index>(1 + v)), (T - alpha) * w[u] * w[v], 1e-14);
  EXPECT_EQ(gram_spectrum(sys).numerical_rank, 1u);
}

TEST(Assemble, QuadraticFormMatchesForwardModel) {
  const auto sd = rich(1.0 / 64, 0.1, 21);
  const auto sys = assemble(sd.design);
  std::mt19937_64 rng(21);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd c(static_cast<Eigen::Index>(sys.layout.covariate_rows()));
    for (auto& v : c) v = z(rng);
    const auto beta = sys.layout.unpack_covariates(c);
    const Eigen::VectorXd full = sys.layout.pack(beta);
    const double vgv = full.dot(sys.G * full);
    EXPECT_NEAR(vgv, quadratic_form(sd.design, beta), 1e-8 * vgv);
  }
}

TEST(Assemble, SymmetricAndPositiveSemidefinite) {
  const auto sd = self_similar(0.1, 3);
  const auto sys = assemble(sd.design);
  EXPECT_EQ((sys.G - sys.G.transpose()).norm(), 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sys.G);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * sys.G.norm());
}

TEST(Assemble, QuadraticSseMatchesModel) {
  const auto sd = rich(1.0 / 32, 0.2, 4);
  const auto sys = assemble(sd.design);
  const Eigen::VectorXd c = sys.layout.pack(sd.truth);
  const double s = sse(sd.design, sd.truth);
  EXPECT_NEAR(sys.quadratic_sse(c), s, 1e-9 * sys.response_energy);
}

TEST(SolveDirect, RecoversNoiselessKernel) {
  const auto sd = rich(1.0 / 128, 0.0, 5, 6);
  const auto est = solve_direct(assemble(sd.design));
  EXPECT_LT(relative_l2_error(est, sd.truth), 1e-3);
  EXPECT_NEAR(est.beta0[0], 0.3, 1e-6);
  EXPECT_NEAR(est.beta0[1], 0.9, 1e-6);
}

TEST(SolveDirect, ZeroDesignIsNearSingular) {
  const double h = 1.0 / 32;
  const auto zero = grid(0.0, h, 65, [](double) { return 0.0; });
  const Design d({{zero, {zero}, {}}}, {0.5}, h);
  EXPECT_THROW(solve_direct(assemble(d)), NearSingular);
}

TEST(SolveDirect, DiagonalSystem) {
  const CoefficientLayout layout(0.25, 1, {4});
  auto sys = empty_system(layout);
  Eigen::VectorXd diag(static_cast<Eigen::Index>(layout.size()));
  Eigen::VectorXd truth(diag.size());
  for (Eigen::Index k = 0; k < diag.size(); ++k) {
    diag[k] = 1.0 + 0.5 * static_cast<double>(k);
    truth[k] = std::pow(-1.0, static_cast<double>(k)) * (k + 1);
  }
  sys.G = diag.asDiagonal();
  sys.F = diag.cwiseProduct(truth);
  const auto c = layout.pack(solve_direct(sys));
  EXPECT_LT(rel_diff(c, truth), 1e-15);
}

TEST(SolveTruncated, AgreesWithDirectOnFullRank) {
  const auto sd = rich(1.0 / 64, 0.1, 6);
  const auto sys = assemble(sd.design);
  const auto a = sys.layout.pack(solve_direct(sys));
  const auto t = solve_truncated_svd(sys);
  EXPECT_EQ(t.rank, sys.layout.size());
  EXPECT_LT(rel_diff(sys.layout.pack(t.coef), a), 1e-8);
}

TEST(SolveTruncated, NoNullSpaceComponent) {
  const auto sd = self_similar(0.1, 7);
  const auto sys = assemble(sd.design);
  const auto spectrum = gram_spectrum(sys);
  ASSERT_FALSE(spectrum.null_basis.empty());
  const auto t = solve_truncated_svd(sys);
  CoefficientSet cov = t.coef;
  for (auto& v : cov.beta0) v = 0.0;
  const double norm = coefficient_norm(cov);
  EXPECT_LT(null_space_projection(spectrum, cov) * norm, 1e-8 * std::max(1.0, norm));
}

TEST(SolveTruncated, RelTolOneKeepsRankOne) {
  const auto sd = rich(1.0 / 32, 0.1, 8);
  EXPECT_EQ(solve_truncated_svd(assemble(sd.design), 1.0).rank, 1u);
  EXPECT_TRUE(throws_code([&] { solve_truncated_svd(assemble(sd.design), 0.0); }, ErrorCode::invalid_argument));
}

TEST(SolvePenalized, ZeroLambdaIsDirect) {
  const auto sd = rich(1.0 / 64, 0.1, 9);
  const auto sys = assemble(sd.design);
  EXPECT_EQ(sys.layout.pack(solve_penalized(sys, 0.0)), sys.layout.pack(solve_direct(sys)));
}

TEST(SolvePenalized, LargeLambdaFlattensSecondDifferences) {
  const auto sd = rich(1.0 / 32, 0.1, 10);
  const auto sys = assemble(sd.design);
  const auto c = solve_penalized(sys, 1e8);
  const auto& b = c.betas[0];
  double worst = 0.0, scale = 0.0;
  for (std::size_t q = 1; q + 1 < b.size(); ++q) worst = std::max(worst, std::abs(b[q - 1] - 2 * b[q] + b[q + 1]));
  for (double v : b.values()) scale = std::max(scale, std::abs(v));
  EXPECT_LT(worst, 1e-6 * std::max(scale, 1.0));
}

TEST(SolvePenalized, RankDeficientMatchesTruncatedResidual) {
  const auto sd = self_similar(0.1, 11);
  const auto sys = assemble(sd.design);
  const double s_svd = sse(sd.design, solve_truncated_svd(sys).coef);
  const double s_ridge = sse(sd.design, solve_penalized(sys, 1e-6));
  EXPECT_NEAR(s_ridge, s_svd, 1e-6 * s_svd);
  EXPECT_TRUE(throws_code([&] { solve_penalized(sys, -1.0); }, ErrorCode::invalid_argument));
}

TEST(Penalty, AnnihilatesLinearKernels) {
  const CoefficientLayout layout(0.1, 0, {10});
  const auto P = second_difference_penalty(layout);
  Eigen::VectorXd lin(static_cast<Eigen::Index>(layout.size()));
  lin[0] = 5.0;  // scalar rows are not penalized
  for (Eigen::Index k = 1; k < lin.size(); ++k) lin[k] = 2.0 - 0.3 * static_cast<double>(k);
  EXPECT_LT((P * lin).norm(), 1e-12);
}

TEST(Gradient, MatchesFiniteDifferences) {
  const auto sd = rich(1.0 / 32, 0.1, 12, 2);
  const auto sys = assemble(sd.design);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z;
  const auto M = static_cast<Eigen::Index>(sys.layout.size());
  for (int point = 0; point < 3; ++point) {
    Eigen::VectorXd c(M);
    for (auto& v : c) v = z(rng);
    Eigen::VectorXd fd(M);
    for (Eigen::Index k = 0; k < M; ++k) {
      Eigen::VectorXd p = c, m = c;
      p[k] += 1e-2;
      m[k] -= 1e-2;
      fd[k] = (sse(sd.design, sys.layout.unpack(p)) - sse(sd.design, sys.layout.unpack(m))) / 2e-2;
    }
    EXPECT_LT(rel_diff(fd, sys.gradient(c)), 1e-5);
  }
}

TEST(Fit, ReportsConsistentSse) {
  const auto sd = rich(1.0 / 64, 0.1, 13);
  for (Solver s : {Solver::direct, Solver::truncated_svd, Solver::ridge}) {
    FitOptions o;
    o.solver = s;
    o.lambda = s == Solver::ridge ? 1e-4 : 0.0;
    const auto r = fit(sd.design, o);
    EXPECT_EQ(r.solver_used, s);
    EXPECT_NEAR(r.sse_value, sse(sd.design, r.coef), 1e-9 * r.sse_value);
    EXPECT_GT(r.gram_min_eigenvalue, 0.0);
    EXPECT_EQ(r.truncation_rank.has_value(), s == Solver::truncated_svd);
  }
}

TEST(Fit, FallsBackOnlyWhenAllowed) {
  const auto sd = self_similar(0.1, 14);
  EXPECT_THROW(fit(sd.design), NearSingular);
  FitOptions o;
  o.allow_rank_deficient = true;
  const auto r = fit(sd.design, o);
  EXPECT_EQ(r.solver_used, Solver::truncated_svd);
  ASSERT_TRUE(r.truncation_rank.has_value());
  EXPECT_LT(*r.truncation_rank, assemble(sd.design).layout.size());
}

TEST(Layout, PackUnpackRoundTrip) {
  const auto sd = rich(1.0 / 16, 0.0, 15);
  const auto layout = CoefficientLayout::of(sd.design);
  const auto back = layout.unpack(layout.pack(sd.truth));
  EXPECT_EQ(back.beta0, sd.truth.beta0);
  for (std::size_t q = 0; q < back.betas[0].size(); ++q) EXPECT_EQ(back.betas[0][q], sd.truth.betas[0][q]);
  EXPECT_EQ(parse_solver("svd"), Solver::truncated_svd);
  EXPECT_TRUE(throws_code([] { parse_solver("lu"); }, ErrorCode::invalid_argument));
}

}  // namespace
}  // namespace fcm
