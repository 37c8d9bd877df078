#include "fcm/designs.hpp"
#include "fcm/downsample.hpp"
#include "fcm/identifiability.hpp"
#include "support.hpp"

namespace fcm {
namespace {

using test::throws_code;

SimulatedDesign make(double sd, std::uint64_t seed, double step = 1.0 / 64, std::size_t n = 4) {
  GeneratorSpec g;
  g.T = 2.0;
  g.step = step;
  g.seed = seed;
  const CoefficientSet truth{{0.3, 0.8}, {sample_kernel(KernelSpec{}, 0.5, step)}};
  return gen_design(std::vector<GeneratorSpec>{g}, truth, {NoiseKind::white, sd, 0.0}, n, seed);
}

double min_weighted_eigenvalue(const GramSystem& sys) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sys.weighted_gram(), Eigen::EigenvaluesOnly).eigenvalues()[0];
}

TEST(ToFlm, StepSpacingKeepsEveryGridPoint) {
  const auto sd = make(0.1, 1);
  const auto& d = sd.design;
  const auto data = to_flm(d, d.step());
  ASSERT_EQ(data.counts.size(), d.n());
  std::size_t r = 0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const auto& y = d.observation(i).y;
    EXPECT_EQ(data.counts[i], y.size() - d.first_index());
    for (std::size_t l = 0; l < data.counts[i]; ++l, ++r) {
      const auto& row = data.rows[r];
      EXPECT_EQ(row.observation, i);
      EXPECT_EQ(row.l, l);
      EXPECT_EQ(row.y, y[d.first_index() + l]);
    }
  }
  EXPECT_EQ(r, data.rows.size());
}

TEST(ToFlm, FullWindowSpacingGivesTwoRows) {
  const auto sd = make(0.1, 2);
  const auto data = to_flm(sd.design, 2.0 - sd.design.alpha_star());
  for (std::size_t c : data.counts) EXPECT_EQ(c, 2u);
  EXPECT_DOUBLE_EQ(data.rows[1].t, 2.0);
}

TEST(ToFlm, RowsMatchHandBuiltWindows) {
  const auto sd = make(0.1, 3);
  const auto& d = sd.design;
  const auto data = to_flm(d, 4 * d.step());
  for (const auto& row : data.rows) {
    const auto& o = d.observation(row.observation);
    const std::size_t m = d.first_index() + 4 * row.l;
    EXPECT_NEAR(row.t, o.y.t(m), 1e-12);
    EXPECT_EQ(row.z, o.z);
    for (std::size_t q = 0; q < row.windows[0].size(); ++q) EXPECT_EQ(row.windows[0][q], o.x[0][m - q]);
  }
}

TEST(ToFlm, Validation) {
  const auto sd = make(0.1, 4);
  EXPECT_TRUE(throws_code([&] { to_flm(sd.design, 1.5 * sd.design.step()); }, ErrorCode::invalid_argument));
  EXPECT_TRUE(throws_code([&] { to_flm(sd.design, 0.0); }, ErrorCode::invalid_argument));
}

TEST(FlmPredict, AgreesWithForwardModelAtRowTimes) {
  const auto sd = make(0.0, 5);
  const auto data = to_flm(sd.design, 2 * sd.design.step());
  for (const auto& row : data.rows) {
    const auto p = predict(sd.design, sd.truth, row.observation);
    EXPECT_NEAR(flm_predict(data, row, sd.truth), p[2 * row.l], 1e-12);
    EXPECT_NEAR(flm_predict(data, row, sd.truth), row.y, 1e-12);
  }
}

TEST(FlmSystem, StepSpacingDiffersOnlyByEndpointRows) {
  const auto sd = make(0.1, 6);
  const auto& d = sd.design;
  const auto full = assemble(d);
  const auto flm = flm_system(to_flm(d, d.step()));
  Eigen::MatrixXd gap = d.step() * flm.G - full.G;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const auto last = d.observation(i).y.size() - 1;
    for (std::size_t m : {d.first_index(), last}) {
      const Eigen::MatrixXd a = regression_rows(d, full.layout, i, m, 1).topRows(1);
      gap -= 0.5 * d.step() * a.transpose() * a;
    }
  }
  EXPECT_LT(gap.norm(), 1e-12 * full.G.norm());
}

TEST(FitFlm, StepSpacingMatchesFullEstimator) {
  const auto sd = make(0.0, 6);
  const auto full = solve_direct(assemble(sd.design));
  const auto flm = fit_flm(to_flm(sd.design, sd.design.step()));
  EXPECT_LT(relative_l2_error(flm, full), 1e-6);
  EXPECT_NEAR(flm.beta0[0], full.beta0[0], 1e-6);
}

TEST(FitFlm, CoarseSpacingRecoversNoiselessKernel) {
  const auto sd = make(0.0, 7, 1.0 / 64, 8);
  const auto est = fit_flm(to_flm(sd.design, 4 * sd.design.step()));
  EXPECT_LT(relative_l2_error(est, sd.truth), 1e-3);
}

TEST(FitFlm, UnderdeterminedIsNearSingular) {
  const auto one = make(0.1, 8, 1.0 / 64, 1);
  EXPECT_THROW(fit_flm(to_flm(one.design, 2.0 - one.design.alpha_star())), NearSingular);
  // A single observation holds z fixed, so z and the intercept stay collinear under any penalty.
  EXPECT_THROW(fit_flm(to_flm(one.design, 10 * one.design.step()), 1e-2), NearSingular);

  const auto three = make(0.1, 8, 1.0 / 64, 3);
  const auto sparse = to_flm(three.design, 10 * three.design.step());
  EXPECT_THROW(fit_flm(sparse), NearSingular);
  EXPECT_NO_THROW(fit_flm(sparse, 1e-2));
}

TEST(FlmSystem, ThinningNeverIncreasesInformation) {
  const auto sd = make(0.1, 9, 1.0 / 32, 6);
  double previous = min_weighted_eigenvalue(flm_system(to_flm(sd.design, sd.design.step())));
  for (int factor : {2, 4, 8}) {
    // U doubles, so the row set is a subset of the previous one.
    const double current = min_weighted_eigenvalue(flm_system(to_flm(sd.design, factor * sd.design.step())));
    EXPECT_LE(current, previous + 1e-12) << factor;
    previous = current;
  }
}

TEST(FlmSystem, LayoutMatchesDesign) {
  const auto sd = make(0.1, 10);
  const auto data = to_flm(sd.design, sd.design.step());
  const auto a = data.layout();
  const auto b = CoefficientLayout::of(sd.design);
  EXPECT_EQ(a.size(), b.size());
  EXPECT_EQ(a.lag_points(), b.lag_points());
}

}  // namespace
}  // namespace fcm
