#include <random>

#include "fcm/designs.hpp"
#include "fcm/identifiability.hpp"
#include "fcm/model.hpp"
#include "support.hpp"

namespace fcm {
namespace {

using test::grid;
using test::pi;
using test::throws_code;

constexpr double h = 1.0 / 64;

GridFunction constant(double v, double length) {
  return grid(0.0, h, steps_in(length, h) + 1, [v](double) { return v; });
}

SimulatedDesign noisy_design(double sd, std::uint64_t seed) {
  GeneratorSpec g;
  g.T = 2.0;
  g.step = h;
  g.seed = seed;
  GeneratorSpec g2 = g;
  g2.seed = seed + 100;
  const CoefficientSet truth{{0.4, -0.8}, {sample_kernel(KernelSpec{}, 0.5, h), sample_kernel(KernelSpec{}, 0.25, h)}};
  return gen_design(std::vector<GeneratorSpec>{g, g2}, truth, {NoiseKind::white, sd, 0.0}, 3, seed);
}

CoefficientSet random_coef(const Design& design, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  auto c = CoefficientSet::zeros(design);
  for (auto& b : c.beta0) b = z(rng);
  for (auto& b : c.betas) {
    std::vector<double> v(b.size());
    for (auto& x : v) x = z(rng);
    b = GridFunction(0.0, h, v);
  }
  return c;
}

TEST(LagConvolve, ZeroKernel) {
  const auto x = grid(0.0, h, 129, [](double t) { return std::sin(5 * t); });
  EXPECT_EQ(test::max_abs(lag_convolve(x, constant(0.0, 1.0), 1.0)), 0.0);
}

TEST(LagConvolve, UnitKernelOnUnitCovariate) {
  const auto c = lag_convolve(constant(1.0, 2.0), constant(1.0, 1.0), 1.0);
  EXPECT_EQ(c.start(), 1.0);
  for (double v : c.values()) EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(LagConvolve, LinearCovariate) {
  const auto x = grid(0.0, h, 193, [](double t) { return t; });
  const auto c = lag_convolve(x, constant(1.0, 1.0), 1.0);
  for (std::size_t m = 0; m < c.size(); ++m) EXPECT_NEAR(c[m], c.t(m) - 0.5, 1e-14);
}

TEST(LagConvolve, Errors) {
  const auto x = constant(1.0, 0.5);
  EXPECT_TRUE(throws_code([&] { lag_convolve(x, constant(1.0, 1.0), 1.0); }, ErrorCode::domain));
  EXPECT_TRUE(throws_code([&] { lag_convolve(constant(1.0, 2.0), constant(1.0, 1.0), 1.0 + h / 3); },
                          ErrorCode::invalid_argument));
}

TEST(Predict, ZeroCoefficientsGiveIntercept) {
  const auto sd = noisy_design(0.1, 3);
  auto c = CoefficientSet::zeros(sd.design);
  c.beta0[0] = 1.75;
  const auto p = predict(sd.design, c, 1);
  EXPECT_EQ(p.start(), sd.design.alpha_star());
  for (double v : p.values()) EXPECT_EQ(v, 1.75 + 0.0 * sd.design.observation(1).z[0]);
}

TEST(Predict, SumOfConstants) {
  const Design d({{constant(0.0, 3.0), {constant(1.0, 3.0)}, {}}}, {1.0}, h);
  const CoefficientSet c{{2.0}, {constant(1.0, 1.0)}};
  const auto p = predict(d, c, 0);
  for (double v : p.values()) EXPECT_NEAR(v, 3.0, 1e-14);
}

TEST(Predict, MatchesGeneratorResponse) {
  const auto sd = noisy_design(0.0, 5);
  for (std::size_t i = 0; i < sd.design.n(); ++i) {
    const auto p = predict(sd.design, sd.truth, i);
    const auto& y = sd.design.observation(i).y;
    for (std::size_t m = 0; m < p.size(); ++m) EXPECT_NEAR(p[m], y[m + sd.design.first_index()], 1e-12);
  }
}

TEST(Predict, LinearInCoefficients) {
  const auto sd = noisy_design(0.1, 9);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    auto a = random_coef(sd.design, rng);
    auto b = random_coef(sd.design, rng);
    for (auto& v : b.beta0) v = 0.0;  // keep the intercept once
    CoefficientSet sum = a;
    for (std::size_t k = 0; k < sum.beta0.size(); ++k) sum.beta0[k] += b.beta0[k];
    for (std::size_t j = 0; j < sum.betas.size(); ++j) sum.betas[j] = a.betas[j] + b.betas[j];
    for (std::size_t i = 0; i < sd.design.n(); ++i) {
      const auto lhs = predict(sd.design, sum, i);
      const auto rhs = predict(sd.design, a, i) + predict(sd.design, b, i);
      for (std::size_t m = 0; m < lhs.size(); ++m) EXPECT_NEAR(lhs[m], rhs[m], 1e-12 * std::max(1.0, std::abs(lhs[m])));
    }
  }
}

TEST(Predict, Errors) {
  const auto sd = noisy_design(0.0, 1);
  EXPECT_TRUE(throws_code([&] { predict(sd.design, sd.truth, 3); }, ErrorCode::invalid_argument));
  CoefficientSet bad = sd.truth;
  bad.betas.pop_back();
  EXPECT_TRUE(throws_code([&] { predict(sd.design, bad, 0); }, ErrorCode::shape));
}

TEST(Sse, NoiselessTruthIsZero) {
  const auto sd = noisy_design(0.0, 11);
  EXPECT_LE(sse(sd.design, sd.truth), 1e-18);
}

TEST(Sse, ZeroCoefficientsGiveResponseEnergy) {
  const auto sd = noisy_design(0.2, 12);
  const auto c = center(sd.design);
  double energy = 0.0;
  for (const auto& o : c.observations()) {
    const auto tail = o.y.slice(c.first_index(), o.y.size() - c.first_index());
    energy += inner_product(tail, tail);
  }
  EXPECT_NEAR(sse(c, CoefficientSet::zeros(c)), energy, 1e-12 * energy);
}

TEST(Sse, PerturbationEqualsQuadraticForm) {
  const auto sd = noisy_design(0.0, 13);
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = random_coef(sd.design, rng);
    for (auto& v : g.beta0) v = 0.0;
    CoefficientSet moved = sd.truth;
    for (std::size_t j = 0; j < moved.betas.size(); ++j) moved.betas[j] = sd.truth.betas[j] + g.betas[j];
    const double q = quadratic_form(sd.design, g);
    EXPECT_NEAR(sse(sd.design, moved) - sse(sd.design, sd.truth), q, 1e-8 * q);
  }
}

TEST(Sse, NonNegativeAndTruthIsGlobalMinimum) {
  const auto sd = noisy_design(0.0, 14);
  std::mt19937_64 rng(14);
  const double base = sse(sd.design, sd.truth);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = random_coef(sd.design, rng);
    CoefficientSet moved = sd.truth;
    for (std::size_t k = 0; k < moved.beta0.size(); ++k) moved.beta0[k] += 1e-3 * g.beta0[k];
    for (std::size_t j = 0; j < moved.betas.size(); ++j) moved.betas[j] = sd.truth.betas[j] + 1e-3 * g.betas[j];
    const double s = sse(sd.design, moved);
    EXPECT_GE(s, 0.0);
    EXPECT_GE(s, base);
  }
}

TEST(Design, Validation) {
  const auto y = constant(0.0, 2.0);
  const auto x = constant(1.0, 2.0);
  EXPECT_TRUE(throws_code([&] { Design({{y, {x}, {}}}, {0.3 + h / 2}, h); }, ErrorCode::invalid_argument));
  EXPECT_TRUE(throws_code([&] { Design({{y, {x}, {}}}, {2.5}, h); }, ErrorCode::domain));
  EXPECT_TRUE(throws_code([&] { Design({{y, {constant(1.0, 1.0)}, {}}}, {0.5}, h); }, ErrorCode::grid_mismatch));
  EXPECT_TRUE(throws_code([&] { Design({{y, {x}, {}}}, {0.5, 0.5}, h); }, ErrorCode::shape));
  EXPECT_TRUE(throws_code([&] { Design({{y, {x}, {1.0}}, {y, {x}, {}}}, {0.5}, h); }, ErrorCode::shape));
  const Design ok({{y, {x}, {}}, {constant(0.0, 1.5), {constant(1.0, 1.5)}, {}}}, {0.5}, h);
  EXPECT_EQ(ok.first_index(), 32u);
  EXPECT_EQ(ok.alpha_star(), 0.5);
}

}  // namespace
}  // namespace fcm
