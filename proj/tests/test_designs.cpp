#include <numeric>

#include "fcm/designs.hpp"
#include "fcm/identifiability.hpp"
#include "support.hpp"

namespace fcm {
namespace {

using test::grid;
using test::pi;
using test::throws_code;

GeneratorSpec spec_of(CovariateKind kind, double T, double step, std::size_t K = 8) {
  GeneratorSpec g;
  g.kind = kind;
  g.T = T;
  g.step = step;
  g.K = K;
  return g;
}

SimulatedDesign noise_design(double sd, std::uint64_t seed, NoiseKind kind = NoiseKind::white) {
  auto g = spec_of(CovariateKind::filtered_noise, 2.0, 1.0 / 64);
  g.seed = seed;
  const CoefficientSet truth{{0.4, -0.7}, {sample_kernel(KernelSpec{}, 0.5, g.step)}};
  return gen_design(std::vector<GeneratorSpec>{g}, truth, {kind, sd, 0.5}, 3, seed);
}

bool same(const GridFunction& a, const GridFunction& b) {
  return a.combinable_with(b) && std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

TEST(SinusoidRich, PartialSumAtQuarter) {
  const auto f = covariate_function(spec_of(CovariateKind::sinusoid_rich, 1.0, 1.0 / 64, 4));
  EXPECT_NEAR(f(0.25), 0.375, 1e-15);
  EXPECT_NEAR(f(0.0), 0.0, 1e-15);
}

TEST(Counterexample, OrthogonalToOddSines) {
  for (double T : {1.0, 2.0, 3.0}) {
    for (std::size_t K : {1u, 4u, 8u}) {
      const auto x = gen_covariate(spec_of(CovariateKind::orthogonal_counterexample, T, 1.0 / 128, K));
      for (int j = 1; j <= 3; ++j) {
        const auto s = grid(0.0, x.step(), x.size(), [&](double t) { return std::sin(2 * pi * (2 * j - 1) * t); });
        EXPECT_NEAR(inner_product(x, s), 0.0, 1e-10) << T << " " << K << " " << j;
      }
    }
  }
}

TEST(Counterexample, AnnihilatesOddSineKernels) {
  const double h = 1.0 / 128;
  const auto x = gen_covariate(spec_of(CovariateKind::orthogonal_counterexample, 3.0, h, 4));
  for (int j = 1; j <= 3; ++j) {
    const auto beta = grid(0.0, h, 129, [&](double u) { return std::sin(2 * pi * (2 * j - 1) * u); });
    EXPECT_LT(test::max_abs(lag_convolve(x, beta, 1.0)), 1e-8) << j;
  }
}

TEST(Counterexample, RequiresIntegerDomain) {
  EXPECT_TRUE(throws_code([] { gen_covariate(spec_of(CovariateKind::orthogonal_counterexample, 2.5, 1.0 / 8)); },
                          ErrorCode::domain));
}

TEST(SelfSimilar, ReducesToCosine) {
  auto g = spec_of(CovariateKind::self_similar, 2.0, 1.0 / 32);
  g.terms = {{1.0, 0, 0.0, 2 * pi, pi / 2}};
  const auto x = gen_covariate(g);
  EXPECT_NEAR(x[0], 1.0, 1e-15);
  for (std::size_t m = 0; m < x.size(); ++m) EXPECT_NEAR(x[m], std::cos(2 * pi * x.t(m)), 1e-13);
}

TEST(SelfSimilar, ResidualVanishesAtTermOrder) {
  auto g = spec_of(CovariateKind::self_similar, 4.0, 1.0 / 64);
  g.terms = {{1.0, 1, -0.2, 3.0, 0.7}, {0.5, 0, 0.1, 0.0, pi / 2}};
  const auto x = gen_covariate(g);
  EXPECT_LT(self_similarity_residual(x, 1.0, 5), 1e-8);
  EXPECT_GT(self_similarity_residual(x, 1.0, 4), 1e-4);
}

TEST(SelfSimilar, EmptyTermsRejected) {
  EXPECT_TRUE(throws_code([] { gen_covariate(spec_of(CovariateKind::self_similar, 1.0, 0.1)); },
                          ErrorCode::invalid_argument));
}

TEST(FilteredNoise, SeededAndHighOrder) {
  auto g = spec_of(CovariateKind::filtered_noise, 4.0, 1.0 / 64);
  g.seed = 17;
  const auto a = gen_covariate(g);
  EXPECT_TRUE(same(a, gen_covariate(g)));
  g.seed = 18;
  EXPECT_FALSE(same(a, gen_covariate(g)));
  EXPECT_GT(self_similarity_residual(a, 1.0, 10), 0.05);
}

TEST(Noise, ZeroSdIsSilent) {
  for (double v : gen_noise({NoiseKind::ar1, 0.0, 0.9}, 50, 3)) EXPECT_EQ(v, 0.0);
  const auto sd = noise_design(0.0, 4);
  EXPECT_LE(sse(sd.design, sd.truth), 1e-18);
}

TEST(Noise, Ar1MeanAcrossReplicates) {
  const NoiseSpec spec{NoiseKind::ar1, 0.3, 0.7};
  double sum = 0.0;
  for (std::uint64_t r = 0; r < 200; ++r) sum += gen_noise(spec, 60, 1000 + r)[40];
  EXPECT_LT(std::abs(sum / 200), 3 * 0.3 / std::sqrt(200.0));
}

TEST(Noise, Ar1StationaryMoments) {
  const NoiseSpec spec{NoiseKind::ar1, 2.0, 0.6};
  const auto e = gen_noise(spec, 40000, 77);
  double var = 0.0, lag1 = 0.0;
  for (std::size_t m = 0; m < e.size(); ++m) {
    var += e[m] * e[m];
    if (m > 0) lag1 += e[m] * e[m - 1];
  }
  var /= static_cast<double>(e.size());
  lag1 /= static_cast<double>(e.size() - 1);
  EXPECT_NEAR(std::sqrt(var), 2.0, 0.1);
  EXPECT_NEAR(lag1 / var, 0.6, 0.03);
}

TEST(Noise, Validation) {
  EXPECT_TRUE(throws_code([] { gen_noise({NoiseKind::white, -1.0, 0.0}, 5, 0); }, ErrorCode::invalid_argument));
  EXPECT_TRUE(throws_code([] { gen_noise({NoiseKind::ar1, 1.0, 1.0}, 5, 0); }, ErrorCode::invalid_argument));
}

TEST(GenDesign, BitIdenticalForSameSeed) {
  const auto a = noise_design(0.2, 9, NoiseKind::ar1);
  const auto b = noise_design(0.2, 9, NoiseKind::ar1);
  for (std::size_t i = 0; i < a.design.n(); ++i) {
    const auto& oa = a.design.observation(i);
    const auto& ob = b.design.observation(i);
    EXPECT_TRUE(same(oa.y, ob.y));
    EXPECT_TRUE(same(oa.x[0], ob.x[0]));
    EXPECT_EQ(oa.z, ob.z);
  }
  EXPECT_FALSE(same(a.design.observation(0).y, noise_design(0.2, 10).design.observation(0).y));
}

TEST(GenDesign, DomainLengthsOverride) {
  auto g = spec_of(CovariateKind::filtered_noise, 2.0, 1.0 / 32);
  const CoefficientSet truth{{0.0}, {sample_kernel(KernelSpec{}, 0.5, g.step)}};
  const std::vector<double> lengths{1.0, 2.5};
  const auto sd = gen_design(std::vector<GeneratorSpec>{g}, truth, {}, 2, 1, lengths);
  EXPECT_DOUBLE_EQ(sd.design.observation(0).y.length(), 1.0);
  EXPECT_DOUBLE_EQ(sd.design.observation(1).x[0].length(), 2.5);
}

TEST(Center, ConstantResponseBecomesZero) {
  const double h = 1.0 / 16;
  const auto y = grid(0.0, h, 33, [](double) { return 4.5; });
  const auto x = grid(0.0, h, 33, [](double t) { return t; });
  const auto c = center(Design({{y, {x}, {}}}, {0.5}, h));
  for (double v : c.observation(0).y.values()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Center, CovariateMeanIsZeroAndIdempotent) {
  const auto sd = noise_design(0.1, 11);
  const auto c = center(sd.design);
  const auto& obs = c.observations();
  for (std::size_t m = 0; m < obs[0].x[0].size(); ++m) {
    double s = 0.0;
    for (const auto& o : obs) s += o.x[0][m];
    EXPECT_NEAR(s / static_cast<double>(obs.size()), 0.0, 1e-12);
  }
  const auto cc = center(c);
  for (std::size_t i = 0; i < c.n(); ++i) {
    for (std::size_t m = 0; m < obs[i].y.size(); ++m) EXPECT_NEAR(cc.observation(i).y[m], obs[i].y[m], 1e-12);
    for (std::size_t m = 0; m < obs[i].x[0].size(); ++m)
      EXPECT_NEAR(cc.observation(i).x[0][m], obs[i].x[0][m], 1e-12);
  }
  EXPECT_EQ(c.d(), 1u);
  EXPECT_EQ(center(sd.design, CenterMode::report).d(), 0u);
}

TEST(Center, ResponseHasZeroWindowMean) {
  const auto c = center(noise_design(0.1, 12).design);
  for (const auto& o : c.observations()) {
    const auto w = o.y.slice(c.first_index(), o.y.size() - c.first_index());
    EXPECT_NEAR(trapezoid_integral(w), 0.0, 1e-12);
  }
}

TEST(Kernels, FamiliesAndValues) {
  KernelSpec bump;
  const auto b = sample_kernel(bump, 0.5, 1.0 / 64);
  EXPECT_EQ(b.size(), 33u);
  EXPECT_NEAR(b[0], 0.0, 1e-15);
  EXPECT_NEAR(b[32], 0.0, 1e-15);
  EXPECT_NEAR(b[16], 1.25, 1e-12);  // sin^4(pi/2) (1 + 0.25)

  KernelSpec v;
  v.kind = KernelKind::values;
  v.values = {0.0, 1.0, 4.0};
  v.amplitude = 2.0;
  const auto s = sample_kernel(v, 1.0, 0.5);
  EXPECT_EQ(s[2], 8.0);
  v.values = {1.0, 2.0};
  EXPECT_TRUE(throws_code([&] { sample_kernel(v, 1.0, 0.5); }, ErrorCode::shape));
  EXPECT_EQ(parse_kernel_kind("exp_cos"), KernelKind::exp_cos);
  EXPECT_EQ(parse_covariate_kind(to_string(CovariateKind::self_similar)), CovariateKind::self_similar);
}

}  // namespace
}  // namespace fcm
