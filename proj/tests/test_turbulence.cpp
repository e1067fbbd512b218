#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "uvmci/turbulence.hpp"

using namespace uvmci;

namespace {
TurbulenceModel model_with(FadingRegime regime, double Cn2 = 1e-15) {
  TurbulenceModel m;
  m.regime = regime;
  m.optical.Cn2 = Cn2;
  return m;
}
}  // namespace

TEST(Rytov, FrozenValueAtBaseline) {
  EXPECT_NEAR(rytov_variance(500.0, model_with(FadingRegime::log_normal)), 0.0448495124736681, 1e-15);
}

TEST(Rytov, ScalingLaws) {
  const auto m = model_with(FadingRegime::log_normal);
  EXPECT_EQ(rytov_variance(0.0, m), 0.0);
  EXPECT_NEAR(rytov_variance(1000.0, m) / rytov_variance(500.0, m), std::pow(2.0, 11.0 / 6.0), 1e-12);
  auto m2 = m;
  m2.optical.Cn2 *= 10.0;
  EXPECT_NEAR(rytov_variance(300.0, m2) / rytov_variance(300.0, m), 10.0, 1e-12);
  EXPECT_THROW(rytov_variance(-1.0, m), std::domain_error);
}

TEST(Regime, AutomaticResolution) {
  const double ref = regime_reference_distance(500.0, 1.352e-3);
  EXPECT_NEAR(ref, 500.0 + 10.0 / 1.352e-3, 1e-9);
  EXPECT_EQ(resolve_regime(model_with(FadingRegime::automatic, 1e-17), ref).regime, FadingRegime::log_normal);
  EXPECT_EQ(resolve_regime(model_with(FadingRegime::automatic, 1e-15), ref).regime, FadingRegime::hybrid);
  EXPECT_EQ(resolve_regime(model_with(FadingRegime::automatic, 1e-13), ref).regime, FadingRegime::hybrid);
  EXPECT_EQ(resolve_regime(model_with(FadingRegime::gamma_gamma, 1e-17), ref).regime, FadingRegime::gamma_gamma);
  EXPECT_EQ(resolve_regime(model_with(FadingRegime::log_normal, 1e-13), ref).regime, FadingRegime::log_normal);
}

TEST(LogNormal, UnitMeanAndNormalized) {
  for (double s : {1e-3, 0.05, 0.5, 2.0}) {
    // Integrate in u = ln x so the wide tails are resolved.
    const double c = -0.5 * s, w = 14.0 * std::sqrt(s);
    const double mass =
        oracle::integrate([&](double u) { return ln_pdf(std::exp(u), s) * std::exp(u); }, c - w, c + w, {c});
    const double mean =
        oracle::integrate([&](double u) { return ln_pdf(std::exp(u), s) * std::exp(2.0 * u); }, c - w, c + w, {c});
    EXPECT_NEAR(mass, 1.0, 1e-7) << s;
    EXPECT_NEAR(mean, 1.0, 1e-6) << s;
  }
  EXPECT_EQ(ln_pdf(0.0, 0.1), 0.0);
  EXPECT_THROW(ln_pdf(1.0, 0.0), std::domain_error);
}

TEST(LogNormal, CdfMatchesDensity) {
  const double s = 0.3;
  for (double x : {0.2, 0.8, 1.0, 2.5}) {
    const double integral = oracle::integrate([&](double t) { return ln_pdf(t, s); }, 0.0, x);
    EXPECT_NEAR(ln_cdf(x, s), integral, 1e-9);
  }
}

TEST(GammaGamma, FrozenParameters) {
  const auto p = gg_params(0.5);
  EXPECT_NEAR(p.alpha, 5.97763532895913, 1e-12);
  EXPECT_NEAR(p.beta, 4.39804350628088, 1e-12);
  EXPECT_NEAR(p.variance(), 0.432701483488598, 1e-12);
  EXPECT_THROW(gg_params(0.0), std::domain_error);
}

TEST(GammaGamma, FrozenDensityValues) {
  EXPECT_NEAR(gg_pdf(0.7, 4.2, 2.3), 0.640263484541834, 1e-12);
  EXPECT_NEAR(gg_pdf(3.0, 40.0, 25.0) / 4.72687715376869e-6, 1.0, 1e-9);
}

TEST(GammaGamma, DensityNormalizedWithUnitMean) {
  for (auto [a, b] : {std::pair{4.2, 2.3}, std::pair{12.0, 9.0}, std::pair{1.5, 1.1}}) {
    const auto f = [&](double x) { return gg_pdf(x, a, b); };
    const double mass = oracle::integrate(f, 0.0, 80.0, {0.1, 0.5, 1.0, 2.0, 5.0, 20.0});
    const double mean = oracle::integrate([&](double x) { return x * f(x); }, 0.0, 80.0, {0.1, 0.5, 1.0, 2.0, 5.0, 20.0});
    EXPECT_NEAR(mass, 1.0, 1e-6) << a << "," << b;
    EXPECT_NEAR(mean, 1.0, 1e-5) << a << "," << b;
  }
}

TEST(GammaGamma, StableForLargeShapes) {
  const double v = gg_pdf(1.0, 400.0, 300.0);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(v, 1.0);
  EXPECT_EQ(gg_pdf(-1.0, 4.0, 2.0), 0.0);
}

TEST(SecondMoment, LogNormalConventions) {
  auto m = model_with(FadingRegime::log_normal);
  const double sr2 = rytov_variance(500.0, m);
  auto mm = second_moment(500.0, m);
  EXPECT_DOUBLE_EQ(mm.sigma_ln2, sr2);
  EXPECT_DOUBLE_EQ(mm.m2, std::exp(sr2));
  m.ln_convention = LogNormalConvention::literal;
  mm = second_moment(500.0, m);
  EXPECT_DOUBLE_EQ(mm.sigma_ln2, std::expm1(sr2));
}

TEST(SecondMoment, GammaGammaAndHybridAgree) {
  for (auto regime : {FadingRegime::gamma_gamma, FadingRegime::hybrid}) {
    const auto m = model_with(regime, 1e-14);
    const auto gg = gg_params(rytov_variance(800.0, m));
    const auto mm = second_moment(800.0, m);
    EXPECT_NEAR(mm.m2, (1.0 + 1.0 / gg.alpha) * (1.0 + 1.0 / gg.beta), 1e-12);
    EXPECT_NEAR(mm.m2, std::exp(mm.sigma_ln2), 1e-12);
    EXPECT_DOUBLE_EQ(mm.sigma_ln2, hybrid_sigma_ln2(800.0, m));
  }
}

TEST(SecondMoment, NoTurbulenceIsUnity) {
  const auto m = model_with(FadingRegime::hybrid, 0.0);
  const auto mm = second_moment(300.0, m);
  EXPECT_EQ(mm.m2, 1.0);
  EXPECT_EQ(mm.sigma_ln2, 0.0);
  EXPECT_EQ(hybrid_sigma_ln2(300.0, m), 0.0);
}

TEST(SecondMoment, AutomaticMustBeResolved) {
  EXPECT_THROW(second_moment(100.0, model_with(FadingRegime::automatic)), std::logic_error);
}

TEST(Hybrid, FrozenValueAtThreshold) {
  auto m = model_with(FadingRegime::hybrid);
  m.optical.Cn2 = 1e-15 * 0.3 / 0.0448495124736681;
  EXPECT_NEAR(hybrid_sigma_ln2(500.0, m), 0.247015769152677, 1e-10);
}

TEST(Hybrid, SaturatesInStrongTurbulence) {
  const auto m = model_with(FadingRegime::hybrid, 1e-13);
  const double a = hybrid_sigma_ln2(2000.0, m), b = hybrid_sigma_ln2(8000.0, m);
  EXPECT_LT(b, 1.0);
  EXPECT_LT(std::fabs(b - a), 0.2);
}

class FadingDraws : public ::testing::TestWithParam<FadingRegime> {};

TEST_P(FadingDraws, UnitMeanAndSecondMoment) {
  const auto m = model_with(GetParam(), 1e-14);
  const double d = 600.0;
  const int n = 200'000;
  RandomStream rng(11, 3);
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = draw_fading(rng, d, m);
    s1 += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  const double mean = s1 / n, m2 = s2 / n;
  const double m2_se = std::sqrt((s4 / n - m2 * m2) / n);
  const double var_se = std::sqrt((m2 - mean * mean) / n);
  EXPECT_NEAR(mean, 1.0, 5.0 * var_se);
  EXPECT_NEAR(m2, second_moment(d, m).m2, 5.0 * m2_se);
}

INSTANTIATE_TEST_SUITE_P(AllRegimes, FadingDraws,
                         ::testing::Values(FadingRegime::log_normal, FadingRegime::gamma_gamma, FadingRegime::hybrid));

TEST(FadingDraws, NoTurbulenceGivesUnity) {
  RandomStream rng(1, 1);
  const auto m = model_with(FadingRegime::log_normal, 0.0);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(draw_fading(rng, 500.0, m), 1.0);
}

TEST(RegimeNames, RoundTripText) {
  EXPECT_EQ(to_string(FadingRegime::automatic), "auto");
  EXPECT_EQ(to_string(FadingRegime::log_normal), "ln");
  EXPECT_EQ(to_string(FadingRegime::gamma_gamma), "gg");
  EXPECT_EQ(to_string(FadingRegime::hybrid), "hybrid");
  EXPECT_EQ(to_string(LogNormalConvention::literal), "literal");
}
