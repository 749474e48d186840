#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "diffwass/limit_laws.hpp"

using namespace diffwass;

namespace {

// Cumulants of sum_k c_k chi^2_{M_k}: kappa_j = sum_k M_k c_k^j 2^{j-1} (j-1)!.
struct SeriesCumulants {
  double k2 = 0.0, k4 = 0.0;
};

SeriesCumulants cumulants(int d, double r, std::size_t cut) {
  const auto shells = lattice_shell_counts(d, cut);
  SeriesCumulants c;
  for (std::size_t n = 1; n <= cut; ++n) {
    const double lam = static_cast<double>(n);
    const double w = 2.0 / (lam * lam * std::exp(2.0 * r * lam));
    c.k2 += static_cast<double>(shells[n]) * 2.0 * w * w;
    c.k4 += static_cast<double>(shells[n]) * 48.0 * std::pow(w, 4);
  }
  return c;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("diffwass_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

class LimitLawMoments : public ::testing::TestWithParam<std::pair<int, double>> {};

TEST_P(LimitLawMoments, MeanAndVarianceMatchSeries) {
  const auto [d, r] = GetParam();
  const std::size_t n = 1'000'000;
  const auto s = sample_limit_law(d, r, n, 1234 + static_cast<std::uint64_t>(d));
  const auto c = cumulants(d, r, s.lambda_cut);
  EXPECT_NEAR(s.series_variance, c.k2, 1e-12 * c.k2);

  const double mean_se = std::sqrt(c.k2 / static_cast<double>(n));
  EXPECT_NEAR(s.sample_mean(), s.series_mean, 3.0 * mean_se);
  if (!(r == 0.0 && d >= 4)) {
    const auto exact = limit_series(d, r, 1e-3);
    EXPECT_NEAR(s.sample_mean(), exact.value, 3.0 * mean_se + s.tail_mean_error + exact.tail_bound);
  }
  const double var_se = std::sqrt((c.k4 + 2.0 * c.k2 * c.k2) / static_cast<double>(n));
  EXPECT_NEAR(s.sample_variance(), c.k2, 3.0 * var_se);
  EXPECT_LT(s.tail_variance_bound, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Series, LimitLawMoments,
                         ::testing::Values(std::pair{1, 0.0}, std::pair{1, 0.3}, std::pair{2, 0.0},
                                           std::pair{3, 0.0}, std::pair{4, 0.3}));

TEST(LimitLaw, CircleMeanIsFourZetaFour) {
  const auto s = sample_limit_law(1, 0.0, 200'000, 5);
  EXPECT_NEAR(s.series_mean, 4.0 * std::pow(std::numbers::pi, 4) / 90.0, 1e-5);
}

TEST(LimitLaw, ZeroNoiseHookGivesTailMean) {
  LimitSampleOptions opt;
  opt.zero_noise = true;
  const auto s = sample_limit_law(2, 0.1, 100, 1, opt);
  EXPECT_GT(s.tail_mean, 0.0);
  for (double v : s.values) EXPECT_EQ(v, s.tail_mean);
}

TEST(LimitLaw, DrawsNeverFallBelowTailMean) {
  const auto s = sample_limit_law(3, 0.0, 50'000, 2);
  EXPECT_GE(s.tail_mean, 0.0);
  for (double v : s.values) ASSERT_GE(v, s.tail_mean);
}

TEST(LimitLaw, IndependentOfThreadCount) {
  LimitSampleOptions one, three;
  three.threads = 3;
  const auto a = sample_limit_law(2, 0.05, 70'000, 77, one);
  const auto b = sample_limit_law(2, 0.05, 70'000, 77, three);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(sample_limit_law(2, 0.05, 1000, 78).values, sample_limit_law(2, 0.05, 1000, 77).values);
}

TEST(LimitLaw, ArgumentChecks) {
  EXPECT_THROW(sample_limit_law(4, 0.0, 10, 1), DivergenceError);
  EXPECT_THROW(sample_limit_law(5, 0.0, 10, 1), DivergenceError);
  EXPECT_THROW(sample_limit_law(1, -0.1, 10, 1), ArgumentError);
  EXPECT_THROW(sample_limit_law(1, 0.0, 0, 1), ArgumentError);
}

TEST(LimitLaw, BinaryAndSidecarRoundTrip) {
  const auto dir = temp_dir("limit_sample");
  const auto s = sample_limit_law(1, 0.3, 1000, 9);
  write_limit_sample(dir / "nu.bin", s);
  EXPECT_EQ(std::filesystem::file_size(dir / "nu.bin"), 1000 * sizeof(double));
  const auto back = read_limit_sample(dir / "nu.bin");
  EXPECT_EQ(back.values, s.values);
  EXPECT_EQ(back.seed, 9u);
  EXPECT_DOUBLE_EQ(back.tail_mean, s.tail_mean);
  EXPECT_EQ(back.truncation_count, s.truncation_count);
  std::filesystem::resize_file(dir / "nu.bin", 80);
  EXPECT_THROW(read_limit_sample(dir / "nu.bin"), IoError);
  EXPECT_THROW(read_limit_sample(dir / "missing.bin"), IoError);
}

TEST(KolmogorovSmirnov, IdenticalAndDisjoint) {
  const std::vector<double> a{3.0, 1.0, 2.0, 2.0};
  EXPECT_EQ(ks_distance(a, a), 0.0);
  const std::vector<double> b{5.0, 6.0};
  EXPECT_EQ(ks_distance(a, b), 1.0);
  EXPECT_EQ(ks_distance(b, a), 1.0);
  EXPECT_THROW(ks_distance(a, std::vector<double>{}), ArgumentError);
}

TEST(KolmogorovSmirnov, TiesAreHandledAsSteps) {
  const std::vector<double> a{1.0, 1.0, 2.0}, b{1.0, 2.0, 2.0};
  EXPECT_NEAR(ks_distance(a, b), 1.0 / 3.0, 1e-15);
}

TEST(KolmogorovSmirnov, SymmetricAndTriangle) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(50 + trial), b(70), c(33);
    for (double& x : a) x = n01(gen);
    for (double& x : b) x = n01(gen) + 0.3;
    for (double& x : c) x = 1.5 * n01(gen);
    EXPECT_EQ(ks_distance(a, b), ks_distance(b, a));
    EXPECT_LE(ks_distance(a, c), ks_distance(a, b) + ks_distance(b, c) + 1e-15);
  }
}

TEST(KolmogorovSmirnov, TwoDrawsOfTheSameLimitLawAreClose) {
  for (std::uint64_t k = 0; k < 5; ++k) {
    const auto a = sample_limit_law(1, 0.0, 10'000, 100 + 2 * k);
    const auto b = sample_limit_law(1, 0.0, 10'000, 101 + 2 * k);
    EXPECT_LT(ks_distance(a.values, b.values), 0.03);
  }
}

TEST(KolmogorovSmirnov, NullRejectionRateMatchesLevel) {
  // 400 pairs of equal-law uniform samples; at level 5% the count of
  // rejections is Binomial(400, ~0.05), so [6, 36] holds with overwhelming odds.
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u;
  const std::size_t n = 500;
  const double crit = ks_critical_value(n, n, 0.05);
  int rejections = 0;
  for (int trial = 0; trial < 400; ++trial) {
    std::vector<double> a(n), b(n);
    for (double& x : a) x = u(gen);
    for (double& x : b) x = u(gen);
    if (ks_distance(a, b) > crit) ++rejections;
  }
  EXPECT_GE(rejections, 6);
  EXPECT_LE(rejections, 36);
}

TEST(RateFit, ExactPowerLaw) {
  std::vector<std::pair<double, double>> pts;
  for (double t : {10.0, 100.0, 1000.0, 5000.0}) pts.emplace_back(t, std::pow(t, -2.0 / 3.0));
  const auto f = rate_fit(pts, RateModel::PurePower);
  EXPECT_NEAR(f.slope, -2.0 / 3.0, 1e-12);
  EXPECT_NEAR(f.residual, 0.0, 1e-12);
}

TEST(RateFit, PowerLogDataPrefersPowerLogModel) {
  std::vector<std::pair<double, double>> pts;
  for (double t : {500.0, 1000.0, 2000.0, 4000.0}) pts.emplace_back(t, std::log(t) / t);
  const auto pure = rate_fit(pts, RateModel::PurePower);
  const auto plog = rate_fit(pts, RateModel::PowerLog);
  EXPECT_GT(pure.slope, -1.0);
  EXPECT_LT(pure.slope, -0.8);
  EXPECT_LT(plog.residual, pure.residual);
  EXPECT_NEAR(plog.residual, 0.0, 1e-12);
  EXPECT_EQ(plog.slope, -1.0);
}

TEST(RateFit, ConstantHasZeroSlope) {
  const std::vector<std::pair<double, double>> pts{{1.0, 2.0}, {2.0, 2.0}, {4.0, 2.0}};
  EXPECT_NEAR(rate_fit(pts, RateModel::PurePower).slope, 0.0, 1e-15);
}

TEST(RateFit, ArgumentChecks) {
  const std::vector<std::pair<double, double>> neg{{1.0, 2.0}, {2.0, -1.0}, {4.0, 2.0}};
  EXPECT_THROW(rate_fit(neg, RateModel::PurePower), ArgumentError);
  const std::vector<std::pair<double, double>> two{{1.0, 2.0}, {2.0, 1.0}, {2.0, 1.5}};
  EXPECT_THROW(rate_fit(two, RateModel::PurePower), ArgumentError);
  const std::vector<std::pair<double, double>> early{{1.0, 2.0}, {2.0, 1.0}, {3.0, 1.5}};
  EXPECT_THROW(rate_fit(early, RateModel::PowerLog), ArgumentError);
  const auto j = nlohmann::json(rate_fit(early, RateModel::PurePower));
  EXPECT_EQ(j.at("model"), "pure_power");
}

TEST(FisherInformation, CosineDensityMatchesQuadrature) {
  // f = 1 + a cos x: |(sqrt f)'|^2 = a^2 sin^2 x / (4 f).
  const double a = 0.5;
  const std::size_t n = 4096;
  std::vector<double> f(n);
  double exact = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (static_cast<double>(i) + 0.5) * kTwoPi / static_cast<double>(n);
    f[i] = 1.0 + a * std::cos(x);
    const double y = static_cast<double>(i) * kTwoPi / static_cast<double>(n);
    exact += a * a * std::sin(y) * std::sin(y) / (4.0 * (1.0 + a * std::cos(y))) / static_cast<double>(n);
  }
  EXPECT_NEAR(fisher_information_grid(f), exact, 1e-6);
  EXPECT_EQ(fisher_information_grid(std::vector<double>(16, 1.0)), 0.0);
}

TEST(RateFunction, ZeroTargetIsTheReferenceMeasure) {
  const auto res = rate_function_circle(0.0, 64);
  EXPECT_EQ(res.value, 0.0);
  for (double f : res.density) EXPECT_EQ(f, 1.0);
}

TEST(RateFunction, MonotoneInTheTarget) {
  const auto a = rate_function_circle(0.1, 256);
  const auto b = rate_function_circle(0.2, 256);
  const auto c = rate_function_circle(0.4, 256);
  for (const auto* r : {&a, &b, &c}) EXPECT_LE(r->residual, 1e-6);
  EXPECT_LE(a.value, b.value + 1e-4);
  EXPECT_LE(b.value, c.value + 1e-4);
  EXPECT_GT(a.value, 0.0);
}

TEST(RateFunction, MeetsTheConstraintAndBeatsTheStart) {
  const auto res = rate_function_circle(0.3, 128);
  EXPECT_NEAR(w2_squared_to_uniform(res.density), 0.3, 1e-6);
  EXPECT_NEAR(fisher_information_grid(res.density), res.value, 1e-12);
  // A von Mises density at the same distance is admissible, so it bounds the optimum.
  double lo = 0.0, hi = 10.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (w2_squared_to_uniform(detail::von_mises_density(128, mid)) < 0.3 ? lo : hi) = mid;
  }
  EXPECT_LE(res.value, fisher_information_grid(detail::von_mises_density(128, hi)) + 1e-9);
}

TEST(RateFunction, SmallTargetsApproachTheFirstModeQuotient) {
  // Near mu, f = 1 + e cos x has W2^2 ~ e^2/2 and information ~ e^2/8.
  const auto res = rate_function_circle(0.01, 512);
  EXPECT_NEAR(res.value / 0.01, 0.25, 0.0125);
}

TEST(RateFunction, MixingTowardTheReferenceLowersInformation) {
  const auto res = rate_function_circle(0.4, 256);
  for (double s : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    std::vector<double> mix(res.density.size());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = s + (1.0 - s) * res.density[i];
    EXPECT_LE(fisher_information_grid(mix), res.value) << "s=" << s;
    EXPECT_LE(fisher_information_grid(mix), (1.0 - s) * res.value + 1e-12) << "s=" << s;
  }
}

TEST(RateFunction, RejectsUnreachableTargets) {
  const double r0 = rate_function_r0(64);
  EXPECT_NEAR(r0, std::numbers::pi * std::numbers::pi / 3.0, 0.01);
  EXPECT_THROW(rate_function_circle(r0, 64), ArgumentError);
  EXPECT_THROW(rate_function_circle(-0.1, 64), ArgumentError);
  EXPECT_THROW(rate_function_circle(0.1, 8), ArgumentError);
}
