#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "diffwass/circle_potential.hpp"
#include "diffwass/diffusion.hpp"
#include "diffwass/rng.hpp"

using namespace diffwass;

namespace {

// Upper 1% point of chi-square with 63 degrees of freedom.
constexpr double kChi2_63_99 = 92.01;

double chi_square_uniform(const std::vector<double>& counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  const double e = total / static_cast<double>(counts.size());
  double s = 0.0;
  for (double c : counts) s += (c - e) * (c - e) / e;
  return s;
}

}  // namespace

TEST(Simulate, SingleStepPath) {
  SimulationSpec spec{.dim = 2, .t_end = 0.01, .dt = 0.01, .seed = 3, .init = TorusPoint{1.0, 2.0}};
  const auto p = simulate_path(spec);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_DOUBLE_EQ(p.times[0], 0.0);
  EXPECT_DOUBLE_EQ(p.times[1], 0.01);
  EXPECT_DOUBLE_EQ(p.point(0)[0], 1.0);
}

TEST(Simulate, ArgumentChecks) {
  EXPECT_THROW(simulate_path({.dim = 1, .t_end = 1.0, .dt = 0.0}), ArgumentError);
  EXPECT_THROW(simulate_path({.dim = 1, .t_end = 0.001, .dt = 0.01}), ArgumentError);
  EXPECT_THROW(simulate_path({.dim = 2, .potential = CirclePotential::cosine(1.0), .t_end = 1.0}), ArgumentError);
  EXPECT_THROW(simulate_path({.dim = 6, .t_end = 1.0}), ArgumentError);
}

TEST(Simulate, TimesUniformWithShortFinalStep) {
  const auto p = simulate_path({.dim = 1, .t_end = 1.0025, .dt = 0.01, .seed = 1});
  ASSERT_EQ(p.size(), 102u);
  for (std::size_t k = 1; k + 1 < p.size(); ++k) EXPECT_NEAR(p.times[k] - p.times[k - 1], 0.01, 1e-12);
  EXPECT_NEAR(p.times.back() - p.times[p.size() - 2], 0.0025, 1e-12);
  for (double x : p.points) {
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, kTwoPi);
  }
}

TEST(Simulate, DeterministicGivenSeed) {
  const SimulationSpec spec{.dim = 3, .t_end = 5.0, .dt = 1e-3, .seed = 99};
  const auto a = simulate_path(spec);
  const auto b = simulate_path(spec);
  EXPECT_EQ(a.points, b.points);
  auto other = spec;
  other.seed = 100;
  EXPECT_NE(simulate_path(other).points, a.points);
}

TEST(Simulate, StreamMatchesStoredPath) {
  const SimulationSpec spec{.dim = 2, .t_end = 1.0, .dt = 1e-2, .seed = 5};
  const auto p = simulate_path(spec);
  std::size_t count = 0;
  simulate_stream(spec, [&](std::size_t k, double s, std::span<const double> x) {
    EXPECT_EQ(s, p.times[k]);
    EXPECT_EQ(x[1], p.point(k)[1]);
    ++count;
  });
  EXPECT_EQ(count, p.size());
}

TEST(Simulate, UnwrappedVarianceIsTwoT) {
  // Var(X_1 - X_0) = 2 for the diffusion generated by Delta.
  const int reps = 10000;
  double s = 0.0, s2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    double unwrapped = 0.0;
    double prev = 0.0;
    bool first = true;
    simulate_stream({.dim = 1, .t_end = 1.0, .dt = 0.05, .seed = derive_seed(11, r)},
                    [&](std::size_t, double, std::span<const double> x) {
                      if (!first) unwrapped += wrap_difference(x[0] - prev);
                      first = false;
                      prev = x[0];
                    });
    s += unwrapped;
    s2 += unwrapped * unwrapped;
  }
  const double mean = s / reps;
  const double var = s2 / reps - mean * mean;
  // Standard error of a sample variance of a Gaussian: sigma^2 sqrt(2/n).
  EXPECT_NEAR(var, 2.0, 3.0 * 2.0 * std::sqrt(2.0 / reps));
}

TEST(Simulate, GeodesicIncrementNeverExceedsUnwrapped) {
  SimulationSpec spec{.dim = 1, .t_end = 20.0, .dt = 0.1, .seed = 8};
  const auto p = simulate_path(spec);
  for (std::size_t k = 1; k < p.size(); ++k) {
    EXPECT_LE(std::abs(wrap_difference(p.point(k)[0] - p.point(k - 1)[0])), std::numbers::pi + 1e-12);
  }
}

TEST(Simulate, OccupationIsUniformOnTheCircle) {
  // Thinned samples from 40 stationary paths are nearly independent.
  std::vector<double> fine(64, 0.0);
  for (int rep = 0; rep < 40; ++rep) {
    simulate_stream({.dim = 1, .t_end = 50.0, .dt = 1e-2, .seed = derive_seed(22, rep)},
                    [&](std::size_t k, double, std::span<const double> x) {
                      if (k % 250 == 0) fine[static_cast<std::size_t>(x[0] / kTwoPi * 64.0) % 64] += 1.0;
                    });
  }
  EXPECT_LT(chi_square_uniform(fine), kChi2_63_99);
}

TEST(Simulate, StationaryMarginalIsUniform) {
  std::vector<double> counts(64, 0.0);
  for (int rep = 0; rep < 10000; ++rep) {
    double last = 0.0;
    simulate_stream({.dim = 1, .t_end = 0.3, .dt = 0.1, .seed = derive_seed(31, rep)},
                    [&](std::size_t, double, std::span<const double> x) { last = x[0]; });
    counts[static_cast<std::size_t>(last / kTwoPi * 64.0) % 64] += 1.0;
  }
  EXPECT_LT(chi_square_uniform(counts), kChi2_63_99);
}

TEST(Simulate, PotentialStationaryDrawFollowsGibbsMeasure) {
  // Histogram of stationary draws for V = cos against e^V / Z.
  const auto V = CirclePotential::cosine(1.0);
  std::vector<double> counts(16, 0.0);
  const int reps = 20000;
  for (int rep = 0; rep < reps; ++rep) {
    Gaussian g(derive_seed(41, rep));
    counts[static_cast<std::size_t>(detail::sample_stationary_circle(V, g) / kTwoPi * 16.0) % 16] += 1.0;
  }
  double z = 0.0;
  std::vector<double> p(16, 0.0);
  for (int i = 0; i < 16 * 256; ++i) {
    const double x = (i + 0.5) * kTwoPi / (16 * 256);
    p[static_cast<std::size_t>(i / 256)] += std::exp(std::cos(x));
    z += std::exp(std::cos(x));
  }
  double chi = 0.0;
  for (int b = 0; b < 16; ++b) {
    const double e = reps * p[b] / z;
    chi += (counts[b] - e) * (counts[b] - e) / e;
  }
  EXPECT_LT(chi, 30.58);  // chi-square 15 dof, 1%
}

TEST(Simulate, PathCsvLayout) {
  const auto p = simulate_path({.dim = 2, .t_end = 0.02, .dt = 0.01, .seed = 1});
  std::ostringstream os;
  write_path_csv(os, p);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "s,x_1,x_2");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(CirclePotentialSpectrum, FlatCircleReproducesSquares) {
  const std::vector<double> v(256, 0.0);
  const auto s = circle_potential_eigensolve(v, 4);
  const double h = kTwoPi / 256;
  const double expect[] = {1, 1, 4, 4};
  for (int i = 0; i < 4; ++i) {
    // Finite-difference symbol: 4 sin^2(k h / 2) / h^2 = k^2 (1 - k^2 h^2 / 12 + ...)
    EXPECT_NEAR(s.eigenvalues[i], expect[i], expect[i] * expect[i] * h * h / 6.0);
  }
  EXPECT_NEAR(s.ground_eigenvalue, 0.0, 1e-9);
}

TEST(CirclePotentialSpectrum, ConstantPotentialIsGaugeInvariant) {
  const auto flat = circle_potential_eigensolve(std::vector<double>(128, 0.0), 6);
  const auto shifted = circle_potential_eigensolve(std::vector<double>(128, 3.7), 6);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(flat.eigenvalues[i], shifted.eigenvalues[i], 1e-9);
}

TEST(CirclePotentialSpectrum, CosinePotentialMatchesRefinedGrid) {
  const auto V = CirclePotential::cosine(0.5);
  const auto coarse = circle_potential_eigensolve(V.sample(512), 2, false);
  const auto fine = circle_potential_eigensolve(V.sample(2048), 2, false);
  EXPECT_NEAR(coarse.eigenvalues[0], fine.eigenvalues[0], 1e-4);
  EXPECT_GT(coarse.eigenvalues[0], 0.0);
}

TEST(CirclePotentialSpectrum, EigenfunctionsOrthonormalInGibbsMeasure) {
  const auto s = circle_potential_eigensolve(CirclePotential::cosine(0.8).sample(256), 5);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      double ip = 0.0;
      for (std::size_t g = 0; g < 256; ++g) ip += s.eigenfunctions[i][g] * s.eigenfunctions[j][g] * s.measure[g];
      EXPECT_NEAR(ip, i == j ? 1.0 : 0.0, 1e-9);
    }
  }
}

TEST(CirclePotentialSpectrum, GridTooCoarseIsRejected) {
  EXPECT_THROW(circle_potential_eigensolve(std::vector<double>(31, 0.0), 4), ArgumentError);
}
