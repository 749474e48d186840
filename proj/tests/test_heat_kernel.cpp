#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "diffwass/heat_kernel.hpp"
#include "diffwass/torus.hpp"

using namespace diffwass;

namespace {

// Mean over an n-point grid of f, i.e. the integral against the uniform
// probability measure (spectrally exact for smooth periodic f).
template <class F>
double grid_mean(F f, int n = 4096) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += f(kTwoPi * i / n);
  return s / n;
}

}  // namespace

TEST(HeatKernel, OriginValueAtUnitTime) {
  // 1 + 2 (e^{-1} + e^{-4} + e^{-9} + ...)
  EXPECT_NEAR(heat_kernel(TorusPoint{0.0}, TorusPoint{0.0}, 1.0), 1.772637, 1e-6);
}

TEST(HeatKernel, RepresentationsAgreeAcrossTheSwitch) {
  for (double t : {0.05, 0.2, 0.5, 0.8, 2.0}) {
    for (double th : {0.0, 0.7, 2.0, std::numbers::pi, 5.5}) {
      EXPECT_NEAR(heat_kernel_1d_fourier(th, t), heat_kernel_1d_gaussian(th, t), 1e-12 * heat_kernel_1d_fourier(0.0, t))
          << "t=" << t << " theta=" << th;
    }
  }
}

TEST(HeatKernel, UnitMassForEveryTime) {
  for (double t : {0.01, 0.1, 0.5, 1.0, 10.0}) {
    EXPECT_NEAR(grid_mean([t](double x) { return heat_kernel_1d(x, t); }), 1.0, 1e-12) << "t=" << t;
  }
}

TEST(HeatKernel, ChapmanKolmogorov) {
  const double s = 0.3, t = 0.45, x = 0.4, y = 2.9;
  const double lhs = grid_mean([&](double z) { return heat_kernel_1d(x - z, s) * heat_kernel_1d(z - y, t); });
  EXPECT_NEAR(lhs, heat_kernel_1d(x - y, s + t), 1e-11);
}

TEST(HeatKernel, ProductAcrossAxesAndSymmetry) {
  const TorusPoint x{0.1, 2.0, 4.0}, y{3.0, 0.5, 6.0};
  const double t = 0.7;
  EXPECT_DOUBLE_EQ(heat_kernel(x, y, t), heat_kernel(y, x, t));
  EXPECT_NEAR(heat_kernel(x, y, t),
              heat_kernel_1d(0.1 - 3.0, t) * heat_kernel_1d(2.0 - 0.5, t) * heat_kernel_1d(4.0 - 6.0, t), 1e-14);
}

TEST(HeatKernel, ConvergesToUniformAndIsPositive) {
  EXPECT_NEAR(heat_kernel(TorusPoint{0.0, 0.0}, TorusPoint{1.0, 3.0}, 40.0), 1.0, 1e-15);
  for (double th = 0.0; th < kTwoPi; th += 0.1) EXPECT_GT(heat_kernel_1d(th, 0.01), 0.0);
}

TEST(HeatKernel, RejectsNonPositiveTime) {
  EXPECT_THROW(heat_kernel(TorusPoint{0.0}, TorusPoint{0.0}, 0.0), ArgumentError);
  EXPECT_THROW(heat_kernel_1d(0.0, -1.0), ArgumentError);
  EXPECT_THROW(heat_kernel(TorusPoint{0.0}, TorusPoint{0.0, 1.0}, 1.0), ArgumentError);
}
