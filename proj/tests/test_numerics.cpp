#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "coopsense/numerics.hpp"

using namespace coopsense;
using namespace coopsense::numerics;
using Catch::Approx;

TEST_CASE("lambert_w_minus1 fixed points") {
  CHECK(lambert_w_minus1(-kInvE) == -1.0);
  CHECK(lambert_w_minus1(-2.0 * std::exp(-2.0)) == Approx(-2.0).epsilon(1e-14));
  CHECK(lambert_w_minus1(-0.35654) == Approx(-1.2715).margin(1e-4));
}

TEST_CASE("lambert_w_minus1 rejects arguments off the branch") {
  CHECK_THROWS_AS(lambert_w_minus1(0.0), std::domain_error);
  CHECK_THROWS_AS(lambert_w_minus1(0.1), std::domain_error);
  CHECK_THROWS_AS(lambert_w_minus1(-0.37), std::domain_error);
  CHECK_NOTHROW(lambert_w_minus1(-kInvE - 5e-16));
}

TEST_CASE("lambert_w_minus1 round trip over [-30, -1]") {
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = -30.0 + 29.0 * i / 999.0;
    worst = std::max(worst, std::fabs(lambert_w_minus1(x * std::exp(x)) - x));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("lambert_w_minus1 residual and monotonicity near the branch point") {
  double prev = -1.0;
  for (int k = 15; k >= 1; --k) {
    const double y = -kInvE + std::pow(10.0, -k);
    const double w = lambert_w_minus1(y);
    CHECK(std::fabs(w * std::exp(w) - y) <= 1e-12 * std::fabs(y));
    CHECK(w <= prev);
    prev = w;
  }
  for (double y : {-1e-3, -1e-10, -1e-100, -1e-300}) {
    const double w = lambert_w_minus1(y);
    CHECK(std::fabs(w * std::exp(w) - y) <= 1e-12 * std::fabs(y));
  }
}

TEST_CASE("lambert_w0 fixed points and round trip") {
  CHECK(lambert_w0(0.0) == 0.0);
  CHECK(lambert_w0(std::exp(1.0)) == Approx(1.0).epsilon(1e-14));
  CHECK(lambert_w0(-kInvE) == -1.0);
  CHECK_THROWS_AS(lambert_w0(-0.5), std::domain_error);
  for (int i = 0; i < 200; ++i) {
    const double x = -1.0 + 20.0 * i / 199.0;
    CHECK(lambert_w0(x * std::exp(x)) == Approx(x).margin(1e-10));
  }
}

TEST_CASE("the two branches meet only at the branch point") {
  for (double y : {-0.36, -0.3, -0.1, -0.01}) CHECK(lambert_w0(y) > lambert_w_minus1(y));
}

TEST_CASE("bisect finds simple roots") {
  CHECK(bisect([](double x) { return x - 3.0; }, {0.0, 10.0}) == Approx(3.0).margin(1e-11));
  const auto kernel = [](double c) {
    return [c](double x) { return x / std::log2(1.0 + x) - c; };
  };
  const double x180 = bisect(kernel(180.0), {1.0, 1e6});
  const double x18 = bisect(kernel(18.0), {1.0, 1e6});
  CHECK(x180 == Approx(1.97e3).epsilon(5e-3));
  CHECK(x18 == Approx(126.0).epsilon(5e-3));
  CHECK(x180 / std::log2(1.0 + x180) == Approx(180.0).epsilon(1e-10));
}

TEST_CASE("bisect reports missing sign change and bad brackets") {
  CHECK_THROWS_AS(bisect([](double x) { return x + 1.0; }, {0.0, 1.0}), BracketError);
  CHECK_THROWS_AS(bisect([](double x) { return x; }, {1.0, 0.0}), std::invalid_argument);
  RootBracket tight{-1.0, 2.0, 1e-300, 1e-300, 3};
  CHECK_THROWS_AS(bisect([](double x) { return x - 0.123; }, tight), ConvergenceError);
}

TEST_CASE("bisect is unaffected by widening a monotone bracket") {
  const auto f = [](double x) { return std::atan(x - 2.5); };
  const double a = bisect(f, {0.0, 5.0});
  const double b = bisect(f, {-100.0, 1e3});
  CHECK(a == Approx(b).margin(1e-10));
}

TEST_CASE("energy_time_kernel values") {
  const double B = 1e5;
  CHECK(energy_time_kernel(1.0 / B, B).value == Approx(1.0 / B).epsilon(1e-14));
  const double limit = kLn2 / B;
  CHECK(std::fabs(energy_time_kernel(1e3 / B, B).value - limit) / limit <= 4e-4);
  // At this t the kernel carries 0.02 J for C = 2e7 bits and gamma = 9e3.
  CHECK(energy_time_kernel(1.3825e-5, B).value == Approx(8.99987e-6).epsilon(1e-5));
  CHECK(2e7 * energy_time_kernel(1.3825e-5, B).value / 9e3 == Approx(0.02).epsilon(1e-4));
  CHECK_THROWS_AS(energy_time_kernel(0.0, B), std::domain_error);
  CHECK_THROWS_AS(energy_time_kernel(-1.0, B), std::domain_error);
}

TEST_CASE("energy_time_kernel derivatives agree with finite differences") {
  const double B = 1e5;
  for (double t : {2e-6, 1e-5, 1e-4, 1e-3}) {
    const double h = 1e-5 * t;
    const auto k = energy_time_kernel(t, B);
    const double d1 = (energy_time_kernel(t + h, B).value - energy_time_kernel(t - h, B).value) / (2 * h);
    const double d2 = (energy_time_kernel(t + h, B).d1 - energy_time_kernel(t - h, B).d1) / (2 * h);
    CHECK(k.d1 == Approx(d1).epsilon(1e-6));
    CHECK(k.d2 == Approx(d2).epsilon(1e-5));
    CHECK(k.value > 0.0);
    CHECK(k.d1 < 0.0);
    CHECK(k.d2 > 0.0);
  }
}

TEST_CASE("energy_time_kernel convexity probe") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lt(std::log(1e-8), std::log(1e-2));
  std::uniform_real_distribution<double> ua(0.0, 1.0);
  const double B = 1e5;
  for (int i = 0; i < 2000; ++i) {
    const double t1 = std::exp(lt(rng));
    const double t2 = std::exp(lt(rng));
    const double a = ua(rng);
    const double lhs = energy_time_kernel(a * t1 + (1 - a) * t2, B).value;
    const double rhs = a * energy_time_kernel(t1, B).value + (1 - a) * energy_time_kernel(t2, B).value;
    if (std::isfinite(rhs)) CHECK(lhs <= rhs * (1 + 1e-12));
  }
}
