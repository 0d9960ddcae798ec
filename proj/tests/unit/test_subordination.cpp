#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "errors.hpp"
#include "measure.hpp"
#include "oracles.hpp"
#include "subordination.hpp"

using namespace freeconv;
using oracle::cplx;

namespace {

struct Pair {
  const char* name;
  SpectralMeasure mu;
  SpectralMeasure nu;
};

std::vector<Pair> pairs() {
  return {{"semicircle/semicircle", SpectralMeasure::semicircle(1.0), SpectralMeasure::semicircle(1.0)},
          {"semicircle/bernoulli", SpectralMeasure::semicircle(0.25), SpectralMeasure::bernoulli_symmetric()},
          {"marchenko_pastur/atomic", SpectralMeasure::marchenko_pastur(0.5, 1.0),
           SpectralMeasure::from_parts({{-1.0, 0.3}, {0.5, 0.5}, {2.0, 0.2}}, {})}};
}

/// 10 x 10 grid: Re in [-4, 4], Im log-spaced in [1e-2, 3].
std::vector<cplx> upper_grid() {
  std::vector<cplx> g;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double re = -4.0 + 8.0 * i / 9.0;
      const double im = 1e-2 * std::pow(300.0, j / 9.0);
      g.emplace_back(re, im);
    }
  }
  return g;
}

}  // namespace

TEST_CASE("denjoy_wolff: semicircle pair against the variance-2 closed form") {
  const auto s1 = SpectralMeasure::semicircle(1.0);
  const auto p = denjoy_wolff(s1, s1, cplx(0, 3));
  CHECK(std::abs(p.omega1 - cplx(0, 3.2807764064)) < 1e-9);
  CHECK(std::abs(p.omega2 - p.omega1) < 1e-12);
  CHECK(std::abs(convolution_cauchy(s1, s1, cplx(0, 3)) - cplx(0, -0.2807764064)) < 1e-9);

  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const cplx z = oracle::random_upper(rng, 4.0, 1e-2, 3.0);
    const cplx g2 = oracle::semicircle_g(2.0, z);
    CHECK(std::abs(convolution_cauchy(s1, s1, z) - g2) < 1e-10);
    // omega1 = G_{s1}^{-1}(g2) = g2 + 1/g2.
    CHECK(std::abs(denjoy_wolff(s1, s1, z).omega1 - (g2 + 1.0 / g2)) < 1e-9);
  }
}

TEST_CASE("denjoy_wolff: identity suite on three pairs") {
  for (const auto& [name, mu, nu] : pairs()) {
    CAPTURE(name);
    int fails = 0;
    for (const cplx z : upper_grid()) {
      const auto p = denjoy_wolff(mu, nu, z);
      const cplx f_conv = 1.0 / cauchy_transform(nu, p.omega2);
      const bool ok = std::abs(p.omega1 + p.omega2 - z - f_conv) < 1e-8 &&
                      std::abs(cauchy_transform(mu, p.omega1) - cauchy_transform(nu, p.omega2)) < 1e-9 &&
                      std::abs(h_derivative(mu, p.omega1) * h_derivative(nu, p.omega2)) < 1.0 &&
                      std::abs(subordination_map(mu, nu, z, p.omega1) - p.omega1) < 1e-10 &&
                      p.omega1.imag() >= z.imag() - 1e-12 && p.omega2.imag() >= z.imag() - 1e-12;
      if (!ok) ++fails;
    }
    CHECK(fails == 0);
  }
}

TEST_CASE("denjoy_wolff: conjugation symmetry and behaviour at infinity") {
  for (const auto& [name, mu, nu] : pairs()) {
    CAPTURE(name);
    for (const cplx z : {cplx(0.3, 0.2), cplx(-1.1, 0.05), cplx(2.0, 1.5)}) {
      const auto p = denjoy_wolff(mu, nu, z);
      const auto q = denjoy_wolff(mu, nu, std::conj(z));
      CHECK(std::abs(std::conj(q.omega1) - p.omega1) < 1e-12);
      CHECK(std::abs(convolution_cauchy(mu, nu, std::conj(z)) - std::conj(convolution_cauchy(mu, nu, z))) < 1e-12);
    }
    const double y = 1e4 * std::max(mu.radius(), nu.radius());
    const auto far = denjoy_wolff(mu, nu, cplx(0, y));
    CHECK(std::abs(far.omega1 / cplx(0, y) - 1.0) < 1e-3);
  }
}

TEST_CASE("denjoy_wolff: point masses are exact translations") {
  const auto s = SpectralMeasure::semicircle(1.0);
  const auto a = SpectralMeasure::point_mass(0.7);
  const cplx z(0.4, 0.3);
  const auto p = denjoy_wolff(s, a, z);
  CHECK(std::abs(p.omega1 - (z - 0.7)) < 1e-15);
  CHECK(std::abs(convolution_cauchy(s, a, z) - oracle::semicircle_g(1.0, z - 0.7)) < 1e-13);
  const auto q = denjoy_wolff(a, s, z);
  CHECK(std::abs(convolution_cauchy(a, s, z) - oracle::semicircle_g(1.0, z - 0.7)) < 1e-13);
  CHECK(std::abs(q.omega2 - (z - 0.7)) < 1e-13);
}

TEST_CASE("denjoy_wolff: ConvergenceError when the budget is exhausted") {
  const auto s = SpectralMeasure::semicircle(1.0);
  SubordinationOptions opt;
  opt.max_iterations = 2;
  opt.newton = false;
  CHECK_THROWS_AS(denjoy_wolff(s, SpectralMeasure::bernoulli_symmetric(), cplx(0.1, 1e-3), opt), ConvergenceError);
  CHECK_THROWS_AS(denjoy_wolff(s, s, cplx(0.1, 0.0)), DomainError);
}

TEST_CASE("denjoy_wolff: plain iteration reaches the same fixed point as the accelerated one") {
  SubordinationOptions plain;
  plain.newton = false;
  for (const auto& [name, mu, nu] : pairs()) {
    const cplx z(0.2, 0.4);
    CHECK_MESSAGE(std::abs(denjoy_wolff(mu, nu, z, plain).omega1 - denjoy_wolff(mu, nu, z).omega1) < 1e-9, name);
  }
}

TEST_CASE("convolution density: semicircle pair matches the variance-2 semicircle") {
  const auto s1 = SpectralMeasure::semicircle(1.0);
  std::vector<double> grid(200);
  for (int i = 0; i < 200; ++i) grid[i] = -3.2 + 6.4 * i / 199.0;
  const auto d = convolution_density(s1, s1, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(d[i].ok);
    worst = std::max(worst, std::abs(d[i].density - oracle::semicircle_density(2.0, grid[i])));
  }
  CHECK(worst < 1e-3);
  CHECK(convolution_density(s1, s1, {0.0})[0].density == doctest::Approx(std::sqrt(2.0) / (2 * oracle::pi)).epsilon(1e-8));
}

TEST_CASE("convolution density: semicircle-Bernoulli and Bernoulli pair against closed forms") {
  const auto sc = SpectralMeasure::semicircle(0.25);
  const auto b = SpectralMeasure::bernoulli_symmetric();
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(-2.2 + 4.4 * i / 100.0);
  const auto d = convolution_density(sc, b, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    worst = std::max(worst, std::abs(d[i].density - oracle::semicircle_bernoulli_density(0.25, grid[i])));
  }
  CHECK(worst < 1e-3);

  // Arcsine law; stay away from the integrable edge singularities.
  std::vector<double> inner;
  for (int i = 0; i <= 60; ++i) inner.push_back(-1.8 + 3.6 * i / 60.0);
  const auto a = convolution_density(b, b, inner);
  for (std::size_t i = 0; i < inner.size(); ++i) {
    CHECK(a[i].density == doctest::Approx(oracle::arcsine_density(inner[i])).epsilon(1e-3));
  }
}

TEST_CASE("convolution density: thread count does not change the result") {
  const auto sc = SpectralMeasure::semicircle(0.25);
  const auto b = SpectralMeasure::bernoulli_symmetric();
  std::vector<double> grid;
  for (int i = 0; i < 64; ++i) grid.push_back(-2.0 + i / 16.0);
  DensityOptions one, four;
  four.threads = 4;
  const auto x = convolution_density(sc, b, grid, one);
  const auto y = convolution_density(sc, b, grid, four);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(x[i].density == y[i].density);
}

TEST_CASE("convolution support") {
  const auto s1 = SpectralMeasure::semicircle(1.0);
  const auto k = convolution_support(s1, s1);
  REQUIRE(k.size() == 1);
  CHECK(std::abs(k.intervals()[0].lo + 2.0 * std::sqrt(2.0)) < 1e-3);
  CHECK(std::abs(k.intervals()[0].hi - 2.0 * std::sqrt(2.0)) < 1e-3);

  const auto z = convolution_support(SpectralMeasure::point_mass(0.0), SpectralMeasure::point_mass(0.0));
  REQUIRE(z.size() == 1);
  CHECK(z.intervals()[0] == Interval{0.0, 0.0});
  const auto shifted = convolution_support(s1, SpectralMeasure::point_mass(1.5));
  CHECK(shifted.intervals()[0].lo == doctest::Approx(-0.5));
  CHECK(shifted.intervals()[0].hi == doctest::Approx(3.5));

  // Two components with a gap around 0; edges from the cubic's discriminant.
  const auto sb = convolution_support(SpectralMeasure::semicircle(0.25), SpectralMeasure::bernoulli_symmetric());
  REQUIRE(sb.size() == 2);
  const auto edges = oracle::positivity_edges(
      [](double x) { return -oracle::semicircle_bernoulli_discriminant(0.25, x); }, -2.5, 2.5, 5000);
  REQUIRE(edges.size() == 4);
  CHECK(std::abs(sb.intervals()[0].lo - edges[0]) < 1e-5);
  CHECK(std::abs(sb.intervals()[0].hi - edges[1]) < 1e-5);
  CHECK(std::abs(sb.intervals()[1].lo - edges[2]) < 1e-5);
  CHECK(std::abs(sb.intervals()[1].hi - edges[3]) < 1e-5);
  CHECK(!sb.contains(0.0));
}

TEST_CASE("convolution atoms follow the mass rule") {
  const auto mu = SpectralMeasure::from_parts({{0.0, 0.7}, {1.0, 0.3}}, {});
  const auto nu = SpectralMeasure::from_parts({{0.0, 0.6}, {2.0, 0.4}}, {});
  const auto atoms = convolution_atoms(mu, nu);
  REQUIRE(atoms.size() == 2);
  CHECK(atoms[0].position == 0.0);
  CHECK(atoms[0].weight == doctest::Approx(0.3));
  CHECK(atoms[1].position == 2.0);
  CHECK(atoms[1].weight == doctest::Approx(0.1));
  CHECK(convolution_atoms(SpectralMeasure::bernoulli_symmetric(), SpectralMeasure::bernoulli_symmetric()).empty());
}

TEST_CASE("omega boundary") {
  const auto sc = SpectralMeasure::semicircle(0.25);
  const auto b = SpectralMeasure::bernoulli_symmetric();
  for (double rho : {3.310139713159904, -0.224353275532849}) {
    const auto v = omega_boundary(sc, b, rho);
    CHECK(!v.is_pole);
    CHECK(std::abs(v.value - 3.0) < 1e-5);
  }
  // Outside the support of a semicircle pair, omega1 = g + 1/g with g = G_{s2}(x).
  const auto s1 = SpectralMeasure::semicircle(1.0);
  const double g = oracle::semicircle_g(2.0, 3.5).real();
  CHECK(omega_boundary(s1, s1, 3.5).value == doctest::Approx(g + 1.0 / g).epsilon(1e-8));
  CHECK_THROWS_AS(omega_boundary(s1, s1, 0.3), BoundaryError);
}

TEST_CASE("extrapolation to zero is exact for quadratics") {
  const double eps[3] = {1e-3, 1e-4, 1e-5};
  auto q = [](double e) { return cplx(1.5 - 2.0 * e + 7.0 * e * e, -0.25 + e); };
  const cplx v[3] = {q(eps[0]), q(eps[1]), q(eps[2])};
  CHECK(std::abs(extrapolate_to_zero(eps, v) - q(0.0)) < 1e-12);
}
