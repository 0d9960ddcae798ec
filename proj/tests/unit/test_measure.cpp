#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "measure.hpp"
#include "measure_json.hpp"
#include "oracles.hpp"

using namespace freeconv;
using oracle::cplx;

namespace {

struct Named {
  const char* name;
  SpectralMeasure m;
};

std::vector<Named> families() {
  const std::vector<double> pts{-1.3, -0.2, 0.4, 0.4, 1.1, 2.5};
  return {{"semicircle", SpectralMeasure::semicircle(0.7)},
          {"marchenko_pastur", SpectralMeasure::marchenko_pastur(0.5, 1.3)},
          {"point_mass", SpectralMeasure::point_mass(0.6)},
          {"bernoulli_symmetric", SpectralMeasure::bernoulli_symmetric()},
          {"empirical", SpectralMeasure::empirical(pts)}};
}

/// Real points outside supp(tau) at distance >= 0.05, away from poles of F.
std::vector<double> real_points_off_support(const SpectralMeasure& tau, std::mt19937_64& rng, int count) {
  const SupportSet s = support(tau);
  const Interval hull = s.hull();
  const double span = std::max(1.0, hull.length());
  std::uniform_real_distribution<double> u(hull.lo - 2.0 * span, hull.hi + 2.0 * span);
  std::vector<double> out;
  while (static_cast<int>(out.size()) < count) {
    const double x = u(rng);
    if (s.distance(x) < 0.05) continue;
    if (std::abs(cauchy_transform(tau, x)) < 1e-2) continue;
    out.push_back(x);
  }
  return out;
}

}  // namespace

TEST_CASE("cauchy transform: trivial values") {
  CHECK(std::abs(cauchy_transform(SpectralMeasure::point_mass(0.0), cplx(0, 1)) - cplx(0, -1)) < 1e-15);
  CHECK(std::abs(cauchy_transform(SpectralMeasure::bernoulli_symmetric(), 2.0) - 2.0 / 3.0) < 1e-15);
  CHECK(std::abs(cauchy_derivative(SpectralMeasure::point_mass(0.0), cplx(0, 1)) - 1.0) < 1e-15);
  CHECK(std::abs(cauchy_derivative(SpectralMeasure::bernoulli_symmetric(), 2.0) + 5.0 / 9.0) < 1e-15);
}

TEST_CASE("cauchy transform: semicircle matches closed form and independent quadrature") {
  const auto sc = SpectralMeasure::semicircle(1.0);
  const cplx z(0, 2);
  const cplx expected(0, 1.0 - std::sqrt(2.0));
  CHECK(std::abs(cauchy_transform(sc, z) - expected) < 1e-12);
  CHECK(std::abs(oracle::semicircle_g_by_quadrature(1.0, z) - expected) < 1e-10);

  // Derivative against a central difference of the closed form.
  const double h = 1e-5;
  const cplx fd = (oracle::semicircle_g(1.0, z + h) - oracle::semicircle_g(1.0, z - h)) / (2.0 * h);
  CHECK(std::abs(cauchy_derivative(sc, z) - fd) < 1e-8);
}

TEST_CASE("cauchy transform: families agree with independent quadrature on random points") {
  std::mt19937_64 rng(11);
  const auto mp = SpectralMeasure::marchenko_pastur(0.5, 1.3);
  const auto mp_big = SpectralMeasure::marchenko_pastur(2.0, 0.8);
  const auto sc = SpectralMeasure::semicircle(0.7);
  for (int i = 0; i < 40; ++i) {
    const cplx z = oracle::random_upper(rng, 5.0, 0.05, 3.0);
    CHECK(std::abs(cauchy_transform(sc, z) - oracle::semicircle_g_by_quadrature(0.7, z)) < 1e-9);
    CHECK(std::abs(cauchy_transform(mp, z) - oracle::mp_g_by_quadrature(0.5, 1.3, z)) < 1e-9);
    CHECK(std::abs(cauchy_transform(mp_big, z) - oracle::mp_g_by_quadrature(2.0, 0.8, z)) < 1e-9);
  }
}

TEST_CASE("cauchy transform: grid density is integrated exactly for the interpolant") {
  // Triangle density on [0, 2] peaking at 1: exact piecewise-linear case.
  const auto tri = SpectralMeasure::from_parts({}, {{{0.0, 1.0, 2.0}, {0.0, 1.0, 0.0}}});
  std::mt19937_64 rng(5);
  for (int i = 0; i < 30; ++i) {
    const cplx z = oracle::random_upper(rng, 4.0, 1e-3, 2.0);
    std::function<cplx(double)> f = [z](double x) { return (x < 1.0 ? x : 2.0 - x) / (z - x); };
    const cplx ref = oracle::integrate<cplx>(f, 0.0, 1.0, 1e-14) + oracle::integrate<cplx>(f, 1.0, 2.0, 1e-14);
    CHECK(std::abs(cauchy_transform(tri, z) - ref) < 1e-9);
  }
}

TEST_CASE("cauchy transform: DomainError on the support") {
  CHECK_THROWS_AS(cauchy_transform(SpectralMeasure::semicircle(1.0), 0.3), DomainError);
  CHECK_THROWS_AS(cauchy_transform(SpectralMeasure::bernoulli_symmetric(), 1.0), DomainError);
  CHECK_NOTHROW(cauchy_transform(SpectralMeasure::bernoulli_symmetric(), 0.0));
}

TEST_CASE("reciprocal and h transforms") {
  const auto b = SpectralMeasure::bernoulli_symmetric();
  for (double x : {-3.0, -0.5, 0.25, 1.7, 4.0}) CHECK(std::abs(h_transform(b, x) - (-1.0 / x)) < 1e-14);
  CHECK_THROWS_AS(reciprocal_cauchy(b, 0.0), PoleError);

  const double t = 0.25;
  for (double th : {1.2, 3.0, 7.5}) {
    CHECK(std::abs(h_transform(SpectralMeasure::semicircle(t), th) - 0.5 * (-th + std::sqrt(th * th - 4 * t))) <
          1e-13);
    const double dh = th / (2.0 * std::sqrt(th * th - 4 * t)) - 0.5;
    CHECK(std::abs(h_derivative(SpectralMeasure::semicircle(t), th) - dh) < 1e-13);
  }
  CHECK(h_derivative(SpectralMeasure::semicircle(0.25), 3.0).real() == doctest::Approx(0.0303301).epsilon(1e-5));

  const auto pm = SpectralMeasure::point_mass(1.5);
  CHECK(std::abs(h_transform(pm, cplx(0.3, 2.0)) + 1.5) < 1e-14);
  CHECK(std::abs(h_derivative(pm, cplx(0.3, 2.0))) < 1e-14);

  // Im F >= Im z on the upper half plane.
  std::mt19937_64 rng(3);
  for (const auto& [name, m] : families()) {
    for (int i = 0; i < 50; ++i) {
      const cplx z = oracle::random_upper(rng, 4.0, 1e-3, 3.0);
      CHECK_MESSAGE(reciprocal_cauchy(m, z).imag() >= z.imag() - 1e-12, name);
    }
  }
}

TEST_CASE("r transform: closed forms") {
  for (cplx w : {cplx(0.05, 0), cplx(0.02, 0.03), cplx(-0.04, 0.01)}) {
    CHECK(std::abs(r_transform(SpectralMeasure::point_mass(0.7), w) - 0.7) < 1e-12);
    CHECK(std::abs(r_transform(SpectralMeasure::semicircle(1.3), w) - 1.3 * w) < 1e-12);
    const cplx rb = (std::sqrt(1.0 + 4.0 * w * w) - 1.0) / (2.0 * w);
    CHECK(std::abs(r_transform(SpectralMeasure::bernoulli_symmetric(), w) - rb) < 1e-12);
  }
  CHECK(std::abs(closed_form_r(SpectralMeasure::semicircle(2.0), cplx(0.1, 0.0)) - 0.2) < 1e-15);
  CHECK_THROWS_AS(closed_form_r(SpectralMeasure::bernoulli_symmetric(), 0.1), FamilyError);
}

TEST_CASE("property: invariants over five families and 100 random points") {
  std::mt19937_64 rng(2024);
  for (const auto& [name, m] : families()) {
    CAPTURE(std::string(name));
    const double big = 1e6 * std::max(1.0, m.radius());
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    int conj_fail = 0, sign_fail = 0, mass_fail = 0, round_fail = 0;
    for (int i = 0; i < 100; ++i) {
      const cplx z = oracle::random_upper(rng, 3.0 * std::max(1.0, m.radius()), 1e-3, 3.0);
      const cplx g = cauchy_transform(m, z);
      if (!(g.imag() < 0.0)) ++sign_fail;
      if (std::abs(cauchy_transform(m, std::conj(z)) - std::conj(g)) > 1e-12) ++conj_fail;

      const double y = big * (1.0 + u01(rng));
      if (std::abs(cplx(0, y) * cauchy_transform(m, cplx(0, y)) - 1.0) >= 1e-6) ++mass_fail;

      const cplx w = std::polar(0.05, 2.0 * oracle::pi * u01(rng));
      const cplx r = r_transform(m, w);
      if (std::abs(cauchy_transform(m, r + 1.0 / w) - w) >= 1e-10) ++round_fail;
    }
    CHECK(sign_fail == 0);
    CHECK(conj_fail == 0);
    CHECK(mass_fail == 0);
    CHECK(round_fail == 0);

    int fd_fail = 0;
    for (double x : real_points_off_support(m, rng, 100)) {
      // Step scaled to the distance from the nearest pole of F, roughly |G / G'|.
      const double reach = std::abs(cauchy_transform(m, x) / cauchy_derivative(m, x));
      const double step = 1e-5 * std::min(std::max(1.0, std::abs(x)), reach);
      const double fd = (h_transform(m, x + step).real() - h_transform(m, x - step).real()) / (2.0 * step);
      const double an = h_derivative(m, x).real();
      const double err = std::abs(an - fd) / std::max(std::abs(an), 1e-3);
      if (err >= 1e-6) ++fd_fail;
    }
    CHECK(fd_fail == 0);
  }
}

TEST_CASE("property: rendered grid densities are consistent with Stieltjes inversion") {
  for (const auto& m : {SpectralMeasure::semicircle(1.0), SpectralMeasure::marchenko_pastur(0.3, 1.0)}) {
    const auto grid = render_to_grid(m, 401);
    REQUIRE(grid.density_pieces().size() == 1);
    const auto& piece = grid.density_pieces().front();
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < piece.nodes.size(); ++i) {
      const double x = piece.nodes[i];
      const double recovered = -cauchy_transform(grid, cplx(x, 1e-6)).imag() / oracle::pi;
      worst = std::max(worst, std::abs(recovered - piece.values[i]));
    }
    CHECK(worst < 1e-3);
    CHECK(grid.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("support and enlargement") {
  const auto s = support(SpectralMeasure::semicircle(1.0));
  REQUIRE(s.size() == 1);
  CHECK(s.intervals()[0].lo == doctest::Approx(-2.0));
  CHECK(s.intervals()[0].hi == doctest::Approx(2.0));

  const auto b = support(SpectralMeasure::bernoulli_symmetric());
  REQUIRE(b.size() == 2);
  CHECK(b.intervals()[0] == Interval{-1.0, -1.0});
  CHECK(b.intervals()[1] == Interval{1.0, 1.0});
  const auto e = enlarge(b, 0.5);
  REQUIRE(e.size() == 2);
  CHECK(e.intervals()[0] == Interval{-1.5, -0.5});
  CHECK(e.intervals()[1] == Interval{0.5, 1.5});
  CHECK(enlarge(b, 1.0).size() == 1);

  const auto mp = support(SpectralMeasure::marchenko_pastur(2.0, 1.0));
  REQUIRE(mp.size() == 2);
  CHECK(mp.intervals()[0] == Interval{0.0, 0.0});
}

TEST_CASE("quantile sampling") {
  CHECK(quantile_sample(SpectralMeasure::point_mass(0.4), 3) == std::vector<double>{0.4, 0.4, 0.4});
  CHECK(quantile_sample(SpectralMeasure::bernoulli_symmetric(), 4) == std::vector<double>{-1, -1, 1, 1});

  // Semicircle quantiles by an independent CDF bisection.
  auto cdf = [](double x) {
    std::function<double(double)> f = [](double s) { return oracle::semicircle_density(1.0, s); };
    return oracle::integrate<double>(f, -2.0, x, 1e-14);
  };
  auto q = [&](double p) {
    double lo = -2.0, hi = 2.0;
    for (int i = 0; i < 60; ++i) ((cdf(0.5 * (lo + hi)) < p) ? lo : hi) = 0.5 * (lo + hi);
    return 0.5 * (lo + hi);
  };
  const auto qs = quantile_sample(SpectralMeasure::semicircle(1.0), 2);
  REQUIRE(qs.size() == 2);
  CHECK(qs[0] == doctest::Approx(q(1.0 / 3.0)).epsilon(1e-9));
  CHECK(qs[1] == doctest::Approx(-qs[0]).epsilon(1e-12));

  const auto many = quantile_sample(SpectralMeasure::marchenko_pastur(2.0, 1.0), 999);
  CHECK(std::is_sorted(many.begin(), many.end()));
  const auto zeros = std::count(many.begin(), many.end(), 0.0);
  CHECK(zeros == 500);  // atom of mass 1/2 at 0 covers ranks i/(n+1) <= 1/2
}

TEST_CASE("measure construction validation and JSON") {
  CHECK_THROWS_AS(SpectralMeasure::semicircle(-1.0), MeasureError);
  CHECK_THROWS_AS(SpectralMeasure::from_parts({{0.0, 0.5}}, {}), MeasureError);
  CHECK_THROWS_AS(SpectralMeasure::from_parts({{0.0, 1.2}, {1.0, -0.2}}, {}), MeasureError);
  CHECK_NOTHROW(SpectralMeasure::from_parts({{0.0, 0.5}}, {}, true));
  CHECK_THROWS_AS(measure_from_json_text("{\"family\":\"cauchy\"}"), MeasureError);
  CHECK_THROWS_AS(measure_from_json_text("{not json"), MeasureError);

  const auto j = measure_from_json_text(R"({"atoms":[[-1,0.25],[1,0.25]],
      "density":{"intervals":[{"a":-0.5,"b":0.5,"values":[0.5,0.5]}]}})");
  CHECK(j.total_mass() == doctest::Approx(1.0));
  CHECK(std::abs(cauchy_transform(j, 2.0) - (0.25 / 3.0 + 0.25 + 0.5 * std::log(2.5 / 1.5))) < 1e-14);

  for (const auto& [name, m] : families()) {
    const auto back = measure_from_json(measure_to_json(m));
    CHECK_MESSAGE(std::abs(cauchy_transform(back, cplx(0.3, 0.7)) - cauchy_transform(m, cplx(0.3, 0.7))) < 1e-15,
                  name);
  }
}
