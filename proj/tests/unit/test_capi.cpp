// Exercises the shared library through the public header only.
#include <doctest.h>

#include <freeconv/freeconv.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

namespace {

struct MeasureHandle {
  fc_measure* m = nullptr;
  ~MeasureHandle() { fc_measure_free(m); }
};

}  // namespace

TEST_CASE("status strings, version and last error") {
  CHECK(std::string(fc_version()) == "0.1.0");
  CHECK(std::string(fc_status_string(FC_OK)) != "");
  CHECK(std::string(fc_status_string(FC_ERR_POLE)) != std::string(fc_status_string(FC_ERR_DOMAIN)));
  fc_measure* m = nullptr;
  CHECK(fc_measure_semicircle(-1.0, &m) == FC_ERR_MEASURE);
  CHECK(m == nullptr);
  CHECK(std::string(fc_last_error()).size() > 0);
  CHECK(fc_measure_semicircle(1.0, nullptr) == FC_ERR_INVALID_ARGUMENT);
  fc_measure_free(nullptr);
  fc_support_free(nullptr);
  fc_predictions_free(nullptr);
  fc_report_free(nullptr);
  fc_model_free(nullptr);
}

TEST_CASE("measures and transforms") {
  MeasureHandle b, d0, sc, js;
  REQUIRE(fc_measure_bernoulli_symmetric(&b.m) == FC_OK);
  REQUIRE(fc_measure_point_mass(0.0, &d0.m) == FC_OK);
  REQUIRE(fc_measure_semicircle(1.0, &sc.m) == FC_OK);
  REQUIRE(fc_measure_from_json("{\"atoms\":[[-1,0.5],[1,0.5]]}", &js.m) == FC_OK);

  double re = 0, im = 0;
  REQUIRE(fc_transform_eval(d0.m, FC_TRANSFORM_G, 0.0, 1.0, &re, &im) == FC_OK);
  CHECK(re == doctest::Approx(0.0));
  CHECK(im == doctest::Approx(-1.0));
  REQUIRE(fc_transform_eval(b.m, FC_TRANSFORM_H, 2.0, 0.0, &re, &im) == FC_OK);
  CHECK(re == doctest::Approx(-0.5));
  REQUIRE(fc_transform_eval(js.m, FC_TRANSFORM_G, 2.0, 0.0, &re, &im) == FC_OK);
  CHECK(re == doctest::Approx(2.0 / 3.0));
  REQUIRE(fc_transform_eval(sc.m, FC_TRANSFORM_R, 0.1, 0.0, &re, &im) == FC_OK);
  CHECK(re == doctest::Approx(0.1));
  CHECK(fc_transform_eval(sc.m, FC_TRANSFORM_G, 0.5, 0.0, &re, &im) == FC_ERR_DOMAIN);
  CHECK(fc_transform_eval(b.m, FC_TRANSFORM_F, 0.0, 0.0, &re, &im) == FC_ERR_POLE);
  CHECK(fc_transform_eval(b.m, static_cast<fc_transform>(42), 3.0, 0.0, &re, &im) == FC_ERR_INVALID_ARGUMENT);

  fc_measure* bad = nullptr;
  CHECK(fc_measure_from_json("{\"atoms\":[[0,0.3]]}", &bad) == FC_ERR_MEASURE);
  CHECK(fc_measure_from_json("not json", &bad) == FC_ERR_MEASURE);

  size_t needed = 0;
  REQUIRE(fc_measure_to_json(sc.m, nullptr, 0, &needed) == FC_OK);
  std::vector<char> buf(needed);
  REQUIRE(fc_measure_to_json(sc.m, buf.data(), buf.size(), &needed) == FC_OK);
  CHECK(std::string(buf.data()).find("semicircle") != std::string::npos);

  std::vector<double> q(4);
  REQUIRE(fc_quantile_sample(b.m, 4, q.data()) == FC_OK);
  CHECK(q == std::vector<double>{-1, -1, 1, 1});

  fc_support* s = nullptr;
  REQUIRE(fc_measure_support(b.m, &s) == FC_OK);
  CHECK(fc_support_count(s) == 2);
  fc_support* e = nullptr;
  REQUIRE(fc_support_enlarge(s, 0.5, &e) == FC_OK);
  double lo = 0, hi = 0;
  REQUIRE(fc_support_interval(e, 1, &lo, &hi) == FC_OK);
  CHECK(lo == 0.5);
  CHECK(hi == 1.5);
  CHECK(fc_support_interval(e, 2, &lo, &hi) == FC_ERR_INVALID_ARGUMENT);
  CHECK(fc_support_distance(e, 0.0) == doctest::Approx(0.5));
  fc_support_free(e);
  fc_support_free(s);
}

TEST_CASE("subordination through the C API") {
  MeasureHandle s1;
  REQUIRE(fc_measure_semicircle(1.0, &s1.m) == FC_OK);
  fc_subordination_point p{};
  REQUIRE(fc_denjoy_wolff(s1.m, s1.m, 0.0, 3.0, &p) == FC_OK);
  CHECK(p.omega1_im == doctest::Approx(3.2807764064));
  CHECK(p.residual < 1e-10);

  const std::vector<double> grid{-1.0, 0.0, 1.0};
  std::vector<double> dens(3);
  std::vector<int> ok(3);
  REQUIRE(fc_convolution_density(s1.m, s1.m, grid.data(), 3, nullptr, 0, 1, 1, dens.data(), ok.data(), nullptr) ==
          FC_OK);
  CHECK(dens[1] == doctest::Approx(std::sqrt(2.0) / (2.0 * M_PI)).epsilon(1e-8));
  CHECK(ok[0] == 1);
  const double bad_ladder[2] = {1e-3, 1e-2};
  CHECK(fc_convolution_density(s1.m, s1.m, grid.data(), 3, bad_ladder, 2, 1, 1, dens.data(), nullptr, nullptr) ==
        FC_ERR_CONFIG);

  fc_support* k = nullptr;
  REQUIRE(fc_convolution_support(s1.m, s1.m, 0.0, 1, &k) == FC_OK);
  double lo = 0, hi = 0;
  REQUIRE(fc_support_interval(k, 0, &lo, &hi) == FC_OK);
  CHECK(std::abs(hi - 2.0 * std::sqrt(2.0)) < 1e-3);
  fc_support_free(k);

  double v = 0;
  int pole = -1;
  REQUIRE(fc_omega_boundary(s1.m, s1.m, 3.5, &v, &pole) == FC_OK);
  CHECK(pole == 0);
  CHECK(fc_omega_boundary(s1.m, s1.m, 0.0, &v, &pole) == FC_ERR_BOUNDARY);
}

TEST_CASE("outliers and verification through the C API") {
  MeasureHandle sc, b;
  REQUIRE(fc_measure_semicircle(0.25, &sc.m) == FC_OK);
  REQUIRE(fc_measure_bernoulli_symmetric(&b.m) == FC_OK);
  const fc_spike spike{3.0, 1};
  fc_predictions* preds = nullptr;
  REQUIRE(fc_solve_outliers(sc.m, b.m, &spike, 1, nullptr, &preds) == FC_OK);
  REQUIRE(fc_predictions_count(preds) == 2);
  fc_prediction p0{}, p1{};
  REQUIRE(fc_predictions_get(preds, 0, &p0) == FC_OK);
  REQUIRE(fc_predictions_get(preds, 1, &p1) == FC_OK);
  CHECK(p0.rho == doctest::Approx(-0.224353275532849).epsilon(1e-10));
  CHECK(p1.rho == doctest::Approx(3.310139713159904).epsilon(1e-10));
  CHECK(fc_predictions_get(preds, 2, &p0) == FC_ERR_INVALID_ARGUMENT);

  fc_verification_config cfg;
  fc_verification_config_default(&cfg);
  CHECK(cfg.n == 2000);
  CHECK(cfg.trials == 10);
  cfg.n = 300;
  cfg.trials = 2;
  cfg.eta = 0.1;
  fc_report* rep = nullptr;
  REQUIRE(fc_run_verification(sc.m, b.m, &spike, 1, preds, &cfg, &rep) == FC_OK);
  CHECK(fc_report_row_count(rep) == 4);
  fc_window_row row{};
  REQUIRE(fc_report_row(rep, 0, &row) == FC_OK);
  CHECK(row.expected == 1);
  CHECK(fc_report_eta(rep) == 0.1);
  CHECK(fc_report_pass_fraction(rep) >= 0.0);
  fc_report_free(rep);

  cfg.epsilon = 1.0;
  CHECK(fc_run_verification(sc.m, b.m, &spike, 1, preds, &cfg, &rep) == FC_ERR_CONFIG);
  fc_predictions_free(preds);

  MeasureHandle d0, s1;
  REQUIRE(fc_measure_point_mass(0.0, &d0.m) == FC_OK);
  REQUIRE(fc_measure_semicircle(1.0, &s1.m) == FC_OK);
  int found = 0;
  double rho = 0;
  REQUIRE(fc_outliers_infdiv(d0.m, s1.m, 2.0, &found, &rho) == FC_OK);
  CHECK(found == 1);
  CHECK(rho == doctest::Approx(2.5));
  REQUIRE(fc_outliers_infdiv(d0.m, s1.m, 0.5, &found, &rho) == FC_OK);
  CHECK(found == 0);
  CHECK(fc_outliers_infdiv(s1.m, b.m, 3.0, &found, &rho) == FC_ERR_FAMILY);

  const fc_spike gammas[2] = {{2.0, 1}, {0.9, 1}};
  REQUIRE(fc_outliers_point_mass(s1.m, gammas, 2, &preds) == FC_OK);
  CHECK(fc_predictions_count(preds) == 1);
  CHECK(fc_predictions_dropped_count(preds) == 1);
  CHECK(std::string(fc_predictions_dropped(preds, 0)).find("0.9") != std::string::npos);
  fc_predictions_free(preds);
}

TEST_CASE("random matrices through the C API") {
  const size_t n = 20;
  std::vector<double> u(2 * n * n);
  REQUIRE(fc_haar_unitary(n, 3, 0, FC_BACKEND_DEFAULT, u.data()) == FC_OK);
  double worst = 0.0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      double re = 0, im = 0;
      for (size_t k = 0; k < n; ++k) {
        const double ar = u[2 * (i * n + k)], ai = -u[2 * (i * n + k) + 1];  // conj(U_ki)
        const double br = u[2 * (j * n + k)], bi = u[2 * (j * n + k) + 1];   // U_kj
        re += ar * br - ai * bi;
        im += ar * bi + ai * br;
      }
      worst = std::max(worst, std::hypot(re - (i == j ? 1.0 : 0.0), im));
    }
  }
  CHECK(worst < 1e-12);

  std::vector<double> h(2 * 9, 0.0), ev(3);
  h[0] = 1.0;
  h[2 * 4] = -2.0;
  h[2 * 8] = 5.0;
  REQUIRE(fc_hermitian_eigenvalues(3, h.data(), FC_BACKEND_NATIVE, ev.data()) == FC_OK);
  CHECK(ev == std::vector<double>{5.0, 1.0, -2.0});
  h[2 * 1 + 1] = 0.5;  // not Hermitian
  CHECK(fc_hermitian_eigenvalues(3, h.data(), FC_BACKEND_NATIVE, ev.data()) == FC_ERR_DOMAIN);

  MeasureHandle sc, b;
  REQUIRE(fc_measure_semicircle(0.25, &sc.m) == FC_OK);
  REQUIRE(fc_measure_bernoulli_symmetric(&b.m) == FC_OK);
  const fc_spike spike{3.0, 1};
  fc_model* model = nullptr;
  CHECK(fc_build_model(sc.m, b.m, &spike, 1, 1, 1, 0, FC_BACKEND_DEFAULT, &model) == FC_ERR_SIZE);
  REQUIRE(fc_build_model(sc.m, b.m, &spike, 1, 200, 1, 0, FC_BACKEND_DEFAULT, &model) == FC_OK);
  CHECK(fc_model_size(model) == 200);
  std::vector<double> a(200), bd(200), spec(200);
  REQUIRE(fc_model_diagonals(model, a.data(), bd.data()) == FC_OK);
  CHECK(a[0] == 3.0);
  REQUIRE(fc_model_eigenvalues(model, spec.data()) == FC_OK);
  double alpha = 1.0;
  REQUIRE(fc_default_alpha(sc.m, &alpha) == FC_OK);
  double dr = 0, di = 0;
  double diag[2];
  REQUIRE(fc_model_det_m(model, &spike, 1, alpha, spec[0], &dr, &di, diag) == FC_OK);
  CHECK(std::hypot(dr, di) < 1e-6);
  fc_model_free(model);
}
