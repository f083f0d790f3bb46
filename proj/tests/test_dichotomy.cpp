#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "quadnls/dichotomy.hpp"

using namespace quadnls;

namespace {

// Exact ground-state constants: K_W = 3 gives E_W = 1 and C_GN = 2 / (3 sqrt 3).
GroundState synthetic_gs() {
  GroundState gs(make_radial_grid(8, 1.0));
  gs.kappa = validate_kappa(2.0, 2.0, 1.0);
  gs.K_W = 3.0;
  gs.V_W = 2.0;
  gs.E_W = 1.0;
  gs.C_GN = 2.0 / (3.0 * std::sqrt(3.0));
  return gs;
}

ObservableRecord rec(double t, double K, double V, double v1 = 0.0) {
  ObservableRecord r;
  r.t = t;
  r.kinetic = K;
  r.potential = V;
  r.energy = K - V;
  r.virial_v1 = v1;
  return r;
}

ThresholdReport verdict_at(double c, Verdict v) {
  ThresholdReport r;
  r.amplitude = c;
  r.verdict = v;
  return r;
}

}  // namespace

TEST_CASE("coercivity band of the amplitude family") {
  const auto gs = synthetic_gs();
  for (double c : {0.3, 0.5, 0.9}) {
    CAPTURE(c);
    // E(cW) = K_W (c^2 - 2c^3/3) and y_- = c^2 K_W.
    const double E = gs.K_W * (c * c - 2.0 * c * c * c / 3.0);
    const auto b = make_band(E, c * c * gs.K_W, gs);
    REQUIRE(b.valid);
    CHECK(b.rho == doctest::Approx(1.0 - 3.0 * c * c + 2.0 * c * c * c).epsilon(1e-12));
    CHECK(b.rho_prime == doctest::Approx(1.0 - c * c).epsilon(1e-10));
    CHECK(b.rho_double_prime == doctest::Approx(2.0 * (1.0 - c)).epsilon(1e-9));
  }
  for (double c : {1.1, 1.3}) {
    CAPTURE(c);
    const double E = gs.K_W * (c * c - 2.0 * c * c * c / 3.0);
    const auto b = make_band(E, c * c * gs.K_W, gs);
    REQUIRE(b.valid);
    CHECK(b.rho_tilde_prime == doctest::Approx(c * c - 1.0).epsilon(1e-9));
    const double rho = 1.0 - 3.0 * c * c + 2.0 * c * c * c;
    CHECK(b.rho_tilde_double_prime == doctest::Approx(1.0 - (1.0 - rho) / (c * c)).epsilon(1e-9));
  }
  CHECK_FALSE(make_band(gs.E_W, gs.K_W, gs).valid);
  CHECK_FALSE(make_band(1.5 * gs.E_W, gs.K_W, gs).valid);
  CHECK_FALSE(make_band(-0.1, 2.0 * gs.K_W, gs).valid);
}

TEST_CASE("trapping monitor") {
  const auto gs = synthetic_gs();
  const double c = 0.5;
  const double E = gs.K_W * (c * c - 2.0 * c * c * c / 3.0);
  const auto band = make_band(E, c * c * gs.K_W, gs);
  Trajectory tr;
  SUBCASE("holds along a dispersing profile with conserved energy") {
    // Kinetic energy shrinking from c^2 K_W with E fixed.
    for (int n = 0; n < 5; ++n) {
      const double K = c * c * gs.K_W * (1.0 - 0.1 * n);
      tr.records.push_back(rec(n, K, K - E));
    }
    const auto r = trapping_monitor(tr, gs, band);
    CHECK(r.pass);
    CHECK(r.series.size() == 5);
    CHECK(r.series[0].k_ratio == doctest::Approx(c * c));
  }
  SUBCASE("an above-threshold datum violates it at t = 0") {
    const double a = 1.1;
    tr.records.push_back(rec(0.0, a * a * gs.K_W, a * a * a * gs.V_W));
    tr.records.push_back(rec(1.0, a * a * gs.K_W, a * a * a * gs.V_W));
    const auto r = trapping_monitor(tr, gs, band);
    CHECK_FALSE(r.pass);
    CHECK(r.violations == 2);
    CHECK(r.first_violation_t == 0.0);
  }
  SUBCASE("an invalid band never passes") {
    tr.records.push_back(rec(0.0, 0.1, 0.0));
    CHECK_FALSE(trapping_monitor(tr, gs, make_band(2.0, 1.0, gs)).pass);
  }
}

TEST_CASE("blow-up monitor on synthetic virial series") {
  const auto gs = synthetic_gs();
  const double c = 1.3;
  const double E = gs.K_W * (c * c - 2.0 * c * c * c / 3.0);
  const auto band = make_band(E, c * c * gs.K_W, gs);
  const double scale = 8.0 * gs.kappa.product() * band.rho_tilde_double_prime * gs.K_W;
  Trajectory tr;
  SUBCASE("concave V1 well below the bound passes") {
    for (int n = 0; n < 6; ++n) {
      const double t = 0.1 * n;
      tr.records.push_back(rec(t, c * c * gs.K_W * (1.0 + t), 0.0, 100.0 - scale * t * t));
    }
    const auto r = blowup_monitor(tr, gs, WeightKind::quadratic, -1, band);
    CHECK(r.pass);
    CHECK(r.series.size() == 4);
    CHECK(r.series[1].v1_dd == doctest::Approx(-2.0 * scale).epsilon(1e-9));
    CHECK(r.bound == doctest::Approx(-scale));
  }
  SUBCASE("convex V1 of a dispersing profile fails") {
    for (int n = 0; n < 6; ++n) {
      const double t = 0.1 * n;
      tr.records.push_back(rec(t, c * c * gs.K_W, 0.0, 1.0 + t * t));
    }
    const auto r = blowup_monitor(tr, gs, WeightKind::quadratic, -1, band);
    CHECK_FALSE(r.pass);
    CHECK(r.violations == 4);
  }
  SUBCASE("kinetic energy dropping below the floor fails") {
    for (int n = 0; n < 6; ++n) {
      const double t = 0.1 * n;
      tr.records.push_back(rec(t, 0.5 * gs.K_W, 0.0, -10.0 * scale * t * t));
    }
    const auto r = blowup_monitor(tr, gs, WeightKind::quadratic, -1, band);
    CHECK_FALSE(r.kinetic_lower_bound_held);
    CHECK_FALSE(r.pass);
  }
  SUBCASE("tail allowance of the truncated weight") {
    for (int n = 0; n < 4; ++n) tr.records.push_back(rec(0.1 * n, c * c * gs.K_W, 0.0));
    tr.extra_v1.push_back({0.0, -scale * 0.01, -scale * 0.04, -scale * 0.09});
    tr.extra_tail.push_back({0.0, 0.02 * scale, 0.05 * scale, 0.01 * scale});
    const auto r = blowup_monitor(tr, gs, WeightKind::truncated, 0, band);
    CHECK(r.tail_allowance == doctest::Approx(0.05));
    CHECK(r.bound == doctest::Approx(-0.95 * scale));
    CHECK(r.pass);
  }
}

TEST_CASE("virial second differences skip unequal spacing") {
  Trajectory tr;
  const auto k = validate_kappa(2.0, 2.0, 1.0);
  const std::vector<double> ts{0.0, 0.5, 1.0, 1.5, 1.7};
  std::vector<double> v1;
  for (double t : ts) {
    tr.records.push_back(rec(t, 2.0, 1.0));
    v1.push_back(3.0 * t * t);
  }
  const auto s = virial_fd_series(tr, v1, k);
  REQUIRE(s.size() == 2);
  CHECK(s[0].v1_dd == doctest::Approx(6.0));
  CHECK(s[1].t == 1.0);
  CHECK(s[0].rhs == doctest::Approx(8.0 * 4.0 * (4.0 - 3.0)));
  CHECK_FALSE(s[0].has_richardson);
}

TEST_CASE("Richardson estimate of the second-difference error") {
  // For t^4 the centred difference is 12 t^2 + 2 h^2, so extrapolation is exact.
  Trajectory tr;
  const auto k = validate_kappa(2.0, 2.0, 1.0);
  const double h = 0.1;
  std::vector<double> v1;
  for (int n = 0; n < 7; ++n) {
    tr.records.push_back(rec(n * h, 2.0, 1.0));
    v1.push_back(std::pow(n * h, 4));
  }
  const auto s = virial_fd_series(tr, v1, k);
  REQUIRE(s.size() == 5);
  CHECK_FALSE(s[0].has_richardson);
  REQUIRE(s[2].has_richardson);
  const double t = s[2].t;
  CHECK(s[2].v1_dd == doctest::Approx(12 * t * t + 2 * h * h).epsilon(1e-9));
  CHECK(s[2].fd_error == doctest::Approx(-2 * h * h).epsilon(1e-6));
  CHECK(s[2].v1_dd_extrapolated == doctest::Approx(12 * t * t).epsilon(1e-8));
}

TEST_CASE("galilean kinetic identity") {
  const auto g = make_cartesian_grid(1, 256, 40.0);
  const auto k = validate_kappa(2.0, 2.0, 1.0);
  const std::vector<double> xi{0.4};
  SUBCASE("real data have P = 0 and xi* = 0") {
    const auto u = make_gaussian_triple(Grid(g), {1.0, 0.7, 0.5}, 1.5, {0, 0, 0});
    const auto b = boost_identity_check(u, xi, k);
    CHECK(b.residual < 1e-12);
    CHECK(std::abs(b.xi_star[0]) < 1e-14);
    CHECK(std::abs(b.kinetic_gain_at_star) < 1e-12);
    CHECK(boost_identity_residual(u, std::vector<double>{0.0}, k) == 0.0);
  }
  SUBCASE("modulated gaussians against the closed form") {
    const double q = 0.6, sigma = 1.5;
    const std::array<double, 3> A{1.0, 0.7, 0.5};
    ComplexField3 u{Grid(g)};
    for (int i = 0; i < 3; ++i) {
      u[i].resize(g.size());
      for (int n = 0; n < 256; ++n) {
        const double x = g.coord(n);
        u[i][n] = A[i] * std::polar(std::exp(-x * x / (2 * sigma * sigma)), q * x);
      }
    }
    // ||G||^2 = sigma sqrt(pi), ||G'||^2 = sqrt(pi) / (2 sigma).
    double Kb = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double qq = q + xi[0] / k[i];
      Kb += 0.5 * k[i] * A[i] * A[i] * (qq * qq * sigma + 0.5 / sigma) * std::sqrt(kPi);
    }
    CHECK(kinetic(galilean_boost(u, xi, 0.0, k), k) == doctest::Approx(Kb).epsilon(1e-10));
    const auto b = boost_identity_check(u, xi, k);
    CHECK(b.residual < 1e-10);
    CHECK(b.minimizer_residual < 1e-10);
    CHECK(b.kinetic_gain_at_star < 0.0);
    CHECK(b.xi_star[0] < 0.0);
    CHECK(boost_energy_residual(u, xi, k) < 1e-10);
  }
  SUBCASE("non-resonant triples") {
    const auto kn = validate_kappa(1.0, 1.0, 1.0);
    const auto u = make_gaussian_triple(Grid(g), {1.0, 0.7, 0.5}, 1.5, {0, 0, 0});
    CHECK_THROWS(boost_identity_check(u, xi, kn));
    CHECK(boost_identity_residual(u, xi, kn) < 1e-10);
    CHECK(boost_energy_residual(u, xi, kn) > 1e-3);
  }
}

TEST_CASE("monotone verdict ordering") {
  using V = Verdict;
  CHECK(verdicts_monotone({verdict_at(0.3, V::dispersing), verdict_at(1.1, V::blowup)}));
  CHECK(verdicts_monotone({verdict_at(0.3, V::undetermined), verdict_at(1.1, V::undetermined)}));
  CHECK(verdicts_monotone({verdict_at(0.9, V::blowup), verdict_at(0.9, V::dispersing)}));
  CHECK_FALSE(verdicts_monotone({verdict_at(0.7, V::blowup), verdict_at(1.1, V::dispersing)}));
  CHECK(to_string(V::undetermined) == "undetermined");
}

TEST_CASE("classification on a coarse grid") {
  const auto g = make_radial_grid(512, 100.0);
  const auto gs = closed_form_phi0(g, validate_kappa(2.0, 2.0, 1.0));
  StepScheme s;
  s.method = StepMethod::radial_imex;
  s.dt = 2e-3;
  s.record_stride = 10;

  SUBCASE("guard band and bad amplitudes") {
    const auto sw = amplitude_sweep(gs, {1.02}, s, 1.0);
    REQUIRE(sw.reports.size() == 1);
    CHECK(sw.reports[0].verdict == Verdict::undetermined);
    CHECK(sw.reports[0].steps == 0);
    CHECK(sw.reports[0].k_ratio == doctest::Approx(1.02 * 1.02).epsilon(1e-12));
    CHECK_THROWS(amplitude_sweep(gs, {0.5, -1.0}, s, 1.0));
  }
  SUBCASE("grid mismatches are rejected") {
    const auto other = gs.W.scaled(0.5);
    CHECK_THROWS(classify(closed_form_phi0(make_radial_grid(600, 100.0), gs.kappa).W, gs, s, 1.0));
    CHECK_THROWS(classify(ComplexField3(Grid(make_cartesian_grid(1, 16, 1.0))), gs, s, 1.0));
    CHECK(data_radius(other, 1e-3) > 0.0);
  }
  SUBCASE("below threshold: trapping holds along the run") {
    const auto rep = classify(gs.W.scaled(0.5), gs, s, 2.0);
    CHECK(rep.below_threshold);
    CHECK_FALSE(rep.above_threshold);
    REQUIRE(rep.trapping.has_value());
    CHECK(rep.trapping->pass);
    CHECK_FALSE(rep.blowup_quadratic.has_value());
    CHECK(rep.halt == HaltReason::completed);
  }
  SUBCASE("above threshold: blow-up halt with a concave virial") {
    const auto rep = classify(gs.W.scaled(1.3), gs, s, 10.0);
    CHECK(rep.above_threshold);
    CHECK(rep.halt == HaltReason::blowup_halt);
    REQUIRE(rep.blowup_quadratic.has_value());
    CHECK(rep.blowup_quadratic->pass);
    CHECK(rep.verdict == Verdict::blowup);
    REQUIRE(rep.blowup_truncated.has_value());
    CHECK(rep.blowup_truncated->tail_allowance < 0.05);
  }
}
