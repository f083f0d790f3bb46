#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include <boost/numeric/odeint.hpp>

#include "quadnls/groundstate.hpp"
#include "quadnls/propagator.hpp"

using namespace quadnls;

namespace {

using State6 = std::array<double, 6>;

// d_t u = -i f(u) in real coordinates (Re u1, Im u1, ...).
void node_ode(const State6& x, State6& dx, double) {
  const cplx u1(x[0], x[1]), u2(x[2], x[3]), u3(x[4], x[5]);
  const cplx I(0.0, 1.0);
  const cplx d1 = I * std::conj(u2) * u3, d2 = I * std::conj(u1) * u3, d3 = I * u1 * u2;
  dx = {d1.real(), d1.imag(), d2.real(), d2.imag(), d3.real(), d3.imag()};
}

double max_diff(const ComplexField3& a, const ComplexField3& b) {
  double m = 0.0;
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
  return m;
}

double l2_diff(const ComplexField3& a, const ComplexField3& b) {
  double m = 0.0;
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < a.size(); ++j) m += std::norm(a[i][j] - b[i][j]);
  return std::sqrt(m);
}

}  // namespace

TEST_CASE("step method names round-trip") {
  for (auto m : {StepMethod::strang_spectral, StepMethod::radial_imex})
    CHECK(step_method_from_string(to_string(m)) == m);
  CHECK_THROWS(step_method_from_string("leapfrog"));
  CHECK(to_string(HaltReason::blowup_halt) == "blowup_halt");
}

TEST_CASE("pointwise integrator agrees with an adaptive reference") {
  const auto g = make_cartesian_grid(1, 4, 1.0);
  ComplexField3 u{Grid(g)};
  const cplx vals[4][3] = {{{1.0, 0.2}, {0.5, -0.3}, {0.7, 0.1}},
                           {{-0.4, 0.9}, {1.1, 0.0}, {0.2, 0.6}},
                           {{0.0, 0.0}, {0.8, 0.8}, {1.2, -0.5}},
                           {{0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}}};
  for (int i = 0; i < 3; ++i) {
    u[i].resize(4);
    for (int n = 0; n < 4; ++n) u[i][n] = vals[n][i];
  }
  const double T = 1.0, dt = 1e-3;
  ComplexField3 v = u;
  for (int s = 0; s < 1000; ++s) v = nonlinear_substep(v, dt, 4);
  namespace ode = boost::numeric::odeint;
  double worst = 0.0;
  for (int n = 0; n < 4; ++n) {
    State6 x{};
    for (int i = 0; i < 3; ++i) {
      x[2 * i] = u[i][n].real();
      x[2 * i + 1] = u[i][n].imag();
    }
    ode::integrate_adaptive(ode::make_controlled(1e-15, 1e-15, ode::runge_kutta_fehlberg78<State6>()),
                            node_ode, x, 0.0, T, 1e-4);
    for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(v[i][n] - cplx(x[2 * i], x[2 * i + 1])));
  }
  CHECK(worst < 1e-10);

  // The second-order variant converges at its nominal rate.
  auto run2 = [&](double h) {
    ComplexField3 w = u;
    for (int s = 0; s < static_cast<int>(std::lround(T / h)); ++s) w = nonlinear_substep(w, h, 2);
    return w;
  };
  const double e1 = max_diff(run2(0.02), v), e2 = max_diff(run2(0.01), v);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
  CHECK_THROWS(nonlinear_substep(u, dt, 3));
}

TEST_CASE("exact Fourier flow of a plane wave") {
  const auto g = make_cartesian_grid(1, 32, 2.0 * kPi);
  const auto k = validate_kappa(2.0, 0.5, 1.0);
  ComplexField3 u{Grid(g)};
  for (int i = 0; i < 3; ++i) {
    u[i].resize(32);
    for (int n = 0; n < 32; ++n) u[i][n] = std::polar(1.0, 3.0 * g.coord(n));
  }
  const double t = 0.37;
  const auto v = linear_flow(u, t, k);
  for (int i = 0; i < 3; ++i)
    for (int n = 0; n < 32; ++n)
      CHECK(std::abs(v[i][n] - u[i][n] * std::polar(1.0, -k[i] * 9.0 * t)) < 1e-12);
  CHECK(max_diff(linear_flow(v, -t, k), u) < 1e-13);
}

TEST_CASE("radial Crank-Nicolson flow is unitary and reversible") {
  const auto g = make_radial_grid(300, 15.0);
  const auto k = validate_kappa(2.0, 2.0, 1.0);
  const auto u = make_gaussian_triple(Grid(g), {1.0, 0.5, 0.2}, 1.5, {0.0, 0.3, 0.0});
  const auto v = linear_flow(u, 0.5, k, 50);
  CHECK(mass(v) == doctest::Approx(mass(u)).epsilon(1e-13));
  CHECK(max_diff(linear_flow(v, -0.5, k, 50), u) < 1e-12);
}

TEST_CASE("Strang splitting is second order in dt") {
  const auto g = make_cartesian_grid(1, 256, 40.0);
  const auto k = validate_kappa(2.0, 2.0, 1.0);
  const auto u0 = make_gaussian_triple(Grid(g), {1.2, 1.0, 0.8}, 1.5, {0.0, 0.4, 0.9});
  auto run = [&](double h) {
    ComplexField3 u = u0;
    for (int s = 0; s < static_cast<int>(std::lround(1.0 / h)); ++s) u = strang_step(u, h, k);
    return u;
  };
  const double dt = 0.02;
  const auto ref = run(dt / 8);
  const double ratio = l2_diff(run(dt), ref) / l2_diff(run(dt / 2), ref);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
  CHECK_THROWS(strang_step(ComplexField3(Grid(make_radial_grid(8, 1.0))), 0.1, k));
}

TEST_CASE("radial IMEX step is second order in dt") {
  const auto g = make_radial_grid(200, 12.0);
  const auto k = validate_kappa(2.0, 2.0, 1.0);
  const auto u0 = make_gaussian_triple(Grid(g), {2.0, 2.0, 2.0}, 1.5, {0.0, 0.0, 0.0});
  auto run = [&](double h) {
    ComplexField3 u = u0;
    RadialImex stepper(g, k, h);
    for (int s = 0; s < static_cast<int>(std::lround(0.5 / h)); ++s) stepper.step(u);
    return u;
  };
  const double dt = 0.5 / 64;
  const auto ref = run(dt / 8);
  const double ratio = l2_diff(run(dt), ref) / l2_diff(run(dt / 2), ref);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.25));
  ComplexField3 one = u0;
  RadialImex(g, k, dt).step(one);
  CHECK(max_diff(imex_step(u0, dt, k), one) == 0.0);
}

TEST_CASE("evolve bookkeeping") {
  const auto g = make_cartesian_grid(1, 64, 20.0);
  const auto k = validate_kappa(2.0, 2.0, 1.0);
  const auto u0 = make_gaussian_triple(Grid(g), {0.5, 0.5, 0.5}, 2.0, {0.0, 0.0, 0.0});
  StepScheme s;
  s.dt = 0.3;
  const auto tr = evolve(u0, 1.0, s, k);
  CHECK(tr.steps == 4);
  CHECK(tr.dt == doctest::Approx(0.25));
  REQUIRE(tr.records.size() == 5);
  CHECK(tr.records.back().t == doctest::Approx(1.0));
  CHECK(tr.halt == HaltReason::completed);
  // Left-endpoint accumulation of dt * sum ||u_i||_4^4.
  double S = 0.0;
  for (std::size_t n = 0; n < tr.records.size(); ++n) {
    CHECK(tr.scattering[n] == doctest::Approx(S).epsilon(1e-14));
    S += tr.dt * tr.records[n].l4x_norm;
  }
  s.record_stride = 3;
  const auto strided = evolve(u0, 1.0, s, k);
  REQUIRE(strided.records.size() == 3);
  CHECK(strided.records[1].t == doctest::Approx(0.75));
  CHECK(strided.records[2].t == doctest::Approx(1.0));
  s.snapshot_stride = 2;
  CHECK(evolve(u0, 1.0, s, k).snapshots.size() >= 2);
  s.method = StepMethod::radial_imex;
  CHECK_THROWS(evolve(u0, 1.0, s, k));
}

TEST_CASE("supercritical amplitude of W halts on gradient growth") {
  const auto g = make_radial_grid(1024, 100.0);
  const auto k = validate_kappa(2.0, 2.0, 1.0);
  const auto gs = closed_form_phi0(g, k);
  StepScheme s;
  s.method = StepMethod::radial_imex;
  s.dt = 2e-3;
  s.record_stride = 50;
  const auto tr = evolve(gs.W.scaled(1.5), 10.0, s, k);
  CHECK(tr.halt == HaltReason::blowup_halt);
  CHECK(tr.records.back().t < 10.0);
  CHECK(tr.final_state.has_value());
  CHECK(tr.final_state->is_finite());
}

TEST_CASE("dispersive decay probe and fitted slope") {
  std::vector<std::pair<double, double>> syn;
  for (double t : {1.0, 2.0, 4.0, 8.0}) syn.push_back({t, 5.0 * std::pow(t, -3.0)});
  CHECK(loglog_slope(syn) == doctest::Approx(-3.0));

  const auto g = make_radial_grid(800, 80.0);
  const auto k = validate_kappa(1.0, 1.0, 0.5);
  const auto u = make_gaussian_triple(Grid(g), {1.0, 1.0, 1.0}, 1.0, {0.0, 0.0, 0.0});
  const auto probe = dispersive_decay_probe(u, {2.0, 4.0, 8.0}, k, 0.01);
  REQUIRE(probe.samples.size() == 3);
  CHECK_FALSE(probe.domain_escape);
  for (std::size_t n = 1; n < probe.samples.size(); ++n)
    CHECK(probe.samples[n].second < probe.samples[n - 1].second);
  const auto small = make_radial_grid(100, 6.0);
  const auto esc = dispersive_decay_probe(make_gaussian_triple(Grid(small), {1, 1, 1}, 1.0, {0, 0, 0}),
                                          {1.0, 8.0}, k, 0.01);
  CHECK(esc.domain_escape);
}
