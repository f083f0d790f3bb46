#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "quadnls/observables.hpp"
#include "quadnls/radial_ops.hpp"

using namespace quadnls;

namespace {

constexpr double sqrtpi = 1.7724538509055160273;

// Semi-discrete right-hand side u_t = i k Lap_h u - i f(u) on a radial grid.
ComplexField3 radial_rhs(const ComplexField3& u, const KappaTriple& k) {
  ComplexField3 out(u.grid());
  const auto f = nonlinearity(u);
  for (int i = 0; i < 3; ++i) {
    out[i].resize(u.size());
    radial::laplacian(u.radial_grid(), u[i], out[i]);
    for (std::size_t j = 0; j < u.size(); ++j)
      out[i][j] = cplx(0.0, 1.0) * (k[i] * out[i][j] - f[i][j]);
  }
  return out;
}

ComplexField3 axpy(const ComplexField3& u, double e, const ComplexField3& v) {
  ComplexField3 w = u;
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < u.size(); ++j) w[i][j] += e * v[i][j];
  return w;
}

// Smooth complex radial datum with a radial phase so that V2 and the
// anomaly integral are both nonzero.
ComplexField3 chirped(const RadialGrid6& g) {
  ComplexField3 u{Grid(g)};
  const double amp[3] = {0.8, 0.6, 0.7}, chirp[3] = {0.3, -0.2, 0.5}, w[3] = {1.4, 1.7, 1.2};
  for (int i = 0; i < 3; ++i) {
    u[i].resize(g.size());
    for (int j = 0; j < g.num_points(); ++j) {
      const double r = g.node(j);
      u[i][j] = amp[i] * std::exp(-r * r / (2 * w[i] * w[i])) * std::polar(1.0, chirp[i] * r * r + 0.4 * i);
    }
  }
  return u;
}

}  // namespace

TEST_CASE("one-dimensional gaussian functionals") {
  const auto g = make_cartesian_grid(1, 256, 40.0);
  const auto k = validate_kappa(2.0, 3.0, 0.5);
  const double s = 1.3;
  const std::array<double, 3> a{0.9, 0.7, 0.4}, th{0.2, -0.5, 1.1};
  const auto u = make_gaussian_triple(Grid(g), a, s, th);
  double m2[3];
  for (int i = 0; i < 3; ++i) m2[i] = a[i] * a[i] * s * sqrtpi;
  CHECK(mass(u) == doctest::Approx(0.5 * m2[0] + 0.5 * m2[1] + m2[2]).epsilon(1e-12));
  CHECK(lambda_invariant(u, k) ==
        doctest::Approx(m2[0] / (2 * k[0]) + m2[1] / (2 * k[1]) + m2[2] / (2 * k[2])).epsilon(1e-12));
  double kin = 0.0;
  for (int i = 0; i < 3; ++i) kin += 0.5 * k[i] * a[i] * a[i] * sqrtpi / (2.0 * s);
  CHECK(kinetic(u, k) == doctest::Approx(kin).epsilon(1e-12));
  const double pot = a[0] * a[1] * a[2] * std::cos(th[2] - th[0] - th[1]) * s * std::sqrt(2.0 * kPi / 3.0);
  CHECK(potential(u) == doctest::Approx(pot).epsilon(1e-12));
  CHECK(energy(u, k) == doctest::Approx(kin - pot).epsilon(1e-12));
  CHECK(sup_norm(u) == doctest::Approx(0.9).epsilon(1e-3));
  double l4 = 0.0;
  for (double ai : a) l4 += std::pow(ai, 4) * s * std::sqrt(kPi / 2.0);
  CHECK(l4_fourth_power(u) == doctest::Approx(l4).epsilon(1e-12));
  CHECK(scattering_increment(u, 0.01) == doctest::Approx(0.01 * l4).epsilon(1e-12));
  CHECK_THROWS(scattering_increment(u, 0.0));
  const double sq = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
  CHECK(l3_norm(u) == doctest::Approx(std::cbrt(std::pow(sq, 1.5) * s * std::sqrt(2.0 * kPi / 3.0))).epsilon(1e-12));
  const auto P = momentum(u);
  CHECK(std::abs(P[0]) < 1e-12);
}

TEST_CASE("momentum of a modulated gaussian") {
  const auto g = make_cartesian_grid(2, 128, 30.0);
  const double kx = 0.6, ky = -0.4, s = 1.5;
  ComplexField3 u = make_gaussian_triple(Grid(g), {1.0, 0.5, 0.3}, s, {0, 0, 0});
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto idx = g.unflatten(n);
    const cplx ph = std::polar(1.0, kx * g.coord(idx[0]) + ky * g.coord(idx[1]));
    for (int i = 0; i < 3; ++i) u[i][n] *= ph;
  }
  // Each |u_i|^2 integrates to a_i^2 pi s^2 in two dimensions.
  const double m = (1.0 + 0.25 + 0.09) * kPi * s * s;
  const auto P = momentum(u);
  CHECK(P[0] == doctest::Approx(kx * m).epsilon(1e-10));
  CHECK(P[1] == doctest::Approx(ky * m).epsilon(1e-10));
  CHECK(P[2] == 0.0);
}

TEST_CASE("six-dimensional radial gaussian functionals") {
  const auto g = make_radial_grid(2000, 20.0);
  const auto k = validate_kappa(2.0, 2.0, 1.0);
  const double s = 1.5, a = 0.8;
  const auto u = make_gaussian_triple(Grid(g), {a, a, a}, s, {0, 0, 0});
  const double ball = std::pow(kPi * s * s, 3);  // \int e^{-r^2/s^2} over R^6
  CHECK(mass(u) == doctest::Approx(2.0 * a * a * ball).epsilon(1e-4));
  double kin = 0.0;
  for (int i = 0; i < 3; ++i) kin += 0.5 * k[i] * a * a * 3.0 / (s * s) * ball;
  CHECK(kinetic(u, k) == doctest::Approx(kin).epsilon(1e-4));
  CHECK(potential(u) == doctest::Approx(a * a * a * std::pow(2.0 * kPi * s * s / 3.0, 3)).epsilon(1e-4));
  const auto w = make_quadratic_weight(Grid(g));
  const double c = k.kappa2 * k.kappa3 + k.kappa1 * k.kappa3 + k.kappa1 * k.kappa2;
  CHECK(virial_v1(u, k, w) == doctest::Approx(c * a * a * 3.0 * s * s * ball).epsilon(1e-4));
  CHECK(virial_v2(u, w) == doctest::Approx(0.0));
  const auto P = momentum(u);
  CHECK(P[0] == 0.0);
}

TEST_CASE("radial quadrature converges at second order") {
  const double s = 1.5;
  const double exact = 2.0 * std::pow(kPi * s * s, 3);
  auto err = [&](int n) {
    const auto g = make_radial_grid(n, 20.0);
    return std::abs(mass(make_gaussian_triple(Grid(g), {1, 1, 1}, s, {0, 0, 0})) - exact);
  };
  const double ratio = err(500) / err(1000);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("smooth cutoff profile") {
  using namespace cutoff;
  CHECK(chi(0.5) == doctest::Approx(0.5));
  CHECK(chi(1.0) == doctest::Approx(1.0));
  CHECK(chi(3.0) == doctest::Approx(2.0));
  CHECK(chi(7.0) == doctest::Approx(2.0));
  CHECK(chi1(1.0) == doctest::Approx(1.0));
  CHECK(chi1(3.0) == doctest::Approx(0.0));
  CHECK(chi2(1.0) == doctest::Approx(0.0));
  CHECK(chi2(3.0) == doctest::Approx(0.0));
  const double h = 1e-4;
  for (double s : {0.3, 1.2, 1.7, 2.0, 2.6, 2.95, 3.5}) {
    CAPTURE(s);
    CHECK((chi(s + h) - chi(s - h)) / (2 * h) == doctest::Approx(chi1(s)).epsilon(1e-7));
    CHECK((chi1(s + h) - chi1(s - h)) / (2 * h) == doctest::Approx(chi2(s)).epsilon(1e-6));
    CHECK((chi2(s + h) - chi2(s - h)) / (2 * h) == doctest::Approx(chi3(s)).epsilon(1e-6));
    CHECK((chi3(s + h) - chi3(s - h)) / (2 * h) == doctest::Approx(chi4(s)).epsilon(1e-6));
    CHECK(chi2(s) <= 0.0);
    CHECK(chi1(s) >= 0.0);
    CHECK(chi1(s) <= 1.0);
  }
}

TEST_CASE("truncated weight derivatives match finite differences of a(r)") {
  const double R = 5.0;
  const auto g = make_radial_grid(400, 20.0);
  const auto w = make_truncated_weight(Grid(g), R);
  auto a = [&](double r) { return R * R * cutoff::chi(r * r / (R * R)); };
  auto ar = [&](double r, double h) { return (a(r + h) - a(r - h)) / (2 * h); };
  auto arr = [&](double r, double h) { return (a(r + h) - 2 * a(r) + a(r - h)) / (h * h); };
  auto lap = [&](double r) { return 2.0 * 6.0 * cutoff::chi1(r * r / (R * R)) + 4.0 * r * r / (R * R) * cutoff::chi2(r * r / (R * R)); };
  const double h = 1e-3;
  for (int j : {10, 60, 100, 150, 200, 300}) {
    const double r = g.node(j);
    CAPTURE(r);
    CHECK(w.a[j] == doctest::Approx(a(r)));
    CHECK(w.grad_coef[j] * r == doctest::Approx(ar(r, h)).epsilon(1e-6));
    CHECK(w.a_rr[j] == doctest::Approx(arr(r, h)).epsilon(1e-4));
    CHECK(w.lap[j] == doctest::Approx(arr(r, h) + 5.0 * ar(r, h) / r).epsilon(1e-4));
    const double bl = (lap(r + h) - 2 * lap(r) + lap(r - h)) / (h * h) + 5.0 * (lap(r + h) - lap(r - h)) / (2 * h * r);
    CHECK(w.bilap[j] == doctest::Approx(bl).epsilon(1e-4).scale(1.0));
  }
  CHECK_THROWS(make_truncated_weight(Grid(g), 0.0));
}

TEST_CASE("V1 rate is the exact semi-discrete derivative of V1") {
  const auto g = make_radial_grid(600, 15.0);
  const auto u = chirped(g);
  for (const auto& k : {validate_kappa(2.0, 2.0, 1.0), validate_kappa(1.0, 1.0, 1.0), validate_kappa(0.7, 1.9, 1.3)}) {
    for (const auto& w : {make_quadratic_weight(Grid(g)), make_truncated_weight(Grid(g), 3.0)}) {
      const auto v = radial_rhs(u, k);
      const double e = 1e-4;
      // V1 is quadratic in u, so the centred difference is exact up to rounding.
      const double fd = (virial_v1(axpy(u, e, v), k, w) - virial_v1(axpy(u, -e, v), k, w)) / (2 * e);
      CHECK(virial_v1_rate(u, k, w) == doctest::Approx(fd).epsilon(1e-9));
    }
  }
}

TEST_CASE("weighted second derivative matches the flow derivative of the rate") {
  const auto g = make_radial_grid(3000, 15.0);
  const auto u = chirped(g);
  const auto k = validate_kappa(2.0, 2.0, 1.0);
  for (const auto& w : {make_quadratic_weight(Grid(g)), make_truncated_weight(Grid(g), 2.5)}) {
    const auto v = radial_rhs(u, k);
    const double e = 1e-5;
    const double fd = (virial_v1_rate(axpy(u, e, v), k, w) - virial_v1_rate(axpy(u, -e, v), k, w)) / (2 * e);
    CHECK(virial_second_derivative(u, k, w) == doctest::Approx(fd).epsilon(1e-3));
  }
  const auto wq = make_quadratic_weight(Grid(g));
  CHECK(virial_second_derivative(u, k, wq) == doctest::Approx(virial_rhs(u, k)).epsilon(1e-9));
  CHECK(virial_tail_bound(u, k, wq) == doctest::Approx(0.0));
}

TEST_CASE("observe collects the record") {
  const auto g = make_radial_grid(200, 10.0);
  const auto k = validate_kappa(2.0, 2.0, 1.0);
  const auto u = chirped(g);
  const auto w = make_quadratic_weight(Grid(g));
  const auto r = observe(u, k, 0.5, &w);
  CHECK(r.t == 0.5);
  CHECK(r.mass == mass(u));
  CHECK(r.energy == doctest::Approx(kinetic(u, k) - potential(u)));
  CHECK(r.virial_v1 == virial_v1(u, k, w));
  CHECK(r.virial_v2 == virial_v2(u, w));
  CHECK(r.grad_sup == gradient_sup(u));
  CHECK(r.l4x_norm == l4_fourth_power(u));
  const auto bare = observe(u, k, 0.0, nullptr);
  CHECK(bare.virial_v1 == 0.0);
}
