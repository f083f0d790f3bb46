#include "quadnls/radial_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace quadnls::radial {

namespace {

// Applies the symmetric flux matrix S (so that Lap = S / vol).
template <typename T>
void apply_flux(const RadialGrid6& g, std::span<const T> u, std::span<T> out) {
  const int n = g.num_points();
  const double h = g.dr();
  const auto area = g.face_areas();
  const double outer = area[n - 1] * outer_flux_coefficient(g);
  for (int j = 0; j < n; ++j) {
    T acc = T(0);
    if (j + 1 < n) acc += (area[j] / h) * (u[j + 1] - u[j]);
    if (j > 0) acc -= (area[j - 1] / h) * (u[j] - u[j - 1]);
    if (j == n - 1) acc -= outer * u[j];
    out[j] = acc;
  }
}

}  // namespace

double outer_flux_coefficient(const RadialGrid6& g) {
  const double b = g.robin_coefficient();
  return b / (1.0 + 0.5 * b * g.dr());
}

void laplacian(const RadialGrid6& g, std::span<const cplx> u, std::span<cplx> out) {
  apply_flux<cplx>(g, u, out);
  const auto vol = g.volumes();
  for (std::size_t j = 0; j < out.size(); ++j) out[j] /= vol[j];
}

std::vector<double> laplacian(const RadialGrid6& g, std::span<const double> u) {
  std::vector<double> out(u.size());
  apply_flux<double>(g, u, out);
  const auto vol = g.volumes();
  for (std::size_t j = 0; j < out.size(); ++j) out[j] /= vol[j];
  return out;
}

double dirichlet_energy(const RadialGrid6& g, std::span<const cplx> u) {
  const int n = g.num_points();
  const double h = g.dr();
  const auto area = g.face_areas();
  double acc = 0.0;
  for (int j = 0; j + 1 < n; ++j) acc += area[j] * std::norm(u[j + 1] - u[j]) / h;
  acc += area[n - 1] * outer_flux_coefficient(g) * std::norm(u[n - 1]);
  return acc;
}

CVec face_derivatives(const RadialGrid6& g, std::span<const cplx> u) {
  const int n = g.num_points();
  const double inv_h = 1.0 / g.dr();
  CVec d(n);
  for (int j = 0; j + 1 < n; ++j) d[j] = (u[j + 1] - u[j]) * inv_h;
  d[n - 1] = -outer_flux_coefficient(g) * u[n - 1];
  return d;
}

double max_face_gradient(const RadialGrid6& g, std::span<const cplx> u) {
  const int n = g.num_points();
  const double inv_h = 1.0 / g.dr();
  double m = 0.0;
  for (int j = 0; j + 1 < n; ++j) m = std::max(m, std::abs(u[j + 1] - u[j]) * inv_h);
  return m;
}

ShiftedSolver::ShiftedSolver(const RadialGrid6& g, cplx shift, cplx coeff) {
  const int n = g.num_points();
  const double h = g.dr();
  const auto area = g.face_areas();
  const auto vol = g.volumes();
  std::vector<cplx> diag(n);
  lower_.assign(n > 1 ? n - 1 : 0, 0.0);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    if (j + 1 < n) s -= area[j] / h;
    if (j > 0) s -= area[j - 1] / h;
    if (j == n - 1) s -= area[n - 1] * outer_flux_coefficient(g);
    diag[j] = shift * vol[j] + coeff * s;
    if (j + 1 < n) lower_[j] = coeff * (area[j] / h);
  }
  cprime_.assign(n, 0.0);
  denom_.assign(n, 0.0);
  cplx d = diag[0];
  for (int j = 0; j < n; ++j) {
    if (j > 0) d = diag[j] - lower_[j - 1] * cprime_[j - 1];
    if (std::abs(d) == 0.0 || !std::isfinite(std::abs(d)))
      throw std::runtime_error("radial tridiagonal solve: singular pivot");
    denom_[j] = 1.0 / d;
    if (j + 1 < n) cprime_[j] = lower_[j] * denom_[j];
  }
}

void ShiftedSolver::solve(std::span<cplx> rhs) const {
  const std::size_t n = rhs.size();
  rhs[0] *= denom_[0];
  for (std::size_t j = 1; j < n; ++j) rhs[j] = (rhs[j] - lower_[j - 1] * rhs[j - 1]) * denom_[j];
  for (std::size_t j = n - 1; j-- > 0;) rhs[j] -= cprime_[j] * rhs[j + 1];
}

CrankNicolson::CrankNicolson(const RadialGrid6& g, double kappa, double dt)
    : grid_(g), kappa_(kappa), dt_(dt), solver_(g, 1.0, cplx(0.0, -0.5 * dt * kappa)) {}

void CrankNicolson::explicit_half(std::span<const cplx> u, std::span<cplx> rhs) const {
  apply_flux<cplx>(grid_, u, rhs);
  const auto vol = grid_.volumes();
  const cplx theta(0.0, 0.5 * dt_ * kappa_);
  for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] = vol[j] * u[j] + theta * rhs[j];
}

void CrankNicolson::step(std::span<cplx> u) const {
  CVec rhs(u.size());
  explicit_half(u, rhs);
  solver_.solve(rhs);
  std::copy(rhs.begin(), rhs.end(), u.begin());
}

std::vector<double> solve_poisson(const RadialGrid6& g, std::span<const double> f) {
  static thread_local std::vector<std::pair<RadialGrid6, ShiftedSolver>> cache;
  const ShiftedSolver* solver = nullptr;
  for (const auto& [grid, s] : cache)
    if (grid == g) solver = &s;
  if (solver == nullptr) {
    if (cache.size() > 4) cache.clear();
    cache.emplace_back(g, ShiftedSolver(g, 0.0, -1.0));
    solver = &cache.back().second;
  }
  const auto vol = g.volumes();
  CVec rhs(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) rhs[j] = vol[j] * f[j];
  solver->solve(rhs);
  std::vector<double> x(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) x[j] = rhs[j].real();
  return x;
}

double sample_linear(const RadialGrid6& g, std::span<const double> u, double r) {
  const int n = g.num_points();
  const double h = g.dr();
  r = std::abs(r);
  if (r > g.outer_radius()) return 0.0;
  const double s = r / h - 0.5;
  if (s <= 0.0) return u[0];
  const int j = static_cast<int>(s);
  if (j >= n - 1) return u[n - 1];
  const double w = s - j;
  return (1.0 - w) * u[j] + w * u[j + 1];
}

}  // namespace quadnls::radial
