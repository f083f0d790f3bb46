#include "quadnls/observables.hpp"

#include <algorithm>
#include <cmath>

#include "quadnls/radial_ops.hpp"
#include "quadnls/spectral.hpp"

namespace quadnls {

namespace cutoff {

// chi' = 1 - h((s - 1) / 2) on [1, 3] with the quintic step h = 6q^5 - 15q^4 + 10q^3,
// so chi is C^3 and its fourth derivative is bounded.
double chi(double s) {
  if (s <= 1.0) return s;
  if (s >= 3.0) return 2.0;
  const double q = 0.5 * (s - 1.0);
  const double H = q * q * q * q * (q * q - 3.0 * q + 2.5);
  return 1.0 + 2.0 * (q - H);
}

double chi1(double s) {
  if (s <= 1.0) return 1.0;
  if (s >= 3.0) return 0.0;
  const double q = 0.5 * (s - 1.0);
  return 1.0 - q * q * q * (6.0 * q * q - 15.0 * q + 10.0);
}

double chi2(double s) {
  if (s <= 1.0 || s >= 3.0) return 0.0;
  const double q = 0.5 * (s - 1.0);
  return -15.0 * q * q * (1.0 - q) * (1.0 - q);
}

double chi3(double s) {
  if (s <= 1.0 || s >= 3.0) return 0.0;
  const double q = 0.5 * (s - 1.0);
  return -(120.0 * q * q * q - 180.0 * q * q + 60.0 * q) / 4.0;
}

double chi4(double s) {
  if (s <= 1.0 || s >= 3.0) return 0.0;
  const double q = 0.5 * (s - 1.0);
  return -(360.0 * q * q - 360.0 * q + 60.0) / 8.0;
}

}  // namespace cutoff

namespace {

int grid_dimension(const Grid& grid) {
  return is_radial(grid) ? 6 : std::get<CartesianGrid>(grid).dim;
}

}  // namespace

VirialWeight make_quadratic_weight(const Grid& grid) {
  const auto r2 = radius_squared(grid);
  const double d = grid_dimension(grid);
  VirialWeight w;
  w.kind = WeightKind::quadratic;
  w.a = r2;
  w.grad_coef.assign(r2.size(), 2.0);
  w.a_rr.assign(r2.size(), 2.0);
  w.lap.assign(r2.size(), 2.0 * d);
  w.bilap.assign(r2.size(), 0.0);
  if (is_radial(grid)) w.a_rr_face.assign(r2.size(), 2.0);
  return w;
}

VirialWeight make_truncated_weight(const Grid& grid, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("truncation radius must be positive");
  using namespace cutoff;
  const auto r2 = radius_squared(grid);
  const double d = grid_dimension(grid);
  const double R2 = R * R;
  VirialWeight w;
  w.kind = WeightKind::truncated;
  w.R = R;
  const std::size_t n = r2.size();
  w.a.resize(n);
  w.grad_coef.resize(n);
  w.a_rr.resize(n);
  w.lap.resize(n);
  w.bilap.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double s = r2[j] / R2;
    const double c1 = chi1(s), c2 = chi2(s), c3 = chi3(s), c4 = chi4(s);
    w.a[j] = R2 * chi(s);
    w.grad_coef[j] = 2.0 * c1;
    w.a_rr[j] = 2.0 * c1 + 4.0 * s * c2;
    w.lap[j] = 2.0 * d * c1 + 4.0 * s * c2;
    // Delta of F(s) = 2d chi' + 4 s chi'' is (4 s F_ss + 2d F_s) / R^2.
    const double Fs = (2.0 * d + 4.0) * c2 + 4.0 * s * c3;
    const double Fss = (2.0 * d + 8.0) * c3 + 4.0 * s * c4;
    w.bilap[j] = (4.0 * s * Fss + 2.0 * d * Fs) / R2;
  }
  if (const auto* g = std::get_if<RadialGrid6>(&grid)) {
    w.a_rr_face.resize(n);
    for (int j = 0; j < g->num_points(); ++j) {
      const double s = g->face(j) * g->face(j) / R2;
      w.a_rr_face[j] = 2.0 * chi1(s) + 4.0 * s * chi2(s);
    }
  }
  return w;
}

double integrate(const Grid& grid, std::span<const double> density) {
  if (const auto* g = std::get_if<RadialGrid6>(&grid)) {
    const auto vol = g->volumes();
    double acc = 0.0;
    for (std::size_t j = 0; j < density.size(); ++j) acc += vol[j] * density[j];
    return acc;
  }
  double acc = 0.0;
  for (double v : density) acc += v;
  return acc * std::get<CartesianGrid>(grid).cell_volume();
}

namespace {

double norm2(const ComplexField3& u, int i) {
  std::vector<double> dens(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) dens[j] = std::norm(u[i][j]);
  return integrate(u.grid(), dens);
}

double dirichlet(const ComplexField3& u, int i) {
  if (u.radial()) return radial::dirichlet_energy(u.radial_grid(), u[i]);
  return spectral_dirichlet_energy(u.cartesian_grid(), u[i]);
}

std::vector<double> triple_product_density(const ComplexField3& u, bool imag_part,
                                           std::span<const double> weight = {}) {
  std::vector<double> dens(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    const cplx z = std::conj(u[0][j]) * std::conj(u[1][j]) * u[2][j];
    double v = imag_part ? z.imag() : z.real();
    if (!weight.empty()) v *= weight[j];
    dens[j] = v;
  }
  return dens;
}

}  // namespace

double mass(const ComplexField3& u) {
  return 0.5 * norm2(u, 0) + 0.5 * norm2(u, 1) + norm2(u, 2);
}

double lambda_invariant(const ComplexField3& u, const KappaTriple& k) {
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) acc += norm2(u, i) / (2.0 * k[i]);
  return acc;
}

double kinetic(const ComplexField3& u, const KappaTriple& k) {
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) acc += 0.5 * k[i] * dirichlet(u, i);
  return acc;
}

double potential(const ComplexField3& u) {
  return integrate(u.grid(), triple_product_density(u, false));
}

double energy(const ComplexField3& u, const KappaTriple& k) { return kinetic(u, k) - potential(u); }

std::array<double, 3> momentum(const ComplexField3& u) {
  std::array<double, 3> p{0.0, 0.0, 0.0};
  if (u.radial()) return p;
  const auto& g = u.cartesian_grid();
  std::vector<double> dens(u.size());
  for (int a = 0; a < g.dim; ++a) {
    std::fill(dens.begin(), dens.end(), 0.0);
    for (int i = 0; i < 3; ++i) {
      const CVec du = spectral_derivative(g, u[i], a);
      for (std::size_t j = 0; j < u.size(); ++j) dens[j] += (std::conj(u[i][j]) * du[j]).imag();
    }
    p[a] = integrate(u.grid(), dens);
  }
  return p;
}

double sup_norm(const ComplexField3& u) {
  double m = 0.0;
  for (int i = 0; i < 3; ++i)
    for (const auto& z : u[i]) m = std::max(m, std::abs(z));
  return m;
}

double l3_norm(const ComplexField3& u) {
  std::vector<double> dens(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double m2 = std::norm(u[0][j]) + std::norm(u[1][j]) + std::norm(u[2][j]);
    dens[j] = m2 * std::sqrt(m2);
  }
  return std::cbrt(integrate(u.grid(), dens));
}

double l4_fourth_power(const ComplexField3& u) {
  std::vector<double> dens(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += std::norm(u[i][j]) * std::norm(u[i][j]);
    dens[j] = s;
  }
  return integrate(u.grid(), dens);
}

double scattering_increment(const ComplexField3& u, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("scattering increment needs dt > 0");
  return dt * l4_fourth_power(u);
}

double gradient_sup(const ComplexField3& u) {
  double m = 0.0;
  if (u.radial()) {
    for (int i = 0; i < 3; ++i) m = std::max(m, radial::max_face_gradient(u.radial_grid(), u[i]));
    return m;
  }
  const auto& g = u.cartesian_grid();
  std::vector<double> g2(u.size(), 0.0);
  for (int i = 0; i < 3; ++i) {
    std::fill(g2.begin(), g2.end(), 0.0);
    for (int a = 0; a < g.dim; ++a) {
      const CVec du = spectral_derivative(g, u[i], a);
      for (std::size_t j = 0; j < u.size(); ++j) g2[j] += std::norm(du[j]);
    }
    for (double v : g2) m = std::max(m, std::sqrt(v));
  }
  return m;
}

double virial_v1(const ComplexField3& u, const KappaTriple& k, const VirialWeight& w) {
  const std::array<double, 3> c{k.kappa2 * k.kappa3, k.kappa1 * k.kappa3, k.kappa1 * k.kappa2};
  std::vector<double> dens(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += c[i] * std::norm(u[i][j]);
    dens[j] = s * w.a[j];
  }
  return integrate(u.grid(), dens);
}

double virial_v2(const ComplexField3& u, const VirialWeight& w) {
  if (u.radial()) {
    // Face-centred form; it is the exact semi-discrete time derivative of the
    // nodal V1 under the conservative stencil.
    const auto& g = u.radial_grid();
    const auto area = g.face_areas();
    const double h = g.dr();
    double acc = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j + 1 < g.num_points(); ++j)
        acc += area[j] * (std::conj(u[i][j]) * u[i][j + 1]).imag() * (w.a[j + 1] - w.a[j]) / h;
    return 2.0 * acc;
  }
  const auto& g = u.cartesian_grid();
  std::vector<double> dens(u.size(), 0.0);
  for (int a = 0; a < g.dim; ++a) {
    for (int i = 0; i < 3; ++i) {
      const CVec du = spectral_derivative(g, u[i], a);
      for (std::size_t j = 0; j < u.size(); ++j) {
        const double x = g.coord(g.unflatten(j)[a]);
        dens[j] += (std::conj(u[i][j]) * du[j]).imag() * w.grad_coef[j] * x;
      }
    }
  }
  return 2.0 * integrate(u.grid(), dens);
}

double virial_anomaly_integral(const ComplexField3& u, const VirialWeight& w) {
  return integrate(u.grid(), triple_product_density(u, true, w.a));
}

double virial_v1_rate(const ComplexField3& u, const KappaTriple& k, const VirialWeight& w) {
  return k.product() * virial_v2(u, w) - 2.0 * k.anomaly * virial_anomaly_integral(u, w);
}

double virial_rhs(const ComplexField3& u, const KappaTriple& k) {
  return 8.0 * k.product() * (2.0 * kinetic(u, k) - 3.0 * potential(u));
}

namespace {

// sum_j kappa_j \int |d_r u_j|^2 m(r) dx over faces, with m sampled on faces.
double weighted_gradient(const ComplexField3& u, const KappaTriple& k,
                         std::span<const double> m_face) {
  const auto& g = u.radial_grid();
  const auto area = g.face_areas();
  const double h = g.dr();
  const int n = g.num_points();
  const double bout = radial::outer_flux_coefficient(g);
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) {
    double s = 0.0;
    for (int j = 0; j + 1 < n; ++j) s += area[j] * std::norm(u[i][j + 1] - u[i][j]) / h * m_face[j];
    s += area[n - 1] * bout * std::norm(u[i][n - 1]) * m_face[n - 1];
    acc += k[i] * s;
  }
  return acc;
}

double weighted_mass_kappa(const ComplexField3& u, const KappaTriple& k,
                           std::span<const double> m) {
  std::vector<double> dens(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += k[i] * std::norm(u[i][j]);
    dens[j] = s * m[j];
  }
  return integrate(u.grid(), dens);
}

}  // namespace

double virial_second_derivative(const ComplexField3& u, const KappaTriple& k,
                                const VirialWeight& w) {
  if (!u.radial()) throw std::invalid_argument("weighted virial second derivative is radial only");
  const double hess = weighted_gradient(u, k, w.a_rr_face);
  const double bil = weighted_mass_kappa(u, k, w.bilap);
  const double pot = integrate(u.grid(), triple_product_density(u, false, w.lap));
  return k.product() * (4.0 * hess - bil - 2.0 * pot);
}

double virial_tail_bound(const ComplexField3& u, const KappaTriple& k, const VirialWeight& w) {
  if (!u.radial()) throw std::invalid_argument("virial tail bound is radial only");
  std::vector<double> hess_dev(w.a_rr_face.size());
  for (std::size_t j = 0; j < hess_dev.size(); ++j) hess_dev[j] = std::abs(4.0 * w.a_rr_face[j] - 8.0);
  std::vector<double> bil(w.bilap.size());
  for (std::size_t j = 0; j < bil.size(); ++j) bil[j] = std::abs(w.bilap[j]);
  std::vector<double> cubic(u.size());
  for (std::size_t j = 0; j < u.size(); ++j)
    cubic[j] = 2.0 * std::abs(w.lap[j] - 12.0) * std::abs(u[0][j] * u[1][j] * u[2][j]);
  return k.product() *
         (weighted_gradient(u, k, hess_dev) + weighted_mass_kappa(u, k, bil) + integrate(u.grid(), cubic));
}

ObservableRecord observe(const ComplexField3& u, const KappaTriple& k, double t,
                         const VirialWeight* weight) {
  ObservableRecord r;
  r.t = t;
  r.mass = mass(u);
  r.lambda_inv = lambda_invariant(u, k);
  r.kinetic = kinetic(u, k);
  r.potential = potential(u);
  r.energy = r.kinetic - r.potential;
  r.momentum = momentum(u);
  r.sup_norm = sup_norm(u);
  r.l3_norm = l3_norm(u);
  r.l4x_norm = l4_fourth_power(u);
  if (weight != nullptr) {
    r.virial_v1 = virial_v1(u, k, *weight);
    r.virial_v2 = virial_v2(u, *weight);
    r.virial_anomaly = virial_anomaly_integral(u, *weight);
  }
  r.grad_sup = gradient_sup(u);
  return r;
}

}  // namespace quadnls
