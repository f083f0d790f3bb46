#pragma once

// Discrete functionals of a ComplexField3: mass, the weighted mass Lambda,
// kinetic/potential/total energy, momentum, norms, the scattering-size
// integrand and the virial quantities V1, V2.

#include <array>
#include <span>
#include <vector>

#include "quadnls/fields.hpp"

namespace quadnls {

struct ObservableRecord {
  double t = 0.0;
  double mass = 0.0;
  double lambda_inv = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  double energy = 0.0;
  std::array<double, 3> momentum{0.0, 0.0, 0.0};
  double sup_norm = 0.0;
  double l3_norm = 0.0;
  /// sum_i ||u_i||_{L^4}^4, the integrand of the scattering size.
  double l4x_norm = 0.0;
  double virial_v1 = 0.0;
  double virial_v2 = 0.0;
  /// Im \int conj(u1) conj(u2) u3 a dx (multiplies the non-resonant part of dV1/dt).
  double virial_anomaly = 0.0;
  /// max |grad u| (radial faces) or max |grad u| over nodes (Cartesian).
  double grad_sup = 0.0;
};

enum class WeightKind { quadratic, truncated };

/// Virial weight a(x) sampled on a grid. For radial weights a = a(r), and
/// grad a = grad_coef * x.
struct VirialWeight {
  WeightKind kind = WeightKind::quadratic;
  double R = 0.0;
  std::vector<double> a;
  std::vector<double> grad_coef;  // a'(r) / r
  std::vector<double> a_rr;       // a''(r), the radial Hessian eigenvalue
  std::vector<double> lap;        // Delta a
  std::vector<double> bilap;      // Delta Delta a (d = 6 for radial grids)
  /// a''(r) on the face radii r = (j + 1) dr of a radial grid.
  std::vector<double> a_rr_face;
};

/// Concave cutoff profile: chi(s) = s on [0,1], chi = 2 on [3, inf).
namespace cutoff {
double chi(double s);
double chi1(double s);
double chi2(double s);
double chi3(double s);
double chi4(double s);
}  // namespace cutoff

VirialWeight make_quadratic_weight(const Grid& grid);
/// a(x) = R^2 chi(|x|^2 / R^2).
VirialWeight make_truncated_weight(const Grid& grid, double R);

/// Grid quadrature of a real nodal density.
double integrate(const Grid& grid, std::span<const double> density);

double mass(const ComplexField3& u);
double lambda_invariant(const ComplexField3& u, const KappaTriple& k);
double kinetic(const ComplexField3& u, const KappaTriple& k);
double potential(const ComplexField3& u);
double energy(const ComplexField3& u, const KappaTriple& k);
/// Zero vector on radial grids; unused trailing components are zero.
std::array<double, 3> momentum(const ComplexField3& u);

double sup_norm(const ComplexField3& u);
/// || (|u1|^2 + |u2|^2 + |u3|^2)^{1/2} ||_{L^3}.
double l3_norm(const ComplexField3& u);
double l4_fourth_power(const ComplexField3& u);
double scattering_increment(const ComplexField3& u, double dt);
double gradient_sup(const ComplexField3& u);

double virial_v1(const ComplexField3& u, const KappaTriple& k, const VirialWeight& w);
double virial_v2(const ComplexField3& u, const VirialWeight& w);
double virial_anomaly_integral(const ComplexField3& u, const VirialWeight& w);
/// dV1/dt = k1 k2 k3 V2 - 2 anomaly Im \int conj(u1) conj(u2) u3 a.
double virial_v1_rate(const ComplexField3& u, const KappaTriple& k, const VirialWeight& w);
/// 8 k1 k2 k3 (2K - 3V).
double virial_rhs(const ComplexField3& u, const KappaTriple& k);

/// d^2 V1 / dt^2 for a radial field under a resonant triple and a general
/// radial weight, evaluated from the instantaneous state.
double virial_second_derivative(const ComplexField3& u, const KappaTriple& k,
                                const VirialWeight& w);
/// Pointwise majorant of the difference between the weighted second
/// derivative and virial_rhs; it is supported where |x| >= R.
double virial_tail_bound(const ComplexField3& u, const KappaTriple& k, const VirialWeight& w);

ObservableRecord observe(const ComplexField3& u, const KappaTriple& k, double t,
                         const VirialWeight* weight);

}  // namespace quadnls
