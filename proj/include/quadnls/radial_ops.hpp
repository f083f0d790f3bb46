#pragma once

// Finite-volume operators on RadialGrid6.
//
// The Laplacian is the conservative stencil
//   (Lap u)_j = [A_{j+1/2}(u_{j+1} - u_j) - A_{j-1/2}(u_j - u_{j-1})] / (vol_j dr)
// with zero flux through r = 0 and the closure d_r u = -(4/R) u at r = R, which
// is the exact exterior Dirichlet-to-Neumann map for the r^-4 harmonic tail in
// six dimensions. The operator is symmetric in the volume-weighted inner
// product, so Crank-Nicolson is unitary and <u, -Lap u> is the discrete
// Dirichlet energy.

#include <span>
#include <vector>

#include "quadnls/fields.hpp"

namespace quadnls::radial {

/// out = Lap u.
void laplacian(const RadialGrid6& g, std::span<const cplx> u, std::span<cplx> out);
std::vector<double> laplacian(const RadialGrid6& g, std::span<const double> u);

/// Discrete \int |grad u|^2 dx = <u, -Lap u>.
double dirichlet_energy(const RadialGrid6& g, std::span<const cplx> u);

/// Radial derivative on faces: (u_{j+1} - u_j) / dr for j = 0..N-2, and the
/// closure value -b' u_{N-1} on the outer face.
CVec face_derivatives(const RadialGrid6& g, std::span<const cplx> u);

/// max_j |d_r u| over faces.
double max_face_gradient(const RadialGrid6& g, std::span<const cplx> u);

/// Effective outer-boundary coefficient b' of the closure flux -A_R b' u_{N-1}.
double outer_flux_coefficient(const RadialGrid6& g);

/// Precomputed Thomas factorization of (vol - i theta S) where S is the
/// symmetric flux matrix (vol * Lap). Solve is O(N) per right-hand side.
class ShiftedSolver {
 public:
  /// Factor diag(vol) * shift + coeff * S for complex coefficient.
  ShiftedSolver(const RadialGrid6& g, cplx shift, cplx coeff);
  /// Solves in place.
  void solve(std::span<cplx> rhs) const;

 private:
  std::vector<cplx> lower_;  // sub-diagonal (symmetric: equals super)
  std::vector<cplx> cprime_;
  std::vector<cplx> denom_;
};

/// One Crank-Nicolson step context for i d_t u = -kappa Lap u.
class CrankNicolson {
 public:
  CrankNicolson(const RadialGrid6& g, double kappa, double dt);
  /// rhs = (vol + i dt/2 kappa S) u, i.e. the explicit half applied and scaled by vol.
  void explicit_half(std::span<const cplx> u, std::span<cplx> rhs) const;
  /// Solve (vol - i dt/2 kappa S) x = rhs in place.
  void implicit_solve(std::span<cplx> rhs) const { solver_.solve(rhs); }
  /// u <- CN(dt) u.
  void step(std::span<cplx> u) const;
  double dt() const { return dt_; }

 private:
  RadialGrid6 grid_;
  double kappa_;
  double dt_;
  ShiftedSolver solver_;
};

/// Solve -Lap x = f for real data (Robin closure makes -Lap positive definite).
std::vector<double> solve_poisson(const RadialGrid6& g, std::span<const double> f);

/// Linear interpolation of a nodal profile at radius r (even extension at 0,
/// zero beyond R).
double sample_linear(const RadialGrid6& g, std::span<const double> u, double r);

}  // namespace quadnls::radial
