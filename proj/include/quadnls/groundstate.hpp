#pragma once

// Ground state W of -k_i Lap phi_i = phi_j phi_k on R^6 (radial), its
// certified functionals, and its recovery by minimizing J = K^3 / V^2.

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "quadnls/fields.hpp"

namespace quadnls {

/// Raised when a field is outside the domain of J (V = 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when the radial domain truncates too much of the r^-4 tail.
class SizingError : public std::invalid_argument {
 public:
  SizingError(const std::string& what, double suggested_radius)
      : std::invalid_argument(what), suggested_radius(suggested_radius) {}
  double suggested_radius;
};

struct GroundState {
  explicit GroundState(const RadialGrid6& g) : grid(g), W(Grid(g)) {}

  RadialGrid6 grid;
  KappaTriple kappa;
  /// Scalar profile with -sqrt(k1 k2 k3) Lap phi0 = phi0^2; W_i = phi0 / sqrt(k_i).
  std::vector<double> phi0;
  ComplexField3 W;
  double K_W = 0.0;
  double V_W = 0.0;
  double E_W = 0.0;
  double C_GN = 0.0;
  double residual = 0.0;
  /// Minimizer bookkeeping (closed form: converged, zero iterations).
  bool converged = true;
  int iterations = 0;
  double J = 0.0;
  std::array<int, 3> sign_pattern{1, 1, 1};
};

struct MinimizerConfig {
  /// Initial relative step; 1 is the full renormalized fixed-point update.
  double initial_step = 1.0;
  /// Multiplier applied to the accepted step for the next iterate (capped at initial_step).
  double step_growth = 2.0;
  double min_step = 1e-8;
  int max_iterations = 5000;
  /// Stop once the relative J decrease of an iterate falls below this. The
  /// discrete J is not exactly dilation invariant, so iterates creep along the
  /// dilation orbit at a relative rate near 5e-8 per step once converged.
  double tolerance = 1e-7;
  /// Creep stop: below plateau_ceiling, a run of plateau_run decrements that
  /// each stay within plateau_band of the previous one ends the iteration.
  /// The creep rate grows as the grid coarsens (about 7e-7 at 2048 nodes on R = 200).
  double plateau_ceiling = 1e-5;
  double plateau_band = 0.1;
  int plateau_run = 3;
  /// Relative elliptic residual required to flag the result as converged.
  double residual_target = 1e-3;
  /// History entries of J per accepted iterate are kept when true.
  bool keep_history = false;
};

struct MinimizerResult {
  GroundState state;
  std::vector<double> j_history;
};

/// Fraction of the kinetic energy of (1 + r^2/24)^-2 carried by |x| > R.
double ground_state_tail_fraction(double R);
/// Smallest radius whose tail fraction is at most `fraction`.
double suggested_outer_radius(double fraction = 1e-4);

/// (1 + r^2/24)^-2, the positive radial solution of -Lap psi = psi^2 on R^6.
double scalar_profile(double r);

GroundState closed_form_phi0(const RadialGrid6& grid, const KappaTriple& k);

/// max_i || k_i Lap phi_i + phi_j phi_k || / || phi_j phi_k ||; 0 for the zero field.
double elliptic_residual(const ComplexField3& W, const KappaTriple& k);

double weinstein_J(const ComplexField3& u, const KappaTriple& k);

MinimizerResult minimize_J(const ComplexField3& seed, const MinimizerConfig& cfg,
                           const KappaTriple& k);

struct Thresholds {
  double E_W = 0.0;
  double K_W = 0.0;
  double C_GN = 0.0;
};

Thresholds thresholds(const GroundState& gs);

struct Certificate {
  double k_over_v = 0.0;
  double e_over_k = 0.0;
  double cgn_sqrt_k = 0.0;
  double pohozaev = 0.0;  // |2K - 3V| / K
  double residual = 0.0;
  bool passed = false;
};

Certificate certify(const GroundState& gs, double residual_tolerance = 1e-4);

/// Peak value at r = 0 (even extrapolation from the first two nodes).
double profile_peak(const RadialGrid6& g, std::span<const double> f);
/// Radius where f first falls to half its peak.
double half_height_radius(const RadialGrid6& g, std::span<const double> f);

/// Relative L^2 distance between component i of `candidate` and the closed
/// form W after matching peak value and half-height radius; maximum over i.
double aligned_profile_error(const ComplexField3& candidate, const KappaTriple& k);

}  // namespace quadnls
