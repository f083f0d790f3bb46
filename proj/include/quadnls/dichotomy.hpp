#pragma once

// Threshold classification of initial data against (E(W), K(W)), energy
// trapping and virial blow-up monitors, and the Galilean kinetic identity.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "quadnls/groundstate.hpp"
#include "quadnls/observables.hpp"
#include "quadnls/propagator.hpp"

namespace quadnls {

enum class Verdict { dispersing, blowup, undetermined };
std::string to_string(Verdict v);

/// Constants of the coercivity argument for one initial datum. The roots
/// y_- < K_W < y_+ solve y - C_GN y^{3/2} = E(u0).
struct CoercivityBand {
  double rho = 0.0;                    // 1 - E(u0)/E_W
  double rho_prime = 0.0;              // 1 - y_-/K_W
  double rho_double_prime = 0.0;       // 2 [1 - (1 - rho')^{1/2}]
  double rho_tilde_prime = 0.0;        // y_+/K_W - 1
  double rho_tilde_double_prime = 0.0; // 1 - (1 - rho)/(1 + rho~')
  bool valid = false;                  // E(u0) < E_W
};

CoercivityBand make_band(double E0, double K0, const GroundState& gs);
/// Band of u0 with its energy evaluated under gs.kappa.
CoercivityBand make_band(const ComplexField3& u0, const GroundState& gs);

struct TrapSample {
  double t = 0.0;
  double k_ratio = 0.0;     // K / K_W
  double coercivity = 0.0;  // (2K - 3V) / K
  double energy = 0.0;
  double lower = 0.0;       // (1 + rho'') K / 3
  double upper = 0.0;       // (1 + C_GN ((1 - rho') K_W)^{1/2}) K
};

struct TrappingResult {
  bool pass = false;
  int violations = 0;
  double first_violation_t = 0.0;
  std::vector<TrapSample> series;
};

/// Absolute slack for the trapping inequalities, relative to K_W. The
/// amplitude family cW saturates several of them at t = 0.
inline constexpr double kMonitorSlack = 1e-6;

TrappingResult trapping_monitor(const Trajectory& traj, const GroundState& gs,
                                const CoercivityBand& band);

struct VirialSample {
  double t = 0.0;
  double v1 = 0.0;
  double v1_dd = 0.0;  // centred second difference
  double rhs = 0.0;    // 8 k1 k2 k3 (2K - 3V)
  /// Richardson check against the doubled stencil (records n +- 2), where it
  /// fits with equal spacing: extrapolated value and the error estimate of v1_dd.
  bool has_richardson = false;
  double v1_dd_extrapolated = 0.0;
  double fd_error = 0.0;
};

/// Centred second differences of a V1 series sampled at the trajectory records;
/// only interior points with equal spacing on both sides are returned.
std::vector<VirialSample> virial_fd_series(const Trajectory& traj, std::span<const double> v1,
                                           const KappaTriple& k);

struct BlowupResult {
  bool pass = false;
  int violations = 0;
  WeightKind weight = WeightKind::quadratic;
  /// max_t tail bound / (8 k1 k2 k3 rho~'' K_W); zero for the quadratic weight.
  double tail_allowance = 0.0;
  /// -8 k1 k2 k3 rho~'' K_W (1 - tail_allowance).
  double bound = 0.0;
  bool kinetic_lower_bound_held = false;
  std::vector<VirialSample> series;
};

/// `weight_slot` selects the V1 series: -1 for the primary (record) weight,
/// otherwise the index into the trajectory's extra weights.
BlowupResult blowup_monitor(const Trajectory& traj, const GroundState& gs, WeightKind kind,
                            int weight_slot, const CoercivityBand& band);

struct ClassifyOptions {
  /// Fraction of the run treated as the final monitoring window.
  double final_window = 0.25;
  /// Largest admissible relative growth of S over the final window.
  double cauchy_tolerance = 0.01;
  /// Truncated-weight radius as a multiple of the data radius.
  double truncation_factor = 3.0;
  /// Data radius: where |u0| first drops below this fraction of its peak.
  double data_radius_level = 1e-3;
  bool keep_trajectory = false;
};

struct ThresholdReport {
  std::optional<double> amplitude;  // c for u0 = cW
  double e0 = 0.0;
  double k0 = 0.0;
  double v0 = 0.0;
  double e_ratio = 0.0;
  double k_ratio = 0.0;
  bool below_threshold = false;  // E < E_W and K < K_W, strict
  bool above_threshold = false;  // E < E_W and K > K_W, strict
  bool resonant = false;
  Verdict verdict = Verdict::undetermined;
  std::string verdict_reason;
  CoercivityBand band;
  HaltReason halt = HaltReason::completed;
  std::string halt_detail;
  double t_end = 0.0;
  long steps = 0;
  double scattering_final = 0.0;
  double scattering_window_growth = 0.0;
  bool sup_monotone_final = false;
  double data_radius = 0.0;
  double truncation_radius = 0.0;
  /// Share of the quadratic moment of u0 carried by the outer half of the domain.
  double variance_outer_fraction = 0.0;
  std::optional<TrappingResult> trapping;
  std::optional<BlowupResult> blowup_quadratic;
  std::optional<BlowupResult> blowup_truncated;
  std::shared_ptr<const Trajectory> trajectory;
};

/// Radius where max_i |u_i| first drops below `level` times its peak.
double data_radius(const ComplexField3& u, double level);

/// Monitors used by classify: quadratic primary weight, truncated weight at
/// truncation_factor times the data radius.
EvolveMonitors classification_monitors(const ComplexField3& u0, const ClassifyOptions& options);

/// Builds the report for an already evolved trajectory of u0.
ThresholdReport assess_trajectory(const ComplexField3& u0, const GroundState& gs,
                                  std::shared_ptr<const Trajectory> traj,
                                  const ClassifyOptions& options = {});

ThresholdReport classify(const ComplexField3& u0, const GroundState& gs, const StepScheme& scheme,
                         double T, const ClassifyOptions& options = {});

/// |K(u^xi) - K(u) - |xi|^2 Lambda(u) - xi.P(u)| / K(u) with no resonance requirement.
double boost_identity_residual(const ComplexField3& u, std::span<const double> xi,
                               const KappaTriple& k);

struct BoostCheck {
  double residual = 0.0;
  /// |K(u^xi*) - K(u) + |P|^2/(4 Lambda)| / K(u) for xi* = -P/(2 Lambda).
  double minimizer_residual = 0.0;
  std::vector<double> xi_star;
  double kinetic_gain_at_star = 0.0;
};

/// Rejects non-resonant triples.
BoostCheck boost_identity_check(const ComplexField3& u, std::span<const double> xi,
                                const KappaTriple& k);

/// |E(u^xi) - E(u) - |xi|^2 Lambda(u) - xi.P(u)| / K(u): zero at resonance, where V
/// is boost invariant, and generically not otherwise.
double boost_energy_residual(const ComplexField3& u, std::span<const double> xi,
                             const KappaTriple& k);

struct SweepResult {
  std::vector<ThresholdReport> reports;  // ascending c
  bool monotone = false;
};

inline constexpr double kGuardBand = 0.05;

SweepResult amplitude_sweep(const GroundState& gs, std::vector<double> c_values,
                            const StepScheme& scheme, double T,
                            const ClassifyOptions& options = {});

/// No dispersing verdict at a larger c than any blowup verdict.
bool verdicts_monotone(const std::vector<ThresholdReport>& reports);

}  // namespace quadnls
