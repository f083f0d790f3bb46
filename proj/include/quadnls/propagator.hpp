#pragma once

// Time stepping for i d_t u + diag(k) Lap u = f(u).

#include <optional>
#include <string>
#include <vector>

#include "quadnls/fields.hpp"
#include "quadnls/observables.hpp"
#include "quadnls/radial_ops.hpp"

namespace quadnls {

enum class StepMethod { strang_spectral, radial_imex };
enum class HaltReason { completed, blowup_halt, nonfinite };

std::string to_string(StepMethod m);
std::string to_string(HaltReason h);
StepMethod step_method_from_string(const std::string& s);

struct StepScheme {
  double dt = 1e-3;
  StepMethod method = StepMethod::strang_spectral;
  /// Order of the pointwise nonlinear integrator inside the Strang step (2 or 4).
  int substep_order = 4;
  /// Halt once max |grad u| exceeds this multiple of its initial value.
  double growth_factor = 1e3;
  /// Halt once the nonlinear time scale 1 / max|u| drops below this; 0 means 2 dt.
  double dt_floor = 0.0;
  /// Switch off f (linear evolution through the same code path).
  bool nonlinear = true;
  /// Observables are recorded every `record_stride` accepted steps.
  int record_stride = 1;
  /// Copies of the state are stored every `snapshot_stride` steps (0 = never).
  int snapshot_stride = 0;
};

/// Default radial step 0.1 dr^2 / max k.
double default_radial_dt(const RadialGrid6& g, const KappaTriple& k);

struct EvolveMonitors {
  /// Weight whose V1, V2 fill the ObservableRecord fields.
  std::optional<VirialWeight> primary;
  /// Additional weights; V1 and the tail bound are stored per record.
  std::vector<VirialWeight> extra;
};

struct Trajectory {
  std::vector<ObservableRecord> records;
  /// Accumulated scattering size at each record (left-endpoint rule).
  std::vector<double> scattering;
  /// extra_v1[w][n] and extra_tail[w][n] for EvolveMonitors::extra[w].
  std::vector<std::vector<double>> extra_v1;
  std::vector<std::vector<double>> extra_tail;
  std::vector<std::pair<double, ComplexField3>> snapshots;
  std::optional<ComplexField3> final_state;
  HaltReason halt = HaltReason::completed;
  std::string halt_detail;
  long steps = 0;
  double dt = 0.0;
};

/// Exact Fourier flow on Cartesian grids; `radial_steps` Crank-Nicolson steps
/// on the radial grid.
ComplexField3 linear_flow(const ComplexField3& u, double t, const KappaTriple& k,
                          int radial_steps = 1);

/// Pointwise integration of d_t u = -i f(u) over dt (order 2 or 4).
ComplexField3 nonlinear_substep(const ComplexField3& u, double dt, int order = 4);

/// Half linear, full nonlinear, half linear (Cartesian only).
ComplexField3 strang_step(const ComplexField3& u, double dt, const KappaTriple& k,
                          int order = 4, bool nonlinear = true);

/// Reusable Crank-Nicolson/explicit-midpoint stepper on RadialGrid6.
class RadialImex {
 public:
  RadialImex(const RadialGrid6& g, const KappaTriple& k, double dt);
  void step(ComplexField3& u, bool nonlinear = true) const;
  double dt() const { return dt_; }

 private:
  RadialGrid6 grid_;
  double dt_;
  std::array<radial::CrankNicolson, 3> cn_;
};

ComplexField3 imex_step(const ComplexField3& u, double dt, const KappaTriple& k,
                        bool nonlinear = true);

Trajectory evolve(const ComplexField3& u0, double T, const StepScheme& scheme,
                  const KappaTriple& k, const EvolveMonitors& monitors = {});

struct DecayProbe {
  std::vector<std::pair<double, double>> samples;  // (t, sup_norm)
  bool domain_escape = false;
  /// First requested time at which the mass fraction near the outer boundary
  /// exceeded the escape threshold.
  double escape_time = 0.0;
};

/// Sup-norms of the linear evolution of g (radial) at increasing `times`.
DecayProbe dispersive_decay_probe(const ComplexField3& g, const std::vector<double>& times,
                                  const KappaTriple& k, double dt);

/// Least-squares slope of log(sup_norm) against log(t).
double loglog_slope(const std::vector<std::pair<double, double>>& samples);

}  // namespace quadnls
