#include "quadnls/dichotomy.hpp"

#include <algorithm>
#include <cmath>
#include <future>

namespace quadnls {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::dispersing: return "dispersing";
    case Verdict::blowup: return "blowup";
    case Verdict::undetermined: return "undetermined";
  }
  return "unknown";
}

namespace {

constexpr double kStrictMargin = 1e-9;

double bisect(double lo, double hi, double target, double C, bool increasing) {
  auto f = [C](double y) { return y - C * std::pow(y, 1.5); };
  for (int it = 0; it < 400 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const bool below = f(mid) < target;
    if (below == increasing)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

CoercivityBand make_band(double E0, double K0, const GroundState& gs) {
  (void)K0;
  CoercivityBand b;
  const double C = gs.C_GN;
  b.rho = 1.0 - E0 / gs.E_W;
  // f(y) = y - C y^{3/2} peaks at y* = 4 / (9 C^2) (= K_W for the exact ground state).
  const double ystar = 4.0 / (9.0 * C * C);
  const double fmax = ystar / 3.0;
  if (!(E0 < fmax) || !(E0 < gs.E_W) || !(E0 > 0.0)) return b;
  const double yminus = bisect(0.0, ystar, E0, C, true);
  double hi = 2.0 * ystar;
  while (hi - C * std::pow(hi, 1.5) > E0) hi *= 2.0;
  const double yplus = bisect(ystar, hi, E0, C, false);
  b.rho_prime = 1.0 - yminus / gs.K_W;
  b.rho_double_prime = 2.0 * (1.0 - std::sqrt(1.0 - b.rho_prime));
  b.rho_tilde_prime = yplus / gs.K_W - 1.0;
  b.rho_tilde_double_prime = 1.0 - (1.0 - b.rho) / (1.0 + b.rho_tilde_prime);
  b.valid = true;
  return b;
}

CoercivityBand make_band(const ComplexField3& u0, const GroundState& gs) {
  return make_band(energy(u0, gs.kappa), kinetic(u0, gs.kappa), gs);
}

TrappingResult trapping_monitor(const Trajectory& traj, const GroundState& gs,
                                const CoercivityBand& band) {
  TrappingResult res;
  const double slack = kMonitorSlack * gs.K_W;
  const double kcap = (1.0 - band.rho_prime) * gs.K_W;
  const double upper_coef = 1.0 + gs.C_GN * std::sqrt(std::max(0.0, kcap));
  // The coercivity chain uses 3 C_GN K_W^{1/2} = 2; the discrete ground state
  // misses it by gn_defect, and cW saturates the bound at t = 0.
  const double gn_defect = std::abs(3.0 * gs.C_GN * std::sqrt(gs.K_W) - 2.0);
  const double defect_coef = gn_defect * std::sqrt(std::max(0.0, 1.0 - band.rho_prime));
  for (const auto& r : traj.records) {
    TrapSample s;
    s.t = r.t;
    s.k_ratio = r.kinetic / gs.K_W;
    s.coercivity = r.kinetic > 0.0 ? (2.0 * r.kinetic - 3.0 * r.potential) / r.kinetic : 0.0;
    s.energy = r.energy;
    s.lower = (1.0 + band.rho_double_prime) * r.kinetic / 3.0;
    s.upper = upper_coef * r.kinetic;
    bool ok = band.valid;
    ok = ok && r.kinetic <= kcap + slack;
    const double coe_slack = slack + defect_coef * r.kinetic;
    ok = ok && 2.0 * r.kinetic - 3.0 * r.potential >= band.rho_double_prime * r.kinetic - coe_slack;
    ok = ok && s.lower <= r.energy + coe_slack / 3.0;
    ok = ok && r.energy <= s.upper + slack;
    if (!ok) {
      if (res.violations == 0) res.first_violation_t = r.t;
      ++res.violations;
    }
    res.series.push_back(s);
  }
  res.pass = band.valid && !traj.records.empty() && res.violations == 0;
  return res;
}

std::vector<VirialSample> virial_fd_series(const Trajectory& traj, std::span<const double> v1,
                                           const KappaTriple& k) {
  std::vector<VirialSample> out;
  const auto& rec = traj.records;
  for (std::size_t n = 1; n + 1 < rec.size(); ++n) {
    const double h1 = rec[n].t - rec[n - 1].t;
    const double h2 = rec[n + 1].t - rec[n].t;
    if (std::abs(h1 - h2) > 1e-9 * h1) continue;
    VirialSample s;
    s.t = rec[n].t;
    s.v1 = v1[n];
    s.v1_dd = (v1[n + 1] - 2.0 * v1[n] + v1[n - 1]) / (h1 * h2);
    s.rhs = 8.0 * k.product() * (2.0 * rec[n].kinetic - 3.0 * rec[n].potential);
    if (n >= 2 && n + 2 < rec.size()) {
      const double H1 = rec[n].t - rec[n - 2].t, H2 = rec[n + 2].t - rec[n].t;
      if (std::abs(H1 - 2.0 * h1) <= 1e-9 * h1 && std::abs(H2 - 2.0 * h1) <= 1e-9 * h1) {
        const double coarse = (v1[n + 2] - 2.0 * v1[n] + v1[n - 2]) / (H1 * H2);
        s.has_richardson = true;
        s.fd_error = (s.v1_dd - coarse) / 3.0;
        s.v1_dd_extrapolated = s.v1_dd + s.fd_error;
      }
    }
    out.push_back(s);
  }
  return out;
}

BlowupResult blowup_monitor(const Trajectory& traj, const GroundState& gs, WeightKind kind,
                            int weight_slot, const CoercivityBand& band) {
  BlowupResult res;
  res.weight = kind;
  std::vector<double> v1;
  if (weight_slot < 0) {
    for (const auto& r : traj.records) v1.push_back(r.virial_v1);
  } else {
    v1 = traj.extra_v1.at(weight_slot);
  }
  const KappaTriple& k = gs.kappa;
  const double scale = 8.0 * k.product() * band.rho_tilde_double_prime * gs.K_W;
  if (kind == WeightKind::truncated && weight_slot >= 0 && scale > 0.0) {
    const auto& tail = traj.extra_tail.at(weight_slot);
    const double worst = tail.empty() ? 0.0 : *std::max_element(tail.begin(), tail.end());
    res.tail_allowance = worst / scale;
  }
  res.bound = -scale * (1.0 - res.tail_allowance);
  res.series = virial_fd_series(traj, v1, k);

  const double slack = kMonitorSlack * gs.K_W;
  const double kfloor = (1.0 + band.rho_tilde_prime) * gs.K_W;
  res.kinetic_lower_bound_held = !traj.records.empty();
  for (const auto& r : traj.records)
    if (r.kinetic < kfloor - slack) res.kinetic_lower_bound_held = false;
  for (const auto& s : res.series)
    if (!(s.v1_dd <= res.bound)) ++res.violations;
  res.pass = band.valid && scale > 0.0 && !res.series.empty() && res.violations == 0 &&
             res.kinetic_lower_bound_held;
  return res;
}

double data_radius(const ComplexField3& u, double level) {
  if (!u.radial()) throw std::invalid_argument("data radius is defined on RadialGrid6");
  const auto& g = u.radial_grid();
  std::vector<double> mag(u.size());
  for (std::size_t j = 0; j < u.size(); ++j)
    mag[j] = std::max({std::abs(u[0][j]), std::abs(u[1][j]), std::abs(u[2][j])});
  const double peak = *std::max_element(mag.begin(), mag.end());
  if (peak == 0.0) return 0.0;
  for (int j = g.num_points() - 1; j >= 0; --j)
    if (mag[j] >= level * peak) return g.node(std::min(j + 1, g.num_points() - 1));
  return g.node(0);
}

EvolveMonitors classification_monitors(const ComplexField3& u0, const ClassifyOptions& options) {
  EvolveMonitors mon;
  mon.primary = make_quadratic_weight(u0.grid());
  const double R = options.truncation_factor * data_radius(u0, options.data_radius_level);
  if (R > 0.0) mon.extra.push_back(make_truncated_weight(u0.grid(), R));
  return mon;
}

ThresholdReport classify(const ComplexField3& u0, const GroundState& gs, const StepScheme& scheme,
                         double T, const ClassifyOptions& options) {
  if (!u0.radial()) throw std::invalid_argument("classification runs on RadialGrid6 data");
  if (!same_grid(u0.grid(), gs.W.grid()))
    throw std::invalid_argument("initial datum and ground state live on different grids");
  StepScheme sch = scheme;
  sch.method = StepMethod::radial_imex;
  auto traj = std::make_shared<const Trajectory>(
      evolve(u0, T, sch, gs.kappa, classification_monitors(u0, options)));
  return assess_trajectory(u0, gs, std::move(traj), options);
}

ThresholdReport assess_trajectory(const ComplexField3& u0, const GroundState& gs,
                                  std::shared_ptr<const Trajectory> traj,
                                  const ClassifyOptions& options) {
  if (!u0.radial()) throw std::invalid_argument("classification runs on RadialGrid6 data");
  if (!same_grid(u0.grid(), gs.W.grid()))
    throw std::invalid_argument("initial datum and ground state live on different grids");
  if (!traj || traj->records.empty()) throw std::invalid_argument("empty trajectory");
  const KappaTriple& k = gs.kappa;
  ThresholdReport rep;
  rep.resonant = k.is_resonant;
  rep.k0 = kinetic(u0, k);
  rep.v0 = potential(u0);
  rep.e0 = rep.k0 - rep.v0;
  rep.e_ratio = rep.e0 / gs.E_W;
  rep.k_ratio = rep.k0 / gs.K_W;
  const bool e_below = rep.e0 < gs.E_W * (1.0 - kStrictMargin);
  rep.below_threshold = e_below && rep.k0 < gs.K_W * (1.0 - kStrictMargin);
  rep.above_threshold = e_below && rep.k0 > gs.K_W * (1.0 + kStrictMargin);
  rep.band = make_band(rep.e0, rep.k0, gs);

  const auto& g = u0.radial_grid();
  rep.data_radius = data_radius(u0, options.data_radius_level);
  rep.truncation_radius = options.truncation_factor * rep.data_radius;
  {
    const auto r2 = radius_squared(u0.grid());
    std::vector<double> all(u0.size()), outer(u0.size(), 0.0);
    for (std::size_t j = 0; j < u0.size(); ++j) {
      all[j] = r2[j] * (std::norm(u0[0][j]) + std::norm(u0[1][j]) + std::norm(u0[2][j]));
      if (g.node(static_cast<int>(j)) > 0.5 * g.outer_radius()) outer[j] = all[j];
    }
    const double tot = integrate(u0.grid(), all);
    rep.variance_outer_fraction = tot > 0.0 ? integrate(u0.grid(), outer) / tot : 0.0;
  }

  const bool truncated = !traj->extra_v1.empty();
  rep.halt = traj->halt;
  rep.halt_detail = traj->halt_detail;
  rep.steps = traj->steps;
  rep.t_end = traj->records.back().t;
  rep.scattering_final = traj->scattering.back();

  const double window_start = (1.0 - options.final_window) * rep.t_end;
  std::size_t w0 = 0;
  while (w0 + 1 < traj->records.size() && traj->records[w0].t < window_start) ++w0;
  rep.sup_monotone_final = traj->records.size() - w0 >= 2;
  for (std::size_t n = w0 + 1; n < traj->records.size(); ++n)
    if (traj->records[n].sup_norm > traj->records[n - 1].sup_norm) rep.sup_monotone_final = false;
  rep.scattering_window_growth =
      rep.scattering_final > 0.0
          ? (rep.scattering_final - traj->scattering[w0]) / rep.scattering_final
          : 0.0;

  if (rep.below_threshold) rep.trapping = trapping_monitor(*traj, gs, rep.band);
  if (rep.above_threshold) {
    rep.blowup_quadratic = blowup_monitor(*traj, gs, WeightKind::quadratic, -1, rep.band);
    if (truncated) rep.blowup_truncated = blowup_monitor(*traj, gs, WeightKind::truncated, 0, rep.band);
  }

  if (rep.below_threshold) {
    if (rep.halt != HaltReason::completed)
      rep.verdict_reason = "below threshold but the run halted: " + to_string(rep.halt);
    else if (!rep.sup_monotone_final)
      rep.verdict_reason = "sup norm not monotone over the final window";
    else if (!(rep.scattering_window_growth < options.cauchy_tolerance))
      rep.verdict_reason = "scattering size still growing over the final window";
    else {
      rep.verdict = Verdict::dispersing;
      rep.verdict_reason = "sup-norm decay and saturated scattering size";
    }
  } else if (rep.above_threshold) {
    bool negative = false;
    const double c = -rep.blowup_quadratic->bound;
    if (c > 0.0) {
      negative = true;
      int seen = 0;
      for (const auto& s : rep.blowup_quadratic->series) {
        if (s.t < window_start) continue;
        ++seen;
        if (!(s.v1_dd <= -c)) negative = false;
      }
      if (seen == 0) negative = false;
    }
    if (rep.halt != HaltReason::blowup_halt)
      rep.verdict_reason = "above threshold but no blow-up halt within the horizon";
    else if (!negative)
      rep.verdict_reason = "V1'' not bounded away from zero over the final window";
    else {
      rep.verdict = Verdict::blowup;
      rep.verdict_reason = "blow-up halt with V1'' <= -c over the final window";
    }
  } else {
    rep.verdict_reason = "datum outside both strict threshold regimes";
  }
  if (options.keep_trajectory) rep.trajectory = std::move(traj);
  return rep;
}

double boost_identity_residual(const ComplexField3& u, std::span<const double> xi,
                               const KappaTriple& k) {
  const double K = kinetic(u, k);
  const double Kb = kinetic(galilean_boost(u, xi, 0.0, k), k);
  const double L = lambda_invariant(u, k);
  const auto P = momentum(u);
  double xi2 = 0.0, xp = 0.0;
  for (std::size_t a = 0; a < xi.size(); ++a) {
    xi2 += xi[a] * xi[a];
    xp += xi[a] * P[a];
  }
  return std::abs(Kb - K - xi2 * L - xp) / K;
}

BoostCheck boost_identity_check(const ComplexField3& u, std::span<const double> xi,
                                const KappaTriple& k) {
  if (!k.is_resonant) throw std::invalid_argument("boost identity check requires a resonant triple");
  BoostCheck out;
  out.residual = boost_identity_residual(u, xi, k);
  const double K = kinetic(u, k);
  const double L = lambda_invariant(u, k);
  const auto P = momentum(u);
  out.xi_star.resize(xi.size());
  double p2 = 0.0;
  for (std::size_t a = 0; a < xi.size(); ++a) {
    out.xi_star[a] = -P[a] / (2.0 * L);
    p2 += P[a] * P[a];
  }
  out.kinetic_gain_at_star = kinetic(galilean_boost(u, out.xi_star, 0.0, k), k) - K;
  out.minimizer_residual = std::abs(out.kinetic_gain_at_star + p2 / (4.0 * L)) / K;
  return out;
}

double boost_energy_residual(const ComplexField3& u, std::span<const double> xi,
                             const KappaTriple& k) {
  const double K = kinetic(u, k);
  const double dE = energy(galilean_boost(u, xi, 0.0, k), k) - energy(u, k);
  const double L = lambda_invariant(u, k);
  const auto P = momentum(u);
  double xi2 = 0.0, xp = 0.0;
  for (std::size_t a = 0; a < xi.size(); ++a) {
    xi2 += xi[a] * xi[a];
    xp += xi[a] * P[a];
  }
  return std::abs(dE - xi2 * L - xp) / K;
}

bool verdicts_monotone(const std::vector<ThresholdReport>& reports) {
  double smallest_blowup = INFINITY;
  for (const auto& r : reports)
    if (r.verdict == Verdict::blowup && r.amplitude) smallest_blowup = std::min(smallest_blowup, *r.amplitude);
  for (const auto& r : reports)
    if (r.verdict == Verdict::dispersing && r.amplitude && *r.amplitude > smallest_blowup) return false;
  return true;
}

SweepResult amplitude_sweep(const GroundState& gs, std::vector<double> c_values,
                            const StepScheme& scheme, double T, const ClassifyOptions& options) {
  for (double c : c_values)
    if (!(c > 0.0)) throw std::invalid_argument("sweep amplitudes must be positive");
  std::sort(c_values.begin(), c_values.end());
  std::vector<std::future<ThresholdReport>> jobs;
  for (double c : c_values) {
    jobs.push_back(std::async(std::launch::async, [&gs, &scheme, &options, c, T] {
      const ComplexField3 u0 = gs.W.scaled(c);
      ThresholdReport rep;
      if (std::abs(c - 1.0) < kGuardBand) {
        rep.k0 = kinetic(u0, gs.kappa);
        rep.v0 = potential(u0);
        rep.e0 = rep.k0 - rep.v0;
        rep.e_ratio = rep.e0 / gs.E_W;
        rep.k_ratio = rep.k0 / gs.K_W;
        rep.resonant = gs.kappa.is_resonant;
        rep.verdict_reason = "inside the guard band around c = 1";
      } else {
        rep = classify(u0, gs, scheme, T, options);
      }
      rep.amplitude = c;
      return rep;
    }));
  }
  SweepResult res;
  for (auto& j : jobs) res.reports.push_back(j.get());
  res.monotone = verdicts_monotone(res.reports);
  return res;
}

}  // namespace quadnls
