#include "quadnls/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "quadnls/spectral.hpp"

namespace quadnls {

std::string to_string(StepMethod m) {
  return m == StepMethod::strang_spectral ? "strang_spectral" : "radial_imex";
}

std::string to_string(HaltReason h) {
  switch (h) {
    case HaltReason::completed: return "completed";
    case HaltReason::blowup_halt: return "blowup_halt";
    case HaltReason::nonfinite: return "nonfinite";
  }
  return "unknown";
}

StepMethod step_method_from_string(const std::string& s) {
  if (s == "strang_spectral") return StepMethod::strang_spectral;
  if (s == "radial_imex") return StepMethod::radial_imex;
  throw std::invalid_argument("unknown step method: " + s);
}

double default_radial_dt(const RadialGrid6& g, const KappaTriple& k) {
  return 0.1 * g.dr() * g.dr() / k.max();
}

ComplexField3 linear_flow(const ComplexField3& u, double t, const KappaTriple& k,
                          int radial_steps) {
  if (t == 0.0) return u;
  ComplexField3 out = u;
  if (u.radial()) {
    if (radial_steps < 1) throw std::invalid_argument("radial linear flow needs at least one step");
    const double dt = t / radial_steps;
    for (int i = 0; i < 3; ++i) {
      radial::CrankNicolson cn(u.radial_grid(), k[i], dt);
      for (int s = 0; s < radial_steps; ++s) cn.step(out[i]);
    }
    return out;
  }
  const auto& g = u.cartesian_grid();
  auto& fft = spectral_for(g);
  const auto k2 = fft.k_squared();
  CVec hat(u.size());
  for (int i = 0; i < 3; ++i) {
    fft.forward(u[i], hat);
    for (std::size_t j = 0; j < hat.size(); ++j) hat[j] *= std::polar(1.0, -k[i] * k2[j] * t);
    fft.backward(hat, out[i]);
  }
  return out;
}

namespace {

// d_t u = -i f(u) = (i conj(u2) u3, i conj(u1) u3, i u1 u2) at one node.
struct NodeState {
  cplx a, b, c;
};

inline NodeState node_rate(const NodeState& s) {
  const cplx I(0.0, 1.0);
  return {I * std::conj(s.b) * s.c, I * std::conj(s.a) * s.c, I * s.a * s.b};
}

inline NodeState axpy(const NodeState& s, double h, const NodeState& r) {
  return {s.a + h * r.a, s.b + h * r.b, s.c + h * r.c};
}

inline NodeState integrate_node(const NodeState& s, double dt, int order) {
  if (order == 2) {
    const NodeState k1 = node_rate(s);
    const NodeState k2 = node_rate(axpy(s, 0.5 * dt, k1));
    return axpy(s, dt, k2);
  }
  const NodeState k1 = node_rate(s);
  const NodeState k2 = node_rate(axpy(s, 0.5 * dt, k1));
  const NodeState k3 = node_rate(axpy(s, 0.5 * dt, k2));
  const NodeState k4 = node_rate(axpy(s, dt, k3));
  const double w = dt / 6.0;
  return {s.a + w * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a),
          s.b + w * (k1.b + 2.0 * k2.b + 2.0 * k3.b + k4.b),
          s.c + w * (k1.c + 2.0 * k2.c + 2.0 * k3.c + k4.c)};
}

}  // namespace

ComplexField3 nonlinear_substep(const ComplexField3& u, double dt, int order) {
  if (order != 2 && order != 4) throw std::invalid_argument("nonlinear substep order must be 2 or 4");
  ComplexField3 out = u;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const NodeState s = integrate_node({u[0][j], u[1][j], u[2][j]}, dt, order);
    out[0][j] = s.a;
    out[1][j] = s.b;
    out[2][j] = s.c;
  }
  return out;
}

ComplexField3 strang_step(const ComplexField3& u, double dt, const KappaTriple& k, int order,
                          bool nonlinear) {
  if (u.radial()) throw std::invalid_argument("strang_spectral requires a Cartesian grid");
  ComplexField3 v = linear_flow(u, 0.5 * dt, k);
  if (nonlinear) v = nonlinear_substep(v, dt, order);
  return linear_flow(v, 0.5 * dt, k);
}

RadialImex::RadialImex(const RadialGrid6& g, const KappaTriple& k, double dt)
    : grid_(g),
      dt_(dt),
      cn_{radial::CrankNicolson(g, k[0], dt), radial::CrankNicolson(g, k[1], dt),
          radial::CrankNicolson(g, k[2], dt)} {}

void RadialImex::step(ComplexField3& u, bool nonlinear) const {
  const std::size_t n = u.size();
  const auto vol = grid_.volumes();
  std::array<CVec, 3> base;
  for (int i = 0; i < 3; ++i) {
    base[i].resize(n);
    cn_[i].explicit_half(u[i], base[i]);
  }
  if (!nonlinear) {
    for (int i = 0; i < 3; ++i) {
      cn_[i].implicit_solve(base[i]);
      u[i] = std::move(base[i]);
    }
    return;
  }
  const cplx mi_dt(0.0, -dt_);
  auto solve_with_forcing = [&](const ComplexField3& at, std::array<CVec, 3>& out) {
    const ComplexField3 f = nonlinearity(at);
    for (int i = 0; i < 3; ++i) {
      out[i] = base[i];
      for (std::size_t j = 0; j < n; ++j) out[i][j] += mi_dt * vol[j] * f[i][j];
      cn_[i].implicit_solve(out[i]);
    }
  };
  // Predictor at the old state, corrector at the midpoint of old and predicted.
  std::array<CVec, 3> pred;
  solve_with_forcing(u, pred);
  ComplexField3 mid = u;
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < n; ++j) mid[i][j] = 0.5 * (u[i][j] + pred[i][j]);
  std::array<CVec, 3> next;
  solve_with_forcing(mid, next);
  for (int i = 0; i < 3; ++i) u[i] = std::move(next[i]);
}

ComplexField3 imex_step(const ComplexField3& u, double dt, const KappaTriple& k, bool nonlinear) {
  if (!u.radial()) throw std::invalid_argument("radial_imex requires a RadialGrid6");
  ComplexField3 out = u;
  RadialImex(u.radial_grid(), k, dt).step(out, nonlinear);
  return out;
}

Trajectory evolve(const ComplexField3& u0, double T, const StepScheme& scheme,
                  const KappaTriple& k, const EvolveMonitors& monitors) {
  if (!(T > 0.0)) throw std::invalid_argument("evolution horizon must be positive");
  if (!(scheme.dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!u0.is_finite()) throw std::invalid_argument("initial datum is not finite");
  const bool radial = u0.radial();
  if (radial != (scheme.method == StepMethod::radial_imex))
    throw std::invalid_argument("step method " + to_string(scheme.method) +
                                " does not match grid " + describe(u0.grid()));
  if (scheme.record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");

  const long nsteps = std::max<long>(1, static_cast<long>(std::ceil(T / scheme.dt - 1e-9)));
  const double dt = T / static_cast<double>(nsteps);
  const double dt_floor = scheme.dt_floor > 0.0 ? scheme.dt_floor : 2.0 * dt;

  Trajectory traj;
  traj.dt = dt;
  traj.extra_v1.resize(monitors.extra.size());
  traj.extra_tail.resize(monitors.extra.size());
  const VirialWeight* primary = monitors.primary ? &*monitors.primary : nullptr;

  std::optional<RadialImex> imex;
  if (radial) imex.emplace(u0.radial_grid(), k, dt);

  ComplexField3 u = u0;
  double s_accum = 0.0;
  auto record = [&](double t) {
    const ObservableRecord rec = observe(u, k, t, primary);
    traj.records.push_back(rec);
    traj.scattering.push_back(s_accum);
    for (std::size_t w = 0; w < monitors.extra.size(); ++w) {
      traj.extra_v1[w].push_back(virial_v1(u, k, monitors.extra[w]));
      traj.extra_tail[w].push_back(
          radial && monitors.extra[w].kind == WeightKind::truncated
              ? virial_tail_bound(u, k, monitors.extra[w])
              : 0.0);
    }
    return rec;
  };

  const double grad0 = record(0.0).grad_sup;
  if (scheme.snapshot_stride > 0) traj.snapshots.emplace_back(0.0, u);

  for (long n = 1; n <= nsteps; ++n) {
    s_accum += dt * l4_fourth_power(u);
    ComplexField3 prev = u;
    if (radial)
      imex->step(u, scheme.nonlinear);
    else
      u = strang_step(u, dt, k, scheme.substep_order, scheme.nonlinear);
    const double t = n * dt;
    traj.steps = n;

    if (!u.is_finite()) {
      traj.halt = HaltReason::nonfinite;
      traj.halt_detail = "non-finite state at t = " + std::to_string(t);
      u = std::move(prev);
      break;
    }
    const double gs = gradient_sup(u);
    const double sup = sup_norm(u);
    bool halt = false;
    if (grad0 > 0.0 && gs > scheme.growth_factor * grad0) {
      traj.halt_detail = "gradient growth exceeded factor " + std::to_string(scheme.growth_factor);
      halt = true;
    } else if (sup > 0.0 && 1.0 / sup < dt_floor) {
      traj.halt_detail = "nonlinear time scale fell below dt floor";
      halt = true;
    }
    if (halt || n % scheme.record_stride == 0 || n == nsteps) record(t);
    if (scheme.snapshot_stride > 0 && n % scheme.snapshot_stride == 0) traj.snapshots.emplace_back(t, u);
    if (halt) {
      traj.halt = HaltReason::blowup_halt;
      break;
    }
  }
  traj.final_state = std::move(u);
  return traj;
}

DecayProbe dispersive_decay_probe(const ComplexField3& g, const std::vector<double>& times,
                                  const KappaTriple& k, double dt) {
  if (!g.radial()) throw std::invalid_argument("decay probe runs on RadialGrid6");
  if (!(dt > 0.0)) throw std::invalid_argument("decay probe needs dt > 0");
  const auto& grid = g.radial_grid();
  std::array<std::optional<radial::CrankNicolson>, 3> cn;
  ComplexField3 u = g;
  DecayProbe out;
  const double total = mass(g);
  const int edge = static_cast<int>(0.9 * grid.num_points());
  double t = 0.0;
  for (double target : times) {
    if (target < t) throw std::invalid_argument("decay probe times must be nondecreasing");
    const double span = target - t;
    if (span > 0.0) {
      const long steps = std::max<long>(1, static_cast<long>(std::ceil(span / dt - 1e-9)));
      const double h = span / steps;
      for (int i = 0; i < 3; ++i) {
        if (!cn[i] || cn[i]->dt() != h) cn[i].emplace(grid, k[i], h);
        for (long s = 0; s < steps; ++s) cn[i]->step(u[i]);
      }
    }
    t = target;
    out.samples.emplace_back(t, sup_norm(u));
    std::vector<double> dens(u.size(), 0.0);
    for (int j = edge; j < grid.num_points(); ++j)
      dens[j] = 0.5 * std::norm(u[0][j]) + 0.5 * std::norm(u[1][j]) + std::norm(u[2][j]);
    if (!out.domain_escape && integrate(u.grid(), dens) > 1e-3 * total) {
      out.domain_escape = true;
      out.escape_time = t;
    }
  }
  return out;
}

double loglog_slope(const std::vector<std::pair<double, double>>& samples) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& [t, v] : samples) {
    if (!(t > 0.0) || !(v > 0.0)) continue;
    const double x = std::log(t), y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("slope fit needs two positive samples");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace quadnls
