#include "quadnls/groundstate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "quadnls/observables.hpp"
#include "quadnls/radial_ops.hpp"

namespace quadnls {

double scalar_profile(double r) {
  const double q = 1.0 + r * r / 24.0;
  return 1.0 / (q * q);
}

double ground_state_tail_fraction(double R) {
  // With x = 1 / (1 + R^2/24) the tail is the regularized incomplete Beta I_x(2, 4).
  const double x = 1.0 / (1.0 + R * R / 24.0);
  const double y = 1.0 - x;
  return 1.0 - std::pow(y, 5) - 5.0 * x * std::pow(y, 4);
}

double suggested_outer_radius(double fraction) {
  double lo = 1.0, hi = 1e6;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ground_state_tail_fraction(mid) > fraction)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

namespace {

constexpr double kTailLimit = 1e-4;

std::array<double, 3> inv_sqrt_kappa(const KappaTriple& k) {
  return {1.0 / std::sqrt(k.kappa1), 1.0 / std::sqrt(k.kappa2), 1.0 / std::sqrt(k.kappa3)};
}

void fill_functionals(GroundState& gs) {
  gs.K_W = kinetic(gs.W, gs.kappa);
  gs.V_W = potential(gs.W);
  gs.E_W = gs.K_W - gs.V_W;
  gs.C_GN = gs.V_W / std::pow(gs.K_W, 1.5);
  gs.J = gs.K_W * gs.K_W * gs.K_W / (gs.V_W * gs.V_W);
  gs.residual = elliptic_residual(gs.W, gs.kappa);
}

}  // namespace

GroundState closed_form_phi0(const RadialGrid6& grid, const KappaTriple& k) {
  const double tail = ground_state_tail_fraction(grid.outer_radius());
  if (tail > kTailLimit) {
    const double hint = std::ceil(suggested_outer_radius(kTailLimit) / 10.0) * 10.0;
    std::ostringstream os;
    os << "outer_radius " << grid.outer_radius() << " leaves a fraction " << tail
       << " of K(W) outside the domain (limit " << kTailLimit << "); use outer_radius >= " << hint
       << " (200 recommended)";
    throw SizingError(os.str(), hint);
  }
  GroundState gs(grid);
  gs.kappa = k;
  const double amp = std::sqrt(k.product());
  gs.phi0.resize(grid.size());
  for (int j = 0; j < grid.num_points(); ++j) gs.phi0[j] = amp * scalar_profile(grid.node(j));
  const auto s = inv_sqrt_kappa(k);
  for (int i = 0; i < 3; ++i) {
    gs.W[i].resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) gs.W[i][j] = gs.phi0[j] * s[i];
  }
  fill_functionals(gs);
  return gs;
}

double elliptic_residual(const ComplexField3& W, const KappaTriple& k) {
  if (!W.radial()) throw std::invalid_argument("elliptic residual is evaluated on RadialGrid6");
  const auto& g = W.radial_grid();
  const std::size_t n = W.size();
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    const int a = (i + 1) % 3, b = (i + 2) % 3;
    CVec lap(n);
    radial::laplacian(g, W[i], lap);
    std::vector<double> defect(n), source(n);
    for (std::size_t j = 0; j < n; ++j) {
      const cplx prod = W[a][j] * W[b][j];
      defect[j] = std::norm(k[i] * lap[j] + prod);
      source[j] = std::norm(prod);
    }
    const double src = integrate(W.grid(), source);
    if (src == 0.0) continue;
    worst = std::max(worst, std::sqrt(integrate(W.grid(), defect) / src));
  }
  return worst;
}

double weinstein_J(const ComplexField3& u, const KappaTriple& k) {
  const double V = potential(u);
  if (V == 0.0) throw DomainError("J is undefined for fields with V = 0");
  const double K = kinetic(u, k);
  return K * K * K / (V * V);
}

namespace {

using Real3 = std::array<std::vector<double>, 3>;

ComplexField3 to_field(const RadialGrid6& g, const Real3& u) {
  ComplexField3 f{Grid(g)};
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < g.size(); ++j) f[i][j] = u[i][j];
  return f;
}

void scale(Real3& u, double c) {
  for (auto& v : u)
    for (double& x : v) x *= c;
}

}  // namespace

MinimizerResult minimize_J(const ComplexField3& seed, const MinimizerConfig& cfg,
                           const KappaTriple& k) {
  if (!seed.radial()) throw std::invalid_argument("minimizer runs on RadialGrid6");
  if (!(cfg.initial_step > 0.0) || !(cfg.tolerance > 0.0))
    throw std::invalid_argument("minimizer step and tolerance must be positive");
  const auto& g = seed.radial_grid();
  const std::size_t n = g.size();
  Real3 u;
  for (int i = 0; i < 3; ++i) {
    u[i].resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(seed[i][j].imag()) > 1e-12 * (1.0 + std::abs(seed[i][j].real())))
        throw std::invalid_argument("minimizer seed must be real");
      u[i][j] = seed[i][j].real();
    }
  }
  double V0 = potential(to_field(g, u));
  if (V0 == 0.0) throw DomainError("minimizer seed has V = 0");

  auto normalize = [&](Real3& v) {
    const double K = kinetic(to_field(g, v), k);
    scale(v, 1.0 / std::sqrt(K));
  };
  normalize(u);
  ComplexField3 f = to_field(g, u);
  double V = potential(f);
  double J = 1.0 / (V * V);

  MinimizerResult res{GroundState(g), {}};
  if (cfg.keep_history) res.j_history.push_back(J);
  double step = cfg.initial_step;
  double prev_rel = -1.0;
  int flat = 0;
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    // Preconditioned gradient at K = 1: G_i = 3 V^-2 u_i - 2 V^-3 (-k_i Lap)^-1 (u_j u_k).
    // The trial iterate is u - tau G with tau = step V^2 / 3.
    Real3 target;
    for (int i = 0; i < 3; ++i) {
      const int a = (i + 1) % 3, b = (i + 2) % 3;
      std::vector<double> src(n);
      for (std::size_t j = 0; j < n; ++j) src[j] = u[a][j] * u[b][j] / k[i];
      target[i] = radial::solve_poisson(g, src);
    }
    const double gain = 2.0 / (3.0 * V);
    bool accepted = false;
    double Jnew = J;
    Real3 trial;
    double s = step;
    while (s >= cfg.min_step) {
      trial = u;
      for (int i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < n; ++j) trial[i][j] += s * (gain * target[i][j] - u[i][j]);
      normalize(trial);
      const double Vt = potential(to_field(g, trial));
      if (Vt != 0.0) {
        Jnew = 1.0 / (Vt * Vt);
        if (Jnew < J) {
          accepted = true;
          V = Vt;
          break;
        }
      }
      s *= 0.5;
    }
    if (!accepted) break;
    const double rel = (J - Jnew) / J;
    u = std::move(trial);
    J = Jnew;
    if (cfg.keep_history) res.j_history.push_back(J);
    step = std::min(cfg.initial_step, s * cfg.step_growth);
    if (rel < cfg.tolerance) {
      ++it;
      break;
    }
    const bool same = prev_rel > 0.0 && std::abs(rel / prev_rel - 1.0) <= cfg.plateau_band;
    flat = (rel < cfg.plateau_ceiling && same) ? flat + 1 : 0;
    prev_rel = rel;
    if (cfg.plateau_run > 0 && flat >= cfg.plateau_run) {
      ++it;
      break;
    }
  }

  // Amplitude rebalancing onto the unit-coefficient system: with K = 1 the
  // Euler-Lagrange equation reads -k_i Lap u_i = (2 / (3V)) u_j u_k.
  f = to_field(g, u);
  const double K = kinetic(f, k);
  V = potential(f);
  const double alpha = 2.0 * K / (3.0 * V);
  scale(u, alpha);

  GroundState& gs = res.state;
  gs.kappa = k;
  gs.W = to_field(g, u);
  gs.iterations = it;
  for (int i = 0; i < 3; ++i) gs.sign_pattern[i] = profile_peak(g, u[i]) >= 0.0 ? 1 : -1;
  // phi0 follows the first component with its sign removed.
  gs.phi0.resize(n);
  for (std::size_t j = 0; j < n; ++j) gs.phi0[j] = gs.sign_pattern[0] * u[0][j] * std::sqrt(k.kappa1);
  fill_functionals(gs);
  gs.converged = gs.residual < cfg.residual_target;
  return res;
}

Thresholds thresholds(const GroundState& gs) { return {gs.E_W, gs.K_W, gs.C_GN}; }

Certificate certify(const GroundState& gs, double residual_tolerance) {
  Certificate c;
  c.k_over_v = gs.K_W / gs.V_W;
  c.e_over_k = gs.E_W / gs.K_W;
  c.cgn_sqrt_k = gs.C_GN * std::sqrt(gs.K_W);
  c.pohozaev = std::abs(2.0 * gs.K_W - 3.0 * gs.V_W) / gs.K_W;
  c.residual = gs.residual;
  c.passed = std::abs(c.k_over_v - 1.5) <= 1e-3 && std::abs(c.e_over_k - 1.0 / 3.0) <= 1e-3 &&
             std::abs(c.cgn_sqrt_k - 2.0 / 3.0) <= 1e-3 && c.pohozaev < 1e-3 &&
             c.residual < residual_tolerance;
  return c;
}

double profile_peak(const RadialGrid6&, std::span<const double> f) {
  return (9.0 * f[0] - f[1]) / 8.0;
}

double half_height_radius(const RadialGrid6& g, std::span<const double> f) {
  const double peak = profile_peak(g, f);
  const double half = 0.5 * peak;
  auto above = [&](double v) { return peak > 0 ? v > half : v < half; };
  for (int j = 0; j + 1 < g.num_points(); ++j) {
    if (above(f[j]) && !above(f[j + 1])) {
      const double w = (f[j] - half) / (f[j] - f[j + 1]);
      return g.node(j) + w * g.dr();
    }
  }
  return g.outer_radius();
}

double aligned_profile_error(const ComplexField3& candidate, const KappaTriple&) {
  if (!candidate.radial()) throw std::invalid_argument("profile alignment needs RadialGrid6");
  const auto& g = candidate.radial_grid();
  const std::size_t n = g.size();
  // Reference half-height radius of psi: (1 + r^2/24)^-2 = 1/2.
  const double ref_half = std::sqrt(24.0 * (std::sqrt(2.0) - 1.0));
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> c(n);
    for (std::size_t j = 0; j < n; ++j) c[j] = candidate[i][j].real();
    const double peak = profile_peak(g, c);
    if (peak == 0.0) return 1.0;
    const double rh = half_height_radius(g, c);
    const double stretch = ref_half / rh;
    std::vector<double> diff(n), ref(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double t = scalar_profile(g.node(static_cast<int>(j)) * stretch);
      diff[j] = (c[j] / peak - t) * (c[j] / peak - t);
      ref[j] = t * t;
    }
    worst = std::max(worst, std::sqrt(integrate(Grid(g), diff) / integrate(Grid(g), ref)));
  }
  return worst;
}

}  // namespace quadnls
