#include "quadnls/fields.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "quadnls/spectral.hpp"

namespace quadnls {

double KappaTriple::max() const { return std::max({kappa1, kappa2, kappa3}); }

KappaTriple validate_kappa(double k1, double k2, double k3) {
  for (double k : {k1, k2, k3})
    if (!std::isfinite(k) || k <= 0.0)
      throw std::invalid_argument("dispersion coefficients must be finite and positive");
  KappaTriple k;
  k.kappa1 = k1;
  k.kappa2 = k2;
  k.kappa3 = k3;
  k.anomaly = k2 * k3 + k1 * k3 - k1 * k2;
  const double gap = std::abs(1.0 / k3 - 1.0 / k1 - 1.0 / k2);
  const double scale = std::max({1.0 / k1, 1.0 / k2, 1.0 / k3});
  k.is_resonant = gap <= kResonanceTolerance * scale;
  return k;
}

std::size_t CartesianGrid::size() const {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(points_per_axis);
  return n;
}

double CartesianGrid::wavenumber(int idx) const {
  const int n = points_per_axis;
  const int m = idx <= n / 2 ? idx : idx - n;
  return 2.0 * kPi * m / box_length;
}

double CartesianGrid::cell_volume() const { return std::pow(spacing(), dim); }

std::array<int, 3> CartesianGrid::unflatten(std::size_t flat) const {
  std::array<int, 3> idx{0, 0, 0};
  const auto n = static_cast<std::size_t>(points_per_axis);
  for (int a = dim - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % n);
    flat /= n;
  }
  return idx;
}

CartesianGrid make_cartesian_grid(int dim, int points_per_axis, double box_length) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("Cartesian dimension must be 1, 2 or 3");
  if (points_per_axis < 2 || (points_per_axis & (points_per_axis - 1)) != 0)
    throw std::invalid_argument("points_per_axis must be a power of two");
  if (!std::isfinite(box_length) || box_length <= 0.0)
    throw std::invalid_argument("box_length must be positive");
  return CartesianGrid{dim, points_per_axis, box_length};
}

RadialGrid6 make_radial_grid(int num_points, double outer_radius) {
  if (num_points < 4) throw std::invalid_argument("radial grid needs at least 4 points");
  if (!std::isfinite(outer_radius) || outer_radius <= 0.0)
    throw std::invalid_argument("outer_radius must be positive");
  auto geom = std::make_shared<RadialGeometry>();
  const double h = outer_radius / num_points;
  geom->nodes.resize(num_points);
  geom->volumes.resize(num_points);
  geom->face_areas.resize(num_points);
  for (int j = 0; j < num_points; ++j) {
    const double lo = j * h;
    const double hi = (j + 1) * h;
    geom->nodes[j] = (j + 0.5) * h;
    geom->volumes[j] = kSphere5Area * (std::pow(hi, 6) - std::pow(lo, 6)) / 6.0;
    geom->face_areas[j] = kSphere5Area * std::pow(hi, 5);
  }
  RadialGrid6 g;
  g.n_ = num_points;
  g.radius_ = outer_radius;
  g.geom_ = std::move(geom);
  return g;
}

std::size_t grid_size(const Grid& g) {
  return std::visit([](const auto& grid) { return grid.size(); }, g);
}

bool is_radial(const Grid& g) { return std::holds_alternative<RadialGrid6>(g); }

std::string describe(const Grid& g) {
  std::ostringstream os;
  os.precision(17);
  if (const auto* r = std::get_if<RadialGrid6>(&g))
    os << "radial6(N=" << r->num_points() << ",R=" << r->outer_radius() << ")";
  else {
    const auto& c = std::get<CartesianGrid>(g);
    os << "cartesian(d=" << c.dim << ",n=" << c.points_per_axis << ",L=" << c.box_length << ")";
  }
  return os.str();
}

bool same_grid(const Grid& a, const Grid& b) {
  if (a.index() != b.index()) return false;
  if (is_radial(a)) return std::get<RadialGrid6>(a) == std::get<RadialGrid6>(b);
  return std::get<CartesianGrid>(a) == std::get<CartesianGrid>(b);
}

ComplexField3::ComplexField3(Grid grid) : grid_(std::move(grid)) {
  const std::size_t n = grid_size(grid_);
  for (auto& c : comp_) c.assign(n, 0.0);
}

ComplexField3::ComplexField3(Grid grid, CVec u1, CVec u2, CVec u3)
    : grid_(std::move(grid)), comp_{std::move(u1), std::move(u2), std::move(u3)} {
  const std::size_t n = grid_size(grid_);
  for (const auto& c : comp_)
    if (c.size() != n) throw std::invalid_argument("component length does not match grid");
}

bool ComplexField3::is_finite() const {
  for (const auto& c : comp_)
    for (const auto& z : c)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

ComplexField3 ComplexField3::scaled(double factor) const {
  ComplexField3 out = *this;
  for (auto& c : out.comp_)
    for (auto& z : c) z *= factor;
  return out;
}

ComplexField3 nonlinearity(const ComplexField3& u) {
  ComplexField3 out(u.grid());
  const auto& a = u[0];
  const auto& b = u[1];
  const auto& c = u[2];
  for (std::size_t j = 0; j < u.size(); ++j) {
    out[0][j] = -std::conj(b[j]) * c[j];
    out[1][j] = -std::conj(a[j]) * c[j];
    out[2][j] = -a[j] * b[j];
  }
  return out;
}

namespace {

// Four-point Lagrange weights for offset s in [0,1) between nodes 0 and 1 of
// the stencil (-1, 0, 1, 2).
std::array<double, 4> cubic_weights(double s) {
  return {-s * (s - 1.0) * (s - 2.0) / 6.0, (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
          -(s + 1.0) * s * (s - 2.0) / 2.0, (s + 1.0) * s * (s - 1.0) / 6.0};
}

CVec rescale_radial(const RadialGrid6& g, const CVec& u, double lambda) {
  const int n = g.num_points();
  const double h = g.dr();
  auto at = [&](int j) -> cplx {
    if (j < 0) j = -j - 1;  // even extension through r = 0
    return j < n ? u[j] : cplx(0.0);
  };
  CVec out(n);
  for (int j = 0; j < n; ++j) {
    const double pos = lambda * g.node(j) / h - 0.5;
    const double fl = std::floor(pos);
    const int base = static_cast<int>(fl);
    if (base > n) continue;
    const auto w = cubic_weights(pos - fl);
    cplx acc = 0.0;
    for (int m = 0; m < 4; ++m) acc += w[m] * at(base - 1 + m);
    out[j] = lambda * lambda * acc;
  }
  return out;
}

CVec rescale_cartesian(const CartesianGrid& g, const CVec& u, double lambda) {
  const int n = g.points_per_axis;
  const double h = g.spacing();
  const std::size_t total = g.size();
  CVec out(total);
  std::array<std::array<double, 4>, 3> w{};
  std::array<int, 3> base{0, 0, 0};
  for (std::size_t flat = 0; flat < total; ++flat) {
    const auto idx = g.unflatten(flat);
    bool outside = false;
    for (int a = 0; a < g.dim; ++a) {
      const double pos = (lambda * g.coord(idx[a]) + 0.5 * g.box_length) / h;
      const double fl = std::floor(pos);
      base[a] = static_cast<int>(fl);
      if (base[a] < -2 || base[a] > n) outside = true;
      w[a] = cubic_weights(pos - fl);
    }
    if (outside) continue;
    cplx acc = 0.0;
    const int reach0 = 4;
    const int reach1 = g.dim > 1 ? 4 : 1;
    const int reach2 = g.dim > 2 ? 4 : 1;
    for (int m0 = 0; m0 < reach0; ++m0) {
      const int i0 = base[0] - 1 + m0;
      if (i0 < 0 || i0 >= n) continue;
      for (int m1 = 0; m1 < reach1; ++m1) {
        const int i1 = g.dim > 1 ? base[1] - 1 + m1 : 0;
        if (i1 < 0 || i1 >= n) continue;
        for (int m2 = 0; m2 < reach2; ++m2) {
          const int i2 = g.dim > 2 ? base[2] - 1 + m2 : 0;
          if (i2 < 0 || i2 >= n) continue;
          double wt = w[0][m0];
          if (g.dim > 1) wt *= w[1][m1];
          if (g.dim > 2) wt *= w[2][m2];
          std::size_t f = static_cast<std::size_t>(i0);
          if (g.dim > 1) f = f * n + i1;
          if (g.dim > 2) f = f * n + i2;
          acc += wt * u[f];
        }
      }
    }
    out[flat] = lambda * lambda * acc;
  }
  return out;
}

}  // namespace

ComplexField3 rescale(const ComplexField3& u, double lambda) {
  if (!std::isfinite(lambda) || lambda <= 0.0)
    throw std::invalid_argument("rescale factor must be positive");
  if (lambda == 1.0) return u;
  ComplexField3 out(u.grid());
  for (int i = 0; i < 3; ++i) {
    if (u.radial())
      out[i] = rescale_radial(u.radial_grid(), u[i], lambda);
    else
      out[i] = rescale_cartesian(u.cartesian_grid(), u[i], lambda);
  }
  return out;
}

ComplexField3 galilean_boost(const ComplexField3& u, std::span<const double> xi, double t,
                             const KappaTriple& k) {
  if (u.radial()) throw std::invalid_argument("Galilean boost requires a Cartesian grid");
  const auto& g = u.cartesian_grid();
  if (static_cast<int>(xi.size()) != g.dim)
    throw std::invalid_argument("boost vector length must equal the grid dimension");
  double xi2 = 0.0;
  for (double x : xi) xi2 += x * x;
  if (xi2 == 0.0) return u;

  ComplexField3 out = u;
  if (t != 0.0) {
    std::vector<double> shift(xi.begin(), xi.end());
    for (double& s : shift) s *= 2.0 * t;
    for (int i = 0; i < 3; ++i) out[i] = spectral_translate(g, u[i], shift);
  }
  for (std::size_t flat = 0; flat < u.size(); ++flat) {
    const auto idx = g.unflatten(flat);
    double xdot = 0.0;
    for (int a = 0; a < g.dim; ++a) xdot += g.coord(idx[a]) * xi[a];
    for (int i = 0; i < 3; ++i) {
      const double phase = (xdot - t * xi2) / k[i];
      out[i][flat] *= std::polar(1.0, phase);
    }
  }
  return out;
}

std::vector<double> radius_squared(const Grid& grid) {
  if (const auto* r = std::get_if<RadialGrid6>(&grid)) {
    std::vector<double> out(r->size());
    for (int j = 0; j < r->num_points(); ++j) out[j] = r->node(j) * r->node(j);
    return out;
  }
  const auto& g = std::get<CartesianGrid>(grid);
  std::vector<double> out(g.size());
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    const auto idx = g.unflatten(flat);
    double s = 0.0;
    for (int a = 0; a < g.dim; ++a) s += g.coord(idx[a]) * g.coord(idx[a]);
    out[flat] = s;
  }
  return out;
}

ComplexField3 make_gaussian_triple(const Grid& grid, const std::array<double, 3>& amplitudes,
                                   double width, const std::array<double, 3>& phases) {
  if (!std::isfinite(width) || width <= 0.0)
    throw std::invalid_argument("Gaussian width must be positive");
  const auto r2 = radius_squared(grid);
  ComplexField3 out(grid);
  for (int i = 0; i < 3; ++i) {
    const cplx amp = std::polar(amplitudes[i], phases[i]);
    for (std::size_t j = 0; j < r2.size(); ++j)
      out[i][j] = amp * std::exp(-r2[j] / (2.0 * width * width));
  }
  return out;
}

}  // namespace quadnls
