#pragma once

// State representation for the three-wave quadratic Schrodinger system
//
//   i d_t u + diag(k1, k2, k3) Lap u = f(u),   f(u) = (-conj(u2) u3, -conj(u1) u3, -u1 u2)
//
// on either a periodic Cartesian box (d = 1, 2, 3) or the radial reduction of R^6.

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace quadnls {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

inline constexpr double kPi = 3.14159265358979323846;
/// Surface area of the unit sphere S^5 in R^6.
inline constexpr double kSphere5Area = kPi * kPi * kPi;
/// Relative tolerance for the mass-resonance test 1/k3 = 1/k1 + 1/k2.
inline constexpr double kResonanceTolerance = 1e-12;

struct KappaTriple {
  double kappa1 = 1.0;
  double kappa2 = 1.0;
  double kappa3 = 1.0;
  /// k2 k3 + k1 k3 - k1 k2; vanishes exactly under mass resonance.
  double anomaly = 0.0;
  bool is_resonant = false;

  double operator[](int i) const { return i == 0 ? kappa1 : (i == 1 ? kappa2 : kappa3); }
  std::array<double, 3> values() const { return {kappa1, kappa2, kappa3}; }
  double product() const { return kappa1 * kappa2 * kappa3; }
  double max() const;
};

KappaTriple validate_kappa(double k1, double k2, double k3);

struct CartesianGrid {
  int dim = 1;
  int points_per_axis = 64;
  double box_length = 1.0;

  double spacing() const { return box_length / points_per_axis; }
  std::size_t size() const;
  /// Node coordinate along one axis; the box is [-L/2, L/2).
  double coord(int idx) const { return -0.5 * box_length + idx * spacing(); }
  /// Symmetric discrete wavenumber of FFT index idx.
  double wavenumber(int idx) const;
  double cell_volume() const;
  /// Multi-index (i0, i1, i2) of a flat row-major node index; unused axes are 0.
  std::array<int, 3> unflatten(std::size_t flat) const;

  friend bool operator==(const CartesianGrid&, const CartesianGrid&) = default;
};

CartesianGrid make_cartesian_grid(int dim, int points_per_axis, double box_length);

/// Precomputed finite-volume geometry of a radial grid.
struct RadialGeometry {
  std::vector<double> nodes;      // r_j = (j + 1/2) dr
  std::vector<double> volumes;    // |S^5| (r_{j+1/2}^6 - r_{j-1/2}^6) / 6
  std::vector<double> face_areas; // |S^5| r_{j+1/2}^5, upper face of cell j
};

/// Cell-centred grid on [0, outer_radius] for radial functions on R^6.
class RadialGrid6 {
 public:
  RadialGrid6() = default;
  int num_points() const { return n_; }
  double outer_radius() const { return radius_; }
  double dr() const { return radius_ / n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_); }
  double node(int j) const { return geom_->nodes[j]; }
  double face(int j) const { return (j + 1) * dr(); }
  std::span<const double> nodes() const { return geom_->nodes; }
  std::span<const double> volumes() const { return geom_->volumes; }
  std::span<const double> face_areas() const { return geom_->face_areas; }
  /// Coefficient b of the outer closure d_r u = -b u at r = outer_radius.
  double robin_coefficient() const { return 4.0 / radius_; }

  friend bool operator==(const RadialGrid6& a, const RadialGrid6& b) {
    return a.n_ == b.n_ && a.radius_ == b.radius_;
  }

 private:
  friend RadialGrid6 make_radial_grid(int num_points, double outer_radius);
  int n_ = 0;
  double radius_ = 0.0;
  std::shared_ptr<const RadialGeometry> geom_;
};

RadialGrid6 make_radial_grid(int num_points, double outer_radius);

using Grid = std::variant<CartesianGrid, RadialGrid6>;

std::size_t grid_size(const Grid& g);
bool is_radial(const Grid& g);
std::string describe(const Grid& g);

class ComplexField3 {
 public:
  explicit ComplexField3(Grid grid);
  ComplexField3(Grid grid, CVec u1, CVec u2, CVec u3);

  const Grid& grid() const { return grid_; }
  bool radial() const { return is_radial(grid_); }
  const RadialGrid6& radial_grid() const { return std::get<RadialGrid6>(grid_); }
  const CartesianGrid& cartesian_grid() const { return std::get<CartesianGrid>(grid_); }

  std::size_t size() const { return comp_[0].size(); }
  CVec& operator[](int i) { return comp_[i]; }
  const CVec& operator[](int i) const { return comp_[i]; }

  bool is_finite() const;
  ComplexField3 scaled(double factor) const;

 private:
  Grid grid_;
  std::array<CVec, 3> comp_;
};

bool same_grid(const Grid& a, const Grid& b);

/// Pointwise f(u) = (-conj(u2) u3, -conj(u1) u3, -u1 u2).
ComplexField3 nonlinearity(const ComplexField3& u);

/// Samples of lambda^2 u(lambda x), resampled by cubic interpolation with zero
/// extension outside the domain.
ComplexField3 rescale(const ComplexField3& u, double lambda);

/// Galilean boost: component i becomes exp(i x.xi/k_i) exp(-i t |xi|^2/k_i) u_i(x - 2 t xi).
/// Cartesian grids only; the shift is applied spectrally on the periodic box.
ComplexField3 galilean_boost(const ComplexField3& u, std::span<const double> xi, double t,
                             const KappaTriple& k);

/// u_i = a_i exp(i theta_i) exp(-|x|^2 / (2 sigma^2)).
ComplexField3 make_gaussian_triple(const Grid& grid, const std::array<double, 3>& amplitudes,
                                   double width, const std::array<double, 3>& phases);

/// Squared distance |x|^2 of each node from the origin.
std::vector<double> radius_squared(const Grid& grid);

}  // namespace quadnls
