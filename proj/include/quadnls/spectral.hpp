#pragma once

// FFT machinery for periodic Cartesian grids (FFTW backend).

#include <array>
#include <span>
#include <vector>

#include "quadnls/fields.hpp"

namespace quadnls {

/// Forward/backward complex DFT over one Cartesian grid. Owns its FFTW plans
/// and aligned work buffers; not copyable.
class SpectralTransform {
 public:
  explicit SpectralTransform(const CartesianGrid& grid);
  ~SpectralTransform();
  SpectralTransform(const SpectralTransform&) = delete;
  SpectralTransform& operator=(const SpectralTransform&) = delete;

  const CartesianGrid& grid() const { return grid_; }

  /// Unnormalized forward transform.
  void forward(std::span<const cplx> in, std::span<cplx> out);
  /// Inverse transform, normalized so backward(forward(u)) == u.
  void backward(std::span<const cplx> in, std::span<cplx> out);

  /// |k|^2 for every mode in FFT order.
  std::span<const double> k_squared() const { return k2_; }
  /// Wavevector component along `axis` for every mode; the Nyquist entry is
  /// zeroed so first derivatives of real data stay real.
  std::span<const double> k_axis(int axis) const { return kaxis_[axis]; }

 private:
  CartesianGrid grid_;
  void* plan_fwd_ = nullptr;
  void* plan_bwd_ = nullptr;
  cplx* buf_in_ = nullptr;
  cplx* buf_out_ = nullptr;
  std::vector<double> k2_;
  std::array<std::vector<double>, 3> kaxis_;
};

/// Per-thread cached transform for `grid`.
SpectralTransform& spectral_for(const CartesianGrid& grid);

/// Spectral gradient component d u / d x_axis.
CVec spectral_derivative(const CartesianGrid& grid, std::span<const cplx> u, int axis);

/// \int |grad u|^2 dx via Parseval.
double spectral_dirichlet_energy(const CartesianGrid& grid, std::span<const cplx> u);

/// Translate a periodic sample vector by `shift` (u(x) -> u(x - shift)).
CVec spectral_translate(const CartesianGrid& grid, std::span<const cplx> u,
                        std::span<const double> shift);

}  // namespace quadnls
