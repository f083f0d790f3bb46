#include "quadnls/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace quadnls {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

SpectralTransform::SpectralTransform(const CartesianGrid& grid) : grid_(grid) {
  const std::size_t n = grid.size();
  std::array<int, 3> dims{grid.points_per_axis, grid.points_per_axis, grid.points_per_axis};
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    buf_in_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * n));
    buf_out_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * n));
    auto* in = reinterpret_cast<fftw_complex*>(buf_in_);
    auto* out = reinterpret_cast<fftw_complex*>(buf_out_);
    plan_fwd_ = fftw_plan_dft(grid.dim, dims.data(), in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    plan_bwd_ = fftw_plan_dft(grid.dim, dims.data(), in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  if (plan_fwd_ == nullptr || plan_bwd_ == nullptr) throw std::runtime_error("FFTW planning failed");

  k2_.assign(n, 0.0);
  for (int a = 0; a < grid.dim; ++a) kaxis_[a].assign(n, 0.0);
  const int half = grid.points_per_axis / 2;
  for (std::size_t flat = 0; flat < n; ++flat) {
    const auto idx = grid.unflatten(flat);
    double s = 0.0;
    for (int a = 0; a < grid.dim; ++a) {
      const double k = grid.wavenumber(idx[a]);
      s += k * k;
      kaxis_[a][flat] = idx[a] == half ? 0.0 : k;
    }
    k2_[flat] = s;
  }
}

SpectralTransform::~SpectralTransform() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
  fftw_free(buf_in_);
  fftw_free(buf_out_);
}

void SpectralTransform::forward(std::span<const cplx> in, std::span<cplx> out) {
  std::copy(in.begin(), in.end(), buf_in_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  std::copy(buf_out_, buf_out_ + out.size(), out.begin());
}

void SpectralTransform::backward(std::span<const cplx> in, std::span<cplx> out) {
  std::copy(in.begin(), in.end(), buf_in_);
  fftw_execute(static_cast<fftw_plan>(plan_bwd_));
  const double scale = 1.0 / static_cast<double>(out.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = buf_out_[j] * scale;
}

SpectralTransform& spectral_for(const CartesianGrid& grid) {
  thread_local std::vector<std::unique_ptr<SpectralTransform>> cache;
  for (auto& t : cache)
    if (t->grid() == grid) return *t;
  if (cache.size() >= 8) cache.erase(cache.begin());
  cache.push_back(std::make_unique<SpectralTransform>(grid));
  return *cache.back();
}

CVec spectral_derivative(const CartesianGrid& grid, std::span<const cplx> u, int axis) {
  auto& fft = spectral_for(grid);
  CVec hat(u.size());
  fft.forward(u, hat);
  const auto k = fft.k_axis(axis);
  for (std::size_t j = 0; j < hat.size(); ++j) hat[j] *= cplx(0.0, k[j]);
  CVec out(u.size());
  fft.backward(hat, out);
  return out;
}

double spectral_dirichlet_energy(const CartesianGrid& grid, std::span<const cplx> u) {
  auto& fft = spectral_for(grid);
  CVec hat(u.size());
  fft.forward(u, hat);
  const auto k2 = fft.k_squared();
  double acc = 0.0;
  for (std::size_t j = 0; j < hat.size(); ++j) acc += k2[j] * std::norm(hat[j]);
  // Parseval: sum |u|^2 h^d = (h^d / n) sum |hat|^2.
  return acc * grid.cell_volume() / static_cast<double>(u.size());
}

CVec spectral_translate(const CartesianGrid& grid, std::span<const cplx> u,
                        std::span<const double> shift) {
  auto& fft = spectral_for(grid);
  CVec hat(u.size());
  fft.forward(u, hat);
  const int half = grid.points_per_axis / 2;
  for (std::size_t flat = 0; flat < hat.size(); ++flat) {
    const auto idx = grid.unflatten(flat);
    double phase = 0.0;
    for (int a = 0; a < grid.dim; ++a)
      if (idx[a] != half) phase -= grid.wavenumber(idx[a]) * shift[a];
    hat[flat] *= std::polar(1.0, phase);
  }
  CVec out(u.size());
  fft.backward(hat, out);
  return out;
}

}  // namespace quadnls
