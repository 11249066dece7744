#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include "gplhy/common.hpp"

namespace gplhy {

// Uniform periodic box centered at the origin. Samples sit at
// x_i = -L/2 + i*h, i = 0..n-1, so the origin is a grid point (n even).
struct GridSpec {
  int nx = 64, ny = 64, nz = 64;
  double lx = 1.0, ly = 1.0, lz = 1.0;

  static GridSpec cubic(int n, double box) { return GridSpec{n, n, n, box, box, box}; }

  void validate() const {
    for (int n : {nx, ny, nz}) {
      require(n >= 8, "grid axis must have at least 8 samples");
      require(n % 2 == 0, "grid axis must be even");
    }
    require_positive(lx, "L_x");
    require_positive(ly, "L_y");
    require_positive(lz, "L_z");
  }

  std::size_t size() const {
    return static_cast<std::size_t>(nx) * ny * static_cast<std::size_t>(nz);
  }
  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
  double hz() const { return lz / nz; }
  double cell_volume() const { return hx() * hy() * hz(); }
  double volume() const { return lx * ly * lz; }

  double x(int i) const { return -0.5 * lx + hx() * i; }
  double y(int j) const { return -0.5 * ly + hy() * j; }
  double z(int k) const { return -0.5 * lz + hz() * k; }

  // Signed integer frequency in [-n/2, n/2).
  static int freq(int idx, int n) { return idx < n / 2 ? idx : idx - n; }
  double kx(int i) const { return 2.0 * pi * freq(i, nx) / lx; }
  double ky(int j) const { return 2.0 * pi * freq(j, ny) / ly; }
  double kz(int k) const { return 2.0 * pi * freq(k, nz) / lz; }

  // Index layout: z fastest, x slowest.
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * ny + j) * nz + k;
  }

  bool operator==(const GridSpec& o) const {
    return nx == o.nx && ny == o.ny && nz == o.nz && lx == o.lx && ly == o.ly && lz == o.lz;
  }
};

// Sampled (generally complex) wave function on a GridSpec.
struct Field {
  GridSpec grid;
  std::vector<cdouble> values;

  Field() = default;
  explicit Field(const GridSpec& g) : grid(g), values(g.size(), cdouble{0.0, 0.0}) {
    grid.validate();
  }

  cdouble& at(int i, int j, int k) { return values[grid.index(i, j, k)]; }
  const cdouble& at(int i, int j, int k) const { return values[grid.index(i, j, k)]; }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, std::abs(v));
    return m;
  }
  bool is_real(double tol = 0.0) const {
    for (const auto& v : values)
      if (std::abs(v.imag()) > tol) return false;
    return true;
  }
};

namespace detail {

inline int env_thread_cap() {
  const char* s = std::getenv("GPLHY_THREADS");
  if (!s) return 1;
  const int v = std::atoi(s);
  return std::clamp(v, 1, 64);
}

// Cached FFTW plans, one pair per grid shape. Execution is serialized; plans
// use FFTW_ESTIMATE so results do not depend on planner timing.
class FftEngine {
 public:
  static FftEngine& instance() {
    static FftEngine e;
    return e;
  }

  void forward(int nx, int ny, int nz, const cdouble* in, cdouble* out) {
    run(nx, ny, nz, in, out, FFTW_FORWARD);
  }
  void backward(int nx, int ny, int nz, const cdouble* in, cdouble* out) {
    run(nx, ny, nz, in, out, FFTW_BACKWARD);
  }

 private:
  struct Entry {
    fftw_plan fwd = nullptr, bwd = nullptr;
    fftw_complex* buf = nullptr;
    std::size_t n = 0;
    ~Entry() {
      if (fwd) fftw_destroy_plan(fwd);
      if (bwd) fftw_destroy_plan(bwd);
      if (buf) fftw_free(buf);
    }
  };

  FftEngine() {
#ifdef GPLHY_FFTW_THREADS
    fftw_init_threads();
    fftw_plan_with_nthreads(env_thread_cap());
#endif
  }

  Entry& entry(int nx, int ny, int nz) {
    const auto key = std::make_tuple(nx, ny, nz);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      auto e = std::make_unique<Entry>();
      e->n = static_cast<std::size_t>(nx) * ny * nz;
      e->buf = fftw_alloc_complex(e->n);
      if (!e->buf) throw std::bad_alloc();
      e->fwd = fftw_plan_dft_3d(nx, ny, nz, e->buf, e->buf, FFTW_FORWARD, FFTW_ESTIMATE);
      e->bwd = fftw_plan_dft_3d(nx, ny, nz, e->buf, e->buf, FFTW_BACKWARD, FFTW_ESTIMATE);
      if (!e->fwd || !e->bwd) throw NumericError("fftw plan creation failed");
      it = cache_.emplace(key, std::move(e)).first;
    }
    return *it->second;
  }

  void run(int nx, int ny, int nz, const cdouble* in, cdouble* out, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    Entry& e = entry(nx, ny, nz);
    auto* buf = reinterpret_cast<cdouble*>(e.buf);
    std::copy(in, in + e.n, buf);
    fftw_execute(sign == FFTW_FORWARD ? e.fwd : e.bwd);
    std::copy(buf, buf + e.n, out);
  }

  std::mutex mu_;
  std::map<std::tuple<int, int, int>, std::unique_ptr<Entry>> cache_;
};

}  // namespace detail

// Forward transform with the convention psihat(k) = h * sum psi(x) e^{-ik.x};
// the (-1)^{i+j+k} factor accounts for the x = -L/2 grid origin.
inline std::vector<cdouble> forward_transform(const Field& f) {
  std::vector<cdouble> out(f.values.size());
  detail::FftEngine::instance().forward(f.grid.nx, f.grid.ny, f.grid.nz, f.values.data(),
                                        out.data());
  const double h = f.grid.cell_volume();
  std::size_t idx = 0;
  for (int i = 0; i < f.grid.nx; ++i)
    for (int j = 0; j < f.grid.ny; ++j)
      for (int k = 0; k < f.grid.nz; ++k, ++idx) {
        const double s = ((i + j + k) & 1) ? -h : h;
        out[idx] *= s;
      }
  return out;
}

// Inverse of forward_transform: psi(x) = (1/V) sum psihat(k) e^{ik.x}.
inline Field inverse_transform(const GridSpec& g, std::span<const cdouble> khat) {
  require(khat.size() == g.size(), "k-space size mismatch");
  Field f(g);
  std::vector<cdouble> tmp(khat.begin(), khat.end());
  std::size_t idx = 0;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k, ++idx)
        if ((i + j + k) & 1) tmp[idx] = -tmp[idx];
  detail::FftEngine::instance().backward(g.nx, g.ny, g.nz, tmp.data(), f.values.data());
  const double scale = 1.0 / g.volume();
  for (auto& v : f.values) v *= scale;
  return f;
}

template <typename F>
Field sample(const GridSpec& g, F&& f) {
  Field out(g);
  std::size_t idx = 0;
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    for (int j = 0; j < g.ny; ++j) {
      const double y = g.y(j);
      for (int k = 0; k < g.nz; ++k, ++idx) {
        const cdouble v = f(x, y, g.z(k));
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
          throw NumericError("sample: non-finite value");
        out.values[idx] = v;
      }
    }
  }
  return out;
}

inline double integrate_power(const Field& f, double p) {
  require(p >= 1.0, "integrate_power: p must be >= 1");
  double s = 0.0;
  if (p == 2.0) {
    for (const auto& v : f.values) s += std::norm(v);
  } else {
    for (const auto& v : f.values) s += std::pow(std::abs(v), p);
  }
  return f.grid.cell_volume() * s;
}

inline double mass(const Field& f) { return integrate_power(f, 2.0); }

/// Plain volume integral of the (real part of the) sampled values.
inline double integrate(const Field& f) {
  double s = 0.0;
  for (const auto& v : f.values) s += v.real();
  return f.grid.cell_volume() * s;
}

// sum_k |k|^2 |psihat|^2 with the Parseval weight 1/V; equals int |grad psi|^2
// for band-limited fields.
inline double kinetic_energy(const Field& f) {
  std::vector<cdouble> khat(f.values.size());
  detail::FftEngine::instance().forward(f.grid.nx, f.grid.ny, f.grid.nz, f.values.data(),
                                        khat.data());
  const GridSpec& g = f.grid;
  double s = 0.0;
  std::size_t idx = 0;
  for (int i = 0; i < g.nx; ++i) {
    const double kx2 = g.kx(i) * g.kx(i);
    for (int j = 0; j < g.ny; ++j) {
      const double kxy2 = kx2 + g.ky(j) * g.ky(j);
      for (int k = 0; k < g.nz; ++k, ++idx) {
        const double kzv = g.kz(k);
        s += (kxy2 + kzv * kzv) * std::norm(khat[idx]);
      }
    }
  }
  // |F_dft|^2 * h^2 / V = |psihat|^2 / V with psihat = h * F_dft.
  const double h = g.cell_volume();
  return s * h * h / g.volume();
}

// Fourier multiplier sampled on a grid's wavevectors, optionally on the
// factor-2 zero-padded grid. Precomputed once and shared read-only.
struct MultiplierTable {
  GridSpec grid;      // the physical (unpadded) grid
  bool padded = false;
  std::vector<double> values;  // laid out on the (padded) grid dims

  static MultiplierTable build(const GridSpec& g, const std::function<double(const Vec3&)>& m,
                               bool padded = false) {
    g.validate();
    MultiplierTable t;
    t.grid = g;
    t.padded = padded;
    GridSpec eg = padded ? GridSpec{2 * g.nx, 2 * g.ny, 2 * g.nz, 2 * g.lx, 2 * g.ly, 2 * g.lz}
                         : g;
    t.values.resize(eg.size());
    std::size_t idx = 0;
    for (int i = 0; i < eg.nx; ++i)
      for (int j = 0; j < eg.ny; ++j)
        for (int k = 0; k < eg.nz; ++k, ++idx)
          t.values[idx] = m(Vec3{eg.kx(i), eg.ky(j), eg.kz(k)});
    return t;
  }
};

// Spectral convolution K * rho via the kernel's Fourier multiplier. With
// t.padded the density is embedded in a factor-2 zero-padded box, which
// pushes periodic images of the |x|^-3 tail to twice the box distance.
inline Field convolve_kernel(const Field& density, const MultiplierTable& t) {
  require(density.grid == t.grid, "convolve_kernel: grid mismatch with multiplier table");
  const GridSpec& g = density.grid;
  auto& fft = detail::FftEngine::instance();

  Field out(g);
  double in_norm = 0.0, im_res = 0.0;
  if (!t.padded) {
    std::vector<cdouble> khat(g.size());
    fft.forward(g.nx, g.ny, g.nz, density.values.data(), khat.data());
    for (std::size_t i = 0; i < khat.size(); ++i) khat[i] *= t.values[i];
    fft.backward(g.nx, g.ny, g.nz, khat.data(), out.values.data());
    const double scale = 1.0 / static_cast<double>(g.size());
    for (auto& v : out.values) v *= scale;
  } else {
    const int px = 2 * g.nx, py = 2 * g.ny, pz = 2 * g.nz;
    std::vector<cdouble> big(static_cast<std::size_t>(px) * py * pz, cdouble{0.0, 0.0});
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        const std::size_t src = g.index(i, j, 0);
        const std::size_t dst = (static_cast<std::size_t>(i) * py + j) * pz;
        std::copy_n(density.values.data() + src, g.nz, big.data() + dst);
      }
    fft.forward(px, py, pz, big.data(), big.data());
    for (std::size_t i = 0; i < big.size(); ++i) big[i] *= t.values[i];
    fft.backward(px, py, pz, big.data(), big.data());
    const double scale = 1.0 / static_cast<double>(big.size());
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        const std::size_t src = (static_cast<std::size_t>(i) * py + j) * pz;
        const std::size_t dst = g.index(i, j, 0);
        for (int k = 0; k < g.nz; ++k) out.values[dst + k] = big[src + k] * scale;
      }
  }

  for (const auto& v : density.values) in_norm = std::max(in_norm, std::abs(v));
  for (const auto& v : out.values) im_res = std::max(im_res, std::abs(v.imag()));
  if (in_norm > 0.0 && im_res > 1e-10 * std::max(in_norm, out.max_abs()))
    throw NumericError("convolve_kernel: imaginary residue above tolerance");
  for (auto& v : out.values) v = cdouble{v.real(), 0.0};
  return out;
}

}  // namespace gplhy
