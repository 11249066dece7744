#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gplhy/common.hpp"
#include "gplhy/grid.hpp"

namespace gplhy {

// ---------------------------------------------------------------------------
// Spherical quadrature: Gauss-Legendre in cos(theta) x uniform azimuthal.
// ---------------------------------------------------------------------------

namespace detail {

struct GaussLegendre {
  std::vector<double> nodes, weights;
};

inline const GaussLegendre& gauss_legendre(int n) {
  static std::map<int, GaussLegendre> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GaussLegendre gl;
  gl.nodes.resize(n);
  gl.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    gl.nodes[i] = -x;
    gl.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    gl.weights[i] = w;
    gl.weights[n - 1 - i] = w;
  }
  return cache.emplace(n, std::move(gl)).first->second;
}

// Orthonormal frame (a, b, u) with the given unit third axis.
inline void make_frame(const Vec3& u, Vec3& a, Vec3& b) {
  if (std::abs(u.z) < 0.9) {
    a = normalized(Vec3{-u.y, u.x, 0.0});
  } else {
    a = normalized(Vec3{u.z, 0.0, -u.x});
  }
  b = Vec3{u.y * a.z - u.z * a.y, u.z * a.x - u.x * a.z, u.x * a.y - u.y * a.x};
}

}  // namespace detail

// Integrate a function over the unit sphere (Haar measure, total mass 4*pi).
template <typename F>
double sphere_integral(F&& f, int n_theta = 64, int n_phi = 128) {
  const auto& gl = detail::gauss_legendre(n_theta);
  const double wp = 2.0 * pi / n_phi;
  double s = 0.0;
  for (int i = 0; i < n_theta; ++i) {
    const double t = gl.nodes[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - t * t));
    double row = 0.0;
    for (int j = 0; j < n_phi; ++j) {
      const double phi = (j + 0.5) * wp;
      row += f(Vec3{st * std::cos(phi), st * std::sin(phi), t});
    }
    s += gl.weights[i] * row * wp;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Kernel specification: K(x) = Omega(x/|x|) / |x|^3, Omega even and mean-zero.
// ---------------------------------------------------------------------------

struct DipolarKernel {
  Vec3 axis{0.0, 0.0, 1.0};
};

struct GeneralKernel {
  std::function<double(const Vec3&)> omega;
};

class KernelSpec {
 public:
  static KernelSpec dipolar(const Vec3& axis = {0.0, 0.0, 1.0}) {
    if (std::abs(axis.norm() - 1.0) > 1e-12)
      throw std::domain_error("dipolar kernel axis must be a unit vector");
    KernelSpec s;
    s.variant_ = DipolarKernel{axis};
    return s;
  }

  static KernelSpec general(std::function<double(const Vec3&)> omega) {
    require(static_cast<bool>(omega), "general kernel needs a callable Omega");
    KernelSpec s;
    s.variant_ = GeneralKernel{std::move(omega)};
    s.validate_general();
    return s;
  }

  bool is_dipolar() const { return std::holds_alternative<DipolarKernel>(variant_); }
  const Vec3& axis() const { return std::get<DipolarKernel>(variant_).axis; }
  const std::function<double(const Vec3&)>& omega_fn() const {
    return std::get<GeneralKernel>(variant_).omega;
  }

 private:
  void validate_general() {
    const auto& om = omega_fn();
    // evenness on sampled antipodal pairs
    const int n_samples = 200;
    for (int i = 0; i < n_samples; ++i) {
      const double t = -1.0 + 2.0 * (i + 0.5) / n_samples;
      const double phi = 2.0 * pi * ((i * 0.618033988749895) - std::floor(i * 0.618033988749895));
      const double st = std::sqrt(std::max(0.0, 1.0 - t * t));
      const Vec3 u{st * std::cos(phi), st * std::sin(phi), t};
      if (std::abs(om(u) - om(-u)) > 1e-10)
        throw std::domain_error("general kernel Omega must be even");
    }
    const double mean = sphere_integral(om);
    if (std::abs(mean) > 1e-8)
      throw std::domain_error("general kernel Omega must have zero spherical mean");
  }

  std::variant<DipolarKernel, GeneralKernel> variant_;
};

inline double omega_value(const KernelSpec& spec, const Vec3& u) {
  if (std::abs(u.norm() - 1.0) > 1e-8)
    throw std::domain_error("omega_value: direction must be a unit vector");
  if (spec.is_dipolar()) {
    const double c = dot(spec.axis(), u);
    return 3.0 / (4.0 * pi) * (1.0 - 3.0 * c * c);
  }
  return spec.omega_fn()(u);
}

// Multiplier of a general even mean-zero kernel on a unit direction:
//   m(u) = int_{S^2} Omega(v) ln(1/|u.v|) dsigma(v).
// The quadrature frame is rotated so the log singularity sits on its equator
// and the singular part is subtracted analytically (int ln(1/|t|) dt = 2).
inline double multiplier_from_omega(const KernelSpec& spec, const Vec3& u_in,
                                    int n_theta = 64, int n_phi = 128,
                                    double* achieved_tol = nullptr) {
  require(!spec.is_dipolar() || true, "");  // defined for both variants
  const Vec3 u = normalized(u_in);
  const auto omega = [&spec](const Vec3& v) { return omega_value(spec, v); };

  Vec3 a, b;
  detail::make_frame(u, a, b);

  auto evaluate = [&](int nt, int np) {
    const auto& gl = detail::gauss_legendre(nt);
    const double wp = 2.0 * pi / np;
    auto azim = [&](double t) {
      const double st = std::sqrt(std::max(0.0, 1.0 - t * t));
      double row = 0.0;
      for (int j = 0; j < np; ++j) {
        const double phi = (j + 0.5) * wp;
        const Vec3 v = st * std::cos(phi) * a + st * std::sin(phi) * b + t * u;
        row += omega(v);
      }
      return row * wp;
    };
    const double g0 = azim(0.0);
    double s = 2.0 * g0;
    for (int i = 0; i < nt; ++i) {
      const double t = gl.nodes[i];
      s += gl.weights[i] * (azim(t) - g0) * std::log(1.0 / std::abs(t));
    }
    return s;
  };

  const double coarse = evaluate(n_theta / 2, n_phi / 2);
  const double fine = evaluate(n_theta, n_phi);
  const double delta = std::abs(fine - coarse);
  if (achieved_tol) *achieved_tol = delta;
  if (delta > 1e-3 * std::max(1.0, std::abs(fine)))
    throw NumericError("multiplier_from_omega: quadrature did not converge (achieved " +
                       std::to_string(delta) + ")");
  return fine;
}

// Degree-0-homogeneous Fourier multiplier of the kernel, with m(0) = 0.
inline double multiplier_value(const KernelSpec& spec, const Vec3& k) {
  const double kn2 = k.norm2();
  if (kn2 == 0.0) return 0.0;
  if (spec.is_dipolar()) {
    const double c = dot(spec.axis(), k);
    return 3.0 * c * c / kn2 - 1.0;
  }
  return multiplier_from_omega(spec, k * (1.0 / std::sqrt(kn2)));
}

// Multiplier table for spectral convolution. For general Omega the spherical
// quadrature runs once per distinct grid direction and is cached.
inline MultiplierTable build_multiplier_table(const KernelSpec& spec, const GridSpec& g,
                                              bool padded = false) {
  if (spec.is_dipolar()) {
    const Vec3 n = spec.axis();
    return MultiplierTable::build(
        g,
        [n](const Vec3& k) {
          const double kn2 = k.norm2();
          if (kn2 == 0.0) return 0.0;
          const double c = dot(n, k);
          return 3.0 * c * c / kn2 - 1.0;
        },
        padded);
  }
  return MultiplierTable::build(
      g, [&spec](const Vec3& k) { return multiplier_value(spec, k); }, padded);
}

// ---------------------------------------------------------------------------
// Direct-space principal-value quadrature (oracle for the spectral path).
// ---------------------------------------------------------------------------

// Quadrature of int_{|x-y|>eps} K(x-y) rho(y) dy over the sampled density.
inline double pv_convolve_direct(const KernelSpec& spec, const Field& density, const Vec3& x,
                                 double eps) {
  const GridSpec& g = density.grid;
  const double cell_diag =
      std::sqrt(g.hx() * g.hx() + g.hy() * g.hy() + g.hz() * g.hz());
  if (!(eps >= cell_diag))
    throw std::domain_error("pv_convolve_direct: eps must be at least the cell diameter");
  const double h = g.cell_volume();
  const double eps2 = eps * eps;
  double s = 0.0;
  std::size_t idx = 0;
  for (int i = 0; i < g.nx; ++i) {
    const double dx = x.x - g.x(i);
    for (int j = 0; j < g.ny; ++j) {
      const double dy = x.y - g.y(j);
      const double dxy2 = dx * dx + dy * dy;
      for (int k = 0; k < g.nz; ++k, ++idx) {
        const double rho = density.values[idx].real();
        if (rho == 0.0) continue;
        const double dz = x.z - g.z(k);
        const double r2 = dxy2 + dz * dz;
        if (r2 <= eps2) continue;
        const double r = std::sqrt(r2);
        const Vec3 u{dx / r, dy / r, dz / r};
        s += omega_value(spec, u) / (r2 * r) * rho;
      }
    }
  }
  return s * h;
}

struct FarFieldRow {
  double radius = 0.0;
  double scaled_value = 0.0;  // R^3 * (K * rho)(R u)
  double limit = 0.0;         // Omega(u) * mass
};

struct FarFieldTable {
  Vec3 direction;
  std::vector<FarFieldRow> rows;
  bool pass = false;            // relative deviation at largest R below 5%
  bool trend_monotone = false;  // |deviation| non-increasing over last 3 radii
};

// Convergence of R^3 (K * rho)(R u) toward Omega(u) * int rho as R grows.
inline FarFieldTable far_field_check(const KernelSpec& spec, const Field& density,
                                     const Vec3& u_in, const std::vector<double>& radii) {
  const Vec3 u = normalized(u_in);
  FarFieldTable table;
  table.direction = u;
  const double m = integrate(density);
  const double omega_u = omega_value(spec, u);
  const double cell_diag = std::sqrt(density.grid.hx() * density.grid.hx() +
                                     density.grid.hy() * density.grid.hy() +
                                     density.grid.hz() * density.grid.hz());
  for (double r : radii) {
    FarFieldRow row;
    row.radius = r;
    row.scaled_value = r * r * r * pv_convolve_direct(spec, density, u * r, cell_diag);
    row.limit = omega_u * m;
    table.rows.push_back(row);
  }
  if (!table.rows.empty()) {
    const auto& last = table.rows.back();
    const double scale = std::max(std::abs(last.limit), 1e-12);
    table.pass = std::abs(last.scaled_value - last.limit) <= 0.05 * scale;
    if (table.rows.size() >= 3) {
      const std::size_t n = table.rows.size();
      auto dev = [&](std::size_t i) {
        return std::abs(table.rows[i].scaled_value - table.rows[i].limit);
      };
      table.trend_monotone = dev(n - 1) <= dev(n - 2) && dev(n - 2) <= dev(n - 3);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// General Omega loaded from CSV samples (theta, phi, value), radians.
// ---------------------------------------------------------------------------

class OmegaSamples {
 public:
  static OmegaSamples load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open Omega CSV: " + path);
    OmegaSamples s;
    std::string line;
    std::vector<std::array<double, 3>> rows;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ls(line);
      double theta, phi, value;
      if (!(ls >> theta >> phi >> value))
        throw FormatError("Omega CSV: malformed row: " + line);
      rows.push_back({theta, phi, value});
    }
    if (rows.empty()) throw FormatError("Omega CSV: no rows");
    for (const auto& r : rows) {
      if (std::find(s.thetas_.begin(), s.thetas_.end(), r[0]) == s.thetas_.end())
        s.thetas_.push_back(r[0]);
      if (std::find(s.phis_.begin(), s.phis_.end(), r[1]) == s.phis_.end())
        s.phis_.push_back(r[1]);
    }
    std::sort(s.thetas_.begin(), s.thetas_.end());
    std::sort(s.phis_.begin(), s.phis_.end());
    s.values_.assign(s.thetas_.size() * s.phis_.size(),
                     std::numeric_limits<double>::quiet_NaN());
    for (const auto& r : rows) {
      const auto it = std::lower_bound(s.thetas_.begin(), s.thetas_.end(), r[0]);
      const auto ip = std::lower_bound(s.phis_.begin(), s.phis_.end(), r[1]);
      s.values_[(it - s.thetas_.begin()) * s.phis_.size() + (ip - s.phis_.begin())] = r[2];
    }
    for (double v : s.values_)
      if (!std::isfinite(v)) throw FormatError("Omega CSV: grid is not complete");
    return s;
  }

  // Bilinear interpolation; theta clamped to the sample range, phi periodic.
  double operator()(const Vec3& u) const {
    const double theta = std::acos(std::clamp(u.z, -1.0, 1.0));
    double phi = std::atan2(u.y, u.x);
    if (phi < 0) phi += 2.0 * pi;
    const int nt = static_cast<int>(thetas_.size());
    const int np = static_cast<int>(phis_.size());

    int it = static_cast<int>(std::upper_bound(thetas_.begin(), thetas_.end(), theta) -
                              thetas_.begin()) - 1;
    it = std::clamp(it, 0, nt - 2);
    const double wt = std::clamp(
        (theta - thetas_[it]) / std::max(thetas_[it + 1] - thetas_[it], 1e-300), 0.0, 1.0);

    int ip = static_cast<int>(std::upper_bound(phis_.begin(), phis_.end(), phi) -
                              phis_.begin()) - 1;
    double p0, p1, wpfrac;
    if (ip < 0 || ip >= np - 1) {
      // wrap-around segment [phis_.back(), phis_.front() + 2*pi]
      const double span = phis_.front() + 2.0 * pi - phis_.back();
      const double local = phi >= phis_.back() ? phi - phis_.back()
                                               : phi + 2.0 * pi - phis_.back();
      wpfrac = std::clamp(local / std::max(span, 1e-300), 0.0, 1.0);
      p0 = value_at(it, np - 1);
      p1 = value_at(it, 0);
      const double q0 = value_at(it + 1, np - 1);
      const double q1 = value_at(it + 1, 0);
      return (1 - wt) * ((1 - wpfrac) * p0 + wpfrac * p1) +
             wt * ((1 - wpfrac) * q0 + wpfrac * q1);
    }
    wpfrac = std::clamp((phi - phis_[ip]) / std::max(phis_[ip + 1] - phis_[ip], 1e-300),
                        0.0, 1.0);
    p0 = (1 - wpfrac) * value_at(it, ip) + wpfrac * value_at(it, ip + 1);
    p1 = (1 - wpfrac) * value_at(it + 1, ip) + wpfrac * value_at(it + 1, ip + 1);
    return (1 - wt) * p0 + wt * p1;
  }

 private:
  double value_at(int it, int ip) const { return values_[it * phis_.size() + ip]; }

  std::vector<double> thetas_, phis_, values_;
};

inline KernelSpec kernel_from_csv(const std::string& path) {
  auto samples = std::make_shared<OmegaSamples>(OmegaSamples::load_csv(path));
  // symmetrize and remove the interpolation-induced mean so the kernel
  // hypotheses (even, zero spherical mean) hold exactly for the interpolant
  auto sym = [samples](const Vec3& u) { return 0.5 * ((*samples)(u) + (*samples)(-u)); };
  const double mean = sphere_integral(sym) / (4.0 * pi);
  return KernelSpec::general([sym, mean](const Vec3& u) { return sym(u) - mean; });
}

}  // namespace gplhy
