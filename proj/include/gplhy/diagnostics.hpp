#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "gplhy/common.hpp"
#include "gplhy/energy.hpp"
#include "gplhy/grid.hpp"

namespace gplhy {

// ---------------------------------------------------------------------------
// Virial identities at a critical point:
//   T = (3/2)(E - mu lambda),  I = (E + 5 lambda mu)/2,  Q = -(mu lambda + E),
//   2T + 3I + (9/2)Q = 0.
// Residuals are normalized by T + |I| + Q.
// ---------------------------------------------------------------------------
struct VirialReport {
  double T = 0, I = 0, Q = 0, E = 0, mu = 0, lambda = 0;
  double res_identity1 = 0;
  double res_identity2 = 0;
  double res_identity3 = 0;
  double res_dilation = 0;
  bool mu_sign_ok = true;  // mu < 0 whenever E <= 0
};

inline VirialReport virial_check(const EnergyBreakdown& eb, double mu, double lambda) {
  require_positive(lambda, "lambda");
  VirialReport r;
  r.T = eb.T;
  r.I = eb.I;
  r.Q = eb.Q;
  r.E = eb.E;
  r.mu = mu;
  r.lambda = lambda;
  const double scale = eb.T + std::abs(eb.I) + eb.Q;
  const double s = scale > 0 ? scale : 1.0;
  r.res_identity1 = std::abs(eb.T - 1.5 * (eb.E - mu * lambda)) / s;
  r.res_identity2 = std::abs(eb.I - 0.5 * (eb.E + 5.0 * lambda * mu)) / s;
  r.res_identity3 = std::abs(eb.Q + (mu * lambda + eb.E)) / s;
  r.res_dilation = std::abs(2.0 * eb.T + 3.0 * eb.I + 4.5 * eb.Q) / s;
  r.mu_sign_ok = !(eb.E <= 0.0 && mu >= 0.0);
  return r;
}

// ---------------------------------------------------------------------------
// Yukawa fixed point: a solution of the Euler-Lagrange equation satisfies
//   psi = G_t * [(mu + t^2 - W) psi],  W = psi^2 + b K*psi^2 + psi^3,
// where G_t has multiplier (|k|^2 + t^2)^{-1}. Returns the relative L^2 norm
// of the mismatch. Requires t > 0; the identity itself holds for any sign of
// mu (the t^2 < -mu/2 window only matters for the decay argument), so mu is
// not constrained here.
// ---------------------------------------------------------------------------
inline double yukawa_residual(const Field& psi, double mu, double b,
                              const MultiplierTable& table, double t) {
  require_positive(t, "t");
  require_finite(mu, "mu");
  const double lam = mass(psi);
  if (!(lam > 0.0)) throw std::domain_error("yukawa_residual: zero-mass field");

  Field rho = detail::density_of(psi);
  const Field phi = convolve_kernel(rho, table);
  const GridSpec& g = psi.grid;
  std::vector<cdouble> rhs(psi.values.size());
  const double t2 = t * t;
  for (std::size_t i = 0; i < psi.values.size(); ++i) {
    const double a = std::abs(psi.values[i]);
    const double w = a * a + b * phi.values[i].real() + a * a * a;
    rhs[i] = (mu + t2 - w) * psi.values[i];
  }
  std::vector<cdouble> khat(rhs.size());
  detail::FftEngine::instance().forward(g.nx, g.ny, g.nz, rhs.data(), khat.data());
  std::size_t idx = 0;
  for (int i = 0; i < g.nx; ++i) {
    const double kx2 = g.kx(i) * g.kx(i);
    for (int j = 0; j < g.ny; ++j) {
      const double kxy2 = kx2 + g.ky(j) * g.ky(j);
      for (int k = 0; k < g.nz; ++k, ++idx) {
        const double kzv = g.kz(k);
        khat[idx] /= (kxy2 + kzv * kzv + t2);
      }
    }
  }
  Field gt(g);
  detail::FftEngine::instance().backward(g.nx, g.ny, g.nz, khat.data(), gt.values.data());
  const double scale = 1.0 / static_cast<double>(g.size());
  double num = 0.0;
  for (std::size_t i = 0; i < psi.values.size(); ++i)
    num += std::norm(psi.values[i] - gt.values[i] * scale);
  return std::sqrt(num / (lam / g.cell_volume()));
}

// Default probe inside the Appendix window 0 < t^2 < -mu/2: t^2 = -mu/4.
inline double yukawa_default_t(double mu) {
  if (!(mu < 0.0)) throw std::domain_error("yukawa_default_t requires mu < 0");
  return 0.5 * std::sqrt(-mu);
}

// ---------------------------------------------------------------------------
// Exponential-decay fit of the radial max profile.
// ---------------------------------------------------------------------------
struct DecayReport {
  double t_fit = 0.0;
  double r_squared = 0.0;
  double r_min = 0.0, r_max = 0.0;
  double mu = 0.0;
  int shells = 0;
};

// Cyclically translate the field so the density centroid sits at the origin.
inline Field center_field(const Field& f) {
  const GridSpec& g = f.grid;
  double m = 0.0, cx = 0.0, cy = 0.0, cz = 0.0;
  std::size_t idx = 0;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k, ++idx) {
        const double w = std::norm(f.values[idx]);
        m += w;
        cx += w * g.x(i);
        cy += w * g.y(j);
        cz += w * g.z(k);
      }
  if (!(m > 0.0)) return f;
  const int si = static_cast<int>(std::lround(cx / m / g.hx()));
  const int sj = static_cast<int>(std::lround(cy / m / g.hy()));
  const int sk = static_cast<int>(std::lround(cz / m / g.hz()));
  if (si == 0 && sj == 0 && sk == 0) return f;
  Field out(g);
  for (int i = 0; i < g.nx; ++i) {
    const int ii = ((i + si) % g.nx + g.nx) % g.nx;
    for (int j = 0; j < g.ny; ++j) {
      const int jj = ((j + sj) % g.ny + g.ny) % g.ny;
      for (int k = 0; k < g.nz; ++k) {
        const int kk = ((k + sk) % g.nz + g.nz) % g.nz;
        out.values[g.index(i, j, k)] = f.values[g.index(ii, jj, kk)];
      }
    }
  }
  return out;
}

// Radial profile max_{|x| in shell} |psi| on shells of width max(h).
inline std::pair<std::vector<double>, std::vector<double>> radial_max_profile(
    const Field& f) {
  const GridSpec& g = f.grid;
  const double width = std::max({g.hx(), g.hy(), g.hz()});
  const double rmax = 0.5 * std::min({g.lx, g.ly, g.lz});
  const int nsh = std::max(1, static_cast<int>(rmax / width));
  std::vector<double> prof(nsh, 0.0);
  std::vector<bool> seen(nsh, false);
  std::size_t idx = 0;
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    for (int j = 0; j < g.ny; ++j) {
      const double y = g.y(j);
      for (int k = 0; k < g.nz; ++k, ++idx) {
        const double z = g.z(k);
        const double r = std::sqrt(x * x + y * y + z * z);
        const int s = static_cast<int>(r / width);
        if (s >= nsh) continue;
        seen[s] = true;
        prof[s] = std::max(prof[s], std::abs(f.values[idx]));
      }
    }
  }
  std::vector<double> radii, values;
  for (int s = 0; s < nsh; ++s)
    if (seen[s]) {
      radii.push_back((s + 0.5) * width);
      values.push_back(prof[s]);
    }
  return {radii, values};
}

// Least-squares slope of ln(max_angle |psi|) vs radius on the window
// [2 r_half, 0.8 L/2]; r_half is the first shell where the profile drops
// below half of its peak. Shells at the round-off floor are excluded.
inline DecayReport decay_fit(const Field& psi_in, double mu) {
  const Field psi = center_field(psi_in);
  auto [radii, prof] = radial_max_profile(psi);
  if (radii.empty()) throw std::domain_error("decay_fit: empty profile");
  const double peak = *std::max_element(prof.begin(), prof.end());
  if (!(peak > 0.0)) throw std::domain_error("decay_fit: zero field");
  double r_half = -1.0;
  for (std::size_t i = 0; i < prof.size(); ++i)
    if (prof[i] < 0.5 * peak) {
      r_half = radii[i];
      break;
    }
  if (r_half < 0.0) throw std::domain_error("decay_fit: profile never drops below half max");

  const GridSpec& g = psi.grid;
  const double lo = 2.0 * r_half;
  const double hi = 0.8 * 0.5 * std::min({g.lx, g.ly, g.lz});
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] < lo || radii[i] > hi) continue;
    if (prof[i] <= 1e-13 * peak) continue;
    xs.push_back(radii[i]);
    ys.push_back(std::log(prof[i]));
  }
  if (xs.size() < 5)
    throw std::domain_error("decay_fit: window too small (fewer than 5 radial shells)");

  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ymean = sy / n;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fit = icept + slope * xs[i];
    ss_res += (ys[i] - fit) * (ys[i] - fit);
    ss_tot += (ys[i] - ymean) * (ys[i] - ymean);
  }
  DecayReport r;
  r.t_fit = -slope;
  r.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0;
  r.r_min = lo;
  r.r_max = hi;
  r.mu = mu;
  r.shells = static_cast<int>(xs.size());
  return r;
}

// ---------------------------------------------------------------------------
// Energy-curve sanity checks (monotonicity, subadditivity, mu sign).
// ---------------------------------------------------------------------------
struct CurvePoint {
  double lambda = 0.0;
  double energy = 0.0;
  double mu = 0.0;
  bool converged = true;
};

struct CurveViolation {
  std::string kind;  // "monotonicity" | "subadditivity" | "mu-sign"
  std::size_t i = 0, j = 0, k = 0;
  double amount = 0.0;
};

struct CurveReport {
  std::vector<CurveViolation> violations;
  bool ok() const { return violations.empty(); }
};

inline CurveReport curve_checks(const std::vector<CurvePoint>& curve, double slack = 1e-3) {
  CurveReport rep;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    require(curve[i].lambda < curve[i + 1].lambda, "curve_checks: lambdas must be sorted");
    const double allowed = slack * (1.0 + std::abs(curve[i].energy));
    if (curve[i + 1].energy > curve[i].energy + allowed)
      rep.violations.push_back(
          {"monotonicity", i, i + 1, 0, curve[i + 1].energy - curve[i].energy});
  }
  for (std::size_t i = 0; i < curve.size(); ++i)
    for (std::size_t j = i; j < curve.size(); ++j) {
      const double sum = curve[i].lambda + curve[j].lambda;
      for (std::size_t k = 0; k < curve.size(); ++k) {
        if (std::abs(curve[k].lambda - sum) > 1e-9 * sum) continue;
        if (curve[k].energy > curve[i].energy + curve[j].energy + slack)
          rep.violations.push_back(
              {"subadditivity", i, j, k,
               curve[k].energy - curve[i].energy - curve[j].energy});
      }
    }
  for (std::size_t i = 0; i < curve.size(); ++i)
    if (curve[i].energy < -slack && curve[i].mu >= 0.0)
      rep.violations.push_back({"mu-sign", i, i, 0, curve[i].mu});
  return rep;
}

}  // namespace gplhy
